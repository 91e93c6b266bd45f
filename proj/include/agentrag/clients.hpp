#pragma once

// Client interfaces the harness and the audit pipeline talk to. All calls
// are const and implementations must be safe to call from several threads.

#include <chrono>
#include <cstdint>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "agentrag/error.hpp"
#include "agentrag/trajectory.hpp"

namespace agentrag {

class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual std::string complete(const std::string& prompt) const = 0;
};

struct GenerationRequest {
  std::string prompt;
  double temperature = 1.0;
  std::vector<std::string> stop;
  std::uint64_t seed = 0;
  std::size_t turn = 0;  // local only, never sent over the wire
};

/// Generated text and its tokens. When generation halts on a stop sequence
/// the text ends with that sequence.
struct Generation {
  std::string text;
  std::vector<Token> tokens;
};

class PolicyClient {
 public:
  virtual ~PolicyClient() = default;
  virtual Generation generate(const GenerationRequest& request) const = 0;
};

struct Document {
  std::string title;
  std::string text;

  friend bool operator==(const Document&, const Document&) = default;
};

struct SearchResult {
  std::string query;
  std::vector<Document> docs;
};

class SearchClient {
 public:
  virtual ~SearchClient() = default;
  virtual SearchResult search(const std::string& query, std::size_t top_k) const = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds backoff{0};
};

/// Runs `fn`, retrying client-class failures. Anything else propagates at once.
template <typename Fn>
auto with_retry(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
  const int attempts = policy.max_attempts < 1 ? 1 : policy.max_attempts;
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const Error& e) {
      if (!is_client_failure(e.code()) || attempt >= attempts) throw;
    }
    if (policy.backoff.count() > 0) std::this_thread::sleep_for(policy.backoff * attempt);
  }
}

}  // namespace agentrag
