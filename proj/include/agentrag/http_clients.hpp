#pragma once

// HTTP implementations of the client interfaces. Wire formats are documented
// in the README.

#include <chrono>
#include <string>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "agentrag/clients.hpp"
#include "agentrag/error.hpp"
#include "agentrag/records.hpp"

namespace agentrag {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;  // defaults to "/"

  static Endpoint parse(const std::string& url) {
    auto scheme = url.find("://");
    if (scheme == std::string::npos) throw Error(Errc::InvalidConfig, "endpoint '" + url + "' has no scheme");
    auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
  }
};

namespace detail {

inline nlohmann::json post_json(const Endpoint& ep, const nlohmann::json& body, Errc failure,
                                std::chrono::seconds timeout, const std::string& bearer = {}) {
  httplib::Client cli(ep.base);
  if (!cli.is_valid()) throw Error(failure, "cannot create HTTP client for " + ep.base);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!bearer.empty()) headers.emplace("Authorization", "Bearer " + bearer);
  auto res = cli.Post(ep.path, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(failure, ep.base + ep.path + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(failure, ep.base + ep.path + ": HTTP " + std::to_string(res->status));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error&) {
    throw Error(failure, ep.base + ep.path + ": response is not JSON");
  }
}

}  // namespace detail

/// Request  {"prompt", "temperature", "stop": [..], "logprobs": true, "seed"}
/// Response {"text", "tokens": [[text, prob], ..]}
class HttpPolicyClient final : public PolicyClient {
 public:
  explicit HttpPolicyClient(const std::string& url, std::chrono::seconds timeout = std::chrono::seconds(120))
      : endpoint_(Endpoint::parse(url)), timeout_(timeout) {}

  Generation generate(const GenerationRequest& req) const override {
    nlohmann::json body = {{"prompt", req.prompt},
                           {"temperature", req.temperature},
                           {"stop", req.stop},
                           {"logprobs", true},
                           {"seed", req.seed}};
    const nlohmann::json res = detail::post_json(endpoint_, body, Errc::PolicyClientError, timeout_);
    if (!res.is_object() || !res.contains("text") || !res["text"].is_string() || !res.contains("tokens")) {
      throw Error(Errc::PolicyClientError, "policy response lacks 'text' or 'tokens'");
    }
    Generation g;
    g.text = res["text"].get<std::string>();
    try {
      auto tokens = tokens_from_json(res["tokens"], "policy response");
      if (tokens) g.tokens = std::move(*tokens);
    } catch (const Error& e) {
      throw Error(Errc::PolicyClientError, e.what());
    }
    return g;
  }

 private:
  Endpoint endpoint_;
  std::chrono::seconds timeout_;
};

/// Request  {"query", "top_k"}
/// Response {"docs": [{"title", "text"}, ..]}
class HttpSearchClient final : public SearchClient {
 public:
  explicit HttpSearchClient(const std::string& url, std::chrono::seconds timeout = std::chrono::seconds(30))
      : endpoint_(Endpoint::parse(url)), timeout_(timeout) {}

  SearchResult search(const std::string& query, std::size_t top_k) const override {
    const nlohmann::json res =
        detail::post_json(endpoint_, {{"query", query}, {"top_k", top_k}}, Errc::SearchClientError, timeout_);
    if (!res.is_object() || !res.contains("docs") || !res["docs"].is_array()) {
      throw Error(Errc::SearchClientError, "search response lacks 'docs'");
    }
    SearchResult out;
    out.query = query;
    for (const auto& d : res["docs"]) {
      if (!d.is_object() || !d.contains("title") || !d.contains("text") || !d["title"].is_string() ||
          !d["text"].is_string()) {
        throw Error(Errc::SearchClientError, "search document must have string 'title' and 'text'");
      }
      out.docs.push_back({d["title"].get<std::string>(), d["text"].get<std::string>()});
    }
    return out;
  }

 private:
  Endpoint endpoint_;
  std::chrono::seconds timeout_;
};

/// OpenAI-style chat completion: one user message, temperature 0, reply
/// taken from choices[0].message.content.
class HttpChatClient final : public CompletionClient {
 public:
  HttpChatClient(const std::string& url, std::string model, std::string api_key = {},
                 std::chrono::seconds timeout = std::chrono::seconds(300))
      : endpoint_(Endpoint::parse(url)), model_(std::move(model)), api_key_(std::move(api_key)), timeout_(timeout) {}

  std::string complete(const std::string& prompt) const override {
    nlohmann::json body = {{"model", model_},
                           {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
                           {"temperature", 0}};
    const nlohmann::json res = detail::post_json(endpoint_, body, Errc::ClientError, timeout_, api_key_);
    try {
      return res.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw Error(Errc::ClientError, "chat response lacks choices[0].message.content");
    }
  }

 private:
  Endpoint endpoint_;
  std::string model_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

}  // namespace agentrag
