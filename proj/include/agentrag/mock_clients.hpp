#pragma once

// Deterministic in-process clients for tests, fixtures and the CLI's mock mode.

#include <functional>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "agentrag/audit.hpp"
#include "agentrag/clients.hpp"
#include "agentrag/prompts.hpp"
#include "agentrag/qa_metrics.hpp"
#include "agentrag/strings.hpp"
#include "agentrag/trajectory.hpp"

namespace agentrag {

/// Splits text the way a subword tokenizer roughly would: protocol tags are
/// single tokens, everything else is "leading whitespace + word" pieces.
inline std::vector<std::string> split_protocol_pieces(std::string_view text) {
  auto tag_at = [&](std::size_t pos) -> std::size_t {
    for (SpanKind k : kAllSpanKinds) {
      for (std::string_view tag : {open_tag(k), close_tag(k)}) {
        if (text.compare(pos, tag.size(), tag) == 0) return tag.size();
      }
    }
    return 0;
  };
  std::vector<std::string> pieces;
  std::size_t i = 0;
  while (i < text.size()) {
    if (std::size_t n = tag_at(i)) {
      pieces.emplace_back(text.substr(i, n));
      i += n;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && strings::is_ascii_space(text[j]) && tag_at(j) == 0) ++j;
    while (j < text.size() && !strings::is_ascii_space(text[j]) && tag_at(j) == 0) ++j;
    pieces.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return pieces;
}

class FunctionClient final : public CompletionClient {
 public:
  explicit FunctionClient(std::function<std::string(const std::string&)> fn) : fn_(std::move(fn)) {}
  std::string complete(const std::string& prompt) const override { return fn_(prompt); }

 private:
  std::function<std::string(const std::string&)> fn_;
};

/// Answers with the response of the table entry whose needle occurs latest in
/// the prompt (earlier entries win ties), or `fallback` when none occurs.
class LookupClient final : public CompletionClient {
 public:
  LookupClient(std::vector<std::pair<std::string, std::string>> table, std::string fallback)
      : table_(std::move(table)), fallback_(std::move(fallback)) {}

  std::string complete(const std::string& prompt) const override {
    const std::string* best = &fallback_;
    std::size_t best_pos = 0;
    bool found = false;
    for (const auto& [needle, response] : table_) {
      auto pos = prompt.rfind(needle);
      if (pos == std::string::npos) continue;
      if (!found || pos > best_pos) {
        best = &response;
        best_pos = pos;
        found = true;
      }
    }
    return *best;
  }

 private:
  std::vector<std::pair<std::string, std::string>> table_;
  std::string fallback_;
};

/// Rule-based judge: normalized string equality for equivalence, the first
/// sentence of the reasoning as sub-query, and look-ahead step extraction.
class MockJudge final : public CompletionClient {
 public:
  std::string complete(const std::string& prompt) const override {
    std::string_view p = prompt;
    if (p.starts_with(prompts::kEquivalenceHeader)) {
      std::string_view a, b;
      if (!strings::extract_between(p, "<answer_a>", "</answer_a>", a) ||
          !strings::extract_between(p, "<answer_b>", "</answer_b>", b)) {
        throw Error(Errc::ClientError, "malformed equivalence prompt");
      }
      return normalize_answer(a) == normalize_answer(b) ? "yes\nThe answers match after normalization."
                                                        : "no\nThe answers differ after normalization.";
    }
    if (p.starts_with(prompts::kSubQueryHeader)) {
      std::string_view reasoning;
      if (!strings::extract_between(p, "<reasoning>", "</reasoning>", reasoning)) {
        throw Error(Errc::ClientError, "malformed sub-query prompt");
      }
      return "<sub_query>" + first_sentence(reasoning) + "</sub_query>";
    }
    if (p.starts_with(prompts::kStepExtractionInstruction)) {
      std::string_view log = p.substr(prompts::kStepExtractionInstruction.size());
      if (log.starts_with(prompts::kLogHeader)) log.remove_prefix(prompts::kLogHeader.size());
      const Trajectory t = parse_trajectory(log, ParseMode::Lenient);
      std::string out;
      for (const AuditStep& s : extract_steps(t)) {
        nlohmann::json j = {{"reasoning", s.step.reasoning_text()},
                            {"query", s.step.query ? nlohmann::json(s.step.query->text) : nlohmann::json(nullptr)},
                            {"information", s.step.context ? nlohmann::json(s.step.context->text) : nlohmann::json(nullptr)},
                            {"conclusion", s.conclusion}};
        out += "<step>\n" + j.dump(2) + "\n</step>\n";
      }
      return out;
    }
    throw Error(Errc::ClientError, "mock judge does not recognize the prompt");
  }
};

/// Returns turns[min(turn, size-1)] with every token at probability `prob`
/// unless a per-token function is supplied.
class ScriptedPolicy final : public PolicyClient {
 public:
  using ProbFn = std::function<double(std::size_t turn, std::size_t index, std::string_view piece)>;

  explicit ScriptedPolicy(std::vector<std::string> turns, double prob = 0.9)
      : turns_(std::move(turns)), prob_([prob](std::size_t, std::size_t, std::string_view) { return prob; }) {}
  ScriptedPolicy(std::vector<std::string> turns, ProbFn prob) : turns_(std::move(turns)), prob_(std::move(prob)) {}

  Generation generate(const GenerationRequest& req) const override {
    Generation g;
    if (turns_.empty()) return g;
    g.text = turns_[std::min(req.turn, turns_.size() - 1)];
    auto pieces = split_protocol_pieces(g.text);
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      g.tokens.push_back({pieces[i], prob_(req.turn, i, pieces[i])});
    }
    return g;
  }

 private:
  std::vector<std::string> turns_;
  ProbFn prob_;
};

/// Seeded two-behavior policy. The first output of mt19937_64(seed) picks the
/// behavior: odd searches for the question and answers with the title of the
/// first retrieved document; even answers from `memory` (or "unknown")
/// without searching. Token probabilities lie in (0.1, 1] and are drawn from
/// a stream seeded by (seed, turn). Temperature is ignored.
class SeededMockPolicy final : public PolicyClient {
 public:
  explicit SeededMockPolicy(std::map<std::string, std::string> memory = {}) : memory_(std::move(memory)) {}

  static bool searches(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return (rng() & 1U) == 1U;
  }

  Generation generate(const GenerationRequest& req) const override {
    std::string text;
    if (req.turn == 0) {
      std::string_view question = req.prompt;
      if (question.starts_with(prompts::kPolicyInstruction)) question.remove_prefix(prompts::kPolicyInstruction.size());
      question = strings::trim(question);
      if (searches(req.seed)) {
        text = "<think> I need to look this up. </think>\n<search> " + std::string(question) + " </search>";
      } else {
        auto it = memory_.find(std::string(question));
        const std::string guess = it == memory_.end() ? "unknown" : it->second;
        text = "<think> I can answer this from memory. </think>\n<answer> " + guess + " </answer>";
      }
    } else {
      std::string answer = "unknown";
      std::string_view p = req.prompt;
      auto info = p.rfind(open_tag(SpanKind::Information));
      std::string_view title;
      if (info != std::string_view::npos && strings::extract_between(p.substr(info), "Doc 1: (", ")", title)) {
        answer = std::string(title);
      }
      text = "<think> The documents point to " + answer + ". </think>\n<answer> " + answer + " </answer>";
    }

    Generation g;
    g.text = text;
    std::mt19937_64 rng(strings::splitmix64(req.seed ^ (req.turn + 1)));
    for (std::string& piece : split_protocol_pieces(text)) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      g.tokens.push_back({std::move(piece), 1.0 - 0.9 * u});
    }
    return g;
  }

 private:
  std::map<std::string, std::string> memory_;
};

}  // namespace agentrag
