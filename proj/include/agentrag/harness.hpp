#pragma once

// Multi-turn search loop: the policy generates until it closes a <search> or
// an <answer>; after each search the retrieved documents are appended inside
// <information> tags and generation resumes.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "agentrag/clients.hpp"
#include "agentrag/error.hpp"
#include "agentrag/parallel.hpp"
#include "agentrag/prompts.hpp"
#include "agentrag/qa_metrics.hpp"
#include "agentrag/reward.hpp"
#include "agentrag/strings.hpp"
#include "agentrag/trajectory.hpp"

namespace agentrag {

struct LoopLimits {
  std::size_t max_turns = 10;
  std::size_t top_k = 3;
  double temperature = 1.0;
  std::size_t group_size = 5;
  std::size_t doc_char_budget = 0;  // per-document text limit in code points, 0 = none
  ParseMode question_mode = ParseMode::Strict;

  void validate() const {
    if (max_turns == 0) throw Error(Errc::InvalidConfig, "max_turns must be positive");
    if (top_k == 0) throw Error(Errc::InvalidConfig, "top_k must be positive");
    if (group_size == 0) throw Error(Errc::InvalidConfig, "group_size must be positive");
    if (!(temperature >= 0.0)) throw Error(Errc::InvalidConfig, "temperature must be non-negative");
  }
};

inline const std::vector<std::string>& stop_sequences() {
  static const std::vector<std::string> stops = {std::string(close_tag(SpanKind::Search)),
                                                 std::string(close_tag(SpanKind::Answer))};
  return stops;
}

/// The policy instruction with `question` substituted. In strict mode a
/// question containing protocol tags is rejected.
inline std::string build_prompt(std::string_view question, ParseMode mode = ParseMode::Strict) {
  if (strings::trim(question).empty()) throw Error(Errc::EmptyQuestion, "question is empty");
  if (mode == ParseMode::Strict && contains_protocol_tag(question)) {
    throw Error(Errc::ProtocolInjection, "question contains protocol tags");
  }
  std::string p(prompts::kPolicyInstruction);
  p += question;
  return p;
}

namespace detail {

// Documents may not close the <information> block early.
inline std::string neutralize_tags(std::string_view s) {
  std::string out(s);
  if (!contains_protocol_tag(out)) return out;
  for (SpanKind k : kAllSpanKinds) {
    for (std::string_view tag : {open_tag(k), close_tag(k)}) {
      std::string replacement = "&lt;" + std::string(tag.substr(1));
      for (auto pos = out.find(tag); pos != std::string::npos;
           pos = out.find(tag, pos + replacement.size())) {
        out.replace(pos, tag.size(), replacement);
      }
    }
  }
  return out;
}

}  // namespace detail

/// "Doc 1: (title) text" lines, newline separated.
inline std::string format_documents(const std::vector<Document>& docs, std::size_t char_budget = 0) {
  std::string out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (i > 0) out += '\n';
    std::string text = char_budget > 0 ? strings::truncate_utf8(docs[i].text, char_budget) : docs[i].text;
    out += "Doc " + std::to_string(i + 1) + ": (" + detail::neutralize_tags(docs[i].title) + ") " +
           detail::neutralize_tags(text);
  }
  return out;
}

/// Seed for member `member` of the group for `question`; independent of
/// how rollouts are scheduled.
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view question, std::size_t member) {
  return strings::splitmix64(strings::splitmix64(base_seed ^ strings::fnv1a64(question)) + member);
}

inline Trajectory run_rollout(const std::string& question, const PolicyClient& policy,
                              const SearchClient& search, const LoopLimits& limits,
                              std::uint64_t seed = 0) {
  limits.validate();
  const std::string prompt = build_prompt(question, limits.question_mode);

  std::string output;
  std::vector<Token> tokens;
  for (std::size_t turn = 0; turn < limits.max_turns; ++turn) {
    GenerationRequest req;
    req.prompt = prompt + output;
    req.temperature = limits.temperature;
    req.stop = stop_sequences();
    req.seed = seed;
    req.turn = turn;

    Generation gen;
    try {
      gen = policy.generate(req);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(Errc::PolicyClientError, e.what());
    }
    if (gen.text.empty()) break;

    std::string joined;
    for (const Token& tok : gen.tokens) joined += tok.text;
    if (joined != gen.text) {
      throw Error(Errc::MalformedGeneration, "generation tokens do not tile its text");
    }
    for (const std::string& stop : req.stop) {
      auto pos = gen.text.find(stop);
      if (pos != std::string::npos && pos + stop.size() != gen.text.size()) {
        throw Error(Errc::MalformedGeneration, "generation continues past stop sequence " + stop);
      }
    }

    output += gen.text;
    tokens.insert(tokens.end(), gen.tokens.begin(), gen.tokens.end());

    Trajectory partial;
    try {
      partial = parse_trajectory(output, tokens, ParseMode::Lenient, question);
    } catch (const Error& e) {
      throw Error(Errc::MalformedGeneration, e.what());
    }
    if (partial.final_answer) break;

    const bool wants_search = !partial.steps.empty() && partial.steps.back().query &&
                              partial.steps.back().query->closed && !partial.steps.back().context &&
                              strings::trim(partial.trailing).empty();
    if (!wants_search) break;

    const std::string query(strings::trim(partial.steps.back().query->text));
    SearchResult result;
    try {
      result = search.search(query, limits.top_k);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(Errc::SearchClientError, e.what());
    }
    if (result.docs.size() > limits.top_k) {
      throw Error(Errc::SearchClientError, "search returned " + std::to_string(result.docs.size()) +
                                               " documents for top_k " + std::to_string(limits.top_k));
    }

    const std::string content = format_documents(result.docs, limits.doc_char_budget);
    std::vector<Token> injected = {{"\n", std::nullopt},
                                   {std::string(open_tag(SpanKind::Information)), std::nullopt}};
    if (!content.empty()) injected.push_back({content, std::nullopt});
    injected.push_back({std::string(close_tag(SpanKind::Information)), std::nullopt});
    injected.push_back({"\n", std::nullopt});
    for (const Token& tok : injected) output += tok.text;
    tokens.insert(tokens.end(), injected.begin(), injected.end());
  }

  try {
    return parse_trajectory(output, tokens, ParseMode::Lenient, question);
  } catch (const Error& e) {
    throw Error(Errc::MalformedGeneration, e.what());
  }
}

struct MemberFailure {
  std::size_t member = 0;
  Errc code = Errc::PolicyClientError;
  std::string message;
};

/// `group_size` independent rollouts. With `failures == nullptr` the first
/// failing member (lowest index) fails the whole group; otherwise failed
/// members are recorded there and left out of the group.
inline RolloutGroup run_group(const std::string& question, const GoldAnswers& golds,
                              const PolicyClient& policy, const SearchClient& search,
                              const LoopLimits& limits, std::uint64_t base_seed = 0,
                              std::vector<MemberFailure>* failures = nullptr,
                              std::size_t workers = 1) {
  limits.validate();
  if (limits.group_size < 2) {
    throw Error(Errc::GroupTooSmall, "group_size must be at least 2, got " +
                                         std::to_string(limits.group_size));
  }
  std::vector<std::optional<Trajectory>> slots(limits.group_size);
  std::vector<std::optional<MemberFailure>> failed(limits.group_size);
  parallel_for(limits.group_size, workers, [&](std::size_t i) {
    try {
      slots[i] = run_rollout(question, policy, search, limits, derive_seed(base_seed, question, i));
    } catch (const Error& e) {
      if (failures == nullptr) throw;
      failed[i] = MemberFailure{i, e.code(), e.what()};
    }
  });

  RolloutGroup group{question, {}, golds, {}};
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i]) group.trajectories.push_back(std::move(*slots[i]));
    if (failed[i]) failures->push_back(std::move(*failed[i]));
  }
  return group;
}

/// In-memory retriever ranking documents by how many distinct query terms
/// (case-insensitive alphanumeric runs) occur in the title or text. Documents
/// with no overlap are never returned; ties keep corpus order.
class OverlapRetriever final : public SearchClient {
 public:
  explicit OverlapRetriever(std::vector<Document> corpus) : corpus_(std::move(corpus)) {
    if (corpus_.empty()) throw Error(Errc::EmptyInput, "retriever corpus is empty");
    doc_terms_.reserve(corpus_.size());
    for (const Document& d : corpus_) {
      std::set<std::string> terms = split_terms(d.title);
      terms.merge(split_terms(d.text));
      doc_terms_.push_back(std::move(terms));
    }
  }

  SearchResult search(const std::string& query, std::size_t top_k) const override {
    const std::set<std::string> q = split_terms(query);
    std::vector<std::pair<std::size_t, std::size_t>> scored;  // (overlap, corpus index)
    for (std::size_t i = 0; i < corpus_.size(); ++i) {
      std::size_t overlap = 0;
      for (const std::string& term : q) overlap += doc_terms_[i].count(term);
      if (overlap > 0) scored.emplace_back(overlap, i);
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    SearchResult result;
    result.query = query;
    for (std::size_t i = 0; i < scored.size() && i < top_k; ++i) {
      result.docs.push_back(corpus_[scored[i].second]);
    }
    return result;
  }

  static std::set<std::string> split_terms(std::string_view s) {
    std::set<std::string> terms;
    std::string cur;
    for (char c : s) {
      auto u = static_cast<unsigned char>(c);
      if (std::isalnum(u) || u >= 0x80) {
        cur += static_cast<char>(std::tolower(u));
      } else if (!cur.empty()) {
        terms.insert(std::move(cur));
        cur.clear();
      }
    }
    if (!cur.empty()) terms.insert(std::move(cur));
    return terms;
  }

 private:
  std::vector<Document> corpus_;
  std::vector<std::set<std::string>> doc_terms_;
};

inline std::shared_ptr<SearchClient> mock_retriever(std::vector<Document> corpus) {
  return std::make_shared<OverlapRetriever>(std::move(corpus));
}

}  // namespace agentrag
