#pragma once

// Step-wise over-search / under-search audit.
//
// 1. Split each trajectory into steps and find each step's conclusion (the
//    sub-answer that the next step's reasoning states; the final answer for
//    the last step), either with a judge model or by a look-ahead heuristic.
// 2. Rebuild the input the agent had when it made the step's decision: the
//    prompt plus everything generated up to and including the step's <think>.
// 3. Retrieval steps: ask the audited model to answer from memory. If the
//    judge finds that answer equivalent to the step's conclusion, the search
//    was unnecessary (over-search).
// 4. Non-retrieval steps: ask a reference model the step's sub-query. If the
//    judge finds the reference answer differs from the step's conclusion, the
//    step should have searched (under-search).

#include <cstddef>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "agentrag/clients.hpp"
#include "agentrag/error.hpp"
#include "agentrag/harness.hpp"
#include "agentrag/parallel.hpp"
#include "agentrag/prompts.hpp"
#include "agentrag/qa_metrics.hpp"
#include "agentrag/records.hpp"
#include "agentrag/reward.hpp"
#include "agentrag/strings.hpp"
#include "agentrag/trajectory.hpp"

namespace agentrag {

enum class ConclusionSource { JudgeExtracted, NextStepHeuristic, FinalAnswer };

constexpr std::string_view conclusion_source_name(ConclusionSource s) {
  switch (s) {
    case ConclusionSource::JudgeExtracted: return "JudgeExtracted";
    case ConclusionSource::NextStepHeuristic: return "NextStepHeuristic";
    case ConclusionSource::FinalAnswer: return "FinalAnswer";
  }
  return "";
}

struct AuditStep {
  Step step;
  std::string partial_input;
  std::string conclusion;
  ConclusionSource conclusion_source = ConclusionSource::NextStepHeuristic;
};

enum class VerdictKind { OverSearch, NotOverSearch, UnderSearch, NotUnderSearch };

constexpr std::string_view verdict_kind_name(VerdictKind k) {
  switch (k) {
    case VerdictKind::OverSearch: return "OverSearch";
    case VerdictKind::NotOverSearch: return "NotOverSearch";
    case VerdictKind::UnderSearch: return "UnderSearch";
    case VerdictKind::NotUnderSearch: return "NotUnderSearch";
  }
  return "";
}

inline VerdictKind verdict_kind_from_name(std::string_view s) {
  for (VerdictKind k : {VerdictKind::OverSearch, VerdictKind::NotOverSearch,
                        VerdictKind::UnderSearch, VerdictKind::NotUnderSearch}) {
    if (verdict_kind_name(k) == s) return k;
  }
  throw Error(Errc::SchemaError, "unknown verdict kind '" + std::string(s) + "'");
}

struct AuditVerdict {
  std::size_t step_index = 0;
  VerdictKind kind = VerdictKind::NotOverSearch;
  std::string probe_answer;
  std::string judge_rationale;
};

struct ProbeClients {
  std::shared_ptr<const CompletionClient> answerer;   // the audited model, closed-book
  std::shared_ptr<const CompletionClient> reference;  // stronger reference model
  std::shared_ptr<const CompletionClient> judge;      // equivalence and extraction
};

/// What the reference model is asked for a non-retrieval step.
enum class SubQueryMode { OriginalQuestion, ExtractedSubQuery };

struct ExtractOptions {
  bool require_judge = false;
  RetryPolicy retry;
};

struct ProbeOptions {
  SubQueryMode sub_query_mode = SubQueryMode::ExtractedSubQuery;
  RetryPolicy retry;
};

/// Text up to the first sentence terminator (. ! ? ; followed by whitespace
/// or end of text) or line break, trimmed.
inline std::string first_sentence(std::string_view s) {
  s = strings::trim(s);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '\n') return std::string(strings::trim(s.substr(0, i)));
    if ((c == '.' || c == '!' || c == '?' || c == ';') &&
        (i + 1 == s.size() || strings::is_ascii_space(s[i + 1]))) {
      return std::string(strings::trim(s.substr(0, i)));
    }
  }
  return std::string(s);
}

/// The prompt followed by steps 1..index-1 and the <think> block of step `index`.
inline std::string partial_input(const Trajectory& t, std::size_t index) {
  std::string out;
  if (!strings::trim(t.question).empty()) {
    out = build_prompt(t.question, ParseMode::Lenient);
    out += '\n';
  }
  auto emit = [&](const Span& s) {
    out += s.lead;
    out += open_tag(s.kind);
    out += s.text;
    if (s.closed) out += close_tag(s.kind);
  };
  for (const Step& step : t.steps) {
    if (step.index == index) {
      if (step.reasoning) emit(*step.reasoning);
      break;
    }
    if (step.reasoning) emit(*step.reasoning);
    if (step.query) emit(*step.query);
    if (step.context) emit(*step.context);
  }
  return out;
}

namespace detail {

inline std::string call_client(const CompletionClient& client, const std::string& prompt) {
  try {
    return client.complete(prompt);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(Errc::ClientError, e.what());
  }
}

inline std::string tagged_or_whole(std::string_view response, std::string_view open,
                                   std::string_view close) {
  std::string_view inner;
  if (strings::extract_between(response, open, close, inner)) return std::string(strings::trim(inner));
  return std::string(strings::trim(response));
}

// Conclusions from <step>{json}</step> blocks; any deviation is a format failure.
inline std::vector<std::string> parse_step_blocks(std::string_view response, std::size_t expected) {
  std::vector<std::string> out;
  constexpr std::string_view open = "<step>";
  constexpr std::string_view close = "</step>";
  for (auto b = response.find(open); b != std::string_view::npos; b = response.find(open, b)) {
    b += open.size();
    auto e = response.find(close, b);
    if (e == std::string_view::npos) throw Error(Errc::ClientError, "judge output has an unclosed <step>");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(response.substr(b, e - b));
    } catch (const nlohmann::json::parse_error&) {
      throw Error(Errc::ClientError, "judge <step> block is not valid JSON");
    }
    auto c = j.find("conclusion");
    if (!j.is_object() || c == j.end()) throw Error(Errc::ClientError, "judge step lacks 'conclusion'");
    out.push_back(c->is_string() ? c->get<std::string>() : std::string());
    b = e + close.size();
  }
  if (out.size() != expected) {
    throw Error(Errc::ClientError, "judge returned " + std::to_string(out.size()) + " steps, expected " +
                                       std::to_string(expected));
  }
  return out;
}

struct Judgement {
  bool equivalent = false;
  std::string rationale;
};

inline Judgement parse_judgement(std::string_view response) {
  std::string_view rest = strings::trim(response);
  auto nl = rest.find('\n');
  std::string first(strings::trim(rest.substr(0, nl)));
  for (char& c : first) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::string_view tail = nl == std::string_view::npos ? std::string_view{} : strings::trim(rest.substr(nl + 1));
  auto word_is = [&](std::string_view w) {
    return first.rfind(w, 0) == 0 &&
           (first.size() == w.size() || !std::isalpha(static_cast<unsigned char>(first[w.size()])));
  };
  if (word_is("yes")) return {true, std::string(tail)};
  if (word_is("no")) return {false, std::string(tail)};
  throw Error(Errc::ClientError, "judge reply does not start with yes/no");
}

inline const CompletionClient& require(const std::shared_ptr<const CompletionClient>& c, const char* role) {
  if (!c) throw Error(Errc::JudgeUnavailable, std::string(role) + " client is not configured");
  return *c;
}

}  // namespace detail

inline detail::Judgement judge_equivalence(const CompletionClient& judge, std::string_view query,
                                           std::string_view answer_a, std::string_view answer_b,
                                           const RetryPolicy& retry = {}) {
  const std::string prompt = prompts::equivalence(query, answer_a, answer_b);
  return with_retry(retry, [&] { return detail::parse_judgement(detail::call_client(judge, prompt)); });
}

inline std::vector<AuditStep> extract_steps(const Trajectory& t, const CompletionClient* judge = nullptr,
                                            const ExtractOptions& opts = {}) {
  if (judge == nullptr && opts.require_judge) {
    throw Error(Errc::JudgeUnavailable, "step extraction requires a judge client");
  }
  std::vector<AuditStep> out;
  out.reserve(t.steps.size());
  for (const Step& s : t.steps) out.push_back({s, partial_input(t, s.index), {}, {}});
  if (out.empty()) return out;

  if (judge != nullptr) {
    const std::string prompt = prompts::step_extraction(render_trajectory(t));
    auto conclusions = with_retry(opts.retry, [&] {
      return detail::parse_step_blocks(detail::call_client(*judge, prompt), out.size());
    });
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i].conclusion = std::move(conclusions[i]);
      out[i].conclusion_source = ConclusionSource::JudgeExtracted;
    }
    return out;
  }

  for (std::size_t i = 0; i + 1 < out.size(); ++i) {
    out[i].conclusion = first_sentence(t.steps[i + 1].reasoning_text());
    out[i].conclusion_source = ConclusionSource::NextStepHeuristic;
  }
  out.back().conclusion = t.answer_text();
  out.back().conclusion_source = ConclusionSource::FinalAnswer;
  return out;
}

inline AuditVerdict probe_over_search(const AuditStep& a, const ProbeClients& clients,
                                      const ProbeOptions& opts = {}) {
  if (!a.step.is_retrieval()) {
    throw Error(Errc::NotARetrievalStep, "step " + std::to_string(a.step.index) + " did not search");
  }
  const CompletionClient& answerer = detail::require(clients.answerer, "answerer");
  const CompletionClient& judge = detail::require(clients.judge, "judge");

  std::string prompt = a.partial_input;
  prompt += '\n';
  prompt += prompts::kClosedBookInstruction;
  const std::string answer = with_retry(opts.retry, [&] {
    return detail::tagged_or_whole(detail::call_client(answerer, prompt), prompts::kQueryAnswerOpen,
                                   prompts::kQueryAnswerClose);
  });
  const std::string query(strings::trim(a.step.query->text));
  auto j = judge_equivalence(judge, query, answer, a.conclusion, opts.retry);
  return {a.step.index, j.equivalent ? VerdictKind::OverSearch : VerdictKind::NotOverSearch, answer,
          std::move(j.rationale)};
}

inline AuditVerdict probe_under_search(const AuditStep& a, const ProbeClients& clients,
                                       std::string_view question, const ProbeOptions& opts = {}) {
  if (a.step.is_retrieval()) {
    throw Error(Errc::NotANonSearchStep, "step " + std::to_string(a.step.index) + " searched");
  }
  const CompletionClient& reference = detail::require(clients.reference, "reference");
  const CompletionClient& judge = detail::require(clients.judge, "judge");

  std::string sub_query(strings::trim(question));
  const std::string reasoning = a.step.reasoning_text();
  if (opts.sub_query_mode == SubQueryMode::ExtractedSubQuery && !strings::trim(reasoning).empty()) {
    const std::string prompt = prompts::sub_query(reasoning);
    sub_query = with_retry(opts.retry, [&] {
      std::string q = detail::tagged_or_whole(detail::call_client(judge, prompt), "<sub_query>", "</sub_query>");
      if (q.empty()) throw Error(Errc::ClientError, "judge returned an empty sub-query");
      return q;
    });
  }

  const std::string prompt = prompts::reference(sub_query);
  const std::string ref_answer = with_retry(opts.retry, [&] {
    return detail::tagged_or_whole(detail::call_client(reference, prompt), "<answer>", "</answer>");
  });
  auto j = judge_equivalence(judge, sub_query, ref_answer, a.conclusion, opts.retry);
  return {a.step.index, j.equivalent ? VerdictKind::NotUnderSearch : VerdictKind::UnderSearch, ref_answer,
          std::move(j.rationale)};
}

// ---------------------------------------------------------------------------
// Hop comparison

enum class HopCategory { Less, Match, More };

constexpr std::string_view hop_category_name(HopCategory c) {
  switch (c) {
    case HopCategory::Less: return "Less";
    case HopCategory::Match: return "Match";
    case HopCategory::More: return "More";
  }
  return "";
}

inline HopCategory hop_comparison(std::size_t search_count, int annotated_hops) {
  if (annotated_hops < 1) throw Error(Errc::SchemaError, "annotated hops must be at least 1");
  const auto hops = static_cast<std::size_t>(annotated_hops);
  if (search_count < hops) return HopCategory::Less;
  if (search_count == hops) return HopCategory::Match;
  return HopCategory::More;
}

inline HopCategory hop_comparison(const Trajectory& t, int annotated_hops) {
  return hop_comparison(t.retrieval_count(), annotated_hops);
}

struct HopObservation {
  HopCategory category = HopCategory::Match;
  bool correct = false;
};

struct HopRow {
  std::size_t correct = 0;
  std::size_t incorrect = 0;
  double correct_pct = 0.0;
  double incorrect_pct = 0.0;
  double sum_pct() const { return correct_pct + incorrect_pct; }
};

struct HopTable {
  std::map<HopCategory, HopRow> rows;
  std::size_t total = 0;
};

/// Percentages are of the whole observation set, so the three rows sum to 100.
inline HopTable tabulate_hops(const std::vector<HopObservation>& obs) {
  HopTable table;
  for (HopCategory c : {HopCategory::Less, HopCategory::Match, HopCategory::More}) table.rows[c] = {};
  for (const HopObservation& o : obs) {
    auto& row = table.rows[o.category];
    (o.correct ? row.correct : row.incorrect) += 1;
  }
  table.total = obs.size();
  if (table.total == 0) return table;
  const double n = static_cast<double>(table.total);
  for (auto& [c, row] : table.rows) {
    row.correct_pct = (100.0 * static_cast<double>(row.correct)) / n;
    row.incorrect_pct = (100.0 * static_cast<double>(row.incorrect)) / n;
  }
  return table;
}

// ---------------------------------------------------------------------------
// Confidence groups

struct ConfidenceGroupScores {
  double max_cover_em = 0.0;
  double min_cover_em = 0.0;
  std::size_t questions = 0;
};

/// Per question, the candidate with the highest confidence goes to the Max
/// group and the one with the lowest to the Min group (first candidate wins
/// ties). Returns mean Cover EM of both groups per dataset label.
inline std::map<std::string, ConfidenceGroupScores> confidence_group_analysis(
    const std::vector<RolloutGroup>& groups, const ConfidenceConfig& cfg = {}) {
  struct Sums {
    std::size_t max_hits = 0, min_hits = 0, n = 0;
  };
  std::map<std::string, Sums> sums;
  for (const RolloutGroup& g : groups) {
    if (g.trajectories.size() < 2) {
      throw Error(Errc::GroupTooSmall, "question '" + g.question_id + "' has fewer than 2 candidates");
    }
    std::size_t hi = 0, lo = 0;
    std::vector<double> conf;
    conf.reserve(g.trajectories.size());
    for (const Trajectory& t : g.trajectories) conf.push_back(search_confidence(t, cfg));
    for (std::size_t i = 1; i < conf.size(); ++i) {
      if (conf[i] > conf[hi]) hi = i;
      if (conf[i] < conf[lo]) lo = i;
    }
    auto cover = [&](const Trajectory& t) { return t.truncated ? 0 : cover_em(t.answer_text(), g.golds); };
    Sums& s = sums[g.dataset];
    s.max_hits += static_cast<std::size_t>(cover(g.trajectories[hi]));
    s.min_hits += static_cast<std::size_t>(cover(g.trajectories[lo]));
    s.n += 1;
  }
  std::map<std::string, ConfidenceGroupScores> out;
  for (const auto& [dataset, s] : sums) {
    const double n = static_cast<double>(s.n);
    out[dataset] = {static_cast<double>(s.max_hits) / n, static_cast<double>(s.min_hits) / n, s.n};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus audit

struct RateCell {
  std::size_t flagged = 0;
  std::size_t probed = 0;
  double rate() const { return probed == 0 ? 0.0 : static_cast<double>(flagged) / static_cast<double>(probed); }
};

struct SearchCountBucket {
  RateCell over;
  RateCell under;
  std::size_t trajectories = 0;
};

struct AuditReport {
  RateCell over;
  RateCell under;
  double over_search_rate = 0.0;
  double under_search_rate = 0.0;
  std::map<std::size_t, SearchCountBucket> by_search_count;
  std::optional<HopTable> hop_table;
  std::map<std::string, ConfidenceGroupScores> confidence_groups;
  std::size_t skipped_steps = 0;
};

struct VerdictLogEntry {
  std::string trajectory_id;
  std::size_t search_count = 0;
  AuditVerdict verdict;
};

struct SkippedStep {
  std::string trajectory_id;
  std::size_t step_index = 0;
  std::string error;
};

struct AuditOptions {
  SubQueryMode sub_query_mode = SubQueryMode::ExtractedSubQuery;
  bool judge_extraction = false;  // use the judge for step extraction
  bool hop_table = false;
  std::size_t concurrency = 1;
  RetryPolicy retry;
};

struct AuditResult {
  AuditReport report;
  std::vector<VerdictLogEntry> verdicts;  // in (trajectory, step) order
  std::vector<SkippedStep> skipped;
  std::vector<std::string> warnings;
};

/// Rates recomputed from a verdict log alone.
inline AuditReport report_from_verdicts(const std::vector<VerdictLogEntry>& verdicts) {
  AuditReport r;
  std::map<std::string, std::size_t> seen;
  for (const VerdictLogEntry& v : verdicts) {
    auto& bucket = r.by_search_count[v.search_count];
    if (seen.emplace(v.trajectory_id, v.search_count).second) bucket.trajectories += 1;
    switch (v.verdict.kind) {
      case VerdictKind::OverSearch: r.over.flagged++; bucket.over.flagged++; [[fallthrough]];
      case VerdictKind::NotOverSearch: r.over.probed++; bucket.over.probed++; break;
      case VerdictKind::UnderSearch: r.under.flagged++; bucket.under.flagged++; [[fallthrough]];
      case VerdictKind::NotUnderSearch: r.under.probed++; bucket.under.probed++; break;
    }
  }
  r.over_search_rate = r.over.rate();
  r.under_search_rate = r.under.rate();
  return r;
}

inline AuditResult audit_corpus(const std::vector<TrajectoryRecord>& records, const ProbeClients& clients,
                                const AuditOptions& opts = {}) {
  std::vector<Trajectory> parsed;
  parsed.reserve(records.size());
  for (const TrajectoryRecord& r : records) {
    try {
      parsed.push_back(r.parse(ParseMode::Lenient));
    } catch (const Error& e) {
      throw Error(e.code(), "trajectory '" + r.key() + "': " + e.message());
    }
  }

  // Stage 1: step extraction, one slot per trajectory.
  std::vector<std::vector<AuditStep>> steps(records.size());
  std::vector<std::optional<std::string>> extract_errors(records.size());
  const CompletionClient* judge = opts.judge_extraction ? clients.judge.get() : nullptr;
  if (opts.judge_extraction && judge == nullptr) {
    throw Error(Errc::JudgeUnavailable, "judge extraction requested without a judge client");
  }
  parallel_for(records.size(), opts.concurrency, [&](std::size_t i) {
    try {
      steps[i] = extract_steps(parsed[i], judge, {opts.judge_extraction, opts.retry});
    } catch (const Error& e) {
      if (!is_client_failure(e.code())) throw;
      extract_errors[i] = e.what();
    }
  });

  // Stage 2: probes, one slot per step.
  struct Item {
    std::size_t traj;
    std::size_t step;
  };
  std::vector<Item> items;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    for (std::size_t j = 0; j < steps[i].size(); ++j) items.push_back({i, j});
  }
  std::vector<std::optional<AuditVerdict>> verdicts(items.size());
  std::vector<std::optional<std::string>> probe_errors(items.size());
  const ProbeOptions probe_opts{opts.sub_query_mode, opts.retry};
  parallel_for(items.size(), opts.concurrency, [&](std::size_t k) {
    const AuditStep& a = steps[items[k].traj][items[k].step];
    try {
      verdicts[k] = a.step.is_retrieval()
                        ? probe_over_search(a, clients, probe_opts)
                        : probe_under_search(a, clients, parsed[items[k].traj].question, probe_opts);
    } catch (const Error& e) {
      if (!is_client_failure(e.code())) throw;
      probe_errors[k] = e.what();
    }
  });

  AuditResult result;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (extract_errors[i]) {
      for (const Step& s : parsed[i].steps) result.skipped.push_back({records[i].key(), s.index, *extract_errors[i]});
    }
  }
  for (std::size_t k = 0; k < items.size(); ++k) {
    const std::size_t i = items[k].traj;
    if (verdicts[k]) {
      result.verdicts.push_back({records[i].key(), parsed[i].retrieval_count(), std::move(*verdicts[k])});
    } else {
      result.skipped.push_back({records[i].key(), steps[i][items[k].step].step.index, *probe_errors[k]});
    }
  }

  result.report = report_from_verdicts(result.verdicts);
  // Trajectory counts include trajectories whose steps were all skipped.
  for (auto& [count, bucket] : result.report.by_search_count) bucket.trajectories = 0;
  for (const Trajectory& t : parsed) result.report.by_search_count[t.retrieval_count()].trajectories += 1;
  result.report.skipped_steps = result.skipped.size();

  if (opts.hop_table) {
    std::vector<HopObservation> obs;
    std::size_t missing = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!records[i].hops) {
        ++missing;
        continue;
      }
      bool correct = false;
      if (!parsed[i].truncated && !records[i].gold_answers.empty()) {
        correct = exact_match(parsed[i].answer_text(), GoldAnswers(records[i].gold_answers)) == 1;
      }
      obs.push_back({hop_comparison(parsed[i], *records[i].hops), correct});
    }
    if (obs.empty()) {
      result.warnings.push_back("hop table requested but no record carries hop annotations; omitted");
    } else {
      if (missing > 0) {
        result.warnings.push_back(std::to_string(missing) + " record(s) without hop annotations left out of the hop table");
      }
      result.report.hop_table = tabulate_hops(obs);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const VerdictLogEntry& v) {
  return {{"trajectory_id", v.trajectory_id},
          {"step_index", v.verdict.step_index},
          {"kind", verdict_kind_name(v.verdict.kind)},
          {"probe_answer", v.verdict.probe_answer},
          {"judge_rationale", v.verdict.judge_rationale},
          {"search_count", v.search_count}};
}

inline VerdictLogEntry verdict_from_json(const nlohmann::json& j, const std::string& where) {
  VerdictLogEntry v;
  v.trajectory_id = detail::require_string(j, "trajectory_id", where);
  v.verdict.kind = verdict_kind_from_name(detail::require_string(j, "kind", where));
  v.verdict.probe_answer = detail::require_string(j, "probe_answer", where);
  v.verdict.judge_rationale = detail::require_string(j, "judge_rationale", where);
  if (!j.contains("step_index") || !j["step_index"].is_number_unsigned()) {
    detail::schema_error(where, "field 'step_index' must be a non-negative integer");
  }
  v.verdict.step_index = j["step_index"].get<std::size_t>();
  v.search_count = j.value("search_count", std::size_t{0});
  return v;
}

inline nlohmann::json to_json(const AuditReport& r) {
  nlohmann::json j;
  j["over_search_rate"] = r.over_search_rate;
  j["under_search_rate"] = r.under_search_rate;
  j["over_search"] = {{"flagged", r.over.flagged}, {"probed", r.over.probed}};
  j["under_search"] = {{"flagged", r.under.flagged}, {"probed", r.under.probed}};
  j["skipped_steps"] = r.skipped_steps;
  nlohmann::json buckets = nlohmann::json::array();
  for (const auto& [count, b] : r.by_search_count) {
    buckets.push_back({{"search_count", count},
                       {"trajectories", b.trajectories},
                       {"over_rate", b.over.rate()},
                       {"over_flagged", b.over.flagged},
                       {"retrieval_steps", b.over.probed},
                       {"under_rate", b.under.rate()},
                       {"under_flagged", b.under.flagged},
                       {"non_retrieval_steps", b.under.probed}});
  }
  j["by_search_count"] = buckets;
  if (r.hop_table) {
    nlohmann::json rows = nlohmann::json::object();
    for (const auto& [c, row] : r.hop_table->rows) {
      rows[std::string(hop_category_name(c))] = {{"correct", row.correct},
                                                 {"incorrect", row.incorrect},
                                                 {"correct_pct", row.correct_pct},
                                                 {"incorrect_pct", row.incorrect_pct},
                                                 {"sum_pct", row.sum_pct()}};
    }
    j["hop_table"] = {{"total", r.hop_table->total}, {"rows", rows}};
  } else {
    j["hop_table"] = nullptr;
  }
  nlohmann::json groups = nlohmann::json::object();
  for (const auto& [name, g] : r.confidence_groups) {
    groups[name] = {{"max_cover_em", g.max_cover_em}, {"min_cover_em", g.min_cover_em}, {"questions", g.questions}};
  }
  j["confidence_groups"] = groups;
  return j;
}

/// Plain-text tables: rates by per-trajectory search count, then the hop
/// table and confidence groups when present.
inline std::string render_report_table(const AuditReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "searches  trajectories  search_steps  over_search_%  non_search_steps  under_search_%\n";
  for (const auto& [count, b] : r.by_search_count) {
    os << std::setw(8) << count << "  " << std::setw(12) << b.trajectories << "  " << std::setw(12)
       << b.over.probed << "  " << std::setw(13) << 100.0 * b.over.rate() << "  " << std::setw(16)
       << b.under.probed << "  " << std::setw(14) << 100.0 * b.under.rate() << "\n";
  }
  os << std::setw(8) << "all" << "  " << std::setw(12) << "" << "  " << std::setw(12) << r.over.probed
     << "  " << std::setw(13) << 100.0 * r.over_search_rate << "  " << std::setw(16) << r.under.probed
     << "  " << std::setw(14) << 100.0 * r.under_search_rate << "\n";
  os << "skipped steps: " << r.skipped_steps << "\n";
  if (r.hop_table) {
    os << "\nsearch_vs_hops  correct_%  incorrect_%  sum_%\n";
    for (const auto& [c, row] : r.hop_table->rows) {
      os << std::setw(14) << hop_category_name(c) << "  " << std::setw(9) << row.correct_pct << "  "
         << std::setw(11) << row.incorrect_pct << "  " << std::setw(5) << row.sum_pct() << "\n";
    }
  }
  if (!r.confidence_groups.empty()) {
    os << std::setprecision(3) << "\ndataset  max_group_cover_em  min_group_cover_em  questions\n";
    for (const auto& [name, g] : r.confidence_groups) {
      os << name << "  " << g.max_cover_em << "  " << g.min_cover_em << "  " << g.questions << "\n";
    }
  }
  return os.str();
}

}  // namespace agentrag
