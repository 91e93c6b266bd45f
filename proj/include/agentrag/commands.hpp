#pragma once

// Batch entry points behind the agentrag CLI. Each command reads its inputs,
// writes its outputs atomically into cfg.out together with run_config.json,
// and returns a process exit code.

#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "agentrag/audit.hpp"
#include "agentrag/config.hpp"
#include "agentrag/error.hpp"
#include "agentrag/harness.hpp"
#include "agentrag/http_clients.hpp"
#include "agentrag/mock_clients.hpp"
#include "agentrag/parallel.hpp"
#include "agentrag/qa_metrics.hpp"
#include "agentrag/records.hpp"
#include "agentrag/reward_service.hpp"

namespace agentrag {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitData = 65;
inline constexpr int kExitClient = 69;
inline constexpr int kExitInternal = 70;

inline int exit_code_for(Errc code) {
  if (is_client_failure(code) || code == Errc::JudgeUnavailable) return kExitClient;
  if (code == Errc::InvalidConfig) return kExitUsage;
  return kExitData;
}

namespace detail {

inline std::filesystem::path out_dir(const RunConfig& cfg) {
  return cfg.out.empty() ? std::filesystem::path(".") : std::filesystem::path(cfg.out);
}

inline void require_path(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(Errc::InvalidConfig, std::string("--") + flag + " is required");
}

inline void write_run_config(const RunConfig& cfg) {
  write_file_atomic(out_dir(cfg) / "run_config.json", to_json(cfg).dump(2) + "\n");
}

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string tsv_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\\': out += "\\\\"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string api_key(const char* role_var) {
  if (const char* v = std::getenv(role_var)) return v;
  if (const char* v = std::getenv("AGENTRAG_API_KEY")) return v;
  return {};
}

inline std::shared_ptr<const CompletionClient> lookup_from_json(const nlohmann::json& j, const std::string& where) {
  std::vector<std::pair<std::string, std::string>> table;
  std::string fallback = "unknown";
  if (j.is_null()) return std::make_shared<LookupClient>(table, fallback);
  if (!j.is_object()) schema_error(where, "must be an object");
  if (j.contains("default")) fallback = require_string(j, "default", where);
  if (auto t = j.find("table"); t != j.end()) {
    if (t->is_object()) {
      for (const auto& [k, v] : t->items()) {
        if (!v.is_string()) schema_error(where, "table values must be strings");
        table.emplace_back(k, v.get<std::string>());
      }
    } else if (t->is_array()) {
      for (const auto& pair : *t) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string()) {
          schema_error(where, "table entries must be [needle, response]");
        }
        table.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
      }
    } else {
      schema_error(where, "'table' must be an object or an array");
    }
  }
  return std::make_shared<LookupClient>(std::move(table), std::move(fallback));
}

}  // namespace detail

/// Mock mode: rule-based judge plus lookup tables for the answerer and the
/// reference model read from cfg.mock_responses
/// ({"answerer": {"table", "default"}, "reference": {...}}).
/// HTTP mode: chat endpoints; keys come from AGENTRAG_<ROLE>_API_KEY or
/// AGENTRAG_API_KEY.
inline ProbeClients make_probe_clients(const RunConfig& cfg) {
  ProbeClients c;
  if (cfg.clients == "mock") {
    nlohmann::json table = nlohmann::json::object();
    if (!cfg.mock_responses.empty()) {
      std::ifstream in(cfg.mock_responses);
      if (!in) throw Error(Errc::InvalidConfig, "cannot open " + cfg.mock_responses);
      try {
        table = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::SchemaError, cfg.mock_responses + ": " + e.what());
      }
      if (!table.is_object()) detail::schema_error(cfg.mock_responses, "must be an object");
    }
    c.answerer = detail::lookup_from_json(table.value("answerer", nlohmann::json()), cfg.mock_responses + ": answerer");
    c.reference = detail::lookup_from_json(table.value("reference", nlohmann::json()), cfg.mock_responses + ": reference");
    c.judge = std::make_shared<MockJudge>();
    return c;
  }
  if (cfg.judge_url.empty()) throw Error(Errc::JudgeUnavailable, "no judge endpoint configured");
  if (cfg.answerer_url.empty()) throw Error(Errc::InvalidConfig, "no answerer endpoint configured");
  if (cfg.reference_url.empty()) throw Error(Errc::InvalidConfig, "no reference endpoint configured");
  c.answerer = std::make_shared<HttpChatClient>(cfg.answerer_url, cfg.answerer_model,
                                                detail::api_key("AGENTRAG_ANSWERER_API_KEY"));
  c.reference = std::make_shared<HttpChatClient>(cfg.reference_url, cfg.reference_model,
                                                 detail::api_key("AGENTRAG_REFERENCE_API_KEY"));
  c.judge = std::make_shared<HttpChatClient>(cfg.judge_url, cfg.judge_model, detail::api_key("AGENTRAG_JUDGE_API_KEY"));
  return c;
}

// ---------------------------------------------------------------------------

inline int cmd_score(const RunConfig& cfg, std::ostream& log) {
  detail::require_path(cfg.dataset, "dataset");
  detail::require_path(cfg.trajectories, "trajectories");

  std::map<std::string, DatasetRecord> dataset;
  for (DatasetRecord& r : read_dataset(cfg.dataset)) {
    std::string id = r.id;
    dataset.emplace(std::move(id), std::move(r));
  }

  std::vector<ScoreRecord> scores;
  std::vector<std::string> keys;
  read_jsonl(cfg.trajectories, [&](const json& j, const std::string& where) {
    const TrajectoryRecord rec = trajectory_record_from_json(j, where);
    auto it = dataset.find(rec.id);
    if (it == dataset.end()) detail::schema_error(where, "id '" + rec.id + "' is not in the dataset");
    Trajectory t;
    try {
      t = rec.parse(cfg.parse_mode());
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.message());
    }
    const std::string prediction = t.truncated ? std::string() : t.answer_text();
    scores.push_back(score_prediction(rec.id, prediction, GoldAnswers(it->second.golden_answers)));
    keys.push_back(rec.key());
  });
  if (scores.empty()) throw Error(Errc::EmptyInput, cfg.trajectories + " holds no trajectories");

  double em = 0.0, cover = 0.0;
  for (const ScoreRecord& s : scores) {
    em += s.em;
    cover += s.cover_em;
  }
  em /= static_cast<double>(scores.size());
  cover /= static_cast<double>(scores.size());

  std::string tsv = "id\tem\tcover_em\tprediction\n";
  std::string jsonl;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const ScoreRecord& s = scores[i];
    tsv += detail::tsv_escape(keys[i]) + "\t" + std::to_string(s.em) + "\t" + std::to_string(s.cover_em) + "\t" +
           detail::tsv_escape(s.prediction) + "\n";
    jsonl += nlohmann::json{{"id", keys[i]}, {"em", s.em}, {"cover_em", s.cover_em}, {"prediction", s.prediction}}
                 .dump() +
             "\n";
  }
  tsv += "MEAN\t" + detail::fixed(em, 6) + "\t" + detail::fixed(cover, 6) + "\t\n";
  const nlohmann::json summary = {{"n", scores.size()}, {"em", em}, {"cover_em", cover}};
  jsonl += nlohmann::json{{"corpus", summary}}.dump() + "\n";

  const auto dir = detail::out_dir(cfg);
  write_file_atomic(dir / "scores.tsv", tsv);
  write_file_atomic(dir / "scores.jsonl", jsonl);
  detail::write_run_config(cfg);
  log << "n=" << scores.size() << " EM " << detail::fixed(em, 3) << " CoverEM " << detail::fixed(cover, 3) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

/// Groups records by id in order of first appearance; ids with fewer than
/// two candidates are skipped and counted.
inline std::vector<RolloutGroup> groups_from_records(const std::vector<TrajectoryRecord>& records,
                                                     ParseMode mode, std::size_t* skipped = nullptr) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const TrajectoryRecord*>> by_id;
  for (const TrajectoryRecord& r : records) {
    auto [it, fresh] = by_id.try_emplace(r.id);
    if (fresh) order.push_back(r.id);
    it->second.push_back(&r);
  }
  std::vector<RolloutGroup> groups;
  for (const std::string& id : order) {
    const auto& members = by_id[id];
    if (members.size() < 2 || members.front()->gold_answers.empty()) {
      if (skipped != nullptr) ++*skipped;
      continue;
    }
    RolloutGroup g{id, {}, GoldAnswers(members.front()->gold_answers),
                   members.front()->dataset.empty() ? "all" : members.front()->dataset};
    for (const TrajectoryRecord* r : members) g.trajectories.push_back(r->parse(mode));
    groups.push_back(std::move(g));
  }
  return groups;
}

inline int cmd_audit(const RunConfig& cfg, std::ostream& log) {
  detail::require_path(cfg.trajectories, "trajectories");
  const std::vector<TrajectoryRecord> records = read_trajectory_log(cfg.trajectories);
  if (records.empty()) throw Error(Errc::EmptyInput, cfg.trajectories + " holds no trajectories");

  const ProbeClients clients = make_probe_clients(cfg);
  AuditOptions opts;
  opts.sub_query_mode = cfg.sub_query();
  opts.judge_extraction = cfg.judge_extraction;
  opts.hop_table = cfg.hop_table;
  opts.concurrency = cfg.concurrency;
  opts.retry.max_attempts = cfg.max_attempts;
  AuditResult result = audit_corpus(records, clients, opts);

  if (cfg.confidence_groups) {
    std::size_t skipped = 0;
    const auto groups = groups_from_records(records, cfg.parse_mode(), &skipped);
    if (groups.empty()) {
      result.warnings.push_back("confidence groups requested but no id has two or more candidates; omitted");
    } else {
      if (skipped > 0) {
        result.warnings.push_back(std::to_string(skipped) + " id(s) with a single candidate or no gold answers " +
                                  "left out of the confidence groups");
      }
      result.report.confidence_groups = confidence_group_analysis(groups, cfg.confidence());
    }
  }

  std::string skipped_jsonl;
  for (const SkippedStep& s : result.skipped) {
    skipped_jsonl +=
        nlohmann::json{{"trajectory_id", s.trajectory_id}, {"step_index", s.step_index}, {"error", s.error}}.dump() +
        "\n";
  }

  const auto dir = detail::out_dir(cfg);
  write_file_atomic(dir / "verdicts.jsonl", to_jsonl(result.verdicts));
  write_file_atomic(dir / "skipped.jsonl", skipped_jsonl);
  write_file_atomic(dir / "report.json", to_json(result.report).dump(2) + "\n");
  const std::string table = render_report_table(result.report);
  write_file_atomic(dir / "report.txt", table);
  detail::write_run_config(cfg);

  for (const std::string& w : result.warnings) log << "warning: " << w << "\n";
  log << table;
  if (!result.skipped.empty()) {
    log << "ClientError: " << result.skipped.size() << " step(s) skipped after client failures; first: "
        << result.skipped.front().error << "\n";
    return kExitClient;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

inline int cmd_rollout(const RunConfig& cfg, std::ostream& log) {
  detail::require_path(cfg.dataset, "dataset");
  const LoopLimits limits = cfg.limits();
  limits.validate();
  if (limits.group_size < 2) {
    // A flag value, so a usage error even though the error is GroupTooSmall.
    log << Error(Errc::GroupTooSmall, "group_size must be at least 2, got " + std::to_string(limits.group_size)).what()
        << "\n";
    return kExitUsage;
  }
  const std::vector<DatasetRecord> dataset = read_dataset(cfg.dataset);
  if (dataset.empty()) throw Error(Errc::EmptyInput, cfg.dataset + " holds no questions");

  std::shared_ptr<const PolicyClient> policy;
  std::shared_ptr<const SearchClient> search;
  if (cfg.clients == "mock") {
    detail::require_path(cfg.corpus, "corpus");
    policy = std::make_shared<SeededMockPolicy>();
    search = mock_retriever(read_corpus(cfg.corpus));
  } else {
    if (cfg.policy_url.empty()) throw Error(Errc::InvalidConfig, "no policy endpoint configured");
    if (cfg.search_url.empty()) throw Error(Errc::InvalidConfig, "no search endpoint configured");
    policy = std::make_shared<HttpPolicyClient>(cfg.policy_url);
    search = std::make_shared<HttpSearchClient>(cfg.search_url);
  }

  const std::size_t g = limits.group_size;
  std::vector<std::optional<TrajectoryRecord>> slots(dataset.size() * g);
  std::vector<std::optional<Error>> failures(slots.size());
  parallel_for(slots.size(), cfg.concurrency, [&](std::size_t k) {
    const DatasetRecord& q = dataset[k / g];
    const std::size_t member = k % g;
    try {
      const Trajectory t = run_rollout(q.question, *policy, *search, limits, derive_seed(cfg.seed, q.question, member));
      TrajectoryRecord r;
      r.id = q.id;
      r.sample = static_cast<int>(member);
      r.question = q.question;
      r.raw_text = t.raw_text;
      r.tokens = t.tokens;
      r.gold_answers = q.golden_answers;
      r.hops = q.hops;
      slots[k] = std::move(r);
    } catch (const Error& e) {
      failures[k] = e;
    }
  });

  std::string log_lines;
  std::string failure_lines;
  std::size_t failed = 0;
  bool client_failure = false;
  for (std::size_t k = 0; k < slots.size(); ++k) {
    if (slots[k]) {
      log_lines += to_json(*slots[k]).dump() + "\n";
      continue;
    }
    ++failed;
    client_failure = client_failure || is_client_failure(failures[k]->code());
    failure_lines += nlohmann::json{{"id", dataset[k / g].id},
                                    {"sample", k % g},
                                    {"error", errc_name(failures[k]->code())},
                                    {"message", failures[k]->what()}}
                         .dump() +
                     "\n";
  }

  const auto dir = detail::out_dir(cfg);
  write_file_atomic(dir / "trajectories.jsonl", log_lines);
  write_file_atomic(dir / "failures.jsonl", failure_lines);
  detail::write_run_config(cfg);

  log << (slots.size() - failed) << " of " << slots.size() << " rollouts written";
  if (failed == 0) {
    log << "\n";
    return kExitOk;
  }
  log << "; " << failed << " failed (see failures.jsonl)\n";
  return client_failure ? kExitClient : kExitData;
}

// ---------------------------------------------------------------------------

inline int cmd_serve(const RunConfig& cfg, std::ostream& log) {
  const std::size_t threads = std::max<std::size_t>(cfg.concurrency, 8);
  log << "serving reward on http://" << cfg.host << ":" << cfg.port << " (beta " << cfg.beta << ")\n";
  log.flush();
  if (!serve_reward(cfg.host, cfg.port, cfg.confidence(), cfg.parse_mode(), threads)) {
    throw Error(Errc::InvalidConfig, "cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
  }
  return kExitOk;
}

/// Resolves and validates `cfg`, runs `command`, and maps failures to exit codes.
inline int run_command(const std::string& command, RunConfig cfg, std::ostream& log) {
  try {
    cfg.resolve(command);
    cfg.validate();
    if (command == "score") return cmd_score(cfg, log);
    if (command == "audit") return cmd_audit(cfg, log);
    if (command == "rollout") return cmd_rollout(cfg, log);
    if (command == "serve") return cmd_serve(cfg, log);
    log << "unknown command '" << command << "'\n";
    return kExitUsage;
  } catch (const Error& e) {
    log << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    log << "SchemaError: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    log << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace agentrag
