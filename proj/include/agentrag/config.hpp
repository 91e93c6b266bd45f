#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "agentrag/audit.hpp"
#include "agentrag/error.hpp"
#include "agentrag/harness.hpp"
#include "agentrag/reward.hpp"
#include "agentrag/trajectory.hpp"

namespace agentrag {

/// Everything a CLI run depends on. Credentials are read from the
/// environment at client construction and never stored here.
struct RunConfig {
  std::string command;

  double beta = 0.4;
  bool include_tags = false;
  double no_search_confidence = 1.0;

  std::size_t group_size = 5;
  std::size_t top_k = 3;
  std::size_t max_turns = 10;
  double temperature = 1.0;
  std::size_t doc_char_budget = 0;

  std::string mode;  // "strict" | "lenient"; empty picks the command default
  std::size_t concurrency = 1;
  std::uint64_t seed = 0;
  int max_attempts = 3;

  std::string clients = "mock";  // "mock" | "http"
  std::string policy_url, search_url, answerer_url, reference_url, judge_url;
  std::string answerer_model, reference_model, judge_model;

  std::string dataset, trajectories, corpus, mock_responses, out;

  std::string sub_query_mode = "extracted";  // "extracted" | "question"
  bool judge_extraction = false;
  bool hop_table = false;
  bool confidence_groups = false;

  std::string host = "127.0.0.1";
  int port = 8080;

  ConfidenceConfig confidence() const { return {beta, include_tags, no_search_confidence}; }

  LoopLimits limits() const {
    LoopLimits l;
    l.max_turns = max_turns;
    l.top_k = top_k;
    l.temperature = temperature;
    l.group_size = group_size;
    l.doc_char_budget = doc_char_budget;
    l.question_mode = parse_mode();
    return l;
  }

  ParseMode parse_mode() const { return mode == "strict" ? ParseMode::Strict : ParseMode::Lenient; }

  SubQueryMode sub_query() const {
    return sub_query_mode == "question" ? SubQueryMode::OriginalQuestion : SubQueryMode::ExtractedSubQuery;
  }

  /// Fills the command default mode and endpoint URLs from the environment.
  void resolve(const std::string& cmd) {
    command = cmd;
    if (mode.empty()) mode = cmd == "serve" ? "strict" : "lenient";
    auto env = [](std::string& field, const char* name) {
      if (!field.empty()) return;
      if (const char* v = std::getenv(name)) field = v;
    };
    env(policy_url, "AGENTRAG_POLICY_URL");
    env(search_url, "AGENTRAG_SEARCH_URL");
    env(answerer_url, "AGENTRAG_ANSWERER_URL");
    env(reference_url, "AGENTRAG_REFERENCE_URL");
    env(judge_url, "AGENTRAG_JUDGE_URL");
  }

  void validate() const {
    confidence().validate();
    limits().validate();
    auto bad = [](const std::string& what) { throw Error(Errc::InvalidConfig, what); };
    if (mode != "strict" && mode != "lenient") bad("mode must be 'strict' or 'lenient'");
    if (clients != "mock" && clients != "http") bad("clients must be 'mock' or 'http'");
    if (sub_query_mode != "extracted" && sub_query_mode != "question") {
      bad("sub_query_mode must be 'extracted' or 'question'");
    }
    if (concurrency == 0) bad("concurrency must be positive");
    if (max_attempts < 1) bad("max_attempts must be at least 1");
    if (port < 0 || port > 65535) bad("port out of range");
  }
};

inline nlohmann::json to_json(const RunConfig& c) {
  return {{"command", c.command},
          {"beta", c.beta},
          {"include_tags", c.include_tags},
          {"no_search_confidence", c.no_search_confidence},
          {"group_size", c.group_size},
          {"top_k", c.top_k},
          {"max_turns", c.max_turns},
          {"temperature", c.temperature},
          {"doc_char_budget", c.doc_char_budget},
          {"mode", c.mode},
          {"concurrency", c.concurrency},
          {"seed", c.seed},
          {"max_attempts", c.max_attempts},
          {"clients", c.clients},
          {"policy_url", c.policy_url},
          {"search_url", c.search_url},
          {"answerer_url", c.answerer_url},
          {"reference_url", c.reference_url},
          {"judge_url", c.judge_url},
          {"answerer_model", c.answerer_model},
          {"reference_model", c.reference_model},
          {"judge_model", c.judge_model},
          {"dataset", c.dataset},
          {"trajectories", c.trajectories},
          {"corpus", c.corpus},
          {"mock_responses", c.mock_responses},
          {"out", c.out},
          {"sub_query_mode", c.sub_query_mode},
          {"judge_extraction", c.judge_extraction},
          {"hop_table", c.hop_table},
          {"confidence_groups", c.confidence_groups},
          {"host", c.host},
          {"port", c.port}};
}

/// Applies the keys present in `j`; unknown keys are an error.
inline void apply_json(RunConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::InvalidConfig, "config must be a JSON object");
  const nlohmann::json known = to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw Error(Errc::InvalidConfig, "unknown config key '" + key + "'");
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("command", c.command);
    get("beta", c.beta);
    get("include_tags", c.include_tags);
    get("no_search_confidence", c.no_search_confidence);
    get("group_size", c.group_size);
    get("top_k", c.top_k);
    get("max_turns", c.max_turns);
    get("temperature", c.temperature);
    get("doc_char_budget", c.doc_char_budget);
    get("mode", c.mode);
    get("concurrency", c.concurrency);
    get("seed", c.seed);
    get("max_attempts", c.max_attempts);
    get("clients", c.clients);
    get("policy_url", c.policy_url);
    get("search_url", c.search_url);
    get("answerer_url", c.answerer_url);
    get("reference_url", c.reference_url);
    get("judge_url", c.judge_url);
    get("answerer_model", c.answerer_model);
    get("reference_model", c.reference_model);
    get("judge_model", c.judge_model);
    get("dataset", c.dataset);
    get("trajectories", c.trajectories);
    get("corpus", c.corpus);
    get("mock_responses", c.mock_responses);
    get("out", c.out);
    get("sub_query_mode", c.sub_query_mode);
    get("judge_extraction", c.judge_extraction);
    get("hop_table", c.hop_table);
    get("confidence_groups", c.confidence_groups);
    get("host", c.host);
    get("port", c.port);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("config value has the wrong type: ") + e.what());
  }
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidConfig, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::InvalidConfig, path.string() + ": " + e.what());
  }
  RunConfig c;
  apply_json(c, j);
  return c;
}

}  // namespace agentrag
