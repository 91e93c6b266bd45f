#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "agentrag/commands.hpp"

namespace {

using agentrag::RunConfig;

// Each flag maps to the RunConfig key of the same name; only flags given on
// the command line override values loaded with --config.
struct Flags {
  RunConfig values;
  std::vector<std::pair<CLI::Option*, std::string>> keys;

  template <typename T>
  void add(CLI::App* app, const std::string& key, T& field, const std::string& help) {
    std::string flag = "--" + key;
    for (char& c : flag) c = c == '_' ? '-' : c;
    keys.emplace_back(app->add_option(flag, field, help), key);
  }

  void add_flag(CLI::App* app, const std::string& key, bool& field, const std::string& help) {
    std::string flag = "--" + key;
    for (char& c : flag) c = c == '_' ? '-' : c;
    keys.emplace_back(app->add_flag(flag, field, help), key);
  }

  RunConfig resolve(const std::string& config_path) const {
    RunConfig cfg = config_path.empty() ? RunConfig{} : agentrag::load_run_config(config_path);
    const nlohmann::json given = agentrag::to_json(values);
    nlohmann::json patch = nlohmann::json::object();
    for (const auto& [opt, key] : keys) {
      if (opt->count() > 0) patch[key] = given[key];
    }
    agentrag::apply_json(cfg, patch);
    return cfg;
  }
};

void add_confidence(CLI::App* app, Flags& f) {
  f.add(app, "beta", f.values.beta, "confidence threshold for the reward gate");
  f.add_flag(app, "include_tags", f.values.include_tags, "count <search> tag tokens in the confidence minimum");
  f.add(app, "no_search_confidence", f.values.no_search_confidence, "confidence of trajectories that never search");
}

void add_common(CLI::App* app, Flags& f) {
  f.add(app, "mode", f.values.mode, "parse mode: strict or lenient");
  f.add(app, "out", f.values.out, "output directory");
  f.add(app, "concurrency", f.values.concurrency, "worker threads");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Search-agent trajectory toolkit: scoring, rollouts, audits and a reward server."};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "JSON run config; flags override its values")->check(CLI::ExistingFile);

  Flags f;

  CLI::App* score = app.add_subcommand("score", "EM and Cover EM of a trajectory log against a dataset");
  f.add(score, "dataset", f.values.dataset, "dataset JSONL");
  f.add(score, "trajectories", f.values.trajectories, "trajectory log JSONL");
  add_common(score, f);

  CLI::App* audit = app.add_subcommand("audit", "step-wise over-search and under-search audit");
  f.add(audit, "trajectories", f.values.trajectories, "trajectory log JSONL");
  f.add(audit, "clients", f.values.clients, "mock or http");
  f.add(audit, "mock_responses", f.values.mock_responses, "answer tables for mock clients (JSON)");
  f.add(audit, "answerer_url", f.values.answerer_url, "chat endpoint of the audited model");
  f.add(audit, "reference_url", f.values.reference_url, "chat endpoint of the reference model");
  f.add(audit, "judge_url", f.values.judge_url, "chat endpoint of the judge");
  f.add(audit, "answerer_model", f.values.answerer_model, "model name sent to the answerer");
  f.add(audit, "reference_model", f.values.reference_model, "model name sent to the reference");
  f.add(audit, "judge_model", f.values.judge_model, "model name sent to the judge");
  f.add(audit, "sub_query_mode", f.values.sub_query_mode, "extracted or question");
  f.add_flag(audit, "judge_extraction", f.values.judge_extraction, "extract step conclusions with the judge");
  f.add_flag(audit, "hop_table", f.values.hop_table, "tabulate search count against annotated hops");
  f.add_flag(audit, "confidence_groups", f.values.confidence_groups, "max/min confidence Cover EM per dataset");
  f.add(audit, "max_attempts", f.values.max_attempts, "attempts per client call");
  add_confidence(audit, f);
  add_common(audit, f);

  CLI::App* rollout = app.add_subcommand("rollout", "run the search loop for every question in a dataset");
  f.add(rollout, "dataset", f.values.dataset, "dataset JSONL");
  f.add(rollout, "clients", f.values.clients, "mock or http");
  f.add(rollout, "corpus", f.values.corpus, "document corpus JSONL for the mock retriever");
  f.add(rollout, "policy_url", f.values.policy_url, "policy generation endpoint");
  f.add(rollout, "search_url", f.values.search_url, "search endpoint");
  f.add(rollout, "group_size", f.values.group_size, "rollouts per question");
  f.add(rollout, "top_k", f.values.top_k, "documents per search");
  f.add(rollout, "max_turns", f.values.max_turns, "generation turns per rollout");
  f.add(rollout, "temperature", f.values.temperature, "sampling temperature");
  f.add(rollout, "doc_char_budget", f.values.doc_char_budget, "per-document code point limit, 0 for none");
  f.add(rollout, "seed", f.values.seed, "base seed");
  add_common(rollout, f);

  CLI::App* serve = app.add_subcommand("serve", "HTTP reward endpoint for trainers");
  f.add(serve, "host", f.values.host, "bind address");
  f.add(serve, "port", f.values.port, "bind port");
  add_confidence(serve, f);
  f.add(serve, "mode", f.values.mode, "parse mode: strict or lenient");
  f.add(serve, "concurrency", f.values.concurrency, "server threads (at least 8)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : agentrag::kExitUsage;
  }

  RunConfig cfg;
  try {
    cfg = f.resolve(config_path);
  } catch (const agentrag::Error& e) {
    std::cerr << e.what() << "\n";
    return agentrag::exit_code_for(e.code());
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return agentrag::run_command(command, cfg, std::cerr);
}
