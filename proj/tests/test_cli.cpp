#include <gtest/gtest.h>

#include <json.hpp>

#include "agentrag/agentrag.hpp"
#include "cli_support.hpp"

using namespace fixtures;
using nlohmann::json;

namespace {

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::string rollout_args(const fs::path& out, const std::string& extra = "") {
  return "rollout --dataset " + q(data_path("dataset3.jsonl")) + " --corpus " + q(data_path("corpus.jsonl")) +
         " --out " + q(out) + " " + extra;
}

std::string audit_args(const fs::path& out, const std::string& log = "audit_log.jsonl") {
  return "audit --trajectories " + q(data_path(log)) + " --mock-responses " + q(data_path("mock_responses.json")) +
         " --out " + q(out);
}

}  // namespace

TEST(CliScore, SevenOfTen) {
  auto dir = scratch_dir("score");
  auto r = run_cli("score --dataset " + q(data_path("dataset10.jsonl")) + " --trajectories " +
                       q(data_path("score_trajectories.jsonl")) + " --out " + q(dir / "out"),
                   dir);
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("n=10 EM 0.700 CoverEM 0.700"), std::string::npos) << r.output;
  const std::string tsv = slurp(dir / "out" / "scores.tsv");
  EXPECT_EQ(line_count(tsv), 12u);
  EXPECT_TRUE(tsv.starts_with("id\tem\tcover_em\tprediction\n"));
  EXPECT_NE(tsv.find("\nMEAN\t0.700000\t0.700000\t\n"), std::string::npos);
  EXPECT_NE(tsv.find("q3\t0\t0\tSaturn\n"), std::string::npos);
  const std::string jsonl = slurp(dir / "out" / "scores.jsonl");
  const std::string last = jsonl.substr(jsonl.rfind('\n', jsonl.size() - 2) + 1);
  const json corpus = json::parse(last)["corpus"];
  EXPECT_EQ(corpus["n"], 10);
  EXPECT_DOUBLE_EQ(corpus["em"].get<double>(), 0.7);
  EXPECT_TRUE(fs::exists(dir / "out" / "run_config.json"));
}

TEST(CliScore, EmptyLogIsEmptyInput) {
  auto dir = scratch_dir("empty");
  std::ofstream(dir / "empty.jsonl").close();
  auto r = run_cli("score --dataset " + q(data_path("dataset10.jsonl")) + " --trajectories " + q(dir / "empty.jsonl") +
                       " --out " + q(dir / "out"),
                   dir);
  EXPECT_EQ(r.code, 65);
  EXPECT_NE(r.output.find("EmptyInput"), std::string::npos) << r.output;
}

TEST(CliScore, UnknownIdNamesRecord) {
  auto dir = scratch_dir("unknown");
  std::ofstream(dir / "log.jsonl") << R"({"id": "q1", "question": "x", "raw_text": "<answer> Paris </answer>"})" "\n"
                                   << R"({"id": "zz", "question": "x", "raw_text": "<answer> Paris </answer>"})" "\n";
  auto r = run_cli("score --dataset " + q(data_path("dataset10.jsonl")) + " --trajectories " + q(dir / "log.jsonl") +
                       " --out " + q(dir / "out"),
                   dir);
  EXPECT_EQ(r.code, 65);
  EXPECT_NE(r.output.find("SchemaError"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("log.jsonl:2"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("'zz'"), std::string::npos) << r.output;
}

TEST(CliScore, MalformedStrictRecordNamesLine) {
  auto dir = scratch_dir("strict");
  std::ofstream(dir / "log.jsonl") << R"({"id": "q1", "question": "x", "raw_text": "<think> open"})" "\n";
  auto r = run_cli("score --mode strict --dataset " + q(data_path("dataset10.jsonl")) + " --trajectories " +
                       q(dir / "log.jsonl") + " --out " + q(dir / "out"),
                   dir);
  EXPECT_EQ(r.code, 65);
  EXPECT_NE(r.output.find("log.jsonl:1"), std::string::npos) << r.output;
  EXPECT_EQ(r.output.find("SchemaError: " + (dir / "log.jsonl").string() + ":1: SchemaError"), std::string::npos);
}

TEST(CliUsage, ExitCodes) {
  auto dir = scratch_dir("usage");
  EXPECT_EQ(run_cli("", dir).code, 64);
  EXPECT_EQ(run_cli("frobnicate", dir).code, 64);
  EXPECT_EQ(run_cli("score --out " + q(dir / "o"), dir).code, 64);
  EXPECT_EQ(run_cli("score --beta 2", dir).code, 64);
  EXPECT_EQ(run_cli(audit_args(dir / "o") + " --beta 1.5", dir).code, 64);
  EXPECT_EQ(run_cli(audit_args(dir / "o") + " --mode loose", dir).code, 64);
  EXPECT_EQ(run_cli(rollout_args(dir / "o", "--group-size 1"), dir).code, 64);
  EXPECT_EQ(run_cli(rollout_args(dir / "o", "--top-k 0"), dir).code, 64);
  std::ofstream(dir / "bad.json") << R"({"beta": 0.4, "gamma": 1})";
  auto r = run_cli("--config " + q(dir / "bad.json") + " score", dir);
  EXPECT_EQ(r.code, 64);
  EXPECT_NE(r.output.find("gamma"), std::string::npos);
  EXPECT_EQ(run_cli("--help", dir).code, 0);
}

TEST(CliAudit, MockFixture) {
  auto dir = scratch_dir("audit");
  auto r = run_cli(audit_args(dir / "out") + " --hop-table", dir);
  ASSERT_EQ(r.code, 0) << r.output;
  const json report = json::parse(slurp(dir / "out" / "report.json"));
  EXPECT_EQ(report["over_search"]["flagged"], 1);
  EXPECT_EQ(report["over_search"]["probed"], 2);
  EXPECT_EQ(report["under_search"]["flagged"], 1);
  EXPECT_EQ(report["under_search"]["probed"], 3);
  EXPECT_DOUBLE_EQ(report["over_search_rate"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(report["under_search_rate"].get<double>(), 1.0 / 3.0);
  EXPECT_EQ(report["hop_table"]["total"], 3);
  EXPECT_EQ(report["hop_table"]["rows"]["Match"]["correct"], 2);
  EXPECT_EQ(report["hop_table"]["rows"]["Less"]["incorrect"], 1);
  EXPECT_EQ(line_count(slurp(dir / "out" / "verdicts.jsonl")), 5u);
  EXPECT_EQ(slurp(dir / "out" / "skipped.jsonl"), "");
  EXPECT_NE(r.output.find("searches  trajectories"), std::string::npos);

  // The report is a function of the verdict log alone.
  std::vector<agentrag::VerdictLogEntry> verdicts;
  agentrag::read_jsonl(dir / "out" / "verdicts.jsonl", [&](const json& j, const std::string& where) {
    verdicts.push_back(agentrag::verdict_from_json(j, where));
  });
  const auto again = agentrag::report_from_verdicts(verdicts);
  EXPECT_EQ(again.over.flagged, 1u);
  EXPECT_EQ(again.under.probed, 3u);
}

TEST(CliAudit, MatchesLibrary) {
  auto dir = scratch_dir("audit-lib");
  ASSERT_EQ(run_cli(audit_args(dir / "out") + " --concurrency 3", dir).code, 0);
  const auto records = agentrag::read_trajectory_log(data_path("audit_log.jsonl"));
  agentrag::RunConfig cfg;
  cfg.mock_responses = data_path("mock_responses.json");
  const auto clients = agentrag::make_probe_clients(cfg);
  const auto lib = agentrag::audit_corpus(records, clients, {});
  EXPECT_EQ(json::parse(slurp(dir / "out" / "report.json")), agentrag::to_json(lib.report));
  EXPECT_EQ(slurp(dir / "out" / "verdicts.jsonl"), agentrag::to_jsonl(lib.verdicts));
}

TEST(CliAudit, HopTableWithoutHopsWarns) {
  auto dir = scratch_dir("nohops");
  auto r = run_cli(audit_args(dir / "out", "audit_log_nohops.jsonl") + " --hop-table", dir);
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("warning:"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("hop"), std::string::npos) << r.output;
}

TEST(CliAudit, ConfidenceGroupsNeedCandidates) {
  auto dir = scratch_dir("groups");
  auto r = run_cli(audit_args(dir / "out") + " --confidence-groups", dir);
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("warning: confidence groups"), std::string::npos) << r.output;
}

TEST(CliAudit, UnreachableEndpointsExit69) {
  auto dir = scratch_dir("unreachable");
  const std::string dead = "http://127.0.0.1:1/v1/chat/completions";
  auto r = run_cli(audit_args(dir / "out") + " --clients http --max-attempts 1 --answerer-url " + dead +
                       " --reference-url " + dead + " --judge-url " + dead,
                   dir, "AGENTRAG_API_KEY=secret-token-123");
  EXPECT_EQ(r.code, 69) << r.output;
  EXPECT_NE(r.output.find("ClientError"), std::string::npos) << r.output;
  EXPECT_EQ(line_count(slurp(dir / "out" / "skipped.jsonl")), 5u);
  const std::string cfg = slurp(dir / "out" / "run_config.json");
  EXPECT_FALSE(cfg.empty());
  EXPECT_EQ(cfg.find("secret-token-123"), std::string::npos);
}

TEST(CliAudit, MissingJudgeIsJudgeUnavailable) {
  auto dir = scratch_dir("nojudge");
  const std::string dead = "http://127.0.0.1:1";
  auto r = run_cli(audit_args(dir / "out") + " --clients http --answerer-url " + dead + " --reference-url " + dead, dir,
                   "AGENTRAG_JUDGE_URL=");
  EXPECT_EQ(r.code, 69) << r.output;
  EXPECT_NE(r.output.find("JudgeUnavailable"), std::string::npos) << r.output;
}

TEST(CliRollout, ThreeQuestionsByFive) {
  auto dir = scratch_dir("rollout");
  auto r = run_cli(rollout_args(dir / "out", "--seed 11"), dir);
  ASSERT_EQ(r.code, 0) << r.output;
  const std::string log = slurp(dir / "out" / "trajectories.jsonl");
  ASSERT_EQ(line_count(log), 15u);
  EXPECT_EQ(slurp(dir / "out" / "failures.jsonl"), "");
  std::istringstream in(log);
  std::string line;
  int k = 0;
  while (std::getline(in, line)) {
    const json j = json::parse(line);
    EXPECT_EQ(j["id"], "q" + std::to_string(k / 5 + 1));
    EXPECT_EQ(j["sample"], k % 5);
    const auto t = agentrag::trajectory_record_from_json(j, "x").parse(agentrag::ParseMode::Strict);
    EXPECT_FALSE(t.answer_text().empty());
    for (const auto& s : t.steps) {
      if (s.context) {
        EXPECT_LE(std::count(s.context->text.begin(), s.context->text.end(), '\n') + 1, 3);
      }
    }
    ++k;
  }
}

TEST(CliRollout, Reproducible) {
  auto dir = scratch_dir("repro");
  ASSERT_EQ(run_cli(rollout_args(dir / "a", "--seed 5"), dir).code, 0);
  ASSERT_EQ(run_cli(rollout_args(dir / "b", "--seed 5 --concurrency 4"), dir).code, 0);
  ASSERT_EQ(run_cli(rollout_args(dir / "c", "--seed 6"), dir).code, 0);
  const std::string a = slurp(dir / "a" / "trajectories.jsonl");
  EXPECT_EQ(a, slurp(dir / "b" / "trajectories.jsonl"));
  EXPECT_NE(a, slurp(dir / "c" / "trajectories.jsonl"));

  ASSERT_EQ(run_cli("--config " + q(dir / "a" / "run_config.json") + " rollout --out " + q(dir / "d"), dir).code, 0);
  EXPECT_EQ(a, slurp(dir / "d" / "trajectories.jsonl"));
  const json cfg = json::parse(slurp(dir / "a" / "run_config.json"));
  EXPECT_EQ(cfg["seed"], 5);
  EXPECT_EQ(cfg["group_size"], 5);
  EXPECT_EQ(cfg["top_k"], 3);
  EXPECT_EQ(cfg["mode"], "lenient");
}

TEST(CliRollout, ScoresItsOwnOutput) {
  auto dir = scratch_dir("chain");
  ASSERT_EQ(run_cli(rollout_args(dir / "r"), dir).code, 0);
  auto s = run_cli("score --mode strict --dataset " + q(data_path("dataset3.jsonl")) + " --trajectories " +
                       q(dir / "r" / "trajectories.jsonl") + " --out " + q(dir / "s"),
                   dir);
  EXPECT_EQ(s.code, 0) << s.output;
  EXPECT_NE(s.output.find("n=15"), std::string::npos);
}

TEST(CliRollout, UnreachablePolicyExit69) {
  auto dir = scratch_dir("deadpolicy");
  auto r = run_cli(rollout_args(dir / "out", "--clients http --policy-url http://127.0.0.1:1/generate "
                                             "--search-url http://127.0.0.1:1/retrieve"),
                   dir);
  EXPECT_EQ(r.code, 69) << r.output;
  EXPECT_EQ(line_count(slurp(dir / "out" / "failures.jsonl")), 15u);
}
