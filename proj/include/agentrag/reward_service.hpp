#pragma once

// HTTP reward endpoint for external trainers. One request scores one rollout
// group, so advantages never mix questions.
//
//   POST /v1/reward  {"question_id", "golds": [..], "rollouts": [{"raw_text", "tokens"}],
//                     "beta"?: number, "include_tags"?: bool}
//     200 {"question_id", "records": [{"confidence", "answer_correct", "reward", "advantage"}],
//          "config": {"beta", "include_tags", "no_search_confidence"}}
//     400 schema violations and unparseable rollouts
//     422 a rollout searches but carries no token probabilities
//     500 {"error": "internal", "id": ...}
//   GET  /v1/health  {"status": "ok", "config": {...}}

#include <atomic>
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "agentrag/error.hpp"
#include "agentrag/records.hpp"
#include "agentrag/reward.hpp"
#include "agentrag/trajectory.hpp"

namespace agentrag {

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

class RewardService {
 public:
  explicit RewardService(ConfidenceConfig cfg, ParseMode mode = ParseMode::Strict)
      : cfg_(cfg), mode_(mode), fault_seed_(std::random_device{}()) {
    cfg_.validate();
  }

  const ConfidenceConfig& config() const { return cfg_; }

  static nlohmann::json config_json(const ConfidenceConfig& cfg) {
    return {{"beta", cfg.beta}, {"include_tags", cfg.include_tags}, {"no_search_confidence", cfg.no_search_confidence}};
  }

  ServiceResponse health() const { return {200, {{"status", "ok"}, {"config", config_json(cfg_)}}}; }

  ServiceResponse handle(std::string_view body) const {
    try {
      nlohmann::json req;
      try {
        req = nlohmann::json::parse(body);
      } catch (const nlohmann::json::parse_error&) {
        return error(400, "SchemaError", "request body is not JSON");
      }
      return handle(req);
    } catch (const std::exception& e) {
      return internal(e.what());
    }
  }

  ServiceResponse handle(const nlohmann::json& req) const {
    try {
      ConfidenceConfig cfg = cfg_;
      RolloutGroup group = decode(req, cfg);
      cfg.validate();
      const std::vector<RewardRecord> records = reward_group(group, cfg);
      nlohmann::json out_records = nlohmann::json::array();
      for (const RewardRecord& r : records) {
        out_records.push_back({{"confidence", r.confidence},
                               {"answer_correct", r.answer_correct},
                               {"reward", r.reward},
                               {"advantage", r.advantage}});
      }
      return {200, {{"question_id", group.question_id}, {"records", out_records}, {"config", config_json(cfg)}}};
    } catch (const Error& e) {
      const int status = e.code() == Errc::MissingLogprobs ? 422 : 400;
      return error(status, std::string(errc_name(e.code())), e.message());
    } catch (const std::exception& e) {
      return internal(e.what());
    }
  }

  /// Request body to group, applying per-request overrides to `cfg`.
  RolloutGroup decode(const nlohmann::json& req, ConfidenceConfig& cfg) const {
    const std::string where = "request";
    if (!req.is_object()) detail::schema_error(where, "body must be an object");
    const std::string qid = detail::require_string(req, "question_id", where);
    std::vector<std::string> golds = detail::require_strings(req, "golds", where);
    if (golds.empty()) detail::schema_error(where, "'golds' is empty");
    if (req.contains("beta")) {
      if (!req["beta"].is_number()) detail::schema_error(where, "'beta' must be a number");
      cfg.beta = req["beta"].get<double>();
    }
    if (req.contains("include_tags")) {
      if (!req["include_tags"].is_boolean()) detail::schema_error(where, "'include_tags' must be a boolean");
      cfg.include_tags = req["include_tags"].get<bool>();
    }
    auto it = req.find("rollouts");
    if (it == req.end() || !it->is_array()) detail::schema_error(where, "'rollouts' must be an array");

    RolloutGroup group{qid, {}, GoldAnswers(std::move(golds)), {}};
    for (std::size_t i = 0; i < it->size(); ++i) {
      const nlohmann::json& r = (*it)[i];
      const std::string at = "rollouts[" + std::to_string(i) + "]";
      if (!r.is_object()) detail::schema_error(at, "must be an object");
      const std::string raw = detail::require_string(r, "raw_text", at);
      auto tokens = r.contains("tokens") ? tokens_from_json(r["tokens"], at) : std::nullopt;
      try {
        group.trajectories.push_back(tokens ? parse_trajectory(raw, *tokens, mode_, qid)
                                            : parse_trajectory(raw, mode_, qid));
      } catch (const Error& e) {
        throw Error(e.code(), at + ": " + e.message());
      }
    }
    return group;
  }

 private:
  static ServiceResponse error(int status, const std::string& code, const std::string& message) {
    return {status, {{"error", code}, {"message", message}}};
  }

  ServiceResponse internal(const std::string& what) const {
    std::ostringstream id;
    id << std::hex << std::setw(16) << std::setfill('0') << strings::splitmix64(fault_seed_ + counter_++);
    std::cerr << "internal fault " << id.str() << ": " << what << "\n";
    return {500, {{"error", "internal"}, {"id", id.str()}}};
  }

  ConfidenceConfig cfg_;
  ParseMode mode_;
  std::uint64_t fault_seed_;
  mutable std::atomic<std::uint64_t> counter_{0};
};

inline void mount_reward_routes(httplib::Server& server, const RewardService& service) {
  auto send = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Post("/v1/reward", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.handle(std::string_view(req.body)));
  });
  server.Get("/v1/health", [&service, send](const httplib::Request&, httplib::Response& res) {
    send(res, service.health());
  });
}

/// Blocks serving until the server is stopped. Returns false if binding fails.
inline bool serve_reward(const std::string& host, int port, const ConfidenceConfig& cfg,
                         ParseMode mode = ParseMode::Strict, std::size_t threads = 8) {
  RewardService service(cfg, mode);
  httplib::Server server;
  server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  mount_reward_routes(server, service);
  return server.listen(host, port);
}

}  // namespace agentrag
