#pragma once

// Confidence-gated reward and group-relative advantages.
//
//   C(T) = min over every search-query token w in T of P(w)
//   R(T) = 1 if the answer is correct and C(T) > beta, else 0
//
// Trajectories without search calls are not gated: their confidence is
// ConfidenceConfig::no_search_confidence (1.0 by default).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "agentrag/error.hpp"
#include "agentrag/qa_metrics.hpp"
#include "agentrag/trajectory.hpp"

namespace agentrag {

struct ConfidenceConfig {
  double beta = 0.4;
  bool include_tags = false;
  double no_search_confidence = 1.0;

  void validate() const {
    if (!(beta >= 0.0 && beta < 1.0)) {
      throw Error(Errc::InvalidConfig, "beta must lie in [0, 1), got " + std::to_string(beta));
    }
    if (!(no_search_confidence > 0.0 && no_search_confidence <= 1.0)) {
      throw Error(Errc::InvalidConfig, "no_search_confidence must lie in (0, 1]");
    }
  }
};

struct RolloutGroup {
  std::string question_id;
  std::vector<Trajectory> trajectories;
  GoldAnswers golds;
  std::string dataset;  // partition label for confidence-group analysis
};

struct RewardRecord {
  double confidence = 1.0;
  int answer_correct = 0;
  int reward = 0;
  double advantage = 0.0;

  friend bool operator==(const RewardRecord&, const RewardRecord&) = default;
};

inline constexpr double kAdvantageEpsilon = 1e-6;

inline double search_confidence(const Trajectory& t, const ConfidenceConfig& cfg = {}) {
  const std::vector<double> probs = search_token_probs(t, cfg.include_tags);
  if (probs.empty()) return cfg.no_search_confidence;
  return *std::min_element(probs.begin(), probs.end());
}

/// Reward for one rollout; `advantage` is left at 0.
inline RewardRecord beta_reward(const Trajectory& t, const GoldAnswers& golds,
                                const ConfidenceConfig& cfg = {}) {
  RewardRecord r;
  r.confidence = search_confidence(t, cfg);
  r.answer_correct = t.truncated ? 0 : exact_match(t.answer_text(), golds);
  r.reward = (r.answer_correct == 1 && r.confidence > cfg.beta) ? 1 : 0;
  return r;
}

/// (r_i - mean) / max(std, eps) with the population standard deviation, and
/// all zeros when every reward is equal.
inline std::vector<double> group_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) {
    throw Error(Errc::GroupTooSmall,
                "advantages need at least 2 rollouts, got " + std::to_string(rewards.size()));
  }
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double sq = 0.0;
  for (double r : rewards) sq += (r - mean) * (r - mean);
  const double stddev = std::sqrt(sq / n);

  std::vector<double> adv(rewards.size(), 0.0);
  if (stddev == 0.0) return adv;
  const double denom = std::max(stddev, kAdvantageEpsilon);
  for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / denom;
  return adv;
}

inline std::vector<RewardRecord> reward_group(const RolloutGroup& g, const ConfidenceConfig& cfg = {}) {
  cfg.validate();
  if (g.trajectories.size() < 2) {
    throw Error(Errc::GroupTooSmall, "group '" + g.question_id + "' has " +
                                         std::to_string(g.trajectories.size()) + " rollouts");
  }
  for (const Trajectory& t : g.trajectories) {
    if (t.question != g.trajectories.front().question) {
      throw Error(Errc::InvalidGroup, "group '" + g.question_id + "' mixes questions");
    }
  }

  std::vector<RewardRecord> records;
  records.reserve(g.trajectories.size());
  for (const Trajectory& t : g.trajectories) records.push_back(beta_reward(t, g.golds, cfg));

  std::vector<double> rewards;
  rewards.reserve(records.size());
  for (const RewardRecord& r : records) rewards.push_back(static_cast<double>(r.reward));
  const std::vector<double> adv = group_advantages(rewards);
  for (std::size_t i = 0; i < records.size(); ++i) records[i].advantage = adv[i];
  return records;
}

}  // namespace agentrag
