#pragma once

// Generators and planted fixtures shared by the unit tests and the
// acceptance binary. Everything here is seeded and deterministic.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "agentrag/agentrag.hpp"

namespace fixtures {

using agentrag::Token;

inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// (0, 1], with an exact 1.0 now and then.
inline double random_prob(std::mt19937_64& rng) {
  if (rng() % 16 == 0) return 1.0;
  return 1.0 - unit(rng);
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

// Content pieces. '<' and '>' appear but never assemble into a protocol tag
// (rejected below), multi-byte UTF-8 included.
inline std::string random_content(std::mt19937_64& rng, std::size_t max_pieces) {
  static const std::vector<std::string> pieces = {
      "a",  "Paris", " ",   "  ", "\n", "the", "Who", "?", ".",   ",", "<", ">", "</", "<thin", "search",
      "é",  "北京", "🙂",   "\t", "1",  "0.5", "&lt;", "x", "answer", "-", "'", "\"", "[", "]", "info"};
  for (;;) {
    std::string out;
    const std::size_t n = pick(rng, max_pieces + 1);
    for (std::size_t i = 0; i < n; ++i) out += pieces[pick(rng, pieces.size())];
    if (!agentrag::contains_protocol_tag(out)) return out;
  }
}

inline std::string random_gap(std::mt19937_64& rng) {
  static const std::vector<std::string> gaps = {"", "", "\n", " ", "\n\n", " \n"};
  return gaps[pick(rng, gaps.size())];
}

// Splits at UTF-8 code point boundaries into 1..4 code point chunks.
inline std::vector<std::string> chunk(std::mt19937_64& rng, std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t cps = 1 + pick(rng, 4);
    std::size_t j = i;
    while (j < s.size() && cps > 0) {
      ++j;
      while (j < s.size() && (static_cast<unsigned char>(s[j]) & 0xC0) == 0x80) ++j;
      --cps;
    }
    out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

struct GeneratedTrajectory {
  std::string raw;
  std::vector<Token> tokens;
  std::vector<double> query_probs;      // content tokens of every <search>, in order
  std::vector<double> query_tag_probs;  // the same plus the <search> and </search> tag tokens
  std::size_t searches = 0;
  bool has_answer = false;
};

/// A random strict-mode-valid trajectory with a token stream that tiles it.
/// Query probabilities are recorded while generating, independently of the
/// parser, so they can serve as an oracle.
inline GeneratedTrajectory random_trajectory(std::mt19937_64& rng) {
  GeneratedTrajectory g;
  auto emit = [&](std::string_view text, bool record_query, bool record_tag, bool injected) {
    for (std::string& piece : chunk(rng, text)) {
      std::optional<double> p;
      if (!injected) p = random_prob(rng);
      if (record_query) g.query_probs.push_back(*p);
      if (record_query || record_tag) g.query_tag_probs.push_back(*p);
      g.raw += piece;
      g.tokens.push_back({std::move(piece), p});
    }
  };
  auto span = [&](agentrag::SpanKind kind, std::string_view content) {
    const bool query = kind == agentrag::SpanKind::Search;
    const bool injected = kind == agentrag::SpanKind::Information;
    emit(random_gap(rng), false, false, false);
    emit(agentrag::open_tag(kind), false, query, injected);
    emit(content, query, false, injected);
    emit(agentrag::close_tag(kind), false, query, injected);
  };

  const std::size_t steps = pick(rng, 6);
  for (std::size_t s = 0; s < steps; ++s) {
    span(agentrag::SpanKind::Think, random_content(rng, 8));
    if (rng() % 2 == 0) {
      span(agentrag::SpanKind::Search, random_content(rng, 5));
      span(agentrag::SpanKind::Information, random_content(rng, 12));
      ++g.searches;
    }
  }
  if (steps == 0 || rng() % 5 != 0) {
    span(agentrag::SpanKind::Answer, random_content(rng, 4));
    g.has_answer = true;
  }
  emit(random_gap(rng), false, false, false);
  return g;
}

/// Raw text and tokens for a trajectory with one retrieval step per entry of
/// `query_probs` (one query token per probability) and a final answer.
inline std::pair<std::string, std::vector<Token>> scripted(const std::vector<std::vector<double>>& query_probs,
                                                           const std::string& answer) {
  std::string raw;
  std::vector<Token> tokens;
  auto add = [&](std::string text, std::optional<double> p) {
    raw += text;
    tokens.push_back({std::move(text), p});
  };
  for (std::size_t i = 0; i < query_probs.size(); ++i) {
    add("<think>", 0.99);
    add("step " + std::to_string(i + 1), 0.99);
    add("</think>", 0.99);
    add("<search>", 0.99);
    for (std::size_t k = 0; k < query_probs[i].size(); ++k) add(" q" + std::to_string(k), query_probs[i][k]);
    add("</search>", 0.99);
    add("<information>", std::nullopt);
    add("Doc 1: (t) d", std::nullopt);
    add("</information>", std::nullopt);
  }
  add("<think>", 0.99);
  add("done", 0.99);
  add("</think>", 0.99);
  add("<answer>", 0.99);
  add(" " + answer + " ", 0.99);
  add("</answer>", 0.99);
  return {raw, tokens};
}

inline agentrag::Trajectory scripted_trajectory(const std::vector<std::vector<double>>& query_probs,
                                                const std::string& answer) {
  auto [raw, tokens] = scripted(query_probs, answer);
  return agentrag::parse_trajectory(raw, tokens, agentrag::ParseMode::Strict);
}

// ---------------------------------------------------------------------------
// Planted audit corpus: 200 trajectories, 40 in each search-count bucket
// {1, 3, 5, 7, 9}, 25 non-retrieval steps each. 1000 retrieval steps of which
// 277 are planted over-search, 5000 non-retrieval steps of which 1699 are
// planted under-search.

struct PlantedBucket {
  std::size_t searches;
  std::size_t over_flagged;   // of 40 * searches retrieval steps
  std::size_t under_flagged;  // of 40 * 25 non-retrieval steps
};

inline const std::vector<PlantedBucket>& planted_buckets() {
  static const std::vector<PlantedBucket> b = {
      {1, 20, 400}, {3, 45, 360}, {5, 60, 340}, {7, 70, 320}, {9, 82, 279}};
  return b;
}

inline constexpr std::size_t kPlantedPerBucket = 40;
inline constexpr std::size_t kPlantedNonRetrieval = 25;

/// The closed-book answerer recalls whatever the last "MEM[...]" marker of
/// the prompt holds; the reference model answers "ref <question>".
inline agentrag::ProbeClients planted_clients() {
  agentrag::ProbeClients c;
  c.answerer = std::make_shared<agentrag::FunctionClient>([](const std::string& prompt) {
    auto b = prompt.rfind("MEM[");
    auto e = prompt.find(']', b);
    if (b == std::string::npos || e == std::string::npos) return std::string("<query_answer>unknown</query_answer>");
    return "<query_answer>" + prompt.substr(b + 4, e - b - 4) + "</query_answer>";
  });
  c.reference = std::make_shared<agentrag::FunctionClient>([](const std::string& prompt) {
    auto q = prompt.rfind("Question: ");
    return "<answer>ref " + prompt.substr(q + 10) + "</answer>";
  });
  c.judge = std::make_shared<agentrag::MockJudge>();
  return c;
}

inline std::vector<agentrag::TrajectoryRecord> planted_audit_corpus(std::uint64_t seed = 20240611) {
  std::mt19937_64 rng(seed);
  std::vector<agentrag::TrajectoryRecord> out;
  std::size_t traj_id = 0;
  for (const PlantedBucket& bucket : planted_buckets()) {
    const std::size_t steps = bucket.searches + kPlantedNonRetrieval;
    // Which steps search, per trajectory; then which steps carry a planted flag.
    std::vector<std::vector<bool>> retrieval(kPlantedPerBucket, std::vector<bool>(steps, false));
    std::vector<std::pair<std::size_t, std::size_t>> r_slots, n_slots;
    for (std::size_t t = 0; t < kPlantedPerBucket; ++t) {
      std::vector<std::size_t> order(steps);
      for (std::size_t j = 0; j < steps; ++j) order[j] = j;
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t j = 0; j < bucket.searches; ++j) retrieval[t][order[j]] = true;
      for (std::size_t j = 0; j < steps; ++j) (retrieval[t][j] ? r_slots : n_slots).emplace_back(t, j);
    }
    std::shuffle(r_slots.begin(), r_slots.end(), rng);
    std::shuffle(n_slots.begin(), n_slots.end(), rng);
    std::vector<std::vector<bool>> flagged(kPlantedPerBucket, std::vector<bool>(steps, false));
    for (std::size_t k = 0; k < bucket.over_flagged; ++k) flagged[r_slots[k].first][r_slots[k].second] = true;
    for (std::size_t k = 0; k < bucket.under_flagged; ++k) flagged[n_slots[k].first][n_slots[k].second] = true;

    for (std::size_t t = 0; t < kPlantedPerBucket; ++t, ++traj_id) {
      const std::string tag = "t" + std::to_string(traj_id);
      std::string raw;
      std::string prev_conclusion = "Start " + tag;
      for (std::size_t j = 0; j < steps; ++j) {
        const std::string sj = tag + "s" + std::to_string(j + 1);
        // The sub-query of a step is the first sentence of its reasoning, i.e.
        // the previous step's conclusion.
        const std::string sub_query = prev_conclusion;
        std::string conclusion;
        if (retrieval[t][j]) {
          const std::string memory = "mem " + sj;
          raw += "<think>" + prev_conclusion + ". I recall MEM[" + memory + "] but will check.</think>\n";
          raw += "<search>" + sj + " query</search>\n<information>Doc 1: (" + sj + ") text</information>\n";
          conclusion = flagged[t][j] ? memory : "found " + sj;
        } else {
          raw += "<think>" + prev_conclusion + ". Reasoning about " + sj + " without searching.</think>\n";
          conclusion = flagged[t][j] ? "wrong " + sj : "ref " + sub_query;
        }
        prev_conclusion = conclusion;
      }
      raw += "<answer>" + prev_conclusion + "</answer>";

      agentrag::TrajectoryRecord rec;
      rec.id = "q" + std::to_string(traj_id);
      rec.question = "Planted question " + std::to_string(traj_id) + "?";
      rec.raw_text = std::move(raw);
      rec.gold_answers = {prev_conclusion};
      out.push_back(std::move(rec));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hop fixture: 500 trajectories, Less 9 correct / 35 incorrect, Match 62/138,
// More 44/212, i.e. masses 8.8 / 40 / 51.2 percent.

struct HopCell {
  agentrag::HopCategory category;
  std::size_t correct;
  std::size_t incorrect;
};

inline const std::vector<HopCell>& hop_cells() {
  static const std::vector<HopCell> c = {{agentrag::HopCategory::Less, 9, 35},
                                         {agentrag::HopCategory::Match, 62, 138},
                                         {agentrag::HopCategory::More, 44, 212}};
  return c;
}

inline std::string search_chain(std::size_t searches, const std::string& answer) {
  std::string raw;
  for (std::size_t i = 0; i < searches; ++i) {
    raw += "<think>hop " + std::to_string(i + 1) + "</think>\n<search>q" + std::to_string(i + 1) +
           "</search>\n<information>Doc 1: (d) text</information>\n";
  }
  raw += "<think>enough</think>\n<answer> " + answer + " </answer>";
  return raw;
}

inline std::vector<agentrag::TrajectoryRecord> hop_fixture(std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::vector<agentrag::TrajectoryRecord> out;
  for (const HopCell& cell : hop_cells()) {
    for (std::size_t k = 0; k < cell.correct + cell.incorrect; ++k) {
      const int hops = 2 + static_cast<int>(pick(rng, 3));  // 2..4
      std::size_t searches = static_cast<std::size_t>(hops);
      if (cell.category == agentrag::HopCategory::Less) searches -= 1 + pick(rng, static_cast<std::size_t>(hops));
      if (cell.category == agentrag::HopCategory::More) searches += 1 + pick(rng, 3);
      const bool correct = k < cell.correct;
      agentrag::TrajectoryRecord rec;
      rec.id = "h" + std::to_string(out.size());
      rec.question = "Hop question " + rec.id;
      rec.gold_answers = {"Gold " + rec.id};
      rec.raw_text = search_chain(searches, correct ? "gold " + rec.id + "." : "other " + rec.id);
      rec.hops = hops;
      out.push_back(std::move(rec));
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

// ---------------------------------------------------------------------------
// Confidence groups: candidates whose correctness is non-decreasing in their
// search confidence.

inline std::vector<agentrag::RolloutGroup> monotone_confidence_groups(std::uint64_t seed, std::size_t questions,
                                                                       const std::vector<std::string>& datasets) {
  std::mt19937_64 rng(seed);
  std::vector<agentrag::RolloutGroup> groups;
  for (std::size_t q = 0; q < questions; ++q) {
    const std::size_t n = 2 + pick(rng, 6);
    std::vector<double> conf(n);
    for (double& c : conf) c = 0.05 + 0.9 * unit(rng);
    std::sort(conf.begin(), conf.end());
    // Candidates at rank >= threshold are correct.
    const std::size_t threshold = pick(rng, n + 1);
    agentrag::RolloutGroup g{"c" + std::to_string(q), {}, agentrag::GoldAnswers{"gold " + std::to_string(q)},
                             datasets[q % datasets.size()]};
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      const bool correct = i >= threshold;
      const std::string answer = correct ? "The gold " + std::to_string(q) : "wrong " + std::to_string(q);
      g.trajectories.push_back(scripted_trajectory({{0.99, conf[i]}}, answer));
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

}  // namespace fixtures
