#pragma once

// Line-oriented record formats.
//
// Dataset:        {"id", "question", "golden_answers": [..], "hops": int|null}
// Trajectory log: {"id", "question", "raw_text", "tokens": [[text, prob|null], ..],
//                  "gold_answers": [..], "hops": int|null}
//                 plus optional "sample" (member index in its group) and
//                 "dataset" (partition label for confidence-group analysis).
//
// A trajectory record whose "tokens" is null or absent carries no token
// probabilities.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "agentrag/clients.hpp"
#include "agentrag/error.hpp"
#include "agentrag/qa_metrics.hpp"
#include "agentrag/trajectory.hpp"

namespace agentrag {

using json = nlohmann::json;

struct DatasetRecord {
  std::string id;
  std::string question;
  std::vector<std::string> golden_answers;
  std::optional<int> hops;
};

struct TrajectoryRecord {
  std::string id;
  std::optional<int> sample;
  std::string question;
  std::string raw_text;
  std::optional<std::vector<Token>> tokens;
  std::vector<std::string> gold_answers;
  std::optional<int> hops;
  std::string dataset;  // optional partition label

  Trajectory parse(ParseMode mode = ParseMode::Lenient) const {
    if (tokens) return parse_trajectory(raw_text, *tokens, mode, question);
    return parse_trajectory(raw_text, mode, question);
  }

  /// "id" or "id#sample".
  std::string key() const { return sample ? id + "#" + std::to_string(*sample) : id; }
};

namespace detail {

[[noreturn]] inline void schema_error(const std::string& where, const std::string& what) {
  throw Error(Errc::SchemaError, where + ": " + what);
}

inline std::string require_string(const json& j, const char* field, const std::string& where) {
  auto it = j.find(field);
  if (it == j.end()) schema_error(where, std::string("missing field '") + field + "'");
  if (!it->is_string()) schema_error(where, std::string("field '") + field + "' must be a string");
  return it->get<std::string>();
}

inline std::vector<std::string> require_strings(const json& j, const char* field,
                                                const std::string& where) {
  auto it = j.find(field);
  if (it == j.end()) schema_error(where, std::string("missing field '") + field + "'");
  if (!it->is_array()) schema_error(where, std::string("field '") + field + "' must be an array");
  std::vector<std::string> out;
  for (const json& v : *it) {
    if (!v.is_string()) schema_error(where, std::string("field '") + field + "' must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

inline std::optional<int> optional_int(const json& j, const char* field, const std::string& where) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) schema_error(where, std::string("field '") + field + "' must be an integer or null");
  return it->get<int>();
}

}  // namespace detail

inline std::optional<std::vector<Token>> tokens_from_json(const json& j, const std::string& where) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_array()) detail::schema_error(where, "field 'tokens' must be an array or null");
  std::vector<Token> out;
  out.reserve(j.size());
  for (const json& pair : j) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() ||
        !(pair[1].is_null() || pair[1].is_number())) {
      detail::schema_error(where, "each token must be [text, prob|null]");
    }
    Token tok{pair[0].get<std::string>(), std::nullopt};
    if (pair[1].is_number()) tok.prob = pair[1].get<double>();
    out.push_back(std::move(tok));
  }
  return out;
}

inline json tokens_to_json(const std::vector<Token>& tokens) {
  json arr = json::array();
  for (const Token& t : tokens) {
    arr.push_back(json::array({t.text, t.prob ? json(*t.prob) : json(nullptr)}));
  }
  return arr;
}

inline DatasetRecord dataset_record_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) detail::schema_error(where, "record must be an object");
  DatasetRecord r;
  r.id = detail::require_string(j, "id", where);
  r.question = detail::require_string(j, "question", where);
  r.golden_answers = detail::require_strings(j, "golden_answers", where);
  if (r.golden_answers.empty()) detail::schema_error(where, "'golden_answers' is empty");
  r.hops = detail::optional_int(j, "hops", where);
  return r;
}

inline TrajectoryRecord trajectory_record_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) detail::schema_error(where, "record must be an object");
  TrajectoryRecord r;
  r.id = detail::require_string(j, "id", where);
  r.sample = detail::optional_int(j, "sample", where);
  r.question = detail::require_string(j, "question", where);
  r.raw_text = detail::require_string(j, "raw_text", where);
  auto tok = j.find("tokens");
  if (tok != j.end()) r.tokens = tokens_from_json(*tok, where);
  r.gold_answers = j.contains("gold_answers") ? detail::require_strings(j, "gold_answers", where)
                                              : std::vector<std::string>{};
  r.hops = detail::optional_int(j, "hops", where);
  if (j.contains("dataset") && !j["dataset"].is_null()) r.dataset = detail::require_string(j, "dataset", where);
  return r;
}

inline json to_json(const DatasetRecord& r) {
  return json{{"id", r.id},
              {"question", r.question},
              {"golden_answers", r.golden_answers},
              {"hops", r.hops ? json(*r.hops) : json(nullptr)}};
}

inline json to_json(const TrajectoryRecord& r) {
  json j = {{"id", r.id}};
  if (r.sample) j["sample"] = *r.sample;
  j["question"] = r.question;
  j["raw_text"] = r.raw_text;
  j["tokens"] = r.tokens ? tokens_to_json(*r.tokens) : json(nullptr);
  j["gold_answers"] = r.gold_answers;
  j["hops"] = r.hops ? json(*r.hops) : json(nullptr);
  if (!r.dataset.empty()) j["dataset"] = r.dataset;
  return j;
}

/// Calls fn(record, "path:line") for every non-blank line of a JSONL file.
inline void read_jsonl(const std::filesystem::path& path,
                       const std::function<void(const json&, const std::string&)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::SchemaError, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (strings::is_blank(line)) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      detail::schema_error(where, std::string("invalid JSON: ") + e.what());
    }
    fn(j, where);
  }
}

inline std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path) {
  std::vector<DatasetRecord> out;
  read_jsonl(path, [&](const json& j, const std::string& where) {
    out.push_back(dataset_record_from_json(j, where));
  });
  return out;
}

inline std::vector<TrajectoryRecord> read_trajectory_log(const std::filesystem::path& path) {
  std::vector<TrajectoryRecord> out;
  read_jsonl(path, [&](const json& j, const std::string& where) {
    out.push_back(trajectory_record_from_json(j, where));
  });
  return out;
}

inline std::vector<Document> read_corpus(const std::filesystem::path& path) {
  std::vector<Document> out;
  read_jsonl(path, [&](const json& j, const std::string& where) {
    if (!j.is_object()) detail::schema_error(where, "record must be an object");
    out.push_back({detail::require_string(j, "title", where), detail::require_string(j, "text", where)});
  });
  return out;
}

/// Writes `content` to `path` through a temporary file and a rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::SchemaError, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(Errc::SchemaError, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

template <typename Record>
std::string to_jsonl(const std::vector<Record>& records) {
  std::string out;
  for (const Record& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

}  // namespace agentrag
