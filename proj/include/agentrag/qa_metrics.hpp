#pragma once

// Answer normalization and EM / Cover EM scoring.
//
// normalize_answer follows the usual open-domain QA recipe: lowercase, drop
// punctuation, drop the articles "a", "an", "the" as whole words, collapse
// whitespace. Lowercasing is the simple (one code point to one code point)
// Unicode mapping; punctuation is any code point in general category P plus
// the ASCII punctuation set (which also covers symbols such as $ + < = > ^ ` | ~).

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "agentrag/error.hpp"

namespace agentrag {

class GoldAnswers {
 public:
  GoldAnswers(std::vector<std::string> answers) : answers_(std::move(answers)) {
    if (answers_.empty()) throw Error(Errc::SchemaError, "gold answer set is empty");
  }
  GoldAnswers(std::initializer_list<std::string> answers)
      : GoldAnswers(std::vector<std::string>(answers)) {}

  const std::vector<std::string>& answers() const { return answers_; }

  friend bool operator==(const GoldAnswers&, const GoldAnswers&) = default;

 private:
  std::vector<std::string> answers_;
};

struct ScoreRecord {
  std::string id;
  int em = 0;
  int cover_em = 0;
  std::string prediction;
};

namespace detail {

constexpr bool is_ascii_punct(UChar32 c) {
  return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
         (c >= 0x7B && c <= 0x7E);
}

inline void append_utf8(std::string& out, UChar32 c) {
  char buf[U8_MAX_LENGTH];
  int32_t len = 0;
  UBool error = false;
  U8_APPEND(reinterpret_cast<uint8_t*>(buf), len, U8_MAX_LENGTH, c, error);
  if (!error) out.append(buf, static_cast<std::size_t>(len));
}

inline bool is_article(std::string_view w) { return w == "a" || w == "an" || w == "the"; }

}  // namespace detail

inline std::string normalize_answer(std::string_view s) {
  // Lowercase and strip punctuation in one pass; whitespace becomes a word break.
  std::vector<std::string> words;
  std::string word;
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  const auto length = static_cast<int32_t>(s.size());
  for (int32_t i = 0; i < length;) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    if (c < 0) c = 0xFFFD;  // malformed byte sequence
    if (u_isUWhiteSpace(c)) {
      if (!word.empty()) words.push_back(std::move(word));
      word.clear();
      continue;
    }
    if (detail::is_ascii_punct(c) || u_ispunct(c)) continue;
    detail::append_utf8(word, u_tolower(c));
  }
  if (!word.empty()) words.push_back(std::move(word));

  std::string out;
  for (const std::string& w : words) {
    if (detail::is_article(w)) continue;
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

inline int exact_match(std::string_view prediction, const GoldAnswers& golds) {
  const std::string p = normalize_answer(prediction);
  for (const std::string& g : golds.answers()) {
    if (normalize_answer(g) == p) return 1;
  }
  return 0;
}

inline int cover_em(std::string_view prediction, const GoldAnswers& golds) {
  const std::string p = normalize_answer(prediction);
  for (const std::string& g : golds.answers()) {
    if (p.find(normalize_answer(g)) != std::string::npos) return 1;
  }
  return 0;
}

inline ScoreRecord score_prediction(std::string id, std::string prediction, const GoldAnswers& golds) {
  ScoreRecord r;
  r.id = std::move(id);
  r.em = exact_match(prediction, golds);
  r.cover_em = cover_em(prediction, golds);
  r.prediction = std::move(prediction);
  return r;
}

}  // namespace agentrag
