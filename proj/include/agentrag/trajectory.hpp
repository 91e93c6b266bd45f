#pragma once

// Trajectory data model and the tag protocol:
//
//   <think> reasoning </think>
//   <search> query </search>
//   <information> retrieved documents </information>
//   ...
//   <answer> final answer </answer>
//
// A new step begins at every <think>. A <search> and the <information> that
// follows it belong to the current step. Parsing stops at the first <answer>.
// Every byte of the input is kept somewhere (span content, tags, the `lead`
// text in front of a span, or the trailing text), so rendering a parsed
// trajectory reproduces its input exactly.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "agentrag/error.hpp"
#include "agentrag/strings.hpp"

namespace agentrag {

enum class SpanKind { Think, Search, Information, Answer };

constexpr std::string_view open_tag(SpanKind kind) {
  switch (kind) {
    case SpanKind::Think: return "<think>";
    case SpanKind::Search: return "<search>";
    case SpanKind::Information: return "<information>";
    case SpanKind::Answer: return "<answer>";
  }
  return "";
}

constexpr std::string_view close_tag(SpanKind kind) {
  switch (kind) {
    case SpanKind::Think: return "</think>";
    case SpanKind::Search: return "</search>";
    case SpanKind::Information: return "</information>";
    case SpanKind::Answer: return "</answer>";
  }
  return "";
}

constexpr std::string_view span_kind_name(SpanKind kind) {
  switch (kind) {
    case SpanKind::Think: return "think";
    case SpanKind::Search: return "search";
    case SpanKind::Information: return "information";
    case SpanKind::Answer: return "answer";
  }
  return "";
}

inline constexpr std::array<SpanKind, 4> kAllSpanKinds = {
    SpanKind::Think, SpanKind::Search, SpanKind::Information, SpanKind::Answer};

/// True if `s` contains any opening or closing protocol tag.
inline bool contains_protocol_tag(std::string_view s) {
  for (SpanKind k : kAllSpanKinds) {
    if (s.find(open_tag(k)) != std::string_view::npos) return true;
    if (s.find(close_tag(k)) != std::string_view::npos) return true;
  }
  return false;
}

struct Token {
  std::string text;
  std::optional<double> prob;  // absent for injected text

  friend bool operator==(const Token&, const Token&) = default;
};

struct ByteRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const ByteRange&, const ByteRange&) = default;
};

struct Span {
  SpanKind kind = SpanKind::Think;
  std::string lead;  // raw text between the previous span (or start) and the open tag
  std::string text;  // content between the tags, verbatim
  std::vector<Token> tokens;  // content tokens; their texts concatenate to `text`
  std::vector<Token> open_tag_tokens;
  std::vector<Token> close_tag_tokens;
  ByteRange byte_range;  // content offsets into the raw text
  bool closed = true;

  friend bool operator==(const Span&, const Span&) = default;
};

struct Step {
  std::size_t index = 0;  // 1-based
  std::optional<Span> reasoning;  // always present in strict mode
  std::optional<Span> query;
  std::optional<Span> context;

  bool is_retrieval() const { return query.has_value(); }

  // Reasoning content, with any stray non-whitespace text that preceded the
  // <think> tag prepended (lenient mode attaches it to this step).
  std::string reasoning_text() const {
    if (!reasoning) return {};
    if (strings::is_blank(reasoning->lead)) return reasoning->text;
    return reasoning->lead + reasoning->text;
  }

  friend bool operator==(const Step&, const Step&) = default;
};

struct Trajectory {
  std::string question;
  std::vector<Step> steps;
  std::optional<Span> final_answer;
  std::string trailing;  // text after the answer (or after the last span)
  std::string raw_text;
  std::vector<Token> tokens;  // the full token stream, empty when parsed without one
  bool has_logprobs = false;
  bool truncated = false;

  std::size_t retrieval_count() const {
    return static_cast<std::size_t>(
        std::count_if(steps.begin(), steps.end(), [](const Step& s) { return s.is_retrieval(); }));
  }

  /// Final answer with surrounding whitespace removed; empty when absent.
  std::string answer_text() const {
    if (!final_answer) return {};
    return std::string(strings::trim(final_answer->text));
  }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

enum class ParseMode { Strict, Lenient };

namespace detail {

struct TagHit {
  std::size_t pos = std::string_view::npos;
  SpanKind kind = SpanKind::Think;
};

inline TagHit find_next_open_tag(std::string_view raw, std::size_t from) {
  TagHit best;
  for (SpanKind k : kAllSpanKinds) {
    auto p = raw.find(open_tag(k), from);
    if (p < best.pos) {
      best.pos = p;
      best.kind = k;
    }
  }
  return best;
}

[[noreturn]] inline void malformed(std::size_t offset, const std::string& what) {
  throw Error(Errc::MalformedTrajectory, what + " at byte " + std::to_string(offset));
}

struct Region {
  ByteRange range;
  std::vector<Token>* sink;
};

inline void for_each_span(Trajectory& t, auto&& fn) {
  for (Step& step : t.steps) {
    if (step.reasoning) fn(*step.reasoning);
    if (step.query) fn(*step.query);
    if (step.context) fn(*step.context);
  }
  if (t.final_answer) fn(*t.final_answer);
}

inline void for_each_span(const Trajectory& t, auto&& fn) {
  for (const Step& step : t.steps) {
    if (step.reasoning) fn(*step.reasoning);
    if (step.query) fn(*step.query);
    if (step.context) fn(*step.context);
  }
  if (t.final_answer) fn(*t.final_answer);
}

inline bool valid_prob(double p) { return std::isfinite(p) && p > 0.0 && p <= 1.0; }

// Distributes a token stream over tag and content regions. Tokens in the
// untagged gaps are kept only in Trajectory::tokens.
inline void align_tokens(Trajectory& t, std::span<const Token> stream) {
  std::vector<Region> regions;
  for_each_span(t, [&](Span& s) {
    std::size_t open_begin = s.byte_range.begin - open_tag(s.kind).size();
    regions.push_back({{open_begin, s.byte_range.begin}, &s.open_tag_tokens});
    if (s.byte_range.size() > 0) regions.push_back({s.byte_range, &s.tokens});
    if (s.closed) {
      regions.push_back(
          {{s.byte_range.end, s.byte_range.end + close_tag(s.kind).size()}, &s.close_tag_tokens});
    }
    s.tokens.clear();
    s.open_tag_tokens.clear();
    s.close_tag_tokens.clear();
  });

  std::size_t offset = 0;
  std::size_t r = 0;
  const std::string_view raw = t.raw_text;
  for (const Token& tok : stream) {
    if (tok.text.empty()) {
      throw Error(Errc::TokenAlignmentMismatch, "empty token at byte " + std::to_string(offset));
    }
    if (tok.prob && !valid_prob(*tok.prob)) {
      throw Error(Errc::InvalidTokenProbability,
                  "probability outside (0, 1] at byte " + std::to_string(offset));
    }
    std::size_t end = offset + tok.text.size();
    if (end > raw.size() || raw.compare(offset, tok.text.size(), tok.text) != 0) {
      throw Error(Errc::TokenAlignmentMismatch,
                  "token stream diverges from raw text at byte " + std::to_string(offset));
    }
    while (r < regions.size() && regions[r].range.end <= offset) ++r;
    if (r < regions.size() && regions[r].range.begin <= offset) {
      if (end > regions[r].range.end) {
        throw Error(Errc::TokenAlignmentMismatch,
                    "token straddles a tag boundary at byte " + std::to_string(regions[r].range.end));
      }
      regions[r].sink->push_back(tok);
    } else if (r < regions.size() && end > regions[r].range.begin) {
      throw Error(Errc::TokenAlignmentMismatch,
                  "token straddles a tag boundary at byte " + std::to_string(regions[r].range.begin));
    }
    offset = end;
  }
  if (offset != raw.size()) {
    throw Error(Errc::TokenAlignmentMismatch, "token stream ends at byte " +
                                                  std::to_string(offset) + " of " +
                                                  std::to_string(raw.size()));
  }

  for (Step& step : t.steps) {
    if (step.context) {
      for (Token& tok : step.context->tokens) tok.prob.reset();
    }
  }
  t.tokens.assign(stream.begin(), stream.end());
  t.has_logprobs = true;
}

inline void fill_untokenized(Trajectory& t) {
  for_each_span(t, [](Span& s) {
    s.tokens.clear();
    if (!s.text.empty()) s.tokens.push_back({s.text, std::nullopt});
    s.open_tag_tokens = {{std::string(open_tag(s.kind)), std::nullopt}};
    s.close_tag_tokens.clear();
    if (s.closed) s.close_tag_tokens.push_back({std::string(close_tag(s.kind)), std::nullopt});
  });
  t.tokens.clear();
  t.has_logprobs = false;
}

inline Trajectory parse_structure(std::string_view raw, ParseMode mode) {
  const bool strict = mode == ParseMode::Strict;
  Trajectory t;
  t.raw_text = std::string(raw);

  std::size_t lead_begin = 0;
  std::size_t pos = 0;
  bool done = false;

  auto awaiting_information = [&]() {
    return !t.steps.empty() && t.steps.back().query && !t.steps.back().context &&
           t.steps.back().query->closed;
  };

  while (!done) {
    TagHit hit = find_next_open_tag(raw, pos);
    if (hit.pos == std::string_view::npos) break;

    const std::size_t content_begin = hit.pos + open_tag(hit.kind).size();
    const std::size_t close_pos = raw.find(close_tag(hit.kind), content_begin);
    const bool closed = close_pos != std::string_view::npos;
    const std::size_t content_end = closed ? close_pos : raw.size();
    const std::size_t span_end = closed ? close_pos + close_tag(hit.kind).size() : raw.size();

    // Decide whether this span fits the grammar where it appears.
    bool accept = true;
    switch (hit.kind) {
      case SpanKind::Think:
        if (strict && awaiting_information()) malformed(hit.pos, "<search> without <information>");
        break;
      case SpanKind::Search:
        if (strict) {
          if (t.steps.empty() || !t.steps.back().reasoning) malformed(hit.pos, "<search> without a preceding <think>");
          if (t.steps.back().query) malformed(hit.pos, "second <search> in one step");
        }
        break;
      case SpanKind::Information:
        if (!awaiting_information()) {
          if (strict) malformed(hit.pos, "<information> without a preceding <search>");
          accept = false;
        }
        break;
      case SpanKind::Answer:
        if (strict && awaiting_information()) malformed(hit.pos, "<search> without <information>");
        break;
    }

    if (!accept) {
      // Lenient: the stray block stays in the lead text of whatever follows.
      pos = span_end;
      if (!closed) break;
      continue;
    }

    std::string_view lead = raw.substr(lead_begin, hit.pos - lead_begin);
    if (strict && !strings::is_blank(lead)) malformed(lead_begin, "text outside any tag");
    if (strict && !closed) malformed(hit.pos, "unclosed " + std::string(open_tag(hit.kind)));
    if (strict && contains_protocol_tag(raw.substr(content_begin, content_end - content_begin))) {
      malformed(content_begin, "protocol tag nested inside " + std::string(open_tag(hit.kind)));
    }

    Span span;
    span.kind = hit.kind;
    span.lead = std::string(lead);
    span.text = std::string(raw.substr(content_begin, content_end - content_begin));
    span.byte_range = {content_begin, content_end};
    span.closed = closed;

    switch (hit.kind) {
      case SpanKind::Think: {
        Step step;
        step.index = t.steps.size() + 1;
        step.reasoning = std::move(span);
        t.steps.push_back(std::move(step));
        break;
      }
      case SpanKind::Search: {
        if (t.steps.empty() || t.steps.back().query) {
          Step step;
          step.index = t.steps.size() + 1;
          t.steps.push_back(std::move(step));
        }
        t.steps.back().query = std::move(span);
        break;
      }
      case SpanKind::Information:
        t.steps.back().context = std::move(span);
        break;
      case SpanKind::Answer:
        t.final_answer = std::move(span);
        done = true;
        break;
    }

    pos = lead_begin = span_end;
    if (!closed) {
      t.truncated = true;
      done = true;
    }
  }

  if (strict && awaiting_information()) malformed(raw.size(), "<search> without <information>");
  t.trailing = std::string(raw.substr(std::min(lead_begin, raw.size())));
  if (strict && !strings::is_blank(t.trailing)) malformed(lead_begin, "text outside any tag");
  if (!t.final_answer) t.truncated = true;
  return t;
}

}  // namespace detail

/// Parses agent output without token probabilities. Each span gets a single
/// probability-less token.
inline Trajectory parse_trajectory(std::string_view raw_text, ParseMode mode = ParseMode::Lenient,
                                   std::string question = {}) {
  Trajectory t = detail::parse_structure(raw_text, mode);
  t.question = std::move(question);
  detail::fill_untokenized(t);
  return t;
}

/// Parses agent output and aligns `token_stream` to it by byte offset. The
/// token texts must concatenate to `raw_text`, and no token may cross the
/// boundary between a tag and the text around it.
inline Trajectory parse_trajectory(std::string_view raw_text, std::span<const Token> token_stream,
                                   ParseMode mode = ParseMode::Lenient, std::string question = {}) {
  Trajectory t = detail::parse_structure(raw_text, mode);
  t.question = std::move(question);
  detail::align_tokens(t, token_stream);
  return t;
}

inline std::string render_trajectory(const Trajectory& t) {
  std::string out;
  detail::for_each_span(t, [&](const Span& s) {
    out += s.lead;
    out += open_tag(s.kind);
    out += s.text;
    if (s.closed) out += close_tag(s.kind);
  });
  out += t.trailing;
  return out;
}

/// Probabilities of every token inside <search> spans, in step order. With
/// `include_tags` the tokens of the <search> and </search> tags are included.
inline std::vector<double> search_token_probs(const Trajectory& t, bool include_tags = false) {
  std::vector<double> probs;
  if (t.retrieval_count() > 0 && !t.has_logprobs) {
    throw Error(Errc::MissingLogprobs, "trajectory has search calls but no token probabilities");
  }
  auto take = [&](const std::vector<Token>& tokens, std::size_t step) {
    for (const Token& tok : tokens) {
      if (!tok.prob) {
        throw Error(Errc::MissingLogprobs,
                    "search token without probability in step " + std::to_string(step));
      }
      probs.push_back(*tok.prob);
    }
  };
  for (const Step& step : t.steps) {
    if (!step.query) continue;
    if (include_tags) take(step.query->open_tag_tokens, step.index);
    take(step.query->tokens, step.index);
    if (include_tags) take(step.query->close_tag_tokens, step.index);
  }
  return probs;
}

/// Builds a closed span with no lead text, for constructing trajectories in code.
inline Span make_span(SpanKind kind, std::string text, std::string lead = {}) {
  Span s;
  s.kind = kind;
  s.lead = std::move(lead);
  s.text = std::move(text);
  if (!s.text.empty()) s.tokens.push_back({s.text, std::nullopt});
  return s;
}

}  // namespace agentrag
