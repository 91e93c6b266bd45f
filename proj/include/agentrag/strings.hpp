#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace agentrag::strings {

constexpr bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

constexpr bool is_blank(std::string_view s) {
  for (char c : s) {
    if (!is_ascii_space(c)) return false;
  }
  return true;
}

constexpr std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_ascii_space(s[b])) ++b;
  while (e > b && is_ascii_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

inline std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

// Content between the first `open` and the following `close`, if both exist.
inline bool extract_between(std::string_view s, std::string_view open, std::string_view close,
                            std::string_view& out) {
  auto b = s.find(open);
  if (b == std::string_view::npos) return false;
  b += open.size();
  auto e = s.find(close, b);
  if (e == std::string_view::npos) return false;
  out = s.substr(b, e - b);
  return true;
}

// Truncate to at most `max_code_points` UTF-8 code points without splitting one.
inline std::string truncate_utf8(std::string_view s, std::size_t max_code_points) {
  std::size_t cps = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    if (cps == max_code_points) break;
    auto lead = static_cast<unsigned char>(s[i]);
    std::size_t len = lead < 0x80 ? 1 : (lead >> 5) == 0x6 ? 2 : (lead >> 4) == 0xE ? 3
                                     : (lead >> 3) == 0x1E ? 4 : 1;
    i = std::min(s.size(), i + len);
    ++cps;
  }
  return std::string(s.substr(0, i));
}

// FNV-1a, used for platform-independent seed derivation.
constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace agentrag::strings
