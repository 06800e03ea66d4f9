// Copyright 2026 The Entendre Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace entendre::text {

inline char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = ascii_lower(c);
  return out;
}

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline bool is_word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

/// Decodes UTF-8 into code points. Invalid bytes decode as U+FFFD one byte at
/// a time so every input has a deterministic decoding.
inline std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    }
    bool ok = len > 0 && i + len <= s.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(U'�');
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

inline bool starts_with_url(std::string_view s, std::size_t pos) {
  const std::string_view rest = s.substr(pos);
  auto prefixed = [&](std::string_view p) {
    if (rest.size() < p.size()) return false;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (ascii_lower(rest[i]) != p[i]) return false;
    return true;
  };
  return prefixed("http://") || prefixed("https://") || prefixed("www.");
}

/// Comparison form of a post body: URLs removed, ASCII lowercased, whitespace
/// runs collapsed to one space, ends trimmed.
inline std::u32string canonicalize(std::string_view s) {
  std::string stripped;
  stripped.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const bool boundary = i == 0 || is_space(s[i - 1]);
    if (boundary && starts_with_url(s, i)) {
      while (i < s.size() && !is_space(s[i])) ++i;
      continue;
    }
    stripped.push_back(ascii_lower(s[i]));
    ++i;
  }
  std::string collapsed;
  collapsed.reserve(stripped.size());
  bool pending_space = false;
  for (char c : stripped) {
    if (is_space(c)) {
      pending_space = !collapsed.empty();
      continue;
    }
    if (pending_space) collapsed.push_back(' ');
    pending_space = false;
    collapsed.push_back(c);
  }
  return decode_utf8(collapsed);
}

/// Levenshtein distance (unit insert/delete/substitute), single-row DP.
inline std::size_t edit_distance(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

/// Edit distance if it is at most `bound`, otherwise some value > bound.
/// Only cells within `bound` of the diagonal are evaluated.
inline std::size_t bounded_edit_distance(std::u32string_view a, std::u32string_view b, std::size_t bound) {
  if (a.size() < b.size()) std::swap(a, b);
  const std::size_t n = a.size(), m = b.size();
  if (n - m > bound) return bound + 1;
  if (m == 0) return n;
  const std::size_t inf = bound + 1;
  std::vector<std::size_t> prev(m + 1, inf), cur(m + 1, inf);
  for (std::size_t j = 0; j <= std::min(m, bound); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t lo = i > bound ? i - bound : 1;
    const std::size_t hi = std::min(m, i + bound);
    std::fill(cur.begin(), cur.end(), inf);
    cur[0] = i <= bound ? i : inf;
    std::size_t row_min = cur[0];
    for (std::size_t j = lo; j <= hi; ++j) {
      std::size_t v = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      v = std::min(v, prev[j] + 1);
      v = std::min(v, cur[j - 1] + 1);
      cur[j] = std::min(v, inf);
      row_min = std::min(row_min, cur[j]);
    }
    if (row_min > bound) return inf;
    std::swap(prev, cur);
  }
  return std::min(prev[m], inf);
}

namespace detail {

inline void scan_prefixed(std::string_view body, char sigil, std::vector<std::string>& out) {
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] != sigil) continue;
    if (i > 0 && is_word_char(body[i - 1])) continue;
    std::size_t j = i + 1;
    while (j < body.size() && is_word_char(body[j])) ++j;
    if (j > i + 1) out.emplace_back(body.substr(i + 1, j - i - 1));
    i = j - 1;
  }
}

}  // namespace detail

inline std::vector<std::string> extract_hashtags(std::string_view body) {
  std::vector<std::string> out;
  detail::scan_prefixed(body, '#', out);
  for (auto& h : out) h = to_lower(h);
  return out;
}

inline std::vector<std::string> extract_mentions(std::string_view body) {
  std::vector<std::string> out;
  detail::scan_prefixed(body, '@', out);
  return out;
}

inline std::vector<std::string> extract_urls(std::string_view body) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < body.size()) {
    if ((i == 0 || is_space(body[i - 1])) && starts_with_url(body, i)) {
      std::size_t j = i;
      while (j < body.size() && !is_space(body[j])) ++j;
      out.emplace_back(body.substr(i, j - i));
      i = j;
    } else {
      ++i;
    }
  }
  return out;
}

/// "#QAnon" -> "qanon"; empty input stays empty.
inline std::string normalize_hashtag(std::string_view tag) {
  tag = trim(tag);
  while (!tag.empty() && tag.front() == '#') tag.remove_prefix(1);
  return to_lower(tag);
}

inline std::string normalize_mention(std::string_view name) {
  name = trim(name);
  while (!name.empty() && name.front() == '@') name.remove_prefix(1);
  return std::string(name);
}

/// 64-bit FNV-1a, used for content hashes that must be stable across builds.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[v & 0xF];
    v >>= 4;
  }
  return out;
}

}  // namespace entendre::text
