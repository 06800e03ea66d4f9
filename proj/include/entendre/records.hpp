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

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "entendre/error.hpp"
#include "json.hpp"

namespace entendre {

using Json = nlohmann::json;

/// Seconds since 1970-01-01T00:00:00Z.
using EpochSeconds = std::int64_t;

inline constexpr EpochSeconds kSecondsPerDay = 86400;

enum class PostKind { kOriginal, kComment, kEcho };

inline std::string_view to_string(PostKind kind) {
  switch (kind) {
    case PostKind::kOriginal: return "original";
    case PostKind::kComment: return "comment";
    case PostKind::kEcho: return "echo";
  }
  return "original";
}

inline std::optional<PostKind> parse_post_kind(std::string_view s) {
  if (s == "original") return PostKind::kOriginal;
  if (s == "comment") return PostKind::kComment;
  if (s == "echo") return PostKind::kEcho;
  return std::nullopt;
}

enum class Label { kHuman = 0, kBot = 1 };

inline std::string_view to_string(Label label) {
  return label == Label::kBot ? "bot" : "human";
}

struct Post {
  std::string post_id;
  std::string author;
  std::string body;
  EpochSeconds created_at = 0;
  PostKind kind = PostKind::kOriginal;
  std::optional<std::string> parent_id;
  std::vector<std::string> hashtags;  // lowercase, no leading '#'
  std::vector<std::string> urls;
  std::vector<std::string> mentions;  // usernames, no leading '@'
  std::int64_t upvotes = 0;

  bool operator==(const Post&) const = default;
};

struct Account {
  std::string username;
  std::optional<std::int64_t> followers;
  std::optional<std::int64_t> following;
  std::optional<std::string> bio;
  std::optional<bool> verified;
  std::optional<EpochSeconds> created_at;

  bool complete() const {
    return followers && following && bio && verified && created_at;
  }

  bool operator==(const Account&) const = default;
};

// Canonical on-disk representation. Missing account fields are written as
// null so a stored record round-trips with its missing-ness intact.

inline Json to_json(const Post& p) {
  Json j;
  j["post_id"] = p.post_id;
  j["author"] = p.author;
  j["body"] = p.body;
  j["created_at"] = p.created_at;
  j["kind"] = std::string(to_string(p.kind));
  if (p.parent_id) j["parent_id"] = *p.parent_id;
  j["hashtags"] = p.hashtags;
  j["urls"] = p.urls;
  j["mentions"] = p.mentions;
  j["upvotes"] = p.upvotes;
  return j;
}

inline Json to_json(const Account& a) {
  Json j;
  j["username"] = a.username;
  j["followers"] = a.followers ? Json(*a.followers) : Json(nullptr);
  j["following"] = a.following ? Json(*a.following) : Json(nullptr);
  j["bio"] = a.bio ? Json(*a.bio) : Json(nullptr);
  j["verified"] = a.verified ? Json(*a.verified) : Json(nullptr);
  j["created_at"] = a.created_at ? Json(*a.created_at) : Json(nullptr);
  return j;
}

inline Post post_from_json(const Json& j) {
  try {
    Post p;
    p.post_id = j.at("post_id").get<std::string>();
    p.author = j.at("author").get<std::string>();
    p.body = j.at("body").get<std::string>();
    p.created_at = j.at("created_at").get<EpochSeconds>();
    auto kind = parse_post_kind(j.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::kUnknownKindValue, "unknown post kind in canonical record");
    p.kind = *kind;
    if (j.contains("parent_id") && !j["parent_id"].is_null()) p.parent_id = j["parent_id"].get<std::string>();
    p.hashtags = j.value("hashtags", std::vector<std::string>{});
    p.urls = j.value("urls", std::vector<std::string>{});
    p.mentions = j.value("mentions", std::vector<std::string>{});
    p.upvotes = j.value("upvotes", std::int64_t{0});
    return p;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("bad canonical post: ") + e.what());
  }
}

inline Account account_from_json(const Json& j) {
  try {
    Account a;
    a.username = j.at("username").get<std::string>();
    auto opt = [&](const char* key) -> const Json* {
      auto it = j.find(key);
      return it == j.end() || it->is_null() ? nullptr : &*it;
    };
    if (auto* v = opt("followers")) a.followers = v->get<std::int64_t>();
    if (auto* v = opt("following")) a.following = v->get<std::int64_t>();
    if (auto* v = opt("bio")) a.bio = v->get<std::string>();
    if (auto* v = opt("verified")) a.verified = v->get<bool>();
    if (auto* v = opt("created_at")) a.created_at = v->get<EpochSeconds>();
    return a;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("bad canonical account: ") + e.what());
  }
}

namespace time {

inline EpochSeconds from_civil(int year, unsigned month, unsigned day) {
  using namespace std::chrono;
  const sys_days d = year_month_day{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  return static_cast<EpochSeconds>(d.time_since_epoch().count()) * kSecondsPerDay;
}

/// UTC calendar date "YYYY-MM-DD" of an epoch timestamp.
inline std::string utc_date(EpochSeconds t) {
  using namespace std::chrono;
  EpochSeconds days = t / kSecondsPerDay;
  if (t % kSecondsPerDay < 0) --days;
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

inline EpochSeconds floor_day(EpochSeconds t) {
  EpochSeconds days = t / kSecondsPerDay;
  if (t % kSecondsPerDay < 0) --days;
  return days * kSecondsPerDay;
}

/// Parses `YYYY-MM-DD[Thh:mm:ss[.fff]][Z|±hh:mm]`; fractional seconds are
/// truncated, a missing zone means UTC.
inline std::optional<EpochSeconds> parse_iso8601(std::string_view s) {
  auto digits = [&](std::size_t pos, std::size_t n) -> std::optional<int> {
    if (pos + n > s.size()) return std::nullopt;
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
      if (s[i] < '0' || s[i] > '9') return std::nullopt;
      v = v * 10 + (s[i] - '0');
    }
    return v;
  };
  auto y = digits(0, 4), mo = digits(5, 2), d = digits(8, 2);
  if (!y || !mo || !d || s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*mo)},
                                        std::chrono::day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  EpochSeconds t = from_civil(*y, static_cast<unsigned>(*mo), static_cast<unsigned>(*d));
  std::size_t pos = 10;
  if (pos == s.size()) return t;
  if (s[pos] != 'T' && s[pos] != 't' && s[pos] != ' ') return std::nullopt;
  auto hh = digits(pos + 1, 2), mm = digits(pos + 4, 2), ss = digits(pos + 7, 2);
  if (!hh || !mm || !ss || s[pos + 3] != ':' || s[pos + 6] != ':') return std::nullopt;
  if (*hh > 23 || *mm > 59 || *ss > 60) return std::nullopt;
  t += *hh * 3600 + *mm * 60 + *ss;
  pos += 9;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
  }
  if (pos == s.size()) return t;
  if (s[pos] == 'Z' || s[pos] == 'z') return pos + 1 == s.size() ? std::optional<EpochSeconds>(t) : std::nullopt;
  if (s[pos] == '+' || s[pos] == '-') {
    const int sign = s[pos] == '+' ? 1 : -1;
    auto oh = digits(pos + 1, 2);
    std::size_t mpos = pos + 3;
    if (mpos < s.size() && s[mpos] == ':') ++mpos;
    auto om = digits(mpos, 2);
    if (!oh || !om || mpos + 2 != s.size()) return std::nullopt;
    return t - sign * (*oh * 3600 + *om * 60);
  }
  return std::nullopt;
}

}  // namespace time

}  // namespace entendre
