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

// Synthetic corpus generator with planted bots.
//
// Humans post a few times a day at random instants, write unrelated
// sentences and have follower/following ratios away from 1. Bots post on a
// near-fixed interval, mostly re-post lightly mutated templates with fresh
// links and keep followers within a few percent of following. The output is
// canonical ndjson, so it ingests with the identity mapping.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "entendre/error.hpp"
#include "entendre/random.hpp"
#include "entendre/records.hpp"
#include "entendre/text.hpp"

namespace entendre::synth {

namespace fs = std::filesystem;

struct SyntheticCorpusSpec {
  std::size_t humans = 900;
  std::size_t bots = 100;
  std::uint64_t seed = 7;

  double bot_posts_per_day = 150.0;
  double bot_active_days = 2.0;
  double bot_duplicate_rate = 0.9;     // fraction of bot posts copied from a template
  double bot_ratio_target = 1.0;       // followers / following
  double bot_ratio_spread = 0.05;      // relative, uniform
  double bot_cadence_jitter = 0.05;    // relative, uniform around the fixed interval
  double bot_comment_rate = 0.2;

  double human_posts_mean = 20.0;
  double human_active_days = 30.0;
  double human_comment_rate = 0.3;
  double human_echo_rate = 0.1;
  double human_bot_engagement = 0.15;  // share of human replies aimed at bot content
  double missing_rate = 0.02;          // bio / verified / created_at left out

  EpochSeconds start = 1604361600;     // 2020-11-03T00:00:00Z

  void validate() const {
    auto frac = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!(bot_posts_per_day > 0.0) || !(bot_active_days > 0.0) || !(human_posts_mean >= 1.0) ||
        !(human_active_days > 0.0) || !frac(bot_duplicate_rate) || !frac(bot_comment_rate) ||
        !frac(human_comment_rate) || !frac(human_echo_rate) || human_comment_rate + human_echo_rate > 1.0 ||
        !frac(human_bot_engagement) || !frac(missing_rate) || bot_ratio_target <= 0.0 || bot_ratio_spread < 0.0 ||
        bot_cadence_jitter < 0.0 || bot_cadence_jitter >= 1.0)
      throw Error(ErrorCode::kInvalidConfig, "synthetic corpus spec out of range");
  }

  /// Roughly 233k posts over about 38k users, 4.99% of them bots.
  static SyntheticCorpusSpec scale(std::uint64_t seed = 7) {
    SyntheticCorpusSpec s;
    s.humans = 36463;
    s.bots = 1916;
    s.seed = seed;
    s.bot_active_days = 0.25;
    s.human_posts_mean = 4.4;
    return s;
  }
};

struct SyntheticCorpus {
  std::vector<Account> accounts;               // sorted by username
  std::vector<Post> posts;                     // sorted by (created_at, post_id)
  std::vector<std::pair<std::string, Label>> labels;  // sorted by username
};

namespace detail {

inline const std::vector<std::string>& hashtag_pool() {
  static const std::vector<std::string> kTags{
      "news",   "music",  "sports", "family", "weekend", "coffee",   "books",  "travel", "garden", "cooking",
      "movies", "photos", "hiking", "church", "freedom", "election", "local",  "pets",   "art",    "tech",
      "qanon",  "trump",  "wwg1wga", "christian", "antilgbt"};
  return kTags;
}

inline std::string pseudo_word(Rng& rng) {
  static constexpr std::string_view kOnsets[] = {"b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p",
                                                 "r", "s", "t", "v", "w", "z", "br", "ch", "st", "tr", "sh", "pl"};
  static constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou", "ea"};
  std::string w;
  const std::size_t syllables = rng.between(1, 3);
  for (std::size_t s = 0; s < syllables; ++s) {
    w += kOnsets[rng.below(std::size(kOnsets))];
    w += kVowels[rng.below(std::size(kVowels))];
  }
  if (rng.bernoulli(0.4)) w += kOnsets[rng.below(std::size(kOnsets))];
  return w;
}

inline std::string sentence(Rng& rng, std::size_t min_words, std::size_t max_words) {
  std::string s;
  const std::size_t n = rng.between(min_words, max_words);
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += pseudo_word(rng);
  }
  return s;
}

// Flips one character of a template so copies are near, not exact, duplicates.
inline std::string mutate(std::string s, Rng& rng) {
  if (s.empty()) return s;
  const std::size_t pos = rng.below(s.size());
  if (s[pos] != ' ') s[pos] = static_cast<char>('a' + rng.below(26));
  return s;
}

inline std::string make_id(char prefix, std::size_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, n);
  return buf;
}

inline Post make_post(std::string id, std::string author, std::string body, EpochSeconds t, PostKind kind,
                      std::optional<std::string> parent, Rng& rng) {
  Post p;
  p.post_id = std::move(id);
  p.author = std::move(author);
  p.body = std::move(body);
  p.created_at = t;
  p.kind = kind;
  p.parent_id = std::move(parent);
  p.hashtags = text::extract_hashtags(p.body);
  p.urls = text::extract_urls(p.body);
  p.mentions = text::extract_mentions(p.body);
  p.upvotes = static_cast<std::int64_t>(rng.below(50));
  return p;
}

}  // namespace detail

inline SyntheticCorpus generate(const SyntheticCorpusSpec& spec) {
  spec.validate();
  using namespace detail;
  Rng rng(spec.seed);
  const std::size_t users = spec.humans + spec.bots;
  const int width = users < 100000 ? 5 : 7;

  // Bots are scattered over the username space so names carry no label.
  std::vector<std::size_t> order(users);
  for (std::size_t i = 0; i < users; ++i) order[i] = i;
  for (std::size_t i = users; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<char> is_bot(users, 0);
  for (std::size_t k = 0; k < spec.bots; ++k) is_bot[order[k]] = 1;

  SyntheticCorpus out;
  std::vector<std::string> names(users);
  for (std::size_t u = 0; u < users; ++u) names[u] = make_id('u', u + 1, width);

  // Accounts.
  for (std::size_t u = 0; u < users; ++u) {
    Account a;
    a.username = names[u];
    if (is_bot[u]) {
      const auto following = static_cast<std::int64_t>(rng.between(50, 2000));
      const double ratio = spec.bot_ratio_target * (1.0 + rng.uniform(-spec.bot_ratio_spread, spec.bot_ratio_spread));
      a.following = following;
      a.followers = std::llround(static_cast<double>(following) * ratio);
      a.bio = rng.bernoulli(0.5) ? "" : sentence(rng, 2, 5);
      a.verified = false;
    } else {
      const auto following = static_cast<std::int64_t>(rng.between(0, 800));
      // Log-uniform ratio over [1/20, 20] that skips the band around 1.
      double log_ratio = rng.uniform(0.2, std::log(20.0));
      if (rng.bernoulli(0.5)) log_ratio = -log_ratio;
      a.following = following;
      a.followers = std::llround(static_cast<double>(following + 5) * std::exp(log_ratio));
      a.bio = sentence(rng, 3, 15);
      a.verified = rng.bernoulli(0.02);
    }
    a.created_at = spec.start - static_cast<EpochSeconds>(rng.between(30, 2000)) * kSecondsPerDay;
    if (rng.bernoulli(spec.missing_rate)) a.bio.reset();
    if (rng.bernoulli(spec.missing_rate)) a.verified.reset();
    if (rng.bernoulli(spec.missing_rate)) a.created_at.reset();
    out.accounts.push_back(std::move(a));
    out.labels.emplace_back(names[u], is_bot[u] ? Label::kBot : Label::kHuman);
  }

  // Original posts first, so replies always have something to point at.
  struct Slot {
    std::size_t user;
    EpochSeconds t;
    bool reply;
  };
  std::vector<Slot> slots;
  std::vector<std::vector<std::string>> templates(users);
  const auto& tags = hashtag_pool();
  for (std::size_t u = 0; u < users; ++u) {
    if (is_bot[u]) {
      const auto count = static_cast<std::size_t>(std::llround(spec.bot_posts_per_day * spec.bot_active_days));
      const double interval = static_cast<double>(kSecondsPerDay) / spec.bot_posts_per_day;
      const auto offset = static_cast<double>(rng.below(static_cast<std::uint64_t>(spec.human_active_days * kSecondsPerDay / 2)));
      double t = static_cast<double>(spec.start) + offset;
      for (std::size_t k = 0; k < count; ++k) {
        slots.push_back({u, static_cast<EpochSeconds>(std::llround(t)), rng.bernoulli(spec.bot_comment_rate)});
        t += interval * (1.0 + rng.uniform(-spec.bot_cadence_jitter, spec.bot_cadence_jitter));
      }
      const std::size_t n_templates = rng.between(1, 3);
      for (std::size_t k = 0; k < n_templates; ++k)
        templates[u].push_back(sentence(rng, 10, 16) + " #" + tags[20 + rng.below(5)] + " #" + tags[rng.below(tags.size())]);
    } else {
      // Rounded uniform over [1, 2 * mean - 1] keeps fractional means.
      const double hi = std::max(1.0, 2.0 * spec.human_posts_mean - 1.0);
      const auto count = static_cast<std::size_t>(std::llround(rng.uniform(1.0, hi)));
      const auto window = static_cast<std::uint64_t>(spec.human_active_days * kSecondsPerDay);
      for (std::size_t k = 0; k < count; ++k)
        slots.push_back({u, spec.start + static_cast<EpochSeconds>(rng.below(window)),
                         rng.bernoulli(spec.human_comment_rate + spec.human_echo_rate)});
    }
  }

  std::vector<std::size_t> human_originals, bot_originals;
  std::size_t next_id = 1;
  auto new_id = [&] { return make_id('p', next_id++, 8); };

  auto body_for = [&](std::size_t u) {
    if (is_bot[u]) {
      if (rng.bernoulli(spec.bot_duplicate_rate)) {
        const auto& tpl = templates[u][rng.below(templates[u].size())];
        return mutate(tpl, rng) + " https://t.example/" + std::to_string(rng.below(1000000000));
      }
      return sentence(rng, 6, 14);
    }
    std::string body = sentence(rng, 5, 18);
    if (rng.bernoulli(0.4)) body += " #" + tags[rng.below(20)];
    if (rng.bernoulli(0.05)) body += " #" + tags[20 + rng.below(5)];
    if (rng.bernoulli(0.15)) body += " https://example.org/" + pseudo_word(rng);
    return body;
  };

  for (const auto& s : slots) {
    if (s.reply) continue;
    std::string body = body_for(s.user);
    if (!is_bot[s.user] && rng.bernoulli(0.1)) body += " @" + names[rng.below(users)];
    (is_bot[s.user] ? bot_originals : human_originals).push_back(out.posts.size());
    out.posts.push_back(make_post(new_id(), names[s.user], std::move(body), s.t, PostKind::kOriginal, std::nullopt, rng));
  }

  for (const auto& s : slots) {
    if (!s.reply) continue;
    // Bots reply to humans; humans mostly reply to humans, sometimes to bots.
    const std::vector<std::size_t>* pool = &human_originals;
    if (!is_bot[s.user] && !bot_originals.empty() && rng.bernoulli(spec.human_bot_engagement)) pool = &bot_originals;
    if (pool->empty()) pool = human_originals.empty() ? &bot_originals : &human_originals;
    if (pool->empty()) continue;
    const Post& parent = out.posts[(*pool)[rng.below(pool->size())]];
    PostKind kind = PostKind::kComment;
    if (!is_bot[s.user] && rng.uniform() * (spec.human_comment_rate + spec.human_echo_rate) >= spec.human_comment_rate)
      kind = PostKind::kEcho;
    std::string body = body_for(s.user);
    if (is_bot[s.user] && rng.bernoulli(0.3)) body += " @" + parent.author;
    std::string parent_id = parent.post_id;
    out.posts.push_back(make_post(new_id(), names[s.user], std::move(body), s.t, kind, std::move(parent_id), rng));
  }

  std::sort(out.posts.begin(), out.posts.end(), [](const Post& a, const Post& b) {
    return a.created_at != b.created_at ? a.created_at < b.created_at : a.post_id < b.post_id;
  });
  return out;
}

/// Writes posts.ndjson, accounts.ndjson and labels.csv into `dir`.
inline void write(const SyntheticCorpus& corpus, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::kIoError, "cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("posts.ndjson");
    for (const auto& p : corpus.posts) f << to_json(p).dump() << '\n';
  }
  {
    auto f = open("accounts.ndjson");
    for (const auto& a : corpus.accounts) f << to_json(a).dump() << '\n';
  }
  {
    auto f = open("labels.csv");
    f << "username,label\n";
    for (const auto& [u, l] : corpus.labels) f << u << ',' << to_string(l) << '\n';
  }
}

}  // namespace entendre::synth
