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
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "entendre/corpus.hpp"
#include "entendre/error.hpp"
#include "entendre/parallel.hpp"
#include "entendre/records.hpp"
#include "entendre/text.hpp"

namespace entendre::features {

inline constexpr std::string_view kSpecVersion = "v1";
inline constexpr std::size_t kNumFeatures = 18;

/// Column order of every feature vector, matrix and model for kSpecVersion.
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames{
    "followers",
    "following",
    "follower_following_ratio_smoothed",
    "post_count",
    "comment_count",
    "echo_count",
    "account_age_days",
    "posts_per_day",
    "hashtags_per_post",
    "urls_per_post",
    "mentions_per_post",
    "duplicate_content_ratio",
    "mean_interpost_gap_seconds",
    "cv_interpost_gap",
    "hashtag_entropy",
    "bio_length_chars",
    "verified",
    "reply_fraction",
};

enum Feature : std::size_t {
  kFollowers,
  kFollowing,
  kFollowerFollowingRatioSmoothed,
  kPostCount,
  kCommentCount,
  kEchoCount,
  kAccountAgeDays,
  kPostsPerDay,
  kHashtagsPerPost,
  kUrlsPerPost,
  kMentionsPerPost,
  kDuplicateContentRatio,
  kMeanInterpostGapSeconds,
  kCvInterpostGap,
  kHashtagEntropy,
  kBioLengthChars,
  kVerified,
  kReplyFraction,
};

inline std::optional<std::size_t> feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kNumFeatures; ++i)
    if (kFeatureNames[i] == name) return i;
  return std::nullopt;
}

struct FeatureVector {
  std::string username;
  std::vector<double> values;  // kFeatureNames order

  double operator[](std::size_t i) const { return values[i]; }
  bool operator==(const FeatureVector&) const = default;
};

struct FeatureMatrix {
  std::string spec_version{kSpecVersion};
  std::vector<FeatureVector> rows;
  std::vector<Label> labels;  // empty or one per row

  std::size_t num_rows() const { return rows.size(); }
  std::size_t num_features() const { return rows.empty() ? kNumFeatures : rows.front().values.size(); }
  bool labeled() const { return !labels.empty(); }
};

// ---------------------------------------------------------------------------
// Fuzzy matching

/// 1 - editDistance / maxLength over canonicalized text (URLs stripped,
/// lowercased, whitespace collapsed). Two empty texts are identical.
inline double similarity_canonical(std::u32string_view a, std::u32string_view b) {
  const std::size_t m = std::max(a.size(), b.size());
  if (m == 0) return 1.0;
  return 1.0 - static_cast<double>(text::edit_distance(a, b)) / static_cast<double>(m);
}

inline double similarity(std::string_view a, std::string_view b) {
  return similarity_canonical(text::canonicalize(a), text::canonicalize(b));
}

/// Largest edit distance d for which 1 - d/m still reaches `threshold`,
/// evaluated with the same floating-point expression as similarity().
inline std::size_t max_distance_for(std::size_t m, double threshold) {
  if (m == 0) return 0;
  const auto md = static_cast<double>(m);
  auto passes = [&](std::size_t d) { return 1.0 - static_cast<double>(d) / md >= threshold; };
  auto d = static_cast<std::size_t>(std::floor((1.0 - threshold) * md)) + 1;
  d = std::min(d, m);
  while (d > 0 && !passes(d)) --d;
  return d;
}

/// similarity(a, b) >= threshold, without computing the full distance.
inline bool near_duplicate(std::u32string_view a, std::u32string_view b, double threshold) {
  const std::size_t m = std::max(a.size(), b.size());
  if (m == 0) return 1.0 >= threshold;
  const std::size_t k = max_distance_for(m, threshold);
  if (1.0 - static_cast<double>(k) / static_cast<double>(m) < threshold) return false;
  return text::bounded_edit_distance(a, b, k) <= k;
}

struct DuplicateOptions {
  double threshold = 0.9;
  std::size_t cap = 200;  // most recent posts considered
};

/// The `cap` most recent posts (ties by post id), newest first.
inline std::vector<const Post*> most_recent(const std::vector<Post>& posts, std::size_t cap) {
  std::vector<const Post*> ptrs;
  ptrs.reserve(posts.size());
  for (const auto& p : posts) ptrs.push_back(&p);
  std::sort(ptrs.begin(), ptrs.end(), [](const Post* x, const Post* y) {
    if (x->created_at != y->created_at) return x->created_at > y->created_at;
    return x->post_id < y->post_id;
  });
  if (ptrs.size() > cap) ptrs.resize(cap);
  return ptrs;
}

/// Fraction of considered posts that have a near-duplicate among the others.
inline double duplicate_content_ratio(const std::vector<Post>& posts, const DuplicateOptions& opts = {}) {
  if (!(opts.threshold > 0.0 && opts.threshold <= 1.0))
    throw Error(ErrorCode::kInvalidConfig, "duplicate threshold must be in (0, 1]");
  const auto recent = most_recent(posts, opts.cap);
  const std::size_t n = recent.size();
  if (n < 2) return 0.0;
  std::vector<std::u32string> canon(n);
  for (std::size_t i = 0; i < n; ++i) canon[i] = text::canonicalize(recent[i]->body);
  std::vector<char> matched(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (matched[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (near_duplicate(canon[i], canon[j], opts.threshold)) {
        matched[i] = 1;
        matched[j] = 1;
        break;
      }
    }
  }
  const auto hits = static_cast<double>(std::count(matched.begin(), matched.end(), 1));
  return hits / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Extraction

struct ExtractOptions {
  DuplicateOptions duplicates;
};

namespace detail {

inline double shannon_entropy(const std::map<std::string, std::size_t>& counts) {
  std::size_t total = 0;
  for (const auto& [_, c] : counts) total += c;
  if (total == 0) return 0.0;
  double h = 0.0;
  for (const auto& [_, c] : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return h > 0.0 ? h : 0.0;
}

}  // namespace detail

/// Feature vector of one imputed account. Account age is measured at the
/// account's latest post, so the result depends only on its inputs.
inline FeatureVector extract(const Account& account, const std::vector<Post>& posts,
                             const ExtractOptions& opts = {}) {
  if (!account.complete())
    throw Error(ErrorCode::kMissingFeatureColumn, "account not imputed: " + account.username);
  FeatureVector fv{account.username, std::vector<double>(kNumFeatures, 0.0)};
  auto& v = fv.values;
  const auto followers = static_cast<double>(*account.followers);
  const auto following = static_cast<double>(*account.following);
  v[kFollowers] = followers;
  v[kFollowing] = following;
  v[kFollowerFollowingRatioSmoothed] = (followers + 1.0) / (following + 1.0);
  v[kBioLengthChars] = static_cast<double>(text::decode_utf8(*account.bio).size());
  v[kVerified] = *account.verified ? 1.0 : 0.0;

  const std::size_t n = posts.size();
  if (n == 0) return fv;
  const auto nd = static_cast<double>(n);

  std::vector<EpochSeconds> times;
  times.reserve(n);
  std::size_t comments = 0, echoes = 0, hashtags = 0, urls = 0, mentions = 0;
  std::map<std::string, std::size_t> tag_counts;
  for (const auto& p : posts) {
    times.push_back(p.created_at);
    if (p.kind == PostKind::kComment) ++comments;
    if (p.kind == PostKind::kEcho) ++echoes;
    hashtags += p.hashtags.size();
    urls += p.urls.size();
    mentions += p.mentions.size();
    for (const auto& h : p.hashtags) ++tag_counts[h];
  }
  std::sort(times.begin(), times.end());
  const EpochSeconds first = times.front(), last = times.back();
  const double span_days = std::max(1.0, static_cast<double>(last - first) / static_cast<double>(kSecondsPerDay));

  v[kPostCount] = nd;
  v[kCommentCount] = static_cast<double>(comments);
  v[kEchoCount] = static_cast<double>(echoes);
  v[kAccountAgeDays] =
      std::max(0.0, static_cast<double>(last - *account.created_at) / static_cast<double>(kSecondsPerDay));
  v[kPostsPerDay] = nd / span_days;
  v[kHashtagsPerPost] = static_cast<double>(hashtags) / nd;
  v[kUrlsPerPost] = static_cast<double>(urls) / nd;
  v[kMentionsPerPost] = static_cast<double>(mentions) / nd;
  v[kDuplicateContentRatio] = duplicate_content_ratio(posts, opts.duplicates);

  if (n >= 2) {
    std::vector<double> gaps(n - 1);
    for (std::size_t i = 1; i < n; ++i) gaps[i - 1] = static_cast<double>(times[i] - times[i - 1]);
    double mean = 0.0;
    for (double g : gaps) mean += g;
    mean /= static_cast<double>(gaps.size());
    v[kMeanInterpostGapSeconds] = mean;
    if (gaps.size() >= 2 && mean > 0.0) {
      double var = 0.0;
      for (double g : gaps) var += (g - mean) * (g - mean);
      var /= static_cast<double>(gaps.size());
      v[kCvInterpostGap] = std::sqrt(var) / mean;
    }
  }
  v[kHashtagEntropy] = detail::shannon_entropy(tag_counts);
  v[kReplyFraction] = static_cast<double>(comments) / nd;
  return fv;
}

// ---------------------------------------------------------------------------
// Normalization

struct NormalizationParams {
  std::string spec_version{kSpecVersion};
  std::vector<double> min;
  std::vector<double> max;

  Json to_json() const { return Json{{"feature_spec_version", spec_version}, {"min", min}, {"max", max}}; }

  static NormalizationParams from_json(const Json& j) {
    NormalizationParams p;
    p.spec_version = j.at("feature_spec_version").get<std::string>();
    p.min = j.at("min").get<std::vector<double>>();
    p.max = j.at("max").get<std::vector<double>>();
    if (p.min.size() != p.max.size()) throw Error(ErrorCode::kCorruptModelFile, "normalizer size mismatch");
    for (std::size_t i = 0; i < p.min.size(); ++i)
      if (!(p.min[i] <= p.max[i])) throw Error(ErrorCode::kCorruptModelFile, "normalizer min > max");
    return p;
  }

  bool operator==(const NormalizationParams&) const = default;
};

inline NormalizationParams fit_normalizer(const FeatureMatrix& matrix) {
  if (matrix.rows.empty()) throw Error(ErrorCode::kEmptyMatrix, "cannot fit a normalizer on zero rows");
  NormalizationParams p;
  p.spec_version = matrix.spec_version;
  p.min = matrix.rows.front().values;
  p.max = matrix.rows.front().values;
  for (const auto& row : matrix.rows) {
    for (std::size_t j = 0; j < row.values.size(); ++j) {
      p.min[j] = std::min(p.min[j], row.values[j]);
      p.max[j] = std::max(p.max[j], row.values[j]);
    }
  }
  return p;
}

inline void normalize_in_place(std::vector<double>& values, const NormalizationParams& p) {
  if (values.size() != p.min.size())
    throw Error(ErrorCode::kSpecVersionMismatch, "feature count does not match the normalizer");
  for (std::size_t j = 0; j < values.size(); ++j) {
    const double range = p.max[j] - p.min[j];
    if (range <= 0.0) {
      values[j] = 0.0;
      continue;
    }
    values[j] = std::clamp((values[j] - p.min[j]) / range, 0.0, 1.0);
  }
}

inline FeatureVector apply_normalizer(FeatureVector fv, const NormalizationParams& p) {
  normalize_in_place(fv.values, p);
  return fv;
}

inline FeatureMatrix apply_normalizer(FeatureMatrix matrix, const NormalizationParams& p) {
  if (matrix.spec_version != p.spec_version)
    throw Error(ErrorCode::kSpecVersionMismatch,
                "matrix spec " + matrix.spec_version + " vs normalizer spec " + p.spec_version);
  for (auto& row : matrix.rows) normalize_in_place(row.values, p);
  return matrix;
}

// ---------------------------------------------------------------------------
// Datasets

/// All posts of the store grouped by author, each group in store order.
inline std::unordered_map<std::string, std::vector<Post>> group_by_author(const corpus::CorpusStore& store) {
  std::unordered_map<std::string, std::vector<Post>> out;
  store.for_each_post([&](Post&& p) {
    auto& bucket = out[p.author];
    bucket.push_back(std::move(p));
  });
  return out;
}

/// One labeled row per entry, in label-file order.
inline FeatureMatrix build_dataset(const corpus::CorpusStore& store, const corpus::LabeledDataset& labeled,
                                   const ExtractOptions& opts = {}) {
  FeatureMatrix m;
  const std::size_t n = labeled.entries.size();
  for (const auto& e : labeled.entries)
    if (!store.find_account(e.username)) throw Error(ErrorCode::kUnknownUser, "unknown user: " + e.username);
  m.rows.resize(n);
  m.labels.resize(n);
  parallel_for(n, [&](std::size_t i) {
    const auto& e = labeled.entries[i];
    m.rows[i] = extract(*store.find_account(e.username), store.posts_of(e.username), opts);
    m.labels[i] = e.label;
  });
  return m;
}

/// Feature vectors of every account in the store, in account order.
inline std::vector<FeatureVector> featurize_store(const corpus::CorpusStore& store, const ExtractOptions& opts = {}) {
  auto grouped = group_by_author(store);
  const auto& accounts = store.accounts();
  std::vector<FeatureVector> out(accounts.size());
  static const std::vector<Post> kNoPosts;
  parallel_for(accounts.size(), [&](std::size_t i) {
    auto it = grouped.find(accounts[i].username);
    out[i] = extract(accounts[i], it == grouped.end() ? kNoPosts : it->second, opts);
  });
  return out;
}

}  // namespace entendre::features
