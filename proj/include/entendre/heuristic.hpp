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

// Rule-based bot scoring over unnormalized account features.
//
// Default rules:
//   R1  posts_per_day > 100
//   R2  |followers / following - 1| <= 0.1 and following >= 10
//   R3  duplicate_content_ratio >= 0.5
//   R4  cv_interpost_gap < 0.1 and post_count >= 20
//
// score = sum of fired weights / sum of all weights; bot iff score >= threshold.

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "entendre/error.hpp"
#include "entendre/features.hpp"
#include "entendre/records.hpp"

namespace entendre::heuristic {

enum class RuleKind {
  kPostsPerDayAbove,     // posts_per_day > min
  kFollowerRatioNearOne, // |followers/following - 1| <= tolerance, following >= min_following
  kDuplicateRatioAtLeast,// duplicate_content_ratio >= min
  kMetronomicCadence,    // cv_interpost_gap < max_cv, post_count >= min_posts
  kFeatureCompare,       // <feature> <op> <value>
};

enum class CompareOp { kGreater, kGreaterEqual, kLess, kLessEqual };

struct HeuristicRule {
  std::string id;
  RuleKind kind = RuleKind::kPostsPerDayAbove;
  double weight = 1.0;

  double min = 0.0;            // posts/day or duplicate-ratio floor
  double tolerance = 0.1;
  double min_following = 10.0;
  double max_cv = 0.1;
  double min_posts = 20.0;

  std::size_t feature = 0;     // kFeatureCompare
  CompareOp op = CompareOp::kGreater;
  double value = 0.0;

  bool holds(const features::FeatureVector& fv, const Account& raw) const {
    using namespace features;
    switch (kind) {
      case RuleKind::kPostsPerDayAbove:
        return fv[kPostsPerDay] > min;
      case RuleKind::kFollowerRatioNearOne: {
        const double following = raw.following ? static_cast<double>(*raw.following) : fv[kFollowing];
        const double followers = raw.followers ? static_cast<double>(*raw.followers) : fv[kFollowers];
        if (following < min_following || following <= 0.0) return false;
        // Multiplied out so the closed boundary survives rounding (110/100 - 1 > 0.1).
        return std::fabs(followers - following) <= tolerance * following;
      }
      case RuleKind::kDuplicateRatioAtLeast:
        return fv[kDuplicateContentRatio] >= min;
      case RuleKind::kMetronomicCadence:
        return fv[kCvInterpostGap] < max_cv && fv[kPostCount] >= min_posts;
      case RuleKind::kFeatureCompare: {
        const double x = fv[feature];
        switch (op) {
          case CompareOp::kGreater: return x > value;
          case CompareOp::kGreaterEqual: return x >= value;
          case CompareOp::kLess: return x < value;
          case CompareOp::kLessEqual: return x <= value;
        }
      }
    }
    return false;
  }
};

struct HeuristicConfig {
  std::vector<HeuristicRule> rules;
  double threshold = 0.5;

  static HeuristicConfig defaults() {
    HeuristicConfig c;
    HeuristicRule r1;
    r1.id = "R1";
    r1.kind = RuleKind::kPostsPerDayAbove;
    r1.min = 100.0;
    HeuristicRule r2;
    r2.id = "R2";
    r2.kind = RuleKind::kFollowerRatioNearOne;
    HeuristicRule r3;
    r3.id = "R3";
    r3.kind = RuleKind::kDuplicateRatioAtLeast;
    r3.min = 0.5;
    HeuristicRule r4;
    r4.id = "R4";
    r4.kind = RuleKind::kMetronomicCadence;
    c.rules = {r1, r2, r3, r4};
    return c;
  }

  double total_weight() const {
    double w = 0.0;
    for (const auto& r : rules) w += r.weight;
    return w;
  }

  void validate() const {
    if (rules.empty()) throw Error(ErrorCode::kInvalidConfig, "heuristic config needs at least one rule");
    if (!(threshold > 0.0 && threshold <= 1.0))
      throw Error(ErrorCode::kInvalidConfig, "heuristic threshold must be in (0, 1]");
    std::set<std::string> ids;
    for (const auto& r : rules) {
      if (!ids.insert(r.id).second) throw Error(ErrorCode::kInvalidConfig, "duplicate rule id " + r.id);
      if (!(r.weight > 0.0)) throw Error(ErrorCode::kInvalidConfig, "rule weight must be positive: " + r.id);
      if (r.kind == RuleKind::kFeatureCompare && r.feature >= features::kNumFeatures)
        throw Error(ErrorCode::kInvalidConfig, "rule feature out of range: " + r.id);
    }
  }

  /// Rules: {"id", "type", "weight", ...parameters}. Types are
  /// posts_per_day (min), follower_ratio (tolerance, min_following),
  /// duplicate_ratio (min), cadence (max_cv, min_posts) and
  /// feature (feature, op, value).
  static HeuristicConfig from_json(const Json& j) {
    HeuristicConfig c;
    try {
      c.threshold = j.value("threshold", 0.5);
      for (const auto& rj : j.at("rules")) {
        HeuristicRule r;
        r.id = rj.at("id").get<std::string>();
        r.weight = rj.value("weight", 1.0);
        const std::string type = rj.at("type").get<std::string>();
        if (type == "posts_per_day") {
          r.kind = RuleKind::kPostsPerDayAbove;
          r.min = rj.value("min", 100.0);
        } else if (type == "follower_ratio") {
          r.kind = RuleKind::kFollowerRatioNearOne;
          r.tolerance = rj.value("tolerance", 0.1);
          r.min_following = rj.value("min_following", 10.0);
        } else if (type == "duplicate_ratio") {
          r.kind = RuleKind::kDuplicateRatioAtLeast;
          r.min = rj.value("min", 0.5);
        } else if (type == "cadence") {
          r.kind = RuleKind::kMetronomicCadence;
          r.max_cv = rj.value("max_cv", 0.1);
          r.min_posts = rj.value("min_posts", 20.0);
        } else if (type == "feature") {
          r.kind = RuleKind::kFeatureCompare;
          const std::string name = rj.at("feature").get<std::string>();
          auto idx = features::feature_index(name);
          if (!idx) throw Error(ErrorCode::kInvalidConfig, "unknown feature " + name);
          r.feature = *idx;
          const std::string op = rj.at("op").get<std::string>();
          if (op == ">") r.op = CompareOp::kGreater;
          else if (op == ">=") r.op = CompareOp::kGreaterEqual;
          else if (op == "<") r.op = CompareOp::kLess;
          else if (op == "<=") r.op = CompareOp::kLessEqual;
          else throw Error(ErrorCode::kInvalidConfig, "unknown comparison " + op);
          r.value = rj.at("value").get<double>();
        } else {
          throw Error(ErrorCode::kInvalidConfig, "unknown rule type " + type);
        }
        c.rules.push_back(std::move(r));
      }
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kInvalidConfig, std::string("bad heuristic config: ") + e.what());
    }
    c.validate();
    return c;
  }

  static HeuristicConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::kInvalidConfig, "heuristic config is not JSON");
    return from_json(j);
  }
};

struct HeuristicVerdict {
  std::string username;
  double score = 0.0;
  std::vector<std::string> fired_rule_ids;
  bool is_bot = false;
};

/// Ids of the rules whose predicates hold, in config order.
inline std::vector<std::string> evaluate_rules(const features::FeatureVector& fv, const Account& raw,
                                               const HeuristicConfig& config) {
  std::vector<std::string> fired;
  for (const auto& r : config.rules)
    if (r.holds(fv, raw)) fired.push_back(r.id);
  return fired;
}

inline double heuristic_score(const std::vector<std::string>& fired, const HeuristicConfig& config) {
  const double total = config.total_weight();
  if (total <= 0.0) return 0.0;
  double w = 0.0;
  for (const auto& r : config.rules)
    if (std::find(fired.begin(), fired.end(), r.id) != fired.end()) w += r.weight;
  return std::clamp(w / total, 0.0, 1.0);
}

inline HeuristicVerdict verdict_from_features(const features::FeatureVector& fv, const Account& raw,
                                              const HeuristicConfig& config) {
  HeuristicVerdict v;
  v.username = fv.username;
  v.fired_rule_ids = evaluate_rules(fv, raw, config);
  v.score = heuristic_score(v.fired_rule_ids, config);
  v.is_bot = v.score >= config.threshold;
  return v;
}

inline HeuristicVerdict classify(const Account& account, const std::vector<Post>& posts,
                                 const HeuristicConfig& config = HeuristicConfig::defaults(),
                                 const features::ExtractOptions& opts = {}) {
  return verdict_from_features(features::extract(account, posts, opts), account, config);
}

/// Verdicts for every account in the store, in account order.
inline std::vector<HeuristicVerdict> classify_store(const corpus::CorpusStore& store,
                                                    const HeuristicConfig& config = HeuristicConfig::defaults(),
                                                    const features::ExtractOptions& opts = {}) {
  const auto vectors = features::featurize_store(store, opts);
  const auto& accounts = store.accounts();
  std::vector<HeuristicVerdict> out(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) out[i] = verdict_from_features(vectors[i], accounts[i], config);
  return out;
}

/// `username,score,fired_rules,is_bot`; fired rules joined with ';'.
inline void write_verdicts_csv(std::ostream& out, const std::vector<HeuristicVerdict>& verdicts) {
  out << "username,score,fired_rules,is_bot\n";
  char buf[32];
  for (const auto& v : verdicts) {
    std::snprintf(buf, sizeof buf, "%.4f", v.score);
    out << v.username << ',' << buf << ',';
    for (std::size_t i = 0; i < v.fired_rule_ids.size(); ++i) out << (i ? ";" : "") << v.fired_rule_ids[i];
    out << ',' << (v.is_bot ? "true" : "false") << '\n';
  }
}

}  // namespace entendre::heuristic
