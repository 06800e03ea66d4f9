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

// Random forest over dense real features.
//
// Classification trees split on gini impurity, regression trees on variance.
// Candidate thresholds are midpoints between consecutive distinct values; a
// row goes left when x[feature] <= threshold. Among splits whose impurity
// decrease is equal (within kGainTolerance) the lower feature index wins, then
// the lower threshold.
//
// Tree i is grown from Rng(seed ^ i): first its bootstrap sample, then the
// per-node feature draws. Trees therefore do not depend on each other and can
// be trained in any order or in parallel.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "entendre/corpus.hpp"
#include "entendre/error.hpp"
#include "entendre/features.hpp"
#include "entendre/parallel.hpp"
#include "entendre/random.hpp"
#include "entendre/records.hpp"
#include "entendre/text.hpp"

namespace entendre::forest {

enum class Task { kClassification, kRegression };

inline std::string_view to_string(Task t) { return t == Task::kClassification ? "classification" : "regression"; }

inline constexpr double kGainTolerance = 1e-12;

struct HyperParams {
  std::size_t num_trees = 200;
  std::size_t max_depth = 16;
  std::size_t min_node_size = 5;
  double mtry_fraction = std::sqrt(18.0) / 18.0;
  double sample_fraction = 1.0;

  void validate() const {
    if (num_trees < 1 || max_depth < 1 || min_node_size < 1)
      throw Error(ErrorCode::kInvalidConfig, "num_trees, max_depth and min_node_size must be >= 1");
    if (!(mtry_fraction > 0.0 && mtry_fraction <= 1.0))
      throw Error(ErrorCode::kInvalidConfig, "mtry_fraction must be in (0, 1]");
    if (!(sample_fraction > 0.0 && sample_fraction <= 1.0))
      throw Error(ErrorCode::kInvalidConfig, "sample_fraction must be in (0, 1]");
  }

  std::size_t features_per_node(std::size_t p) const {
    const auto k = static_cast<std::size_t>(std::ceil(mtry_fraction * static_cast<double>(p)));
    return std::clamp<std::size_t>(k, 1, p);
  }

  Json to_json() const {
    return Json{{"num_trees", num_trees},
                {"max_depth", max_depth},
                {"min_node_size", min_node_size},
                {"mtry_fraction", mtry_fraction},
                {"sample_fraction", sample_fraction}};
  }

  static HyperParams from_json(const Json& j) {
    HyperParams hp;
    hp.num_trees = j.at("num_trees").get<std::size_t>();
    hp.max_depth = j.at("max_depth").get<std::size_t>();
    hp.min_node_size = j.at("min_node_size").get<std::size_t>();
    hp.mtry_fraction = j.at("mtry_fraction").get<double>();
    hp.sample_fraction = j.at("sample_fraction").get<double>();
    hp.validate();
    return hp;
  }

  bool operator==(const HyperParams&) const = default;
};

/// Dense row-major design matrix with one target per row: 0/1 (human/bot)
/// for classification, a real value for regression.
struct TrainingSet {
  std::size_t num_rows = 0;
  std::size_t num_features = 0;
  std::vector<double> x;
  std::vector<double> y;

  std::span<const double> row(std::size_t i) const { return {x.data() + i * num_features, num_features}; }
  double at(std::size_t i, std::size_t j) const { return x[i * num_features + j]; }

  void add_row(std::span<const double> values, double target) {
    if (num_rows == 0 && num_features == 0) num_features = values.size();
    if (values.size() != num_features) throw Error(ErrorCode::kSpecVersionMismatch, "ragged training row");
    x.insert(x.end(), values.begin(), values.end());
    y.push_back(target);
    ++num_rows;
  }

  static TrainingSet from_matrix(const features::FeatureMatrix& m) {
    if (m.labels.size() != m.rows.size()) throw Error(ErrorCode::kEmptyDataset, "matrix rows are not labeled");
    TrainingSet t;
    t.num_features = m.num_features();
    for (std::size_t i = 0; i < m.rows.size(); ++i)
      t.add_row(m.rows[i].values, m.labels[i] == Label::kBot ? 1.0 : 0.0);
    return t;
  }

  TrainingSet subset(std::span<const std::size_t> rows) const {
    TrainingSet t;
    t.num_features = num_features;
    for (std::size_t r : rows) t.add_row(row(r), y[r]);
    return t;
  }
};

// ---------------------------------------------------------------------------
// Impurity

/// 1 - p0^2 - p1^2.
inline double gini(std::size_t c0, std::size_t c1) {
  const std::size_t n = c0 + c1;
  if (n == 0) throw Error(ErrorCode::kEmptyNode, "gini of an empty node");
  const double p0 = static_cast<double>(c0) / static_cast<double>(n);
  const double p1 = static_cast<double>(c1) / static_cast<double>(n);
  return 1.0 - p0 * p0 - p1 * p1;
}

inline double gini_decrease(std::size_t l0, std::size_t l1, std::size_t r0, std::size_t r1) {
  const auto nl = static_cast<double>(l0 + l1), nr = static_cast<double>(r0 + r1);
  const double n = nl + nr;
  return gini(l0 + r0, l1 + r1) - (nl / n) * gini(l0, l1) - (nr / n) * gini(r0, r1);
}

struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  double decrease = 0.0;
};

namespace detail {

inline double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid < hi ? mid : lo;
}

}  // namespace detail

/// Best impurity-decreasing split of `rows` over `candidate_features`, or
/// nothing when no split leaves both children with >= min_node_size rows and
/// a positive decrease. `rows` may contain repeats (bootstrap draws).
inline std::optional<SplitCandidate> best_split(const TrainingSet& data, std::span<const std::size_t> rows,
                                                std::span<const std::size_t> candidate_features,
                                                std::size_t min_node_size, Task task = Task::kClassification) {
  const std::size_t n = rows.size();
  if (n < 2 || candidate_features.empty()) return std::nullopt;
  min_node_size = std::max<std::size_t>(min_node_size, 1);
  if (n < 2 * min_node_size) return std::nullopt;

  std::vector<std::size_t> features(candidate_features.begin(), candidate_features.end());
  std::sort(features.begin(), features.end());

  std::size_t total1 = 0;
  double mean_y = 0.0;
  for (std::size_t r : rows) {
    total1 += data.y[r] > 0.5 ? 1 : 0;
    mean_y += data.y[r];
  }
  mean_y /= static_cast<double>(n);
  const std::size_t total0 = n - total1;
  if (task == Task::kClassification && (total0 == 0 || total1 == 0)) return std::nullopt;

  double parent_sse = 0.0;  // regression: sum of squared deviations from the mean
  if (task == Task::kRegression) {
    for (std::size_t r : rows) parent_sse += (data.y[r] - mean_y) * (data.y[r] - mean_y);
    if (parent_sse <= 0.0) return std::nullopt;
  }

  std::optional<SplitCandidate> best;
  std::vector<std::pair<double, double>> col(n);  // (value, target)
  for (std::size_t f : features) {
    for (std::size_t i = 0; i < n; ++i) col[i] = {data.at(rows[i], f), data.y[rows[i]]};
    std::sort(col.begin(), col.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    if (col.front().first == col.back().first) continue;

    std::size_t l1 = 0;
    double l_sum = 0.0, l_sq = 0.0;
    double r_sum = 0.0, r_sq = 0.0;
    if (task == Task::kRegression) {
      for (const auto& [_, y] : col) {
        const double d = y - mean_y;
        r_sum += d;
        r_sq += d * d;
      }
    }
    for (std::size_t i = 1; i < n; ++i) {
      const double y = col[i - 1].second;
      if (task == Task::kClassification) {
        l1 += y > 0.5 ? 1 : 0;
      } else {
        const double d = y - mean_y;
        l_sum += d;
        l_sq += d * d;
        r_sum -= d;
        r_sq -= d * d;
      }
      if (!(col[i - 1].first < col[i].first)) continue;
      const std::size_t nl = i, nr = n - i;
      if (nl < min_node_size || nr < min_node_size) continue;

      double decrease;
      if (task == Task::kClassification) {
        decrease = gini_decrease(nl - l1, l1, total0 - (nl - l1), total1 - l1);
      } else {
        const double sse_l = std::max(0.0, l_sq - l_sum * l_sum / static_cast<double>(nl));
        const double sse_r = std::max(0.0, r_sq - r_sum * r_sum / static_cast<double>(nr));
        decrease = (parent_sse - sse_l - sse_r) / static_cast<double>(n);
      }
      if (decrease <= kGainTolerance) continue;
      if (!best || decrease > best->decrease + kGainTolerance)
        best = SplitCandidate{f, detail::midpoint(col[i - 1].first, col[i].first), decrease};
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Trees

struct Node {
  static constexpr std::int32_t kLeaf = -1;

  std::int32_t feature = kLeaf;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint32_t size = 0;     // training rows reaching the node
  double decrease = 0.0;      // impurity decrease of the split (split nodes)
  std::array<std::uint32_t, 2> counts{};  // classification leaves: {human, bot}
  double mean = 0.0;          // regression leaves

  bool is_leaf() const { return feature == kLeaf; }
  bool operator==(const Node&) const = default;
};

/// Flat tree; node 0 is the root, children always follow their parent.
struct Tree {
  std::vector<Node> nodes;

  const Node& leaf_for(std::span<const double> x) const {
    const Node* node = &nodes[0];
    while (!node->is_leaf())
      node = &nodes[static_cast<std::size_t>(x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left
                                                                                                            : node->right)];
    return *node;
  }

  std::size_t depth() const {
    std::size_t deepest = 0;
    std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
      auto [id, d] = stack.back();
      stack.pop_back();
      const Node& node = nodes[static_cast<std::size_t>(id)];
      deepest = std::max(deepest, d);
      if (!node.is_leaf()) {
        stack.push_back({node.left, d + 1});
        stack.push_back({node.right, d + 1});
      }
    }
    return deepest;
  }

  bool operator==(const Tree&) const = default;
};

/// Leaf vote: bot when bot count >= human count.
inline bool votes_bot(const Node& leaf) { return leaf.counts[1] >= leaf.counts[0]; }

/// Recursive CART on `sampled_rows`. At every node ceil(mtry * p) features are
/// drawn from `rng` without replacement; growth stops at max_depth, when no
/// legal split decreases impurity, or when the node is pure.
inline Tree grow_tree(const TrainingSet& data, std::vector<std::size_t> sampled_rows, const HyperParams& hp, Rng& rng,
                      Task task = Task::kClassification) {
  Tree tree;
  if (sampled_rows.empty()) throw Error(ErrorCode::kEmptyDataset, "cannot grow a tree on zero rows");
  const std::size_t p = data.num_features;
  const std::size_t mtry = hp.features_per_node(p);

  struct Pending {
    std::int32_t id;
    std::size_t depth;
    std::vector<std::size_t> rows;
  };
  auto make_leaf = [&](Node& node, const std::vector<std::size_t>& rows) {
    node.feature = Node::kLeaf;
    node.counts = {0, 0};
    double sum = 0.0;
    for (std::size_t r : rows) {
      ++node.counts[data.y[r] > 0.5 ? 1 : 0];
      sum += data.y[r];
    }
    if (task == Task::kRegression) {
      node.mean = sum / static_cast<double>(rows.size());
      node.counts = {0, 0};
    }
  };

  tree.nodes.emplace_back();
  std::vector<Pending> stack;
  stack.push_back({0, 0, std::move(sampled_rows)});
  while (!stack.empty()) {
    Pending cur = std::move(stack.back());
    stack.pop_back();
    Node& node = tree.nodes[static_cast<std::size_t>(cur.id)];
    node.size = static_cast<std::uint32_t>(cur.rows.size());

    std::optional<SplitCandidate> split;
    if (cur.depth < hp.max_depth && cur.rows.size() >= 2 * hp.min_node_size) {
      const auto drawn = rng.sample_without_replacement(p, mtry);
      split = best_split(data, cur.rows, drawn, hp.min_node_size, task);
    }
    if (!split) {
      make_leaf(node, cur.rows);
      continue;
    }
    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : cur.rows) (data.at(r, split->feature) <= split->threshold ? left_rows : right_rows).push_back(r);

    node.feature = static_cast<std::int32_t>(split->feature);
    node.threshold = split->threshold;
    node.decrease = split->decrease;
    const auto left_id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes[static_cast<std::size_t>(cur.id)].left = left_id;
    tree.nodes[static_cast<std::size_t>(cur.id)].right = left_id + 1;
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    // Right first so the left subtree is expanded first (stack order).
    stack.push_back({left_id + 1, cur.depth + 1, std::move(right_rows)});
    stack.push_back({left_id, cur.depth + 1, std::move(left_rows)});
  }
  return tree;
}

// ---------------------------------------------------------------------------
// Forest

struct RandomForest {
  Task task = Task::kClassification;
  std::string feature_spec_version{features::kSpecVersion};
  std::uint64_t seed = 0;
  HyperParams hp;
  std::size_t num_features = 0;
  std::vector<Tree> trees;
  // In-bag multiplicity of every training row, per tree. Only present on a
  // freshly trained forest; saved bundles do not carry it.
  std::vector<std::vector<std::uint32_t>> inbag;
};

struct TrainReport {
  double oob_error = 0.0;  // misclassification rate, or MSE for regression
  std::vector<double> feature_importances;

  Json to_json() const { return Json{{"oob_error", oob_error}, {"feature_importances", feature_importances}}; }
};

namespace detail {

inline std::uint64_t tree_seed(std::uint64_t seed, std::size_t tree_index) {
  return seed ^ static_cast<std::uint64_t>(tree_index);
}

inline void check_width(const RandomForest& f, std::size_t width) {
  if (width != f.num_features)
    throw Error(ErrorCode::kSpecVersionMismatch, "expected " + std::to_string(f.num_features) + " features, got " +
                                                     std::to_string(width));
}

}  // namespace detail

/// Number of trees voting bot for `x`.
inline std::size_t bot_votes(const RandomForest& forest, std::span<const double> x) {
  detail::check_width(forest, x.size());
  std::size_t votes = 0;
  for (const auto& t : forest.trees) votes += votes_bot(t.leaf_for(x)) ? 1 : 0;
  return votes;
}

/// Classification: fraction of trees voting bot. Regression: mean of leaf means.
inline double predict_proba(const RandomForest& forest, std::span<const double> x) {
  detail::check_width(forest, x.size());
  if (forest.trees.empty()) return 0.0;
  if (forest.task == Task::kRegression) {
    double sum = 0.0;
    for (const auto& t : forest.trees) sum += t.leaf_for(x).mean;
    return sum / static_cast<double>(forest.trees.size());
  }
  return static_cast<double>(bot_votes(forest, x)) / static_cast<double>(forest.trees.size());
}

inline double predict_proba(const RandomForest& forest, const features::FeatureVector& fv,
                            std::string_view spec_version = features::kSpecVersion) {
  if (spec_version != forest.feature_spec_version)
    throw Error(ErrorCode::kSpecVersionMismatch, "feature spec " + std::string(spec_version) + " vs model spec " +
                                                     forest.feature_spec_version);
  return predict_proba(forest, std::span<const double>(fv.values));
}

/// Per-tree outputs (leaf mean for regression, 0/1 vote for classification).
inline std::vector<double> tree_outputs(const RandomForest& forest, std::span<const double> x) {
  detail::check_width(forest, x.size());
  std::vector<double> out;
  out.reserve(forest.trees.size());
  for (const auto& t : forest.trees) {
    const Node& leaf = t.leaf_for(x);
    out.push_back(forest.task == Task::kRegression ? leaf.mean : (votes_bot(leaf) ? 1.0 : 0.0));
  }
  return out;
}

/// Error over rows that at least one tree left out of its bootstrap sample,
/// each predicted by those trees only.
inline double oob_error(const RandomForest& forest, const TrainingSet& data) {
  if (forest.inbag.size() != forest.trees.size())
    throw Error(ErrorCode::kNoOobRows, "forest carries no bootstrap sets");
  double err = 0.0;
  std::size_t counted = 0;
  for (std::size_t r = 0; r < data.num_rows; ++r) {
    std::size_t trees = 0;
    double acc = 0.0;
    const auto x = data.row(r);
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
      if (forest.inbag[t][r] != 0) continue;
      ++trees;
      const Node& leaf = forest.trees[t].leaf_for(x);
      acc += forest.task == Task::kRegression ? leaf.mean : (votes_bot(leaf) ? 1.0 : 0.0);
    }
    if (trees == 0) continue;
    ++counted;
    const double pred = acc / static_cast<double>(trees);
    if (forest.task == Task::kClassification) {
      const bool bot = pred >= 0.5;
      err += bot != (data.y[r] > 0.5) ? 1.0 : 0.0;
    } else {
      err += (pred - data.y[r]) * (pred - data.y[r]);
    }
  }
  if (counted == 0) throw Error(ErrorCode::kNoOobRows, "every row is in every bootstrap sample");
  return err / static_cast<double>(counted);
}

/// Size-weighted impurity decrease per feature, summed over every split and
/// normalized to sum to 1; all zeros when the forest has no split.
inline std::vector<double> feature_importance(const RandomForest& forest) {
  std::vector<double> imp(forest.num_features, 0.0);
  for (const auto& t : forest.trees)
    for (const auto& node : t.nodes)
      if (!node.is_leaf()) imp[static_cast<std::size_t>(node.feature)] += node.decrease * node.size;
  double total = 0.0;
  for (double v : imp) total += v;
  if (total > 0.0)
    for (double& v : imp) v /= total;
  return imp;
}

struct TrainOptions {
  Task task = Task::kClassification;
  std::size_t threads = default_threads();
  bool compute_oob = true;
};

inline std::pair<RandomForest, TrainReport> train(const TrainingSet& data, const HyperParams& hp, std::uint64_t seed,
                                                  const TrainOptions& opts = {}) {
  hp.validate();
  if (data.num_rows == 0) throw Error(ErrorCode::kEmptyDataset, "cannot train on zero rows");
  if (opts.task == Task::kClassification) {
    if (data.num_rows < 2) throw Error(ErrorCode::kEmptyDataset, "need at least two rows");
    const auto bots = std::count_if(data.y.begin(), data.y.end(), [](double y) { return y > 0.5; });
    if (bots == 0 || static_cast<std::size_t>(bots) == data.num_rows)
      throw Error(ErrorCode::kSingleClassDataset, "training data holds a single class");
  }
  RandomForest forest;
  forest.task = opts.task;
  forest.seed = seed;
  forest.hp = hp;
  forest.num_features = data.num_features;
  forest.trees.resize(hp.num_trees);
  forest.inbag.assign(hp.num_trees, {});
  const auto draws =
      static_cast<std::size_t>(std::ceil(hp.sample_fraction * static_cast<double>(data.num_rows)));

  parallel_for(
      hp.num_trees,
      [&](std::size_t i) {
        Rng rng(detail::tree_seed(seed, i));
        std::vector<std::size_t> sample(draws);
        std::vector<std::uint32_t> counts(data.num_rows, 0);
        for (auto& s : sample) {
          s = static_cast<std::size_t>(rng.below(data.num_rows));
          ++counts[s];
        }
        forest.trees[i] = grow_tree(data, std::move(sample), hp, rng, opts.task);
        forest.inbag[i] = std::move(counts);
      },
      opts.threads);

  TrainReport report;
  report.feature_importances = feature_importance(forest);
  if (opts.compute_oob) {
    try {
      report.oob_error = oob_error(forest, data);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoOobRows) throw;
      report.oob_error = opts.task == Task::kClassification ? 1.0 : 0.0;
    }
  }
  return {std::move(forest), std::move(report)};
}

inline std::pair<RandomForest, TrainReport> train(const features::FeatureMatrix& matrix, const HyperParams& hp,
                                                  std::uint64_t seed, const TrainOptions& opts = {}) {
  if (matrix.rows.empty()) throw Error(ErrorCode::kEmptyDataset, "cannot train on zero rows");
  auto result = train(TrainingSet::from_matrix(matrix), hp, seed, opts);
  result.first.feature_spec_version = matrix.spec_version;
  return result;
}

// ---------------------------------------------------------------------------
// Model bundle: one JSON document holding the forest, the normalizer fitted
// on its training rows, and optional imputation fill values.

inline constexpr std::string_view kFormatVersion = "1";

struct ModelBundle {
  RandomForest forest;
  features::NormalizationParams normalizer;
  std::optional<corpus::ImputationValues> imputation;
  TrainReport report;
  std::string model_version;  // hash of the serialized document

  /// Normalizes raw features and returns the bot probability.
  double score(const features::FeatureVector& raw) const {
    auto normalized = features::apply_normalizer(raw, normalizer);
    return predict_proba(forest, normalized, normalizer.spec_version);
  }
};

namespace detail {

inline Json node_to_json(const Tree& t, std::int32_t id, Task task) {
  const Node& n = t.nodes[static_cast<std::size_t>(id)];
  if (n.is_leaf()) {
    if (task == Task::kRegression) return Json{{"mean", n.mean}, {"n", n.size}};
    return Json{{"counts", {n.counts[0], n.counts[1]}}, {"n", n.size}};
  }
  return Json{{"feature", n.feature},
              {"threshold", n.threshold},
              {"n", n.size},
              {"decrease", n.decrease},
              {"left", node_to_json(t, n.left, task)},
              {"right", node_to_json(t, n.right, task)}};
}

inline void node_from_json(const Json& j, Tree& t, std::size_t id, Task task, std::size_t num_features,
                           std::size_t depth) {
  if (depth > 4096) throw Error(ErrorCode::kCorruptModelFile, "tree too deep");
  Node n;
  n.size = j.at("n").get<std::uint32_t>();
  if (j.contains("feature")) {
    const auto f = j.at("feature").get<std::int64_t>();
    if (f < 0 || static_cast<std::size_t>(f) >= num_features)
      throw Error(ErrorCode::kCorruptModelFile, "split feature out of range");
    n.feature = static_cast<std::int32_t>(f);
    n.threshold = j.at("threshold").get<double>();
    n.decrease = j.at("decrease").get<double>();
    const auto left = static_cast<std::int32_t>(t.nodes.size());
    n.left = left;
    n.right = left + 1;
    t.nodes[id] = n;
    t.nodes.emplace_back();
    t.nodes.emplace_back();
    node_from_json(j.at("left"), t, static_cast<std::size_t>(left), task, num_features, depth + 1);
    node_from_json(j.at("right"), t, static_cast<std::size_t>(left + 1), task, num_features, depth + 1);
    return;
  }
  if (task == Task::kRegression) {
    n.mean = j.at("mean").get<double>();
  } else {
    const auto c = j.at("counts").get<std::vector<std::uint32_t>>();
    if (c.size() != 2) throw Error(ErrorCode::kCorruptModelFile, "leaf counts must have two entries");
    n.counts = {c[0], c[1]};
  }
  t.nodes[id] = n;
}

}  // namespace detail

inline Json bundle_to_json(const ModelBundle& b) {
  const auto& f = b.forest;
  Json trees = Json::array();
  for (const auto& t : f.trees) trees.push_back(detail::node_to_json(t, 0, f.task));
  Json names = Json::array();
  for (auto n : features::kFeatureNames) names.push_back(std::string(n));
  Json j{{"format_version", std::string(kFormatVersion)},
         {"task", std::string(to_string(f.task))},
         {"feature_spec_version", f.feature_spec_version},
         {"seed", f.seed},
         {"num_features", f.num_features},
         {"hyperparams", f.hp.to_json()},
         {"normalizer", b.normalizer.to_json()},
         {"report", b.report.to_json()},
         {"trees", trees}};
  if (f.num_features == features::kNumFeatures) j["feature_names"] = names;
  if (b.imputation) j["imputation"] = b.imputation->to_json();
  return j;
}

inline std::string serialize(const ModelBundle& b) { return bundle_to_json(b).dump() + "\n"; }

inline ModelBundle deserialize(std::string_view document) {
  Json j = Json::parse(document.begin(), document.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::kCorruptModelFile, "model file is not a JSON document");
  try {
    const auto version = j.at("format_version").get<std::string>();
    if (version != kFormatVersion)
      throw Error(ErrorCode::kUnsupportedFormatVersion, "unsupported model format_version " + version);
    ModelBundle b;
    auto& f = b.forest;
    const auto task = j.at("task").get<std::string>();
    if (task == "classification") f.task = Task::kClassification;
    else if (task == "regression") f.task = Task::kRegression;
    else throw Error(ErrorCode::kCorruptModelFile, "unknown task " + task);
    f.feature_spec_version = j.at("feature_spec_version").get<std::string>();
    f.seed = j.at("seed").get<std::uint64_t>();
    f.num_features = j.at("num_features").get<std::size_t>();
    f.hp = HyperParams::from_json(j.at("hyperparams"));
    const auto& trees = j.at("trees");
    if (!trees.is_array() || trees.size() != f.hp.num_trees)
      throw Error(ErrorCode::kCorruptModelFile, "tree count does not match hyperparams");
    for (const auto& tj : trees) {
      Tree t;
      t.nodes.emplace_back();
      detail::node_from_json(tj, t, 0, f.task, f.num_features, 0);
      f.trees.push_back(std::move(t));
    }
    b.normalizer = features::NormalizationParams::from_json(j.at("normalizer"));
    if (b.normalizer.min.size() != f.num_features)
      throw Error(ErrorCode::kCorruptModelFile, "normalizer width does not match the forest");
    if (j.contains("report")) {
      b.report.oob_error = j["report"].value("oob_error", 0.0);
      b.report.feature_importances = j["report"].value("feature_importances", std::vector<double>{});
    }
    if (j.contains("imputation")) b.imputation = corpus::ImputationValues::from_json(j["imputation"]);
    b.model_version = text::hex64(text::fnv1a(document));
    return b;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kCorruptModelFile, std::string("malformed model file: ") + e.what());
  }
}

inline void save(const ModelBundle& b, const std::filesystem::path& path) {
  const std::string doc = serialize(b);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    out << doc;
    if (!out) throw Error(ErrorCode::kIoError, "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline ModelBundle load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open model " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

/// Fits the normalizer on `raw`, trains on the normalized rows and stamps the
/// bundle with the version it will have once saved.
inline ModelBundle fit_bundle(const features::FeatureMatrix& raw, const HyperParams& hp, std::uint64_t seed,
                              const TrainOptions& opts = {},
                              std::optional<corpus::ImputationValues> imputation = std::nullopt) {
  ModelBundle b;
  b.normalizer = features::fit_normalizer(raw);
  auto [forest, report] = train(features::apply_normalizer(raw, b.normalizer), hp, seed, opts);
  b.forest = std::move(forest);
  b.report = std::move(report);
  b.imputation = std::move(imputation);
  b.model_version = text::hex64(text::fnv1a(serialize(b)));
  return b;
}

}  // namespace entendre::forest
