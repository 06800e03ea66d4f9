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

// Sequential model-based tuning of forest hyperparameters.
//
// Loop: evaluate a uniform initial design, then repeatedly fit a regression
// forest to (normalized hyperparameters -> objective), draw uniform candidate
// configurations, and evaluate the one with the largest expected improvement.

#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "entendre/error.hpp"
#include "entendre/features.hpp"
#include "entendre/forest.hpp"
#include "entendre/random.hpp"

namespace entendre::smbo {

using forest::HyperParams;

struct IntRange {
  std::int64_t lo;
  std::int64_t hi;
};

struct RealRange {
  double lo;
  double hi;
};

struct ParamSpace {
  IntRange num_trees{50, 500};
  IntRange max_depth{2, 30};
  IntRange min_node_size{1, 50};
  RealRange mtry_fraction{0.1, 1.0};
  RealRange sample_fraction{0.5, 1.0};

  static constexpr std::size_t kDims = 5;

  void validate() const {
    if (num_trees.lo > num_trees.hi || max_depth.lo > max_depth.hi || min_node_size.lo > min_node_size.hi ||
        mtry_fraction.lo > mtry_fraction.hi || sample_fraction.lo > sample_fraction.hi)
      throw Error(ErrorCode::kInvalidConfig, "parameter range with lower > upper");
    if (num_trees.lo < 1 || max_depth.lo < 1 || min_node_size.lo < 1 || mtry_fraction.lo <= 0.0 ||
        mtry_fraction.hi > 1.0 || sample_fraction.lo <= 0.0 || sample_fraction.hi > 1.0)
      throw Error(ErrorCode::kInvalidConfig, "parameter range outside forest bounds");
  }

  bool contains(const HyperParams& hp) const {
    auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
    return in(static_cast<double>(hp.num_trees), static_cast<double>(num_trees.lo), static_cast<double>(num_trees.hi)) &&
           in(static_cast<double>(hp.max_depth), static_cast<double>(max_depth.lo), static_cast<double>(max_depth.hi)) &&
           in(static_cast<double>(hp.min_node_size), static_cast<double>(min_node_size.lo),
              static_cast<double>(min_node_size.hi)) &&
           in(hp.mtry_fraction, mtry_fraction.lo, mtry_fraction.hi) &&
           in(hp.sample_fraction, sample_fraction.lo, sample_fraction.hi);
  }

  /// Each dimension min-max scaled to [0, 1]; degenerate ranges map to 0.
  std::array<double, kDims> normalize(const HyperParams& hp) const {
    auto scale = [](double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 0.0; };
    return {scale(static_cast<double>(hp.num_trees), static_cast<double>(num_trees.lo), static_cast<double>(num_trees.hi)),
            scale(static_cast<double>(hp.max_depth), static_cast<double>(max_depth.lo), static_cast<double>(max_depth.hi)),
            scale(static_cast<double>(hp.min_node_size), static_cast<double>(min_node_size.lo),
                  static_cast<double>(min_node_size.hi)),
            scale(hp.mtry_fraction, mtry_fraction.lo, mtry_fraction.hi),
            scale(hp.sample_fraction, sample_fraction.lo, sample_fraction.hi)};
  }

  Json to_json() const {
    return Json{{"num_trees", {num_trees.lo, num_trees.hi}},
                {"max_depth", {max_depth.lo, max_depth.hi}},
                {"min_node_size", {min_node_size.lo, min_node_size.hi}},
                {"mtry_fraction", {mtry_fraction.lo, mtry_fraction.hi}},
                {"sample_fraction", {sample_fraction.lo, sample_fraction.hi}}};
  }
};

struct Trial {
  HyperParams hp;
  double objective = 0.0;
  std::uint64_t seed = 0;
  double elapsed_seconds = 0.0;
};

struct TuneResult {
  HyperParams best_hp;
  double best_objective = std::numeric_limits<double>::infinity();
  std::vector<Trial> trials;
  std::vector<double> best_so_far;

  Json to_json() const {
    Json rows = Json::array();
    for (std::size_t i = 0; i < trials.size(); ++i) {
      const auto& t = trials[i];
      Json row = t.hp.to_json();
      row["trial"] = i;
      row["objective"] = t.objective;
      row["elapsed_seconds"] = t.elapsed_seconds;
      row["best_so_far"] = best_so_far[i];
      rows.push_back(row);
    }
    return Json{{"best_hyperparams", best_hp.to_json()}, {"best_objective", best_objective}, {"trials", rows}};
  }

  /// Tab-separated trial table with a header line.
  std::string to_table() const {
    std::string out = "trial\tnum_trees\tmax_depth\tmin_node_size\tmtry_fraction\tsample_fraction\tobjective\t"
                      "best_so_far\telapsed_seconds\n";
    char buf[256];
    for (std::size_t i = 0; i < trials.size(); ++i) {
      const auto& t = trials[i];
      std::snprintf(buf, sizeof buf, "%zu\t%zu\t%zu\t%zu\t%.6f\t%.6f\t%.6f\t%.6f\t%.3f\n", i, t.hp.num_trees,
                    t.hp.max_depth, t.hp.min_node_size, t.hp.mtry_fraction, t.hp.sample_fraction, t.objective,
                    best_so_far[i], t.elapsed_seconds);
      out += buf;
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Objective

/// Stratified fold assignment: each class is shuffled with `seed` and dealt
/// round-robin, continuing across classes, so every fold's class counts are
/// within one row of the global ratio.
inline std::vector<std::size_t> stratified_folds(const std::vector<Label>& labels, std::size_t k, std::uint64_t seed) {
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i] == Label::kBot ? 1 : 0].push_back(i);
  for (const auto& c : by_class)
    if (c.size() < k)
      throw Error(ErrorCode::kTooFewRowsPerClass, "each class needs at least k=" + std::to_string(k) + " rows");
  Rng rng(seed);
  std::vector<std::size_t> fold(labels.size(), 0);
  std::size_t next = 0;
  for (auto& c : by_class) {
    for (std::size_t i = c.size(); i > 1; --i) std::swap(c[i - 1], c[static_cast<std::size_t>(rng.below(i))]);
    for (std::size_t idx : c) fold[idx] = next++ % k;
  }
  return fold;
}

/// Mean misclassification error over stratified k folds at threshold 0.5.
inline double cv_objective(const features::FeatureMatrix& matrix, const HyperParams& hp, std::size_t k,
                           std::uint64_t seed, std::size_t threads = default_threads()) {
  if (k < 2) throw Error(ErrorCode::kInvalidConfig, "k must be >= 2");
  if (matrix.labels.size() != matrix.rows.size()) throw Error(ErrorCode::kEmptyDataset, "matrix is not labeled");
  const auto folds = stratified_folds(matrix.labels, k, seed);
  const auto all = forest::TrainingSet::from_matrix(matrix);
  double total = 0.0;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == f ? test_rows : train_rows).push_back(i);
    forest::TrainOptions opts;
    opts.compute_oob = false;
    opts.threads = threads;
    auto [model, report] = forest::train(all.subset(train_rows), hp, seed, opts);
    std::size_t wrong = 0;
    for (std::size_t r : test_rows) {
      const bool bot = forest::predict_proba(model, all.row(r)) >= 0.5;
      wrong += bot != (all.y[r] > 0.5) ? 1 : 0;
    }
    total += static_cast<double>(wrong) / static_cast<double>(test_rows.size());
  }
  return total / static_cast<double>(k);
}

/// Out-of-bag error of one forest trained on the whole matrix.
inline double oob_objective(const features::FeatureMatrix& matrix, const HyperParams& hp, std::uint64_t seed,
                            std::size_t threads = default_threads()) {
  forest::TrainOptions opts;
  opts.threads = threads;
  return forest::train(matrix, hp, seed, opts).second.oob_error;
}

// ---------------------------------------------------------------------------
// Design and surrogate

inline HyperParams sample_uniform(const ParamSpace& space, Rng& rng) {
  HyperParams hp;
  hp.num_trees = static_cast<std::size_t>(rng.between(space.num_trees.lo, space.num_trees.hi));
  hp.max_depth = static_cast<std::size_t>(rng.between(space.max_depth.lo, space.max_depth.hi));
  hp.min_node_size = static_cast<std::size_t>(rng.between(space.min_node_size.lo, space.min_node_size.hi));
  hp.mtry_fraction = rng.uniform(space.mtry_fraction.lo, space.mtry_fraction.hi);
  hp.sample_fraction = rng.uniform(space.sample_fraction.lo, space.sample_fraction.hi);
  // uniform() is half-open; keep the lower bound legal for the forest.
  hp.mtry_fraction = std::clamp(hp.mtry_fraction, space.mtry_fraction.lo, space.mtry_fraction.hi);
  hp.sample_fraction = std::clamp(hp.sample_fraction, space.sample_fraction.lo, space.sample_fraction.hi);
  return hp;
}

inline std::vector<HyperParams> sample_initial(const ParamSpace& space, std::size_t n, Rng& rng) {
  std::vector<HyperParams> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_uniform(space, rng));
  return out;
}

struct Prediction {
  double mean = 0.0;
  double stdev = 0.0;
};

struct SurrogateOptions {
  HyperParams forest_hp{/*num_trees=*/64, /*max_depth=*/20, /*min_node_size=*/1, /*mtry_fraction=*/0.8,
                        /*sample_fraction=*/1.0};
  std::uint64_t seed = 0x5eed;
};

class SurrogateModel {
 public:
  SurrogateModel(ParamSpace space, forest::RandomForest model) : space_(space), model_(std::move(model)) {}

  /// Mean and population standard deviation of the per-tree predictions.
  Prediction predict(const HyperParams& hp) const {
    const auto x = space_.normalize(hp);
    const auto outputs = forest::tree_outputs(model_, x);
    Prediction p;
    for (double v : outputs) p.mean += v;
    p.mean /= static_cast<double>(outputs.size());
    double var = 0.0;
    for (double v : outputs) var += (v - p.mean) * (v - p.mean);
    p.stdev = std::sqrt(var / static_cast<double>(outputs.size()));
    return p;
  }

  const forest::RandomForest& forest() const { return model_; }
  const ParamSpace& space() const { return space_; }

 private:
  ParamSpace space_;
  forest::RandomForest model_;
};

inline SurrogateModel fit_surrogate(const std::vector<Trial>& trials, const ParamSpace& space,
                                    const SurrogateOptions& opts = {}) {
  if (trials.size() < 2) throw Error(ErrorCode::kTooFewTrials, "surrogate needs at least two trials");
  forest::TrainingSet data;
  data.num_features = ParamSpace::kDims;
  for (const auto& t : trials) data.add_row(space.normalize(t.hp), t.objective);
  forest::TrainOptions to;
  to.task = forest::Task::kRegression;
  to.compute_oob = false;
  to.threads = 1;
  auto [model, report] = forest::train(data, opts.forest_hp, opts.seed, to);
  return SurrogateModel(space, std::move(model));
}

// ---------------------------------------------------------------------------
// Acquisition

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Expected improvement below `best` for a minimization objective whose
/// prediction is N(mean, stdev^2).
inline double expected_improvement(double mean, double stdev, double best) {
  if (stdev < 0.0) throw Error(ErrorCode::kInvalidConfig, "stdev must be non-negative");
  const double gap = best - mean;
  if (stdev == 0.0) return std::max(gap, 0.0);
  const double z = gap / stdev;
  return std::max(0.0, gap * normal_cdf(z) + stdev * normal_pdf(z));
}

/// Argmax of expected improvement over `n_candidates` uniform draws; the
/// earliest draw wins ties.
inline HyperParams propose(const SurrogateModel& surrogate, const ParamSpace& space, double best,
                           std::size_t n_candidates, Rng& rng) {
  if (n_candidates < 1) throw Error(ErrorCode::kInvalidConfig, "n_candidates must be >= 1");
  HyperParams chosen;
  double chosen_ei = -1.0;
  for (std::size_t i = 0; i < n_candidates; ++i) {
    const HyperParams hp = sample_uniform(space, rng);
    const auto pred = surrogate.predict(hp);
    const double ei = expected_improvement(pred.mean, pred.stdev, best);
    if (ei > chosen_ei) {
      chosen = hp;
      chosen_ei = ei;
    }
  }
  return chosen;
}

// ---------------------------------------------------------------------------
// Tuning loop

struct TuneOptions {
  std::size_t budget = 50;
  std::size_t initial_design = 10;
  std::size_t n_candidates = 500;
  std::uint64_t seed = 0;
  SurrogateOptions surrogate;
};

using Objective = std::function<double(const HyperParams&, std::uint64_t seed)>;

/// Runs exactly `budget` objective evaluations. Every evaluation receives the
/// tuning seed, so re-evaluating best_hp reproduces best_objective.
inline TuneResult tune(const Objective& objective, const ParamSpace& space, const TuneOptions& opts) {
  space.validate();
  if (opts.initial_design < 1) throw Error(ErrorCode::kBudgetTooSmall, "initial design must be >= 1");
  if (opts.budget < opts.initial_design)
    throw Error(ErrorCode::kBudgetTooSmall, "budget " + std::to_string(opts.budget) + " < initial design size " +
                                                std::to_string(opts.initial_design));
  TuneResult result;
  Rng rng(opts.seed);
  auto evaluate = [&](const HyperParams& hp) {
    const auto start = std::chrono::steady_clock::now();
    const double value = objective(hp, opts.seed);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!std::isfinite(value)) throw Error(ErrorCode::kInvalidConfig, "objective returned a non-finite value");
    result.trials.push_back({hp, value, opts.seed, elapsed});
    if (value < result.best_objective) {
      result.best_objective = value;
      result.best_hp = hp;
    }
    result.best_so_far.push_back(result.best_objective);
  };

  for (const auto& hp : sample_initial(space, opts.initial_design, rng)) evaluate(hp);
  while (result.trials.size() < opts.budget) {
    HyperParams next;
    if (result.trials.size() < 2) {
      next = sample_uniform(space, rng);
    } else {
      SurrogateOptions so = opts.surrogate;
      so.seed = opts.surrogate.seed ^ (opts.seed + result.trials.size());
      const auto surrogate = fit_surrogate(result.trials, space, so);
      next = propose(surrogate, space, result.best_objective, opts.n_candidates, rng);
    }
    evaluate(next);
  }
  return result;
}

/// Random search with the same budget and design sampler, for comparison.
inline TuneResult random_search(const Objective& objective, const ParamSpace& space, std::size_t budget,
                                std::uint64_t seed) {
  TuneOptions opts;
  opts.budget = budget;
  opts.initial_design = budget;
  opts.seed = seed;
  return tune(objective, space, opts);
}

enum class ObjectiveKind { kCrossValidation, kOutOfBag };

inline TuneResult tune(const features::FeatureMatrix& matrix, const ParamSpace& space, std::size_t budget,
                       std::size_t k, std::uint64_t seed, TuneOptions opts = {},
                       ObjectiveKind kind = ObjectiveKind::kCrossValidation) {
  opts.budget = budget;
  opts.seed = seed;
  Objective obj;
  if (kind == ObjectiveKind::kOutOfBag) {
    obj = [&](const HyperParams& hp, std::uint64_t s) { return oob_objective(matrix, hp, s); };
  } else {
    // Surface class-size problems before spending any budget.
    stratified_folds(matrix.labels, k, seed);
    obj = [&](const HyperParams& hp, std::uint64_t s) { return cv_objective(matrix, hp, k, s); };
  }
  return tune(obj, space, opts);
}

}  // namespace entendre::smbo
