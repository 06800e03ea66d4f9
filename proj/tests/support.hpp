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


// Shared fixtures: scratch directories, hand-built records and a small
// synthetic store with a trained model, built once per test process.

#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "entendre/corpus.hpp"
#include "entendre/features.hpp"
#include "entendre/forest.hpp"
#include "entendre/records.hpp"
#include "entendre/smbo.hpp"
#include "entendre/synth.hpp"

namespace testing_support {

namespace fs = std::filesystem;
using namespace entendre;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("entendre-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

/// Concatenation of every file under `dir` with its relative name, for
/// byte-level store comparisons.
inline std::string snapshot(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string out;
  for (const auto& f : files) out += fs::relative(f, dir).string() + "\n" + read_file(f) + "\n";
  return out;
}

inline Post post(std::string id, std::string author, EpochSeconds t, PostKind kind = PostKind::kOriginal,
                 std::optional<std::string> parent = std::nullopt, std::string body = "text") {
  Post p;
  p.post_id = std::move(id);
  p.author = std::move(author);
  p.created_at = t;
  p.kind = kind;
  p.parent_id = std::move(parent);
  p.body = std::move(body);
  return p;
}

inline Account account(std::string name, std::int64_t followers = 10, std::int64_t following = 50) {
  Account a;
  a.username = std::move(name);
  a.followers = followers;
  a.following = following;
  a.bio = "";
  a.verified = false;
  a.created_at = 1500000000;
  return a;
}

inline std::string random_text(std::mt19937_64& rng, std::size_t max_len, std::string_view alphabet = "abc xyz") {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string s(len(rng), ' ');
  for (auto& c : s) c = alphabet[pick(rng)];
  return s;
}

/// 18 uniform features; bot iff x0 + x1 > 1, so only the first two carry
/// signal.
inline features::FeatureMatrix separable_matrix(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  features::FeatureMatrix m;
  for (std::size_t i = 0; i < n; ++i) {
    features::FeatureVector fv{"r" + std::to_string(i), std::vector<double>(features::kNumFeatures)};
    for (auto& v : fv.values) v = u(rng);
    m.labels.push_back(fv.values[0] + fv.values[1] > 1.0 ? Label::kBot : Label::kHuman);
    m.rows.push_back(std::move(fv));
  }
  return m;
}

/// Synthetic tuning objective shaped like a validation error: a floor of
/// 0.08 plus a weighted quadratic bowl around a planted optimum in the
/// normalized hyperparameter space.
struct PlantedObjective {
  smbo::ParamSpace space;
  std::array<double, 5> optimum{0.35, 0.6, 0.15, 0.4, 0.8};
  std::array<double, 5> weight{0.25, 1.0, 2.0, 2.0, 0.5};

  double operator()(const forest::HyperParams& hp) const {
    const auto x = space.normalize(hp);
    double s = 0.0;
    for (std::size_t d = 0; d < 5; ++d) s += weight[d] * (x[d] - optimum[d]) * (x[d] - optimum[d]);
    return 0.08 + 0.04 * s;
  }

  /// Best value over `steps` evenly spaced points per dimension.
  double grid_optimum(std::size_t steps = 5) const {
    double best = std::numeric_limits<double>::infinity();
    std::array<std::size_t, 5> idx{};
    auto at = [&](double lo, double hi, std::size_t i) {
      return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
    };
    while (true) {
      forest::HyperParams hp;
      hp.num_trees = static_cast<std::size_t>(std::llround(at(space.num_trees.lo, space.num_trees.hi, idx[0])));
      hp.max_depth = static_cast<std::size_t>(std::llround(at(space.max_depth.lo, space.max_depth.hi, idx[1])));
      hp.min_node_size =
          static_cast<std::size_t>(std::llround(at(space.min_node_size.lo, space.min_node_size.hi, idx[2])));
      hp.mtry_fraction = at(space.mtry_fraction.lo, space.mtry_fraction.hi, idx[3]);
      hp.sample_fraction = at(space.sample_fraction.lo, space.sample_fraction.hi, idx[4]);
      best = std::min(best, (*this)(hp));
      std::size_t d = 0;
      while (d < 5 && ++idx[d] == steps) idx[d++] = 0;
      if (d == 5) break;
    }
    return best;
  }
};

/// 180 humans and 20 bots, ingested, imputed and trained on ground truth.
struct SmallWorld {
  TempDir dir;
  fs::path store;
  fs::path model;
  synth::SyntheticCorpus corpus;

  SmallWorld() {
    synth::SyntheticCorpusSpec spec;
    spec.humans = 180;
    spec.bots = 20;
    spec.seed = 11;
    corpus = synth::generate(spec);
    synth::write(corpus, dir / "data");
    store = dir / "store";
    corpus::ingest_files(dir / "data/posts.ndjson", dir / "data/accounts.ndjson", corpus::SchemaMapping::canonical(),
                         store);
    corpus::impute_missing(store);
    const auto s = corpus::CorpusStore::open(store);
    const auto labeled = corpus::apply_labels(s, fs::path(dir / "data/labels.csv"));
    forest::HyperParams hp;
    hp.num_trees = 50;
    const auto bundle = forest::fit_bundle(features::build_dataset(s, labeled), hp, 3, {}, corpus::stored_imputation(s));
    model = dir / "model.json";
    forest::save(bundle, model);
  }

  std::string bot() const {
    for (const auto& [u, l] : corpus.labels)
      if (l == Label::kBot) return u;
    return {};
  }
  std::string human() const {
    for (const auto& [u, l] : corpus.labels)
      if (l == Label::kHuman) return u;
    return {};
  }

  static const SmallWorld& get() {
    static const SmallWorld w;
    return w;
  }
};

}  // namespace testing_support
