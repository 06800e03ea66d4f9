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

// Slow reference implementations used as test oracles. Written independently
// of the library: full DP tables, dense matrices, exhaustive enumeration.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

namespace oracle {

/// Whitespace-separated tokens, URL tokens dropped, ASCII lowercased,
/// rejoined with single spaces.
inline std::string canonical_text(const std::string& s) {
  auto space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  std::vector<std::string> tokens;
  std::string cur;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || space(s[i])) {
      if (!cur.empty()) tokens.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(s[i]);
    }
  }
  std::string out;
  for (const auto& t : tokens) {
    std::string low;
    for (char c : t) low.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    if (low.rfind("http://", 0) == 0 || low.rfind("https://", 0) == 0 || low.rfind("www.", 0) == 0) continue;
    if (!out.empty()) out.push_back(' ');
    out += low;
  }
  return out;
}

/// Full (m+1) x (n+1) Levenshtein table.
template <typename S>
std::size_t edit_distance(const S& a, const S& b) {
  const std::size_t m = a.size(), n = b.size();
  std::vector<std::vector<std::size_t>> d(m + 1, std::vector<std::size_t>(n + 1, 0));
  for (std::size_t i = 0; i <= m; ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= n; ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= m; ++i)
    for (std::size_t j = 1; j <= n; ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
  return d[m][n];
}

/// Similarity on already-canonical text.
template <typename S>
double similarity(const S& a, const S& b) {
  const std::size_t len = std::max(a.size(), b.size());
  if (len == 0) return 1.0;
  return 1.0 - static_cast<double>(edit_distance(a, b)) / static_cast<double>(len);
}

/// Fraction of items with some other item at similarity >= threshold.
template <typename S>
double duplicate_ratio(const std::vector<S>& items, double threshold) {
  const std::size_t n = items.size();
  if (n < 2) return 0.0;
  std::size_t dup = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) best = std::max(best, similarity(items[i], items[j]));
    if (best >= threshold) ++dup;
  }
  return static_cast<double>(dup) / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// CART

struct CartNode {
  bool leaf = true;
  std::size_t feature = 0;
  double threshold = 0.0;
  std::size_t c0 = 0, c1 = 0;
  std::unique_ptr<CartNode> left, right;
};

inline double gini_counts(std::size_t c0, std::size_t c1) {
  const double n = static_cast<double>(c0 + c1);
  const double p0 = static_cast<double>(c0) / n, p1 = static_cast<double>(c1) / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

/// Exhaustive CART: every feature, every midpoint between distinct values,
/// impurity recounted from scratch for each candidate.
inline std::unique_ptr<CartNode> cart(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                                      const std::vector<std::size_t>& rows, std::size_t depth, std::size_t max_depth,
                                      std::size_t min_node) {
  auto node = std::make_unique<CartNode>();
  for (std::size_t r : rows) (y[r] ? node->c1 : node->c0)++;
  const std::size_t n = rows.size();
  if (depth >= max_depth || n < 2 * min_node || node->c0 == 0 || node->c1 == 0) return node;
  const double parent = gini_counts(node->c0, node->c1);

  bool found = false;
  double best = 0.0;
  std::size_t best_f = 0;
  double best_t = 0.0;
  const std::size_t p = x.empty() ? 0 : x[0].size();
  for (std::size_t f = 0; f < p; ++f) {
    std::vector<double> vals;
    for (std::size_t r : rows) vals.push_back(x[r][f]);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
      const double t = (vals[k] + vals[k + 1]) / 2.0;
      std::size_t l0 = 0, l1 = 0, r0 = 0, r1 = 0;
      for (std::size_t r : rows) {
        // Classify by the left value itself so a rounded midpoint cannot move rows.
        if (x[r][f] <= vals[k]) (y[r] ? l1 : l0)++;
        else (y[r] ? r1 : r0)++;
      }
      if (l0 + l1 < min_node || r0 + r1 < min_node) continue;
      const double nl = static_cast<double>(l0 + l1), nr = static_cast<double>(r0 + r1);
      const double dec = parent - nl / static_cast<double>(n) * gini_counts(l0, l1) -
                         nr / static_cast<double>(n) * gini_counts(r0, r1);
      if (dec <= 1e-12) continue;
      if (!found || dec > best + 1e-12) {
        found = true;
        best = dec;
        best_f = f;
        best_t = t;
      }
    }
  }
  if (!found) return node;
  node->leaf = false;
  node->feature = best_f;
  node->threshold = best_t;
  std::vector<std::size_t> lr, rr;
  for (std::size_t r : rows) (x[r][best_f] <= best_t ? lr : rr).push_back(r);
  node->left = cart(x, y, lr, depth + 1, max_depth, min_node);
  node->right = cart(x, y, rr, depth + 1, max_depth, min_node);
  return node;
}

// ---------------------------------------------------------------------------
// Graphs

using Dense = std::vector<std::vector<double>>;

/// Power iteration with an explicit dense matrix: x <- normalize((I + A) x),
/// then the optional uniform mix.
inline std::vector<double> dense_power_iteration(const Dense& a, double damping, std::size_t iterations) {
  const std::size_t n = a.size();
  const double u = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<double> x(n, u);
  auto norm = [](std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    s = std::sqrt(s);
    for (double& e : v) e /= s;
  };
  for (std::size_t it = 0; it < iterations; ++it) {
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = x[i];
      for (std::size_t j = 0; j < n; ++j) y[i] += a[i][j] * x[j];
    }
    norm(y);
    if (damping > 0.0) {
      for (double& e : y) e = (1.0 - damping) * e + damping * u;
      norm(y);
    }
    x = y;
  }
  return x;
}

/// Red iff flagged or bot-sourced inbound weight is a strict majority.
inline std::vector<bool> exposure(std::size_t n, const std::vector<std::tuple<std::size_t, std::size_t, std::uint64_t>>& edges,
                                  const std::vector<bool>& flags) {
  std::vector<bool> red(n, false);
  for (std::size_t v = 0; v < n; ++v) {
    double total = 0, from_bots = 0;
    for (const auto& [s, t, w] : edges) {
      if (t != v) continue;
      total += static_cast<double>(w);
      if (flags[s]) from_bots += static_cast<double>(w);
    }
    red[v] = flags[v] || (total > 0 && from_bots / total > 0.5);
  }
  return red;
}

// ---------------------------------------------------------------------------
// Expected improvement by quadrature

/// E[max(best - Y, 0)] for Y ~ N(mu, sigma^2), composite Simpson over
/// [mu - 12 sigma, min(best, mu + 12 sigma)] in the standard-normal variable;
/// the Gaussian mass outside is below 1e-32.
inline double expected_improvement(double mu, double sigma, double best) {
  if (sigma <= 0.0) return std::max(best - mu, 0.0);
  const double lo = -12.0, hi = std::min((best - mu) / sigma, 12.0);
  if (hi <= lo) return 0.0;
  const std::size_t n = 20000;  // even
  const double h = (hi - lo) / static_cast<double>(n);
  auto f = [&](double z) {
    const double y = mu + sigma * z;
    return (best - y) * std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  };
  double s = f(lo) + f(hi);
  for (std::size_t i = 1; i < n; ++i) s += f(lo + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace oracle
