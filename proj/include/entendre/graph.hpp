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

// Engagement network: one node per user, a directed edge from the author of
// some content to each user who engaged with it. Engagements are comments and
// echoes (edge parent author -> responder) and mentions (edge mentioned user ->
// mentioning author). Every engagement event adds exactly one unit of weight;
// self-engagement is dropped.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "entendre/corpus.hpp"
#include "entendre/error.hpp"
#include "entendre/records.hpp"

namespace entendre::graph {

struct Edge {
  std::size_t source = 0;
  std::size_t target = 0;
  std::uint64_t weight = 0;

  bool operator==(const Edge&) const = default;
};

/// Nodes sorted by username; edges sorted by (source, target).
class EngagementGraph {
 public:
  EngagementGraph() = default;

  EngagementGraph(std::vector<std::string> nodes, const std::map<std::pair<std::string, std::string>, std::uint64_t>& weights) {
    std::set<std::string> all(nodes.begin(), nodes.end());
    for (const auto& [key, _] : weights) {
      all.insert(key.first);
      all.insert(key.second);
    }
    nodes_.assign(all.begin(), all.end());
    for (std::size_t i = 0; i < nodes_.size(); ++i) index_.emplace(nodes_[i], i);
    for (const auto& [key, w] : weights) {
      if (key.first == key.second || w == 0) continue;
      edges_.push_back({index_.at(key.first), index_.at(key.second), w});
    }
    std::sort(edges_.begin(), edges_.end(),
              [](const Edge& a, const Edge& b) { return std::tie(a.source, a.target) < std::tie(b.source, b.target); });
  }

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::string& name(std::size_t i) const { return nodes_[i]; }

  std::optional<std::size_t> find(const std::string& username) const {
    auto it = index_.find(username);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::uint64_t weight(const std::string& source, const std::string& target) const {
    auto s = find(source), t = find(target);
    if (!s || !t) return 0;
    for (const auto& e : edges_)
      if (e.source == *s && e.target == *t) return e.weight;
    return 0;
  }

  /// Undirected degree (distinct neighbours are not merged; each edge counts once).
  std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> deg(nodes_.size(), 0);
    for (const auto& e : edges_) {
      ++deg[e.source];
      ++deg[e.target];
    }
    return deg;
  }

  /// Subgraph induced by `keep` (node indices into this graph).
  EngagementGraph induced(const std::vector<std::size_t>& keep) const {
    std::vector<char> in(nodes_.size(), 0);
    std::vector<std::string> names;
    for (std::size_t i : keep) {
      in[i] = 1;
      names.push_back(nodes_[i]);
    }
    std::map<std::pair<std::string, std::string>, std::uint64_t> w;
    for (const auto& e : edges_)
      if (in[e.source] && in[e.target]) w[{nodes_[e.source], nodes_[e.target]}] = e.weight;
    return EngagementGraph(std::move(names), w);
  }

 private:
  std::vector<std::string> nodes_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<Edge> edges_;
};

// ---------------------------------------------------------------------------
// Construction

/// Engagement graph over `posts`. With a filter, only users in it become
/// nodes and only edges between them are kept.
inline EngagementGraph build(const std::vector<Post>& posts, const std::set<std::string>* user_filter = nullptr) {
  std::unordered_map<std::string, const std::string*> author_of;
  author_of.reserve(posts.size());
  for (const auto& p : posts) author_of.emplace(p.post_id, &p.author);

  auto allowed = [&](const std::string& u) { return !user_filter || user_filter->count(u) > 0; };
  std::set<std::string> nodes;
  std::map<std::pair<std::string, std::string>, std::uint64_t> weights;
  auto add = [&](const std::string& from, const std::string& to) {
    if (from == to || !allowed(from) || !allowed(to)) return;
    ++weights[{from, to}];
  };
  for (const auto& p : posts) {
    if (allowed(p.author)) nodes.insert(p.author);
    if (p.kind != PostKind::kOriginal && p.parent_id) {
      auto it = author_of.find(*p.parent_id);
      if (it != author_of.end()) add(*it->second, p.author);
    }
    for (const auto& m : p.mentions) add(m, p.author);
  }
  return EngagementGraph(std::vector<std::string>(nodes.begin(), nodes.end()), weights);
}

inline EngagementGraph build(const corpus::CorpusStore& store, const std::set<std::string>* user_filter = nullptr) {
  return build(store.all_posts(), user_filter);
}

/// Users reachable from the authors of `seed_post_ids` within `depth` hops
/// of engagement in either direction. Sorted by username.
inline std::vector<std::string> seed_expand(const std::vector<Post>& posts, const std::vector<std::string>& seed_post_ids,
                                            std::size_t depth) {
  std::unordered_map<std::string, const Post*> by_id;
  for (const auto& p : posts) by_id.emplace(p.post_id, &p);
  std::set<std::string> frontier;
  for (const auto& id : seed_post_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(ErrorCode::kUnknownPostId, "unknown seed post: " + id);
    frontier.insert(it->second->author);
  }
  std::set<std::string> reached = frontier;
  if (depth == 0) return {reached.begin(), reached.end()};

  const EngagementGraph g = build(posts);
  std::vector<std::vector<std::size_t>> adj(g.num_nodes());
  for (const auto& e : g.edges()) {
    adj[e.source].push_back(e.target);
    adj[e.target].push_back(e.source);
  }
  std::vector<std::size_t> current;
  std::vector<char> seen(g.num_nodes(), 0);
  for (const auto& u : frontier) {
    if (auto i = g.find(u)) {
      current.push_back(*i);
      seen[*i] = 1;
    }
  }
  for (std::size_t step = 0; step < depth && !current.empty(); ++step) {
    std::vector<std::size_t> next;
    for (std::size_t u : current)
      for (std::size_t v : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          next.push_back(v);
          reached.insert(g.name(v));
        }
    current = std::move(next);
  }
  return {reached.begin(), reached.end()};
}

// ---------------------------------------------------------------------------
// Exposure

enum class Color { kBlue, kRed };

inline std::string_view to_string(Color c) { return c == Color::kRed ? "red" : "blue"; }

enum class EdgeColorSource { kSource, kTarget };

struct ExposureColoring {
  std::vector<Color> nodes;
  std::vector<Color> edges;  // parallel to graph.edges()
};

/// Red when the user is bot-flagged or more than half of its inbound
/// engagement weight comes from bot-flagged authors.
inline ExposureColoring classify_exposure(const EngagementGraph& g, const std::vector<bool>& bot_flags,
                                          EdgeColorSource edge_source = EdgeColorSource::kSource) {
  if (bot_flags.size() != g.num_nodes())
    throw Error(ErrorCode::kInvalidConfig, "bot flags must cover every node");
  std::vector<std::uint64_t> in_total(g.num_nodes(), 0), in_bot(g.num_nodes(), 0);
  for (const auto& e : g.edges()) {
    in_total[e.target] += e.weight;
    if (bot_flags[e.source]) in_bot[e.target] += e.weight;
  }
  ExposureColoring c;
  c.nodes.resize(g.num_nodes(), Color::kBlue);
  for (std::size_t i = 0; i < g.num_nodes(); ++i)
    if (bot_flags[i] || 2 * in_bot[i] > in_total[i]) c.nodes[i] = Color::kRed;
  c.edges.reserve(g.num_edges());
  for (const auto& e : g.edges())
    c.edges.push_back(c.nodes[edge_source == EdgeColorSource::kSource ? e.source : e.target]);
  return c;
}

inline std::vector<bool> flags_for(const EngagementGraph& g, const std::set<std::string>& bots) {
  std::vector<bool> flags(g.num_nodes(), false);
  for (std::size_t i = 0; i < g.num_nodes(); ++i) flags[i] = bots.count(g.name(i)) > 0;
  return flags;
}

// ---------------------------------------------------------------------------
// Eigenvector centrality

enum class CentralityMode { kOut, kIn, kUndirected };

struct CentralityOptions {
  CentralityMode mode = CentralityMode::kOut;
  double tolerance = 1e-9;
  std::size_t max_iterations = 1000;
  double damping = 0.15;  // weight of the uniform vector mixed in per step
};

struct CentralityScores {
  std::vector<double> scores;  // unit L2 norm, non-negative
  std::size_t iterations = 0;
  double residual = 0.0;       // L2 change of the last step
  bool converged = false;
};

/// y = M x for the oriented weighted adjacency. Out mode sums over a node's
/// engagers, so accounts whose content is widely engaged score high.
inline std::vector<double> adjacency_multiply(const EngagementGraph& g, std::span<const double> x, CentralityMode mode) {
  std::vector<double> y(g.num_nodes(), 0.0);
  for (const auto& e : g.edges()) {
    const auto w = static_cast<double>(e.weight);
    if (mode != CentralityMode::kIn) y[e.source] += w * x[e.target];
    if (mode != CentralityMode::kOut) y[e.target] += w * x[e.source];
  }
  return y;
}

/// Power iteration on (I + M) from the uniform unit vector. Each step is
/// normalized, then mixed with the uniform unit vector by `damping` and
/// renormalized. The identity shift leaves eigenvectors unchanged and makes
/// bipartite graphs converge. On NotConverged the last iterate is returned
/// with converged = false.
inline CentralityScores eigenvector_centrality(const EngagementGraph& g, const CentralityOptions& opts = {}) {
  if (g.num_edges() == 0) throw Error(ErrorCode::kEmptyGraph, "eigenvector centrality needs at least one edge");
  const std::size_t n = g.num_nodes();
  const double u = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<double> x(n, u);
  auto normalize = [](std::vector<double>& v) {
    double s = 0.0;
    for (double a : v) s += a * a;
    s = std::sqrt(s);
    if (s > 0.0)
      for (double& a : v) a /= s;
  };
  CentralityScores out;
  for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
    std::vector<double> y = adjacency_multiply(g, x, opts.mode);
    for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
    normalize(y);
    if (opts.damping > 0.0) {
      for (double& a : y) a = (1.0 - opts.damping) * a + opts.damping * u;
      normalize(y);
    }
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) diff += (y[i] - x[i]) * (y[i] - x[i]);
    x = std::move(y);
    out.iterations = it;
    out.residual = std::sqrt(diff);
    if (out.residual <= opts.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.scores = std::move(x);
  return out;
}

/// ||Mx - (x'Mx) x|| for a unit vector x.
inline double eigen_residual(const EngagementGraph& g, std::span<const double> x, CentralityMode mode) {
  const auto mx = adjacency_multiply(g, x, mode);
  double rayleigh = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) rayleigh += x[i] * mx[i];
  double r = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) r += (mx[i] - rayleigh * x[i]) * (mx[i] - rayleigh * x[i]);
  return std::sqrt(r);
}

// ---------------------------------------------------------------------------
// Truncation

struct NetworkSlice {
  EngagementGraph graph;
  ExposureColoring coloring;
  std::vector<double> centrality;  // empty when the graph has no edges
  bool truncated = false;
};

/// Keeps the `max_nodes` most central nodes (ties to the lower index) and the
/// edges among them. Node colors and centrality keep their full-graph values.
inline NetworkSlice keep_most_central(EngagementGraph g, ExposureColoring coloring, std::vector<double> centrality,
                                      std::size_t max_nodes, EdgeColorSource edge_source = EdgeColorSource::kSource) {
  if (g.num_nodes() <= max_nodes) return {std::move(g), std::move(coloring), std::move(centrality), false};
  std::vector<std::size_t> order(g.num_nodes());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto c_of = [&](std::size_t i) { return centrality.empty() ? 0.0 : centrality[i]; };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c_of(a) > c_of(b); });
  order.resize(max_nodes);
  std::sort(order.begin(), order.end());
  NetworkSlice out;
  out.graph = g.induced(order);
  out.truncated = true;
  for (std::size_t i : order) {
    out.coloring.nodes.push_back(coloring.nodes[i]);
    if (!centrality.empty()) out.centrality.push_back(centrality[i]);
  }
  for (const auto& e : out.graph.edges())
    out.coloring.edges.push_back(out.coloring.nodes[edge_source == EdgeColorSource::kSource ? e.source : e.target]);
  return out;
}

}  // namespace entendre::graph
