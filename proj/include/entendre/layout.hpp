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

// ForceAtlas2 force-directed layout.
//
// Forces on node u (mass m = degree + 1):
//   repulsion   k_r * m_u * m_v / d(u, v), away from every other node
//   attraction  w(u, v)^influence * d(u, v), toward each neighbour
//   gravity     k_g * m_u, toward the origin
// Step size follows the swinging/traction speed controller, and a node never
// moves more than max_step per iteration.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "entendre/graph.hpp"
#include "entendre/random.hpp"

namespace entendre::layout {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Fa2Params {
  double scaling_ratio = 2.0;          // k_r
  double gravity = 1.0;                // k_g
  double edge_weight_influence = 1.0;
  double jitter_tolerance = 1.0;
  double max_step = 10.0;
  double min_mean_displacement = 1e-4; // stop when the mean step falls below this
  bool barnes_hut = false;
  double barnes_hut_theta = 1.2;
  std::uint64_t seed = 1;
  double initial_extent = 100.0;       // scatter half-width
};

struct LayoutState {
  std::vector<Point> positions;
  std::size_t iterations = 0;
  double mean_displacement = 0.0;
  double max_displacement = 0.0;  // largest single-node move in the last step
};

inline std::vector<Point> scatter(std::size_t n, std::uint64_t seed, double extent) {
  Rng rng(seed);
  std::vector<Point> pts(n);
  for (auto& p : pts) {
    p.x = rng.uniform(-extent, extent);
    p.y = rng.uniform(-extent, extent);
  }
  return pts;
}

namespace detail {

/// Quadtree for approximate repulsion. Each cell stores total mass and
/// centre of mass; children are built lazily on insert.
class QuadTree {
 public:
  QuadTree(double cx, double cy, double half) : cx_(cx), cy_(cy), half_(half) {}

  void insert(std::size_t id, Point p, double mass, int depth = 0) {
    if (mass_ == 0.0 && leaf_) {
      body_ = id;
      body_pos_ = p;
      com_ = p;
      mass_ = mass;
      has_body_ = true;
      return;
    }
    if (leaf_) {
      if (depth > 48) {  // coincident points: aggregate in place
        accumulate(p, mass);
        return;
      }
      leaf_ = false;
      if (has_body_) {
        has_body_ = false;
        child_for(body_pos_).insert(body_, body_pos_, body_mass(), depth + 1);
      }
    }
    accumulate(p, mass);
    child_for(p).insert(id, p, mass, depth + 1);
  }

  template <typename Fn>
  void visit(std::size_t id, Point p, double theta, Fn&& apply) const {
    if (mass_ == 0.0) return;
    if (leaf_) {
      if (has_body_ && body_ == id) return;
      apply(com_, mass_);
      return;
    }
    const double dx = p.x - com_.x, dy = p.y - com_.y;
    const double dist = std::sqrt(dx * dx + dy * dy);
    if (dist > 0.0 && (2.0 * half_) / dist < theta) {
      apply(com_, mass_);
      return;
    }
    for (const auto& c : children_)
      if (c) c->visit(id, p, theta, apply);
  }

 private:
  double body_mass() const { return mass_; }

  void accumulate(Point p, double mass) {
    const double total = mass_ + mass;
    com_.x = (com_.x * mass_ + p.x * mass) / total;
    com_.y = (com_.y * mass_ + p.y * mass) / total;
    mass_ = total;
  }

  QuadTree& child_for(Point p) {
    const int qx = p.x >= cx_ ? 1 : 0, qy = p.y >= cy_ ? 1 : 0;
    auto& slot = children_[static_cast<std::size_t>(qy * 2 + qx)];
    if (!slot) {
      const double h = half_ / 2.0;
      slot = std::make_unique<QuadTree>(cx_ + (qx ? h : -h), cy_ + (qy ? h : -h), h);
    }
    return *slot;
  }

  double cx_, cy_, half_;
  double mass_ = 0.0;
  Point com_;
  bool leaf_ = true;
  bool has_body_ = false;
  std::size_t body_ = 0;
  Point body_pos_;
  std::array<std::unique_ptr<QuadTree>, 4> children_;
};

}  // namespace detail

/// Runs ForceAtlas2 from `initial` (one point per node).
inline LayoutState layout_fa2(const graph::EngagementGraph& g, std::vector<Point> initial, std::size_t iterations,
                              const Fa2Params& params = {}) {
  const std::size_t n = g.num_nodes();
  LayoutState state;
  state.positions = std::move(initial);
  if (state.positions.size() != n) throw Error(ErrorCode::kInvalidConfig, "initial positions must cover every node");
  if (n <= 1) return state;

  const auto deg = g.degrees();
  std::vector<double> mass(n);
  for (std::size_t i = 0; i < n; ++i) mass[i] = static_cast<double>(deg[i]) + 1.0;
  std::vector<Point> force(n), old_force(n);
  double speed = 1.0, speed_efficiency = 1.0;
  auto& pos = state.positions;

  for (std::size_t it = 0; it < iterations; ++it) {
    std::swap(force, old_force);
    std::fill(force.begin(), force.end(), Point{});

    // Repulsion.
    if (params.barnes_hut) {
      double lo_x = pos[0].x, hi_x = pos[0].x, lo_y = pos[0].y, hi_y = pos[0].y;
      for (const auto& p : pos) {
        lo_x = std::min(lo_x, p.x);
        hi_x = std::max(hi_x, p.x);
        lo_y = std::min(lo_y, p.y);
        hi_y = std::max(hi_y, p.y);
      }
      const double half = std::max({hi_x - lo_x, hi_y - lo_y, 1e-9}) / 2.0 + 1e-9;
      detail::QuadTree tree((lo_x + hi_x) / 2.0, (lo_y + hi_y) / 2.0, half);
      for (std::size_t i = 0; i < n; ++i) tree.insert(i, pos[i], mass[i]);
      for (std::size_t i = 0; i < n; ++i) {
        tree.visit(i, pos[i], params.barnes_hut_theta, [&](Point c, double m) {
          const double dx = pos[i].x - c.x, dy = pos[i].y - c.y;
          const double d2 = dx * dx + dy * dy;
          if (d2 <= 0.0) return;
          const double f = params.scaling_ratio * mass[i] * m / d2;
          force[i].x += dx * f;
          force[i].y += dy * f;
        });
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (i == j) continue;
          const double dx = pos[i].x - pos[j].x, dy = pos[i].y - pos[j].y;
          const double d2 = dx * dx + dy * dy;
          if (d2 <= 0.0) continue;
          const double f = params.scaling_ratio * mass[i] * mass[j] / d2;
          force[i].x += dx * f;
          force[i].y += dy * f;
        }
      }
    }

    // Gravity.
    for (std::size_t i = 0; i < n; ++i) {
      const double d = std::sqrt(pos[i].x * pos[i].x + pos[i].y * pos[i].y);
      if (d <= 0.0) continue;
      const double f = params.gravity * mass[i] / d;
      force[i].x -= pos[i].x * f;
      force[i].y -= pos[i].y * f;
    }

    // Attraction, accumulated per node in edge order.
    for (const auto& e : g.edges()) {
      const double w = std::pow(static_cast<double>(e.weight), params.edge_weight_influence);
      const double dx = pos[e.source].x - pos[e.target].x, dy = pos[e.source].y - pos[e.target].y;
      force[e.source].x -= dx * w;
      force[e.source].y -= dy * w;
      force[e.target].x += dx * w;
      force[e.target].y += dy * w;
    }

    if (it == 0) old_force = force;

    // Speed controller.
    double total_swinging = 0.0, total_traction = 0.0;
    std::vector<double> swinging(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double sx = force[i].x - old_force[i].x, sy = force[i].y - old_force[i].y;
      const double tx = force[i].x + old_force[i].x, ty = force[i].y + old_force[i].y;
      swinging[i] = mass[i] * std::sqrt(sx * sx + sy * sy);
      total_swinging += swinging[i];
      total_traction += mass[i] * std::sqrt(tx * tx + ty * ty) / 2.0;
    }
    const double nd = static_cast<double>(n);
    const double estimated_jitter = 0.05 * std::sqrt(nd);
    const double min_jitter = std::sqrt(estimated_jitter);
    double jitter = params.jitter_tolerance *
                    std::max(min_jitter, std::min(10.0, estimated_jitter * total_traction / (nd * nd)));
    constexpr double kMinSpeedEfficiency = 0.05;
    if (total_traction > 0.0 && total_swinging / total_traction > 2.0) {
      if (speed_efficiency > kMinSpeedEfficiency) speed_efficiency *= 0.5;
      jitter = std::max(jitter, params.jitter_tolerance);
    }
    if (total_swinging > 0.0) {
      const double target = jitter * speed_efficiency * total_traction / total_swinging;
      if (total_swinging > jitter * total_traction) {
        if (speed_efficiency > kMinSpeedEfficiency) speed_efficiency *= 0.7;
      } else if (speed < 1000.0) {
        speed_efficiency *= 1.3;
      }
      speed = speed + std::min(target - speed, 0.5 * speed);
    }

    // Move.
    double moved = 0.0, largest = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double factor = speed / (1.0 + std::sqrt(speed * swinging[i]));
      double dx = force[i].x * factor, dy = force[i].y * factor;
      double step = std::sqrt(dx * dx + dy * dy);
      if (!std::isfinite(step)) {
        dx = dy = step = 0.0;
      } else if (step > params.max_step) {
        dx *= params.max_step / step;
        dy *= params.max_step / step;
        step = params.max_step;
      }
      pos[i].x += dx;
      pos[i].y += dy;
      moved += step;
      largest = std::max(largest, step);
    }
    state.iterations = it + 1;
    state.mean_displacement = moved / nd;
    state.max_displacement = largest;
    if (state.mean_displacement < params.min_mean_displacement) break;
  }
  return state;
}

inline LayoutState layout_fa2(const graph::EngagementGraph& g, std::size_t iterations = 1000,
                              const Fa2Params& params = {}) {
  return layout_fa2(g, scatter(g.num_nodes(), params.seed, params.initial_extent), iterations, params);
}

}  // namespace entendre::layout
