#pragma once

// RRT* waypoint search among axis-aligned box obstacles, homotopy-preserving
// planning for several order pairs, and waypoint-count equalization.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ovtube/error.hpp"
#include "ovtube/geometry.hpp"
#include "ovtube/rng.hpp"

namespace ovtube {

struct Box {
  Point lo;
  Point hi;

  bool contains(const Point& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
};

struct ObstacleSet {
  std::vector<Box> boxes;
  double inflation = 0.0;  // robot radius

  Box inflated(std::size_t i) const {
    return Box{boxes[i].lo.array() - inflation, boxes[i].hi.array() + inflation};
  }
};

inline void validate_obstacles(const ObstacleSet& obs) {
  if (!(obs.inflation >= 0.0)) throw Error(ErrorCode::ValidationError, "inflation must be >= 0");
  for (std::size_t i = 0; i < obs.boxes.size(); ++i) {
    const Box& b = obs.boxes[i];
    if (b.lo.size() != b.hi.size() || !(b.lo.array() < b.hi.array()).all()) {
      throw Error(ErrorCode::ValidationError,
                  "obstacle " + std::to_string(i) + ": min corner must be < max corner");
    }
  }
}

struct WaypointPath {
  std::vector<Point> points;
  int pair_index = 0;

  Index segments() const { return static_cast<Index>(points.size()) - 1; }
};

struct RrtConfig {
  int max_iterations = 5000;
  double step_size = 1.0;
  double goal_bias = 0.1;
  double rewire_radius = 3.0;
  std::uint64_t rng_seed = 1;
  double corridor_shrink_radius = 3.0;
  std::optional<Box> bounds;  // sampling region; derived from the inputs when empty
};

inline void validate_rrt_config(const RrtConfig& c) {
  if (!(c.step_size > 0.0)) throw Error(ErrorCode::ValidationError, "rrt.step_size must be > 0");
  if (!(c.goal_bias >= 0.0 && c.goal_bias < 1.0))
    throw Error(ErrorCode::ValidationError, "rrt.goal_bias must lie in [0, 1)");
  if (c.max_iterations < 1) throw Error(ErrorCode::ValidationError, "rrt.max_iterations must be >= 1");
  if (!(c.rewire_radius > 0.0)) throw Error(ErrorCode::ValidationError, "rrt.rewire_radius must be > 0");
  if (!(c.corridor_shrink_radius > 0.0))
    throw Error(ErrorCode::ValidationError, "rrt.corridor_shrink_radius must be > 0");
}

// ---------------------------------------------------------------------------
// Collision checks

inline bool point_in_collision(const Point& p, const ObstacleSet& obs) {
  for (std::size_t i = 0; i < obs.boxes.size(); ++i)
    if (obs.inflated(i).contains(p)) return true;
  return false;
}

// Slab test against a closed box.
inline bool segment_hits_box(const Point& a, const Point& b, const Box& box) {
  double t0 = 0.0, t1 = 1.0;
  const Vec d = b - a;
  for (Index i = 0; i < a.size(); ++i) {
    if (std::abs(d(i)) < 1e-15) {
      if (a(i) < box.lo(i) || a(i) > box.hi(i)) return false;
      continue;
    }
    double ta = (box.lo(i) - a(i)) / d(i);
    double tb = (box.hi(i) - a(i)) / d(i);
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

inline bool segment_free(const Point& a, const Point& b, const ObstacleSet& obs) {
  for (std::size_t i = 0; i < obs.boxes.size(); ++i)
    if (segment_hits_box(a, b, obs.inflated(i))) return false;
  return true;
}

inline bool path_free(const std::vector<Point>& pts, const ObstacleSet& obs) {
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (!segment_free(pts[i - 1], pts[i], obs)) return false;
  return true;
}

inline double polyline_length(const std::vector<Point>& pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += (pts[i] - pts[i - 1]).norm();
  return len;
}

/// Point at arc-length fraction f ∈ [0, 1] along a polyline.
inline Point polyline_at(const std::vector<Point>& pts, double f) {
  const double total = polyline_length(pts);
  double target = std::clamp(f, 0.0, 1.0) * total;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double seg = (pts[i] - pts[i - 1]).norm();
    if (target <= seg || i + 1 == pts.size()) {
      const double s = seg > 0.0 ? std::clamp(target / seg, 0.0, 1.0) : 0.0;
      return pts[i - 1] + s * (pts[i] - pts[i - 1]);
    }
    target -= seg;
  }
  return pts.back();
}

/// Uniform arc-length resampling to n + 1 points (corners not preserved).
inline std::vector<Point> resample_uniform(const std::vector<Point>& pts, Index n) {
  std::vector<Point> out;
  out.reserve(n + 1);
  for (Index i = 0; i <= n; ++i) out.push_back(polyline_at(pts, static_cast<double>(i) / n));
  out.front() = pts.front();
  out.back() = pts.back();
  return out;
}

// ---------------------------------------------------------------------------
// RRT*

namespace detail {

inline Box default_bounds(const Point& start, const Point& goal, const ObstacleSet& obs) {
  Box b{start.cwiseMin(goal), start.cwiseMax(goal)};
  for (const auto& o : obs.boxes) {
    b.lo = b.lo.cwiseMin(o.lo);
    b.hi = b.hi.cwiseMax(o.hi);
  }
  b.lo.array() -= 5.0;
  b.hi.array() += 5.0;
  return b;
}

using Sampler = std::function<Point(Rng&)>;

struct Tree {
  struct Node {
    Point p;
    int parent = -1;
    double cost = 0.0;
    std::vector<int> children;
  };
  std::vector<Node> nodes;

  int nearest(const Point& p) const {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double d = (nodes[i].p - p).squaredNorm();
      if (d < bd) {
        bd = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  }

  std::vector<int> near(const Point& p, double radius) const {
    std::vector<int> out;
    const double r2 = radius * radius;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if ((nodes[i].p - p).squaredNorm() <= r2) out.push_back(static_cast<int>(i));
    return out;
  }

  void reparent(int child, int new_parent) {
    auto& old_children = nodes[nodes[child].parent].children;
    old_children.erase(std::find(old_children.begin(), old_children.end(), child));
    nodes[child].parent = new_parent;
    nodes[new_parent].children.push_back(child);
    const double new_cost = nodes[new_parent].cost + (nodes[child].p - nodes[new_parent].p).norm();
    propagate(child, new_cost - nodes[child].cost);
  }

  void propagate(int root, double delta) {
    std::vector<int> stack{root};
    while (!stack.empty()) {
      const int n = stack.back();
      stack.pop_back();
      nodes[n].cost += delta;
      for (int c : nodes[n].children) stack.push_back(c);
    }
  }
};

inline WaypointPath rrt_star(const Point& start, const Point& goal, const ObstacleSet& obs,
                             const RrtConfig& cfg, const Sampler& sample, Rng& rng) {
  Tree tree;
  tree.nodes.push_back({start, -1, 0.0, {}});
  int goal_node = -1;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    const Point target = uniform01(rng) < cfg.goal_bias ? goal : sample(rng);
    const int nn = tree.nearest(target);
    const Vec delta = target - tree.nodes[nn].p;
    const double dist = delta.norm();
    if (dist < 1e-12) continue;
    const Point np = dist > cfg.step_size ? Point(tree.nodes[nn].p + delta * (cfg.step_size / dist)) : target;
    if (point_in_collision(np, obs) || !segment_free(tree.nodes[nn].p, np, obs)) continue;

    const bool is_goal = (np - goal).norm() < 1e-12;
    if (is_goal && goal_node >= 0) continue;  // goal already in the tree; rewiring handles it

    const std::vector<int> nbrs = tree.near(np, cfg.rewire_radius);
    int parent = nn;
    double best = tree.nodes[nn].cost + (np - tree.nodes[nn].p).norm();
    for (int c : nbrs) {
      const double cost = tree.nodes[c].cost + (np - tree.nodes[c].p).norm();
      if (cost < best && segment_free(tree.nodes[c].p, np, obs)) {
        best = cost;
        parent = c;
      }
    }
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({np, parent, best, {}});
    tree.nodes[parent].children.push_back(id);
    if (is_goal) goal_node = id;

    for (int c : nbrs) {
      if (c == parent) continue;
      const double via = best + (tree.nodes[c].p - np).norm();
      if (via < tree.nodes[c].cost - 1e-12 && segment_free(np, tree.nodes[c].p, obs)) {
        tree.reparent(c, id);
      }
    }

    // Connect to the goal once it is within one step.
    if (goal_node < 0 && !is_goal && (goal - np).norm() <= cfg.step_size &&
        segment_free(np, goal, obs)) {
      const std::vector<int> gn = tree.near(goal, cfg.rewire_radius);
      int gp = id;
      double gbest = best + (goal - np).norm();
      for (int c : gn) {
        const double cost = tree.nodes[c].cost + (goal - tree.nodes[c].p).norm();
        if (cost < gbest && segment_free(tree.nodes[c].p, goal, obs)) {
          gbest = cost;
          gp = c;
        }
      }
      goal_node = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({goal, gp, gbest, {}});
      tree.nodes[gp].children.push_back(goal_node);
    }
  }
  if (goal_node < 0) {
    throw Error(ErrorCode::NoPathFound,
                "goal not reached after " + std::to_string(cfg.max_iterations) + " iterations");
  }
  WaypointPath path;
  for (int n = goal_node; n >= 0; n = tree.nodes[n].parent) path.points.push_back(tree.nodes[n].p);
  std::reverse(path.points.begin(), path.points.end());
  path.points.front() = start;
  path.points.back() = goal;
  return path;
}

inline void check_endpoints(const Point& start, const Point& goal, const ObstacleSet& obs) {
  if (start.size() != goal.size()) throw Error(ErrorCode::SizeMismatch, "endpoint dimensions differ");
  if ((start - goal).norm() <= 1e-12) throw Error(ErrorCode::InvalidEndpoints, "start equals goal");
  if (point_in_collision(start, obs)) throw Error(ErrorCode::InvalidEndpoints, "start is in collision");
  if (point_in_collision(goal, obs)) throw Error(ErrorCode::InvalidEndpoints, "goal is in collision");
}

}  // namespace detail

/// RRT* with fixed-radius rewiring. Deterministic for a fixed seed; the
/// returned path length is non-increasing in max_iterations.
inline WaypointPath find_path(const Point& start, const Point& goal, const ObstacleSet& obs,
                              const RrtConfig& cfg) {
  validate_rrt_config(cfg);
  detail::check_endpoints(start, goal, obs);
  const Box bounds = cfg.bounds ? *cfg.bounds : detail::default_bounds(start, goal, obs);
  Rng rng(cfg.rng_seed);
  auto sampler = [&bounds](Rng& r) {
    Point p(bounds.lo.size());
    for (Index i = 0; i < p.size(); ++i) p(i) = uniform(r, bounds.lo(i), bounds.hi(i));
    return p;
  };
  return detail::rrt_star(start, goal, obs, cfg, sampler, rng);
}

/// Greedy line-of-sight shortcutting: from each kept vertex jump to the
/// farthest later vertex that is directly visible.
inline WaypointPath simplify_path(const WaypointPath& path, const ObstacleSet& obs) {
  WaypointPath out;
  out.pair_index = path.pair_index;
  const auto& pts = path.points;
  std::size_t i = 0;
  out.points.push_back(pts.front());
  while (i + 1 < pts.size()) {
    std::size_t j = pts.size() - 1;
    while (j > i + 1 && !segment_free(pts[i], pts[j], obs)) --j;
    out.points.push_back(pts[j]);
    i = j;
  }
  return out;
}

/// True if some monotone matching of the two point sequences, starting at
/// the first points and ending at the last, joins every matched pair by a
/// collision-free segment.
inline bool matched_segments_free(const std::vector<Point>& a, const std::vector<Point>& b,
                                  const ObstacleSet& obs) {
  const std::size_t na = a.size(), nb = b.size();
  if (na == 0 || nb == 0) return true;
  std::vector<char> reach(na * nb, 0);
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      bool from = i == 0 && j == 0;
      if (i > 0) from = from || reach[(i - 1) * nb + j];
      if (j > 0) from = from || reach[i * nb + j - 1];
      if (i > 0 && j > 0) from = from || reach[(i - 1) * nb + j - 1];
      reach[i * nb + j] = from && segment_free(a[i], b[j], obs);
    }
  }
  return reach.back() != 0;
}

/// Resamples every path to a common point count and checks each pair of
/// paths with matched_segments_free.
inline bool cross_paths_free(const std::vector<WaypointPath>& paths, const ObstacleSet& obs,
                             Index samples = 64) {
  std::vector<std::vector<Point>> rs;
  for (const auto& p : paths) rs.push_back(resample_uniform(p.points, samples));
  for (std::size_t a = 0; a < rs.size(); ++a)
    for (std::size_t b = a + 1; b < rs.size(); ++b)
      if (!matched_segments_free(rs[a], rs[b], obs)) return false;
  return true;
}

/// Plans one path per order pair. Pairs after the first sample only inside a
/// tube of radius corridor_shrink_radius around the first path, shifted
/// linearly so that it joins each pair's own endpoints. Returned paths are
/// shortcut-simplified.
inline std::vector<WaypointPath> find_homotopic_paths(const OrderPairSet& pairs,
                                                      const ObstacleSet& obs,
                                                      const RrtConfig& cfg) {
  validate_rrt_config(cfg);
  const Index q = pairs.size();
  if (q == 0) return {};
  for (Index k = 0; k < q; ++k) detail::check_endpoints(pairs.start_vertex(k), pairs.goal_vertex(k), obs);

  RrtConfig first_cfg = cfg;
  WaypointPath first = simplify_path(find_path(pairs.start_vertex(0), pairs.goal_vertex(0), obs, first_cfg), obs);
  first.pair_index = 0;

  std::vector<WaypointPath> paths(q);
  paths[0] = first;
  const std::vector<double> frac = [&] {
    std::vector<double> f{0.0};
    const double total = polyline_length(first.points);
    double acc = 0.0;
    for (std::size_t i = 1; i < first.points.size(); ++i) {
      acc += (first.points[i] - first.points[i - 1]).norm();
      f.push_back(acc / total);
    }
    return f;
  }();

  auto plan_pair = [&](Index k) {
    const Point& s = pairs.start_vertex(k);
    const Point& g = pairs.goal_vertex(k);
    const Vec ds = s - first.points.front();
    const Vec dg = g - first.points.back();
    std::vector<Point> guide;
    for (std::size_t i = 0; i < first.points.size(); ++i)
      guide.push_back(first.points[i] + (1.0 - frac[i]) * ds + frac[i] * dg);
    const double r = cfg.corridor_shrink_radius;
    const Index d = s.size();
    auto sampler = [guide, r, d](Rng& rng) {
      const Point c = polyline_at(guide, uniform01(rng));
      Vec off(d);
      do {
        for (Index i = 0; i < d; ++i) off(i) = uniform(rng, -r, r);
      } while (off.norm() > r);
      return Point(c + off);
    };
    RrtConfig kcfg = cfg;
    kcfg.rng_seed = cfg.rng_seed + static_cast<std::uint64_t>(k);
    Rng rng(kcfg.rng_seed);
    WaypointPath p = simplify_path(detail::rrt_star(s, g, obs, kcfg, sampler, rng), obs);
    p.pair_index = static_cast<int>(k);
    return p;
  };

  std::vector<std::future<WaypointPath>> jobs;
  for (Index k = 1; k < q; ++k) jobs.push_back(std::async(std::launch::async, plan_pair, k));
  for (Index k = 1; k < q; ++k) paths[k] = jobs[k - 1].get();

  if (!cross_paths_free(paths, obs)) {
    throw Error(ErrorCode::HomotopyCheckFailed, "an obstacle separates two planned paths");
  }
  return paths;
}

/// Resamples each path to exactly m_target + 1 points. Original vertices are
/// kept; each original segment receives pieces so that piece lengths are as
/// even as possible, then is split uniformly.
inline std::vector<WaypointPath> equalize_waypoints(const std::vector<WaypointPath>& paths,
                                                    Index m_target) {
  std::vector<WaypointPath> out;
  out.reserve(paths.size());
  for (const auto& path : paths) {
    const Index segs = path.segments();
    if (segs < 1) throw Error(ErrorCode::TooFewSegments, "path needs at least two points");
    if (m_target < segs) {
      throw Error(ErrorCode::TooFewSegments,
                  "path " + std::to_string(path.pair_index) + " has " + std::to_string(segs) +
                      " segments, more than m_target = " + std::to_string(m_target));
    }
    std::vector<double> len(segs);
    for (Index i = 0; i < segs; ++i) len[i] = (path.points[i + 1] - path.points[i]).norm();
    std::vector<Index> pieces(segs, 1);
    for (Index extra = m_target - segs; extra > 0; --extra) {
      Index best = 0;
      for (Index i = 1; i < segs; ++i)
        if (len[i] / pieces[i] > len[best] / pieces[best] + 1e-12) best = i;
      ++pieces[best];
    }
    WaypointPath r;
    r.pair_index = path.pair_index;
    r.points.push_back(path.points.front());
    for (Index i = 0; i < segs; ++i) {
      const Point& a = path.points[i];
      const Point& b = path.points[i + 1];
      for (Index j = 1; j < pieces[i]; ++j) {
        const double s = static_cast<double>(j) / pieces[i];
        r.points.push_back(a + s * (b - a));
      }
      r.points.push_back(b);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace ovtube
