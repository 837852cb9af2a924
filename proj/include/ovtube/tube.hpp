#pragma once

// Optimal virtual tube: q basis trajectories solved directly for the terminal
// vertex pairs; every other member is their convex combination.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "ovtube/error.hpp"
#include "ovtube/geometry.hpp"
#include "ovtube/knots.hpp"
#include "ovtube/pathfinder.hpp"
#include "ovtube/rng.hpp"
#include "ovtube/trajopt.hpp"

namespace ovtube {

/// How corridor inequalities are attached to the basis problems.
///  Shared:  one band around the mean waypoint polyline, wide enough to hold
///           every pair's polyline plus the corridor width. All basis
///           problems see identical inequalities.
///  PerPair: each pair gets a corridor around its own polyline; members get
///           one around their combined waypoints.
///  None:    equality constraints only.
enum class CorridorMode { None, Shared, PerPair };

inline std::string to_string(CorridorMode m) {
  switch (m) {
    case CorridorMode::None: return "none";
    case CorridorMode::Shared: return "shared";
    case CorridorMode::PerPair: return "per_pair";
  }
  return "shared";
}

inline CorridorMode corridor_mode_from_string(const std::string& s) {
  if (s == "none") return CorridorMode::None;
  if (s == "shared") return CorridorMode::Shared;
  if (s == "per_pair") return CorridorMode::PerPair;
  throw Error(ErrorCode::ValidationError, "unknown corridor mode '" + s + "'");
}

struct TrajectoryConfig {
  Index order = 5;            // n
  Index cost_derivative = 3;  // k_r (minimum jerk)
  Index continuity = 3;       // p
  Index m_target = 7;
  double corridor_width = 1.0;
  Index corridor_samples = 3;
  CorridorMode corridor_mode = CorridorMode::Shared;
  bool require_kkt = true;  // throw if a basis solution fails the KKT audit
};

inline void validate_trajectory_config(const TrajectoryConfig& c) {
  if (c.order < 1) throw Error(ErrorCode::ValidationError, "order must be >= 1");
  if (c.cost_derivative < 0 || c.cost_derivative > c.order)
    throw Error(ErrorCode::ValidationError, "cost_derivative must lie in [0, order]");
  if (c.continuity < 0 || c.continuity > c.order - 1)
    throw Error(ErrorCode::ValidationError, "continuity must lie in [0, order - 1]");
  if (c.m_target < 1) throw Error(ErrorCode::ValidationError, "m_target must be >= 1");
  if (!(c.corridor_width > 0.0)) throw Error(ErrorCode::ValidationError, "corridor width must be > 0");
  if (c.corridor_samples < 1) throw Error(ErrorCode::ValidationError, "corridor samples must be >= 1");
}

struct OptimalVirtualTube {
  OrderPairSet pairs;
  PolyConfig poly;
  Index cost_derivative = 3;
  Index continuity = 3;
  KnotVector public_knots;  // unnormalized; back() is u_m
  KnotVector knots;         // normalized
  std::vector<WaypointPath> waypoints;  // per basis, m + 1 points each
  std::vector<Vec> basis_x;
  std::vector<Vec> basis_b;
  CorridorMode corridor_mode = CorridorMode::Shared;
  double corridor_width = 1.0;
  Index corridor_samples = 3;

  // Derived from the fields above, in the global and segment-local frames.
  Mat A, A_local;
  CostSpec cost, cost_local;
  AffineInequalities shared_corridor, shared_corridor_local;
  Mat T;  // x_global = T x_local
  std::vector<Vec> basis_x_local;
  std::vector<double> basis_objective;
  int qp_solves = 0;

  Index q() const { return static_cast<Index>(basis_x.size()); }

  PiecewisePolynomial basis(Index k) const { return PiecewisePolynomial{poly, knots, basis_x[k]}; }
};

inline AffineInequalities empty_inequalities(Index n) {
  AffineInequalities a;
  a.G = Mat(0, n);
  a.h = Vec(0);
  return a;
}

/// Band around the mean polyline that contains every pair's polyline with
/// margin `width`.
inline AffineInequalities shared_corridor_band(const std::vector<WaypointPath>& paths,
                                               const KnotVector& knots, double width,
                                               Index samples, const PolyConfig& cfg,
                                               Frame frame = Frame::Global) {
  const Index m = cfg.segments, q = static_cast<Index>(paths.size());
  std::vector<Point> ref(m + 1, Point::Zero(cfg.dim));
  for (const auto& p : paths)
    for (Index i = 0; i <= m; ++i) ref[i] += p.points[i] / static_cast<double>(q);
  CorridorSpec spec;
  spec.samples = samples;
  for (Index i = 0; i < m; ++i) {
    const Vec chord = ref[i + 1] - ref[i];
    if (!(chord.norm() > 0.0)) throw Error(ErrorCode::ZeroChord, "mean polyline has a zero-length segment");
    const Vec tan = chord / chord.norm();
    const Mat proj = Mat::Identity(cfg.dim, cfg.dim) - tan * tan.transpose();
    double spread = 0.0;
    for (const auto& p : paths) {
      spread = std::max(spread, (proj * (p.points[i] - ref[i])).cwiseAbs().maxCoeff());
      spread = std::max(spread, (proj * (p.points[i + 1] - ref[i])).cwiseAbs().maxCoeff());
    }
    spec.width.push_back(width + spread);
  }
  return corridor_constraints(ref, knots, spec, cfg, frame);
}

inline AffineInequalities corridor_for_waypoints(const OptimalVirtualTube& tube,
                                                 const std::vector<Point>& pts,
                                                 Frame frame = Frame::Global) {
  CorridorSpec spec;
  spec.samples = tube.corridor_samples;
  spec.width.assign(tube.poly.segments, tube.corridor_width);
  return corridor_constraints(pts, tube.knots, spec, tube.poly, frame);
}

/// Waypoints of the member with weights theta: Σ θ_k q_{i,k}.
inline std::vector<Point> combined_waypoints(const OptimalVirtualTube& tube, const Vec& theta) {
  std::vector<Point> pts(tube.poly.segments + 1, Point::Zero(tube.poly.dim));
  for (Index k = 0; k < tube.q(); ++k)
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] += theta(k) * tube.waypoints[k].points[i];
  return pts;
}

inline AffineInequalities basis_corridor(const OptimalVirtualTube& tube, Index k,
                                         Frame frame = Frame::Global) {
  switch (tube.corridor_mode) {
    case CorridorMode::Shared:
      return frame == Frame::Global ? tube.shared_corridor : tube.shared_corridor_local;
    case CorridorMode::PerPair: return corridor_for_waypoints(tube, tube.waypoints[k].points, frame);
    case CorridorMode::None: break;
  }
  return empty_inequalities(tube.poly.size());
}

inline AffineInequalities member_corridor(const OptimalVirtualTube& tube, const Vec& theta,
                                          Frame frame = Frame::Global) {
  switch (tube.corridor_mode) {
    case CorridorMode::Shared:
      return frame == Frame::Global ? tube.shared_corridor : tube.shared_corridor_local;
    case CorridorMode::PerPair:
      return corridor_for_waypoints(tube, combined_waypoints(tube, theta), frame);
    case CorridorMode::None: break;
  }
  return empty_inequalities(tube.poly.size());
}

/// Rebuilds A, H, T and the shared corridor from the stored knots,
/// waypoints and configuration.
inline void rebuild_derived(OptimalVirtualTube& tube) {
  tube.A = assemble_equality_matrix(tube.knots, tube.poly, tube.continuity).A;
  tube.A_local = assemble_equality_matrix(tube.knots, tube.poly, tube.continuity, Frame::Local).A;
  tube.cost = assemble_cost(tube.knots, tube.cost_derivative, tube.poly);
  tube.cost_local = assemble_cost(tube.knots, tube.cost_derivative, tube.poly, Frame::Local);
  tube.T = local_to_global(tube.knots, tube.poly);
  if (tube.corridor_mode == CorridorMode::Shared) {
    tube.shared_corridor = shared_corridor_band(tube.waypoints, tube.knots, tube.corridor_width,
                                                tube.corridor_samples, tube.poly);
    tube.shared_corridor_local = shared_corridor_band(tube.waypoints, tube.knots, tube.corridor_width,
                                                      tube.corridor_samples, tube.poly, Frame::Local);
  } else {
    tube.shared_corridor = empty_inequalities(tube.poly.size());
    tube.shared_corridor_local = empty_inequalities(tube.poly.size());
  }
  const Mat S = global_to_local(tube.knots, tube.poly);
  tube.basis_objective.clear();
  tube.basis_x_local.clear();
  for (const auto& x : tube.basis_x) {
    tube.basis_x_local.push_back(S * x);
    const Vec& xl = tube.basis_x_local.back();
    tube.basis_objective.push_back(xl.dot(tube.cost_local.H * xl));
  }
}

/// Direct QP solve for right-hand side b under the given corridor pair.
inline QpSolution solve_tube_qp(const OptimalVirtualTube& tube, const Vec& b,
                                const AffineInequalities& ineq, const AffineInequalities& ineq_local) {
  const TrajectoryQp global{tube.cost, tube.A, b, ineq};
  const TrajectoryQp local{tube.cost_local, tube.A_local, b, ineq_local};
  return solve_trajectory_qp(global, local, tube.T);
}

/// Builds the tube from already equalized per-pair waypoint paths: public
/// normalized knots, shared A and H, and one QP solve per pair.
inline OptimalVirtualTube assemble_tube(const OrderPairSet& pairs,
                                        const std::vector<WaypointPath>& paths,
                                        const TrajectoryConfig& cfg) {
  validate_trajectory_config(cfg);
  const Index q = pairs.size();
  if (static_cast<Index>(paths.size()) != q) throw Error(ErrorCode::SizeMismatch, "one path per pair required");
  if (q == 0) throw Error(ErrorCode::SizeMismatch, "tube needs at least one pair");
  const Index m = paths.front().segments();
  for (const auto& p : paths)
    if (p.segments() != m) throw Error(ErrorCode::LengthMismatch, "paths have different waypoint counts");

  OptimalVirtualTube tube;
  tube.pairs = pairs;
  tube.poly = PolyConfig{pairs.start.dim(), cfg.order, m};
  tube.cost_derivative = cfg.cost_derivative;
  tube.continuity = cfg.continuity;
  tube.waypoints = paths;
  tube.corridor_mode = cfg.corridor_mode;
  tube.corridor_width = cfg.corridor_width;
  tube.corridor_samples = cfg.corridor_samples;

  std::vector<KnotVector> per_pair;
  for (const auto& p : paths) per_pair.push_back(chord_length_knots(p.points));
  tube.public_knots = public_knots(per_pair);
  tube.knots = normalize_knots(tube.public_knots);
  rebuild_derived(tube);

  for (Index k = 0; k < q; ++k) {
    const BoundarySpec bs = rest_to_rest(paths[k].points.front(), paths[k].points.back(), tube.continuity);
    const EqualitySystem eq = assemble_equality(paths[k].points, tube.knots, bs, tube.continuity, tube.poly);
    const QpSolution sol =
        solve_tube_qp(tube, eq.b, basis_corridor(tube, k), basis_corridor(tube, k, Frame::Local));
    ++tube.qp_solves;
    if (cfg.require_kkt && !kkt_audit(sol).ok()) {
      throw Error(ErrorCode::Infeasible, "basis " + std::to_string(k) + " fails the KKT audit");
    }
    tube.basis_x.push_back(sol.x);
    tube.basis_b.push_back(eq.b);
  }
  rebuild_derived(tube);
  return tube;
}

/// Full planning pipeline: homotopic RRT* paths, waypoint equalization,
/// knots, and the q basis QPs.
inline OptimalVirtualTube build_tube(const OrderPairSet& pairs, const ObstacleSet& obstacles,
                                     const RrtConfig& rrt_cfg, const TrajectoryConfig& traj_cfg) {
  validate_trajectory_config(traj_cfg);
  const std::vector<WaypointPath> paths = find_homotopic_paths(pairs, obstacles, rrt_cfg);
  return assemble_tube(pairs, equalize_waypoints(paths, traj_cfg.m_target), traj_cfg);
}

/// b(θ) = Σ θ_k b_k.
inline Vec combined_rhs(const OptimalVirtualTube& tube, const Vec& theta) {
  Vec b = Vec::Zero(tube.basis_b.front().size());
  for (Index k = 0; k < tube.q(); ++k) b += theta(k) * tube.basis_b[k];
  return b;
}

/// x(θ) = Σ θ_k x_k. O(n_t) arithmetic, no factorization.
inline PiecewisePolynomial member_trajectory(const OptimalVirtualTube& tube, const Vec& theta) {
  check_weights(theta, tube.q());
  PiecewisePolynomial out{tube.poly, tube.knots, Vec::Zero(tube.poly.size())};
  for (Index k = 0; k < tube.q(); ++k) out.x += theta(k) * tube.basis_x[k];
  return out;
}

inline PiecewisePolynomial member_trajectory(const OptimalVirtualTube& tube,
                                             const BarycentricWeights& w) {
  return member_trajectory(tube, w.theta);
}

/// Independent QP solve for the member with weights theta.
inline QpSolution solve_member_direct(const OptimalVirtualTube& tube, const Vec& theta) {
  check_weights(theta, tube.q());
  return solve_tube_qp(tube, combined_rhs(tube, theta), member_corridor(tube, theta),
                       member_corridor(tube, theta, Frame::Local));
}

struct MemberVerification {
  double eq_residual = 0.0;
  double corridor_violation = 0.0;
  double coefficient_error = 0.0;    // ‖x(θ) − x_direct‖∞
  double objective_rel_error = 0.0;  // |E(θ) − E_direct| / max(E_direct, 1e-300)
  double variational_min = 0.0;      // min over y of 2 x(θ)ᵀ H (y − x(θ))
  int variational_samples = 0;
  bool corridor_active = false;      // some basis or the direct solve has an active corridor row
  bool direct_kkt_ok = false;

  bool feasible() const { return eq_residual <= 1e-8 && corridor_violation <= 1e-8; }
  bool optimal() const { return coefficient_error <= 1e-6 && objective_rel_error <= 1e-8; }
  bool variational() const { return variational_min >= -1e-8; }
  bool ok() const { return feasible() && optimal() && variational() && direct_kkt_ok; }
};

struct VerifyOptions {
  int variational_samples = 100;
  double perturbation = 1e-3;  // initial ‖y_l − x_l(θ)‖, halved until corridor-feasible
  std::uint64_t seed = 7;
};

/// Feasibility, agreement with a direct solve, and the first-order
/// optimality condition ∇f0(x)ᵀ(y − x) >= 0 over random feasible y.
inline MemberVerification verify_member_optimality(const OptimalVirtualTube& tube, const Vec& theta,
                                                   const VerifyOptions& opt = {}) {
  MemberVerification v;
  const PiecewisePolynomial member = member_trajectory(tube, theta);
  const Vec& x = member.x;
  const Vec b = combined_rhs(tube, theta);
  const AffineInequalities ineq = member_corridor(tube, theta);

  v.eq_residual = (tube.A * x - b).cwiseAbs().maxCoeff();
  v.corridor_violation = ineq.size() > 0 ? std::max(0.0, ineq.values(x).maxCoeff()) : 0.0;

  const QpSolution direct = solve_tube_qp(tube, b, ineq, member_corridor(tube, theta, Frame::Local));
  v.direct_kkt_ok = kkt_audit(direct).ok();
  v.coefficient_error = (x - direct.x).cwiseAbs().maxCoeff();
  Vec member_l = Vec::Zero(x.size());
  for (Index k = 0; k < tube.q(); ++k) member_l += theta(k) * tube.basis_x_local[k];
  const double e_member = member_l.dot(tube.cost_local.H * member_l);
  v.objective_rel_error = std::abs(e_member - direct.objective) / std::max(std::abs(direct.objective), 1e-300);
  v.corridor_active = !direct.active_corridor.empty();
  if (ineq.size() > 0) {
    for (Index k = 0; k < tube.q(); ++k) {
      const Vec vals = basis_corridor(tube, k).values(tube.basis_x[k]);
      if (vals.maxCoeff() > -1e-9) v.corridor_active = true;
    }
  }

  // Random feasible directions in the null space of A. The products are
  // formed in the local frame, where 2xᵀH(y − x) = 2x_lᵀH_l(y_l − x_l) is
  // well conditioned; y = T y_l.
  const Vec& xl = member_l;
  const AffineInequalities ineq_l = member_corridor(tube, theta, Frame::Local);
  const detail::EqualityFactor eqf(tube.A_local, tube.A_local.cols(), 1e-12);
  const Vec grad = 2.0 * tube.cost_local.H * xl;
  Rng rng(opt.seed);
  v.variational_min = std::numeric_limits<double>::infinity();
  int attempts = 0;
  while (v.variational_samples < opt.variational_samples && attempts < 50 * opt.variational_samples) {
    ++attempts;
    Vec w(eqf.Z.cols());
    for (Index i = 0; i < w.size(); ++i) w(i) = standard_normal(rng);
    if (w.norm() == 0.0) continue;
    const Vec dir = eqf.Z * (w / w.norm());
    bool found = false;
    for (double sign : {1.0, -1.0}) {
      double step = opt.perturbation;
      for (int h = 0; h < 40 && !found; ++h, step *= 0.5) {
        const Vec y = xl + sign * step * dir;
        if (ineq_l.size() == 0 || ineq_l.values(y).maxCoeff() <= 0.0) {
          // y − x is sign·step·dir; subtracting the rounded y would add
          // eps·|x|·|grad| of cancellation noise.
          v.variational_min = std::min(v.variational_min, sign * step * grad.dot(dir));
          found = true;
        }
      }
      if (found) break;
    }
    if (found) ++v.variational_samples;
  }
  if (v.variational_samples == 0) v.variational_min = 0.0;
  return v;
}

struct CrossSection {
  double t = 0.0;
  std::vector<Point> points;
};

inline CrossSection cross_section(const OptimalVirtualTube& tube, double t) {
  CrossSection cs;
  cs.t = t;
  for (Index k = 0; k < tube.q(); ++k) cs.points.push_back(tube.basis(k).evaluate(t));
  return cs;
}

struct BenchmarkRow {
  Index members = 0;
  double combine_ns_per_member = 0.0;
  double direct_ns_per_solve = 0.0;
  double ratio() const { return direct_ns_per_solve / combine_ns_per_member; }
};

/// Uniformly random simplex weights (normalized exponentials).
inline Vec random_weights(Index q, Rng& rng) {
  Vec t(q);
  for (Index k = 0; k < q; ++k) t(k) = -std::log(std::max(uniform01(rng), 1e-300));
  return t / t.sum();
}

/// Wall time of convex combination per member versus a direct QP solve.
inline std::vector<BenchmarkRow> combination_benchmark(const OptimalVirtualTube& tube,
                                                       const std::vector<Index>& counts,
                                                       int direct_solves = 5,
                                                       std::uint64_t seed = 11) {
  using clock = std::chrono::steady_clock;
  std::vector<BenchmarkRow> rows;
  Rng rng(seed);
  volatile double sink = 0.0;
  for (Index count : counts) {
    std::vector<Vec> thetas;
    for (Index i = 0; i < count; ++i) thetas.push_back(random_weights(tube.q(), rng));

    // Repeat the whole batch until at least 20 ms have elapsed.
    long reps = 0;
    const auto c0 = clock::now();
    auto c1 = c0;
    do {
      for (const auto& th : thetas) sink = sink + member_trajectory(tube, th).x(0);
      ++reps;
      c1 = clock::now();
    } while (c1 - c0 < std::chrono::milliseconds(20));
    const double comb = std::chrono::duration<double, std::nano>(c1 - c0).count() /
                        (static_cast<double>(reps) * static_cast<double>(count));

    const int solves = std::max(1, direct_solves);
    const auto d0 = clock::now();
    for (int i = 0; i < solves; ++i)
      sink = sink + solve_member_direct(tube, thetas[static_cast<std::size_t>(i) % thetas.size()]).x(0);
    const auto d1 = clock::now();
    const double direct = std::chrono::duration<double, std::nano>(d1 - d0).count() / solves;
    rows.push_back(BenchmarkRow{count, comb, direct});
  }
  return rows;
}

}  // namespace ovtube
