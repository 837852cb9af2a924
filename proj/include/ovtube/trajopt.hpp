#pragma once

// Piecewise-polynomial trajectories in the global monomial basis
// C(t) = [I, tI, t²I, …, tⁿI], and assembly of the minimum-energy QP:
//
//   minimize  xᵀHx   s.t.  A x = b,  corridor(x) <= 0
//
// The parameter vector stacks segments, then powers, then components:
//   x[(j·(n+1) + i)·d + c] = a_{c,i,j}.
// Global (not per-segment) time keeps the block layout of the constraint
// system literal, but global coefficients of late segments grow like Δ^-n and
// cancel on evaluation. Every assembly routine can therefore also build the
// same rows in a segment-local frame τ = (t − t_j)/Δ_j, where the QP is well
// conditioned; x_global = T x_local maps the solution back.

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "ovtube/error.hpp"
#include "ovtube/geometry.hpp"
#include "ovtube/knots.hpp"
#include "ovtube/qp.hpp"

namespace ovtube {

struct PolyConfig {
  Index dim = 2;
  Index order = 5;     // n
  Index segments = 1;  // m

  Index coeffs_per_segment() const { return (order + 1) * dim; }
  Index size() const { return coeffs_per_segment() * segments; }  // n_t
  Index index(Index seg, Index power, Index comp) const {
    return (seg * (order + 1) + power) * dim + comp;
  }
};

/// d^deriv/dt^deriv of (1, t, …, tⁿ).
inline Eigen::RowVectorXd basis_row(double t, Index deriv, Index order) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(order + 1);
  for (Index i = deriv; i <= order; ++i) {
    double coef = 1.0;
    for (Index k = 0; k < deriv; ++k) coef *= static_cast<double>(i - k);
    row(i) = coef * std::pow(t, static_cast<double>(i - deriv));
  }
  return row;
}

/// C_t^(deriv) restricted to one segment: d × (n+1)d.
inline Mat basis_block(double t, Index deriv, const PolyConfig& cfg) {
  const Eigen::RowVectorXd row = basis_row(t, deriv, cfg.order);
  Mat C = Mat::Zero(cfg.dim, cfg.coeffs_per_segment());
  for (Index i = 0; i <= cfg.order; ++i)
    for (Index c = 0; c < cfg.dim; ++c) C(c, i * cfg.dim + c) = row(i);
  return C;
}

enum class Frame { Global, Local };

/// C^(deriv) of segment j evaluated at global time t, in the given frame.
inline Mat segment_block(const KnotVector& knots, Index j, double t, Index deriv,
                         const PolyConfig& cfg, Frame frame) {
  if (frame == Frame::Global) return basis_block(t, deriv, cfg);
  const double dt = knots.u[j + 1] - knots.u[j];
  Mat C = basis_block((t - knots.u[j]) / dt, deriv, cfg);
  C /= std::pow(dt, static_cast<double>(deriv));
  return C;
}

/// T with x_global = T x_local: on segment j, a_k = Σ_i C(i,k) (−t_j)^(i−k) Δ_j^(−i) c_i.
inline Mat local_to_global(const KnotVector& knots, const PolyConfig& cfg) {
  const Index n = cfg.order, d = cfg.dim, blk = cfg.coeffs_per_segment();
  Mat T = Mat::Zero(cfg.size(), cfg.size());
  for (Index j = 0; j < cfg.segments; ++j) {
    const double t0 = knots.u[j], dt = knots.u[j + 1] - knots.u[j];
    for (Index i = 0; i <= n; ++i) {
      double binom = 1.0;  // C(i, k), built up for k = 0..i
      for (Index k = 0; k <= i; ++k) {
        if (k > 0) binom = binom * static_cast<double>(i - k + 1) / static_cast<double>(k);
        const double v = binom * std::pow(-t0, static_cast<double>(i - k)) / std::pow(dt, static_cast<double>(i));
        for (Index c = 0; c < d; ++c) T(j * blk + k * d + c, j * blk + i * d + c) = v;
      }
    }
  }
  return T;
}

/// Inverse of local_to_global: c_i = Δ_j^i Σ_{k>=i} C(k,i) t_j^(k−i) a_k.
inline Mat global_to_local(const KnotVector& knots, const PolyConfig& cfg) {
  const Index n = cfg.order, d = cfg.dim, blk = cfg.coeffs_per_segment();
  Mat S = Mat::Zero(cfg.size(), cfg.size());
  for (Index j = 0; j < cfg.segments; ++j) {
    const double t0 = knots.u[j], dt = knots.u[j + 1] - knots.u[j];
    for (Index k = 0; k <= n; ++k) {
      double binom = 1.0;  // C(k, i)
      for (Index i = 0; i <= k; ++i) {
        if (i > 0) binom = binom * static_cast<double>(k - i + 1) / static_cast<double>(i);
        const double v = binom * std::pow(t0, static_cast<double>(k - i)) * std::pow(dt, static_cast<double>(i));
        for (Index c = 0; c < d; ++c) S(j * blk + i * d + c, j * blk + k * d + c) = v;
      }
    }
  }
  return S;
}

struct PiecewisePolynomial {
  PolyConfig cfg;
  KnotVector knots;  // normalized
  Vec x;

  Index segment_of(double t) const {
    const auto& u = knots.u;
    if (!(t >= u.front() - 1e-12 && t <= u.back() + 1e-12)) {
      throw Error(ErrorCode::OutOfDomain, "t = " + std::to_string(t) + " outside [" +
                                              std::to_string(u.front()) + ", " +
                                              std::to_string(u.back()) + "]");
    }
    for (Index j = 0; j + 1 < cfg.segments; ++j)
      if (t < u[j + 1]) return j;
    return cfg.segments - 1;
  }

  Vec evaluate_segment(Index seg, double t, Index deriv = 0) const {
    if (deriv > cfg.order) return Vec::Zero(cfg.dim);
    return basis_block(t, deriv, cfg) * x.segment(seg * cfg.coeffs_per_segment(), cfg.coeffs_per_segment());
  }

  Vec evaluate(double t, Index deriv = 0) const { return evaluate_segment(segment_of(t), t, deriv); }
};

struct BoundarySpec {
  Point start_point;
  Point goal_point;
  std::vector<Vec> start_derivs;  // element r-1 holds the order-r derivative
  std::vector<Vec> goal_derivs;
};

inline BoundarySpec rest_to_rest(const Point& start, const Point& goal, Index p) {
  BoundarySpec b{start, goal, {}, {}};
  for (Index r = 0; r < p; ++r) {
    b.start_derivs.push_back(Vec::Zero(start.size()));
    b.goal_derivs.push_back(Vec::Zero(start.size()));
  }
  return b;
}

struct EqualitySystem {
  Mat A;
  Vec b;
  Index continuity_rows = 0;  // A1
  Index waypoint_rows = 0;    // A2
  Index terminal_rows = 0;    // A3
};

/// Constraint matrix [A1; A2; A3] for normalized knots, continuity order p.
inline EqualitySystem assemble_equality_matrix(const KnotVector& knots, const PolyConfig& cfg,
                                               Index p, Frame frame = Frame::Global) {
  const Index m = cfg.segments, d = cfg.dim, blk = cfg.coeffs_per_segment();
  if (knots.segments() != m) {
    throw Error(ErrorCode::LengthMismatch, "knot count does not match segment count");
  }
  if (p < 0 || p > cfg.order - 1) {
    throw Error(ErrorCode::ValidationError, "continuity order p must satisfy 0 <= p <= n - 1");
  }
  EqualitySystem eq;
  eq.continuity_rows = (m - 1) * (p + 1) * d;
  eq.waypoint_rows = (m + 1) * d;
  eq.terminal_rows = 2 * p * d;
  const Index rows = eq.continuity_rows + eq.waypoint_rows + eq.terminal_rows;
  eq.A = Mat::Zero(rows, cfg.size());
  eq.b = Vec::Zero(rows);

  Index r = 0;
  for (Index i = 1; i < m; ++i) {
    for (Index order = 0; order <= p; ++order) {
      eq.A.block(r, (i - 1) * blk, d, blk) = segment_block(knots, i - 1, knots.u[i], order, cfg, frame);
      eq.A.block(r, i * blk, d, blk) = -segment_block(knots, i, knots.u[i], order, cfg, frame);
      r += d;
    }
  }
  for (Index i = 0; i <= m; ++i) {
    const Index seg = std::min(i, m - 1);
    eq.A.block(r, seg * blk, d, blk) = segment_block(knots, seg, knots.u[i], 0, cfg, frame);
    r += d;
  }
  for (Index order = p; order >= 1; --order) {
    eq.A.block(r, 0, d, blk) = segment_block(knots, 0, knots.u.front(), order, cfg, frame);
    r += d;
  }
  for (Index order = p; order >= 1; --order) {
    eq.A.block(r, (m - 1) * blk, d, blk) = segment_block(knots, m - 1, knots.u.back(), order, cfg, frame);
    r += d;
  }
  return eq;
}

/// Right-hand side [b1; b2; b3] for one waypoint list.
inline Vec assemble_equality_rhs(const std::vector<Point>& waypoints, const BoundarySpec& bounds,
                                 const PolyConfig& cfg, Index p) {
  const Index m = cfg.segments, d = cfg.dim;
  if (static_cast<Index>(waypoints.size()) != m + 1) {
    throw Error(ErrorCode::LengthMismatch, "waypoint count must be m + 1");
  }
  if (static_cast<Index>(bounds.start_derivs.size()) != p ||
      static_cast<Index>(bounds.goal_derivs.size()) != p) {
    throw Error(ErrorCode::LengthMismatch, "boundary derivative lists must have p entries");
  }
  Vec b = Vec::Zero((m - 1) * (p + 1) * d + (m + 1) * d + 2 * p * d);
  Index r = (m - 1) * (p + 1) * d;
  for (Index i = 0; i <= m; ++i, r += d) b.segment(r, d) = waypoints[i];
  for (Index order = p; order >= 1; --order, r += d) b.segment(r, d) = bounds.start_derivs[order - 1];
  for (Index order = p; order >= 1; --order, r += d) b.segment(r, d) = bounds.goal_derivs[order - 1];
  return b;
}

/// Full equality system with a row-rank check (RankDeficient).
inline EqualitySystem assemble_equality(const std::vector<Point>& waypoints, const KnotVector& knots,
                                        const BoundarySpec& bounds, Index p, const PolyConfig& cfg,
                                        Frame frame = Frame::Global) {
  EqualitySystem eq = assemble_equality_matrix(knots, cfg, p, frame);
  eq.b = assemble_equality_rhs(waypoints, bounds, cfg, p);
  Eigen::FullPivLU<Mat> lu(eq.A);
  lu.setThreshold(1e-12);
  if (lu.rank() < eq.A.rows()) {
    throw Error(ErrorCode::RankDeficient, "equality system has " + std::to_string(eq.A.rows()) +
                                              " rows but rank " + std::to_string(lu.rank()));
  }
  return eq;
}

struct CostSpec {
  Index derivative_order = 3;  // k_r
  Mat H;
};

/// Block-diagonal H with ∫ C_t^(k_r)ᵀ C_t^(k_r) dt over each segment, in
/// closed form.
inline CostSpec assemble_cost(const KnotVector& knots, Index k_r, const PolyConfig& cfg,
                              Frame frame = Frame::Global) {
  if (k_r < 0 || k_r > cfg.order) throw Error(ErrorCode::ValidationError, "k_r must be <= n");
  const Index n = cfg.order, d = cfg.dim, blk = cfg.coeffs_per_segment();
  CostSpec cost;
  cost.derivative_order = k_r;
  cost.H = Mat::Zero(cfg.size(), cfg.size());
  auto falling = [k_r](Index i) {
    double c = 1.0;
    for (Index k = 0; k < k_r; ++k) c *= static_cast<double>(i - k);
    return c;
  };
  for (Index j = 0; j < cfg.segments; ++j) {
    const double t0 = knots.u[j], t1 = knots.u[j + 1];
    // Local frame: ∫_0^1 over τ, with dt = Δ dτ and d/dt = Δ^-1 d/dτ.
    const double scale = std::pow(t1 - t0, 1.0 - 2.0 * static_cast<double>(k_r));
    for (Index a = k_r; a <= n; ++a) {
      for (Index b = k_r; b <= n; ++b) {
        const double e = static_cast<double>(a + b - 2 * k_r + 1);
        const double val = frame == Frame::Global
                               ? falling(a) * falling(b) * (std::pow(t1, e) - std::pow(t0, e)) / e
                               : scale * falling(a) * falling(b) / e;
        for (Index c = 0; c < d; ++c) cost.H(j * blk + a * d + c, j * blk + b * d + c) = val;
      }
    }
  }
  return cost;
}

struct CorridorSpec {
  std::vector<double> width;  // δ_i per segment
  Index samples = 3;          // n_c
};

/// Affine inequalities  G x <= h; the constraint value is (G x − h).
struct AffineInequalities {
  Mat G;
  Vec h;
  std::vector<Index> segment;  // owning segment per row

  Index size() const { return G.rows(); }
  Vec values(const Vec& x) const { return G * x - h; }
};

/// Corridor constraints ‖(I − t tᵀ)(h(s_j) − q_i)‖∞ <= δ_i written as 2d
/// affine rows per sample s_j = t_i + j/(1 + n_c)·(t_{i+1} − t_i).
inline AffineInequalities corridor_constraints(const std::vector<Point>& waypoints,
                                               const KnotVector& knots, const CorridorSpec& spec,
                                               const PolyConfig& cfg, Frame frame = Frame::Global) {
  const Index m = cfg.segments, d = cfg.dim, blk = cfg.coeffs_per_segment();
  if (static_cast<Index>(waypoints.size()) != m + 1) {
    throw Error(ErrorCode::LengthMismatch, "waypoint count must be m + 1");
  }
  if (spec.samples < 1) throw Error(ErrorCode::ValidationError, "corridor samples must be >= 1");
  if (static_cast<Index>(spec.width.size()) != m) {
    throw Error(ErrorCode::LengthMismatch, "corridor width needs one entry per segment");
  }
  const Index rows = m * spec.samples * 2 * d;
  AffineInequalities out;
  out.G = Mat::Zero(rows, cfg.size());
  out.h = Vec::Zero(rows);
  out.segment.reserve(rows);
  Index r = 0;
  for (Index i = 0; i < m; ++i) {
    const double delta = spec.width[i];
    if (!(delta > 0.0)) throw Error(ErrorCode::ValidationError, "corridor width must be > 0");
    const Vec chord = waypoints[i + 1] - waypoints[i];
    if (!(chord.norm() > 0.0)) throw Error(ErrorCode::ZeroChord, "corridor segment has zero length");
    const Vec tan = chord / chord.norm();
    const Mat proj = Mat::Identity(d, d) - tan * tan.transpose();
    for (Index j = 1; j <= spec.samples; ++j) {
      const double s = knots.u[i] + static_cast<double>(j) / (1.0 + spec.samples) * (knots.u[i + 1] - knots.u[i]);
      const Mat PC = proj * segment_block(knots, i, s, 0, cfg, frame);
      const Vec Pq = proj * waypoints[i];
      for (Index c = 0; c < d; ++c) {
        out.G.block(r, i * blk, 1, blk) = PC.row(c);
        out.h(r) = delta + Pq(c);
        out.segment.push_back(i);
        ++r;
        out.G.block(r, i * blk, 1, blk) = -PC.row(c);
        out.h(r) = delta - Pq(c);
        out.segment.push_back(i);
        ++r;
      }
    }
  }
  return out;
}

struct QpSolution {
  Vec x;
  double objective = 0.0;  // xᵀHx
  double eq_residual = 0.0;
  double corridor_violation = 0.0;
  std::vector<Index> active_corridor;
  double kkt_stationarity = 0.0;
  double min_multiplier = 0.0;
  Vec eq_multipliers;
  Vec corridor_multipliers;
};

inline QpProblem make_trajectory_qp(const CostSpec& cost, const Mat& A, const Vec& b,
                                    const AffineInequalities& ineq) {
  QpProblem qp;
  qp.P = 2.0 * cost.H;
  qp.q = Vec::Zero(cost.H.rows());
  qp.A = A;
  qp.b = b;
  qp.G = ineq.G.rows() > 0 ? ineq.G : Mat(0, cost.H.rows());
  qp.h = ineq.h.size() > 0 ? ineq.h : Vec(0);
  return qp;
}

/// Solves min xᵀHx s.t. Ax = b, G x <= h and reports KKT residuals.
inline QpSolution solve_trajectory_qp(const CostSpec& cost, const Mat& A, const Vec& b,
                                      const AffineInequalities& ineq, const QpOptions& opt = {}) {
  const QpProblem qp = make_trajectory_qp(cost, A, b, ineq);
  const QpResult r = solve_qp(qp, opt);
  const KktResiduals k = kkt_residuals(qp, r);
  QpSolution s;
  s.x = r.x;
  s.objective = r.x.dot(cost.H * r.x);
  s.eq_residual = k.equality;
  s.corridor_violation = k.inequality;
  s.active_corridor = r.active;
  s.kkt_stationarity = k.stationarity;
  s.min_multiplier = k.min_multiplier;
  s.eq_multipliers = r.eq_multipliers;
  s.corridor_multipliers = r.ineq_multipliers;
  return s;
}

inline QpSolution solve_qp(const CostSpec& cost, const EqualitySystem& eq,
                           const AffineInequalities& ineq, const QpOptions& opt = {}) {
  return solve_trajectory_qp(cost, eq.A, eq.b, ineq, opt);
}

/// One trajectory QP in one frame.
struct TrajectoryQp {
  CostSpec cost;
  Mat A;
  Vec b;
  AffineInequalities ineq;
};

/// Solves the local-frame problem and reports x, multipliers and KKT
/// residuals against the global-frame problem. Rows of the two problems
/// correspond one to one, so the multipliers carry over unchanged.
inline QpSolution solve_trajectory_qp(const TrajectoryQp& global, const TrajectoryQp& local,
                                      const Mat& T, const QpOptions& opt = {}) {
  const QpProblem lqp = make_trajectory_qp(local.cost, local.A, local.b, local.ineq);
  QpResult r = solve_qp(lqp, opt);
  r.x = T * r.x;
  const QpProblem gqp = make_trajectory_qp(global.cost, global.A, global.b, global.ineq);
  const KktResiduals k = kkt_residuals(gqp, r);
  QpSolution s;
  s.x = r.x;
  s.objective = r.objective;
  s.eq_residual = k.equality;
  s.corridor_violation = k.inequality;
  s.active_corridor = r.active;
  s.kkt_stationarity = k.stationarity;
  s.min_multiplier = k.min_multiplier;
  s.eq_multipliers = r.eq_multipliers;
  s.corridor_multipliers = r.ineq_multipliers;
  return s;
}

struct KktAudit {
  bool equality = false;
  bool corridor = false;
  bool stationarity = false;
  bool multipliers = false;
  bool ok() const { return equality && corridor && stationarity && multipliers; }
};

inline KktAudit kkt_audit(const QpSolution& s) {
  KktAudit a;
  a.equality = s.eq_residual <= 1e-8;
  a.corridor = s.corridor_violation <= 1e-8;
  a.stationarity = s.kkt_stationarity <= 1e-6 * (1.0 + s.x.norm());
  a.multipliers = s.min_multiplier >= -1e-10;
  return a;
}

}  // namespace ovtube
