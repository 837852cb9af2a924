#pragma once

// Swarm simulation: discrete double integrators, each tracking its own tube
// member with a horizon-N MPC. Inter-robot avoidance uses half-spaces tangent
// to Minkowski-sum ellipses; the tube enters as cross-section hull
// inequalities (interior robots) or a tracking box (boundary robots).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ovtube/error.hpp"
#include "ovtube/geometry.hpp"
#include "ovtube/qp.hpp"
#include "ovtube/trajopt.hpp"
#include "ovtube/tube.hpp"

namespace ovtube {

struct RobotState {
  Point p;
  Vec v;
  Index id = 0;
};

/// x_{k+1} = A x_k + B u_k with x = (p, v):
///   A = [I, Ts·I; 0, I],  B = [0; Ts·I].
struct DiscreteDynamics {
  Index dim = 2;
  double Ts = 0.1;

  Mat A() const {
    Mat a = Mat::Identity(2 * dim, 2 * dim);
    a.topRightCorner(dim, dim) = Ts * Mat::Identity(dim, dim);
    return a;
  }
  Mat B() const {
    Mat b = Mat::Zero(2 * dim, dim);
    b.bottomRows(dim) = Ts * Mat::Identity(dim, dim);
    return b;
  }
  RobotState step(const RobotState& s, const Vec& u) const {
    RobotState n = s;
    n.p = s.p + Ts * s.v;
    n.v = s.v + Ts * u;
    return n;
  }
};

/// Robot j occupies {p : ‖E (p − p_j)‖ <= 1}; two robots must keep
/// ‖E (p_i − p_j)‖ >= 2.
struct AvoidanceModel {
  Vec E_diag;  // 1/m
  double safety_distance = 1.0;

  Mat E() const { return E_diag.asDiagonal(); }

  static AvoidanceModel spherical(Index dim, double radius, double safety) {
    return AvoidanceModel{Vec::Constant(dim, 1.0 / radius), safety};
  }
};

struct MpcConfig {
  Index horizon = 10;  // N
  double dt = 0.1;     // Ts
  double position_weight = 10.0;
  double velocity_weight = 1.0;
  double input_weight = 0.1;
  double terminal_scale = 10.0;  // Q_N = terminal_scale · Q_x
  double slack_weight = 1000.0;  // q_s
  double input_limit = 4.0;      // |u_c| <= input_limit per component
  double tube_tolerance = 0.5;   // ε_c
  double speed = 2.0;            // v_R
  double neighbor_radius = 6.0;
  double boundary_tol = 1e-6;
};

inline void validate_mpc_config(const MpcConfig& c) {
  if (c.horizon < 1) throw Error(ErrorCode::ValidationError, "horizon must be >= 1");
  if (!(c.dt > 0.0)) throw Error(ErrorCode::ValidationError, "dt must be > 0");
  if (!(c.position_weight > 0.0) || !(c.velocity_weight > 0.0) || !(c.input_weight > 0.0) ||
      !(c.terminal_scale > 0.0) || !(c.slack_weight > 0.0))
    throw Error(ErrorCode::ValidationError, "MPC weights must be positive");
  if (!(c.input_limit > 0.0)) throw Error(ErrorCode::ValidationError, "input_limit must be > 0");
  if (!(c.tube_tolerance > 0.0)) throw Error(ErrorCode::ValidationError, "tube_tolerance must be > 0");
  if (!(c.speed > 0.0)) throw Error(ErrorCode::ValidationError, "speed must be > 0");
  if (!(c.neighbor_radius > 0.0)) throw Error(ErrorCode::ValidationError, "neighbor_radius must be > 0");
}

/// s ↦ t = (v_R / u_m)·s, clamped to [0, 1].
struct TimeScaling {
  double u_m = 1.0;
  double v_R = 1.0;

  double rate() const { return v_R / u_m; }  // dt/ds
  double duration() const { return u_m / v_R; }
  double t(double s) const { return std::clamp(rate() * s, 0.0, 1.0); }
};

inline TimeScaling time_scaling(const KnotVector& unnormalized, double v_R) {
  if (!(v_R > 0.0)) throw Error(ErrorCode::ValidationError, "v_R must be > 0");
  if (!(unnormalized.back() > 0.0)) throw Error(ErrorCode::ZeroLength, "u_m must be > 0");
  return TimeScaling{unnormalized.back(), v_R};
}

struct ReferenceWindow {
  std::vector<Vec> p, v, u;  // N + 1 entries
  std::vector<double> t;     // normalized parameter per entry
};

inline ReferenceWindow reference_window(const PiecewisePolynomial& traj, const TimeScaling& ts,
                                        double s_now, Index N, double Ts) {
  ReferenceWindow w;
  const double r = ts.rate();
  const Vec goal = traj.evaluate(1.0);
  const Vec zero = Vec::Zero(goal.size());
  for (Index k = 0; k <= N; ++k) {
    const double s = s_now + static_cast<double>(k) * Ts;
    if (s >= ts.duration()) {
      w.p.push_back(goal);
      w.v.push_back(zero);
      w.u.push_back(zero);
      w.t.push_back(1.0);
    } else {
      const double t = ts.t(s);
      w.p.push_back(traj.evaluate(t));
      w.v.push_back(traj.evaluate(t, 1) * r);
      w.u.push_back(traj.evaluate(t, 2) * r * r);
      w.t.push_back(t);
    }
  }
  return w;
}

/// Robot i must satisfy normalᵀ p_{i,k} >= offset − s_k.
struct HalfSpace {
  Vec normal;
  double offset = 0.0;
  Index neighbor = 0;
  Index step = 0;  // 1..N
};

/// Tangent half-spaces of the Minkowski-sum ellipses at the points where the
/// segments p_{j,k} → p_{i,k} leave them. `fallback[j]` (may be empty)
/// replaces the normal when the centers coincide; with no fallback, `strict`
/// raises CoincidentCenters and otherwise the first axis is used.
inline std::vector<HalfSpace> avoidance_halfspaces(const std::vector<Point>& self_pred,
                                                   const std::vector<std::vector<Point>>& neighbors_pred,
                                                   const AvoidanceModel& model,
                                                   const std::vector<Vec>& fallback = {},
                                                   bool strict = false) {
  const Mat E = model.E();
  const Mat EtE = E.transpose() * E;
  std::vector<HalfSpace> out;
  for (std::size_t j = 0; j < neighbors_pred.size(); ++j) {
    if (neighbors_pred[j].size() != self_pred.size())
      throw Error(ErrorCode::SizeMismatch, "prediction lists must have equal length");
    for (std::size_t k = 1; k < self_pred.size(); ++k) {
      const Vec diff = self_pred[k] - neighbors_pred[j][k];
      const double en = (E * diff).norm();
      HalfSpace hs;
      hs.neighbor = static_cast<Index>(j);
      hs.step = static_cast<Index>(k);
      if (en <= 1e-12) {
        if (j < fallback.size() && fallback[j].size() > 0) {
          hs.normal = fallback[j].normalized();
        } else if (strict) {
          throw Error(ErrorCode::CoincidentCenters, "predicted centers coincide");
        } else {
          hs.normal = Vec::Unit(diff.size(), 0);
        }
        // Surface point along the fallback direction.
        const Vec p_star = neighbors_pred[j][k] + hs.normal * (2.0 / (E * hs.normal).norm());
        hs.offset = hs.normal.dot(p_star);
      } else {
        const Vec p_star = neighbors_pred[j][k] + diff * (2.0 / en);
        hs.normal = (EtE * (p_star - neighbors_pred[j][k])).normalized();
        hs.offset = hs.normal.dot(p_star);
      }
      out.push_back(hs);
    }
  }
  return out;
}

/// Per-step tube feasible set for one robot.
struct TubeStepSet {
  bool boundary = false;
  Mat normals;  // interior: normals·p <= offsets (+ slack)
  Vec offsets;
};

/// Cross-section hull inequalities at each window parameter; the robot
/// counts as a boundary robot at step k when its reference lies within
/// boundary_tol of the relative boundary.
inline std::vector<TubeStepSet> tube_sets(const OptimalVirtualTube& tube, const ReferenceWindow& w,
                                          double boundary_tol) {
  std::vector<TubeStepSet> sets;
  for (std::size_t k = 0; k < w.t.size(); ++k) {
    const RelativeHull hull = relative_hull(cross_section(tube, w.t[k]).points);
    TubeStepSet s;
    s.boundary = hull.normals.rows() == 0 || hull.depth(w.p[k]) <= boundary_tol;
    s.normals = hull.normals;
    s.offsets = hull.offsets + hull.normals * hull.center;
    sets.push_back(s);
  }
  return sets;
}

struct MpcResult {
  Vec u0;
  std::vector<Point> predicted;  // p_0..p_N
  std::vector<Vec> predicted_v;
  Vec slack;                     // s_1..s_N
  QpResult qp;
};

/// Horizon QP over z = (u_0..u_{N−1}, x_1..x_N, s_1..s_N):
///   Σ_{k=1}^{N−1} x̃_kᵀQ_x x̃_k + x̃_NᵀQ_N x̃_N + Σ ũ_kᵀQ_u ũ_k + q_s Σ s_k²
/// subject to the dynamics, input bounds, s >= 0, avoidance half-spaces and
/// the tube sets, all softened by the shared slack s_k. `tube_steps` may be
/// empty (no tube constraint).
inline MpcResult mpc_step(const RobotState& state, const ReferenceWindow& ref,
                          const std::vector<HalfSpace>& halfspaces,
                          const std::vector<TubeStepSet>& tube_steps, const MpcConfig& cfg) {
  const Index d = state.p.size(), N = cfg.horizon, nx = 2 * d;
  if (static_cast<Index>(ref.p.size()) != N + 1)
    throw Error(ErrorCode::SizeMismatch, "reference window must have N + 1 entries");
  const Index nu = N * d, ns = N, nz = nu + N * nx + ns;
  auto ui = [&](Index k) { return k * d; };                 // k = 0..N−1
  auto xi = [&](Index k) { return nu + (k - 1) * nx; };     // k = 1..N
  auto si = [&](Index k) { return nu + N * nx + (k - 1); }; // k = 1..N

  const DiscreteDynamics dyn{d, cfg.dt};
  const Mat A = dyn.A(), B = dyn.B();

  Vec qx(nx);
  qx << Vec::Constant(d, cfg.position_weight), Vec::Constant(d, cfg.velocity_weight);

  QpProblem qp;
  qp.P = Mat::Zero(nz, nz);
  qp.q = Vec::Zero(nz);
  for (Index k = 0; k < N; ++k) {
    for (Index c = 0; c < d; ++c) {
      qp.P(ui(k) + c, ui(k) + c) = 2.0 * cfg.input_weight;
      qp.q(ui(k) + c) = -2.0 * cfg.input_weight * ref.u[k](c);
    }
  }
  for (Index k = 1; k <= N; ++k) {
    const double scale = k == N ? cfg.terminal_scale : 1.0;
    Vec xd(nx);
    xd << ref.p[k], ref.v[k];
    for (Index c = 0; c < nx; ++c) {
      qp.P(xi(k) + c, xi(k) + c) = 2.0 * scale * qx(c);
      qp.q(xi(k) + c) = -2.0 * scale * qx(c) * xd(c);
    }
    qp.P(si(k), si(k)) = 2.0 * cfg.slack_weight;
  }

  // Dynamics: x_k − A x_{k−1} − B u_{k−1} = 0, with x_0 given.
  qp.A = Mat::Zero(N * nx, nz);
  qp.b = Vec::Zero(N * nx);
  Vec x0(nx);
  x0 << state.p, state.v;
  for (Index k = 1; k <= N; ++k) {
    const Index r = (k - 1) * nx;
    qp.A.block(r, xi(k), nx, nx) = Mat::Identity(nx, nx);
    qp.A.block(r, ui(k - 1), nx, d) = -B;
    if (k == 1) {
      qp.b.segment(r, nx) = A * x0;
    } else {
      qp.A.block(r, xi(k - 1), nx, nx) = -A;
    }
  }

  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  auto add = [&](const Eigen::RowVectorXd& g, double h) {
    rows.push_back(g);
    rhs.push_back(h);
  };
  for (Index k = 0; k < N; ++k) {
    for (Index c = 0; c < d; ++c) {
      Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(nz);
      g(ui(k) + c) = 1.0;
      add(g, cfg.input_limit);
      add(-g, cfg.input_limit);
    }
  }
  for (Index k = 1; k <= N; ++k) {
    Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(nz);
    g(si(k)) = -1.0;
    add(g, 0.0);
  }
  for (const auto& hs : halfspaces) {
    if (hs.step < 1 || hs.step > N) continue;
    Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(nz);
    g.segment(xi(hs.step), d) = -hs.normal.transpose();
    g(si(hs.step)) = -1.0;
    add(g, -hs.offset);
  }
  if (!tube_steps.empty()) {
    const double box = cfg.tube_tolerance / std::sqrt(static_cast<double>(d));
    for (Index k = 1; k <= N; ++k) {
      const TubeStepSet& ts = tube_steps[k];
      if (ts.boundary) {
        for (Index c = 0; c < d; ++c) {
          Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(nz);
          g(xi(k) + c) = 1.0;
          g(si(k)) = -1.0;
          add(g, ref.p[k](c) + box);
          g(xi(k) + c) = -1.0;
          add(g, box - ref.p[k](c));
        }
      } else {
        for (Index f = 0; f < ts.normals.rows(); ++f) {
          Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(nz);
          g.segment(xi(k), d) = ts.normals.row(f);
          g(si(k)) = -1.0;
          add(g, ts.offsets(f));
        }
      }
    }
  }
  qp.G = Mat(static_cast<Index>(rows.size()), nz);
  qp.h = Vec(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    qp.G.row(static_cast<Index>(i)) = rows[i];
    qp.h(static_cast<Index>(i)) = rhs[i];
  }

  MpcResult res;
  res.qp = solve_qp(qp);
  const Vec& z = res.qp.x;
  res.u0 = z.segment(ui(0), d);
  res.predicted.push_back(state.p);
  res.predicted_v.push_back(state.v);
  for (Index k = 1; k <= N; ++k) {
    res.predicted.push_back(z.segment(xi(k), d));
    res.predicted_v.push_back(z.segment(xi(k) + d, d));
  }
  res.slack = z.segment(si(1), N);
  return res;
}

struct SimConfig {
  MpcConfig mpc;
  AvoidanceModel avoidance;
  std::optional<double> time_limit;  // s; default 3 × nominal traversal time
  double goal_radius = 0.2;  // m
  int threads = 1;
};

struct SimLog {
  Index dim = 2;
  double dt = 0.1;
  std::vector<Point> goals;            // per robot
  std::vector<double> times;           // per tick
  std::vector<std::vector<Point>> p;   // [tick][robot]
  std::vector<std::vector<Vec>> v;
  std::vector<std::vector<Vec>> u;     // command applied at that tick (zero on the last)
  double max_slack = 0.0;

  Index robots() const { return static_cast<Index>(goals.size()); }
  Index ticks() const { return static_cast<Index>(times.size()); }
};

struct Metrics {
  double average_time = 0.0;  // +inf when any robot misses the limit
  double arrival_rate = 1.0;
  double average_speed = 0.0;
  double min_pairwise_distance = std::numeric_limits<double>::infinity();
  std::vector<double> arrival_times;  // +inf for robots that never arrive
};

inline Metrics compute_metrics(const SimLog& log, double time_limit, double goal_radius) {
  Metrics m;
  const Index R = log.robots();
  const double inf = std::numeric_limits<double>::infinity();
  for (Index t = 0; t < log.ticks(); ++t)
    for (Index i = 0; i < R; ++i)
      for (Index j = i + 1; j < R; ++j)
        m.min_pairwise_distance = std::min(m.min_pairwise_distance, (log.p[t][i] - log.p[t][j]).norm());
  if (R == 0) return m;

  Index arrived = 0;
  double time_sum = 0.0, speed_sum = 0.0;
  for (Index i = 0; i < R; ++i) {
    double length = 0.0, arrival = inf;
    for (Index t = 0; t < log.ticks(); ++t) {
      if (t > 0) length += (log.p[t][i] - log.p[t - 1][i]).norm();
      if (log.times[t] > time_limit) break;
      if ((log.p[t][i] - log.goals[i]).norm() <= goal_radius) {
        arrival = log.times[t];
        break;
      }
    }
    m.arrival_times.push_back(arrival);
    if (std::isfinite(arrival)) {
      ++arrived;
      time_sum += arrival;
      speed_sum += arrival > 0.0 ? length / arrival : 0.0;
    }
  }
  m.arrival_rate = static_cast<double>(arrived) / static_cast<double>(R);
  m.average_time = arrived == R ? time_sum / static_cast<double>(R) : inf;
  m.average_speed = arrived > 0 ? speed_sum / static_cast<double>(arrived) : 0.0;
  return m;
}

/// One robot's tracking target: its weights and member trajectory.
struct SimRobot {
  Vec theta;
  PiecewisePolynomial trajectory;
  Point goal;
};

inline std::vector<SimRobot> assign_members(const OptimalVirtualTube& tube,
                                            const std::vector<Point>& starts) {
  Terminal ordered;
  for (Index k = 0; k < tube.q(); ++k) ordered.vertices.push_back(tube.pairs.start_vertex(k));
  std::vector<SimRobot> robots;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    if (starts[i].size() != tube.poly.dim)
      throw Error(ErrorCode::SizeMismatch, "robot start has the wrong dimension");
    BarycentricWeights w;
    try {
      w = barycentric_weights(starts[i], ordered);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::PointOutsideHull) throw;
      throw Error(ErrorCode::StartOutsideTerminal, "robot " + std::to_string(i) + " starts outside the start terminal");
    }
    SimRobot r{w.theta, member_trajectory(tube, w.theta), Point()};
    r.goal = r.trajectory.evaluate(1.0);
    robots.push_back(r);
  }
  return robots;
}

/// Synchronous simulation: every robot plans against the tick-start
/// snapshot (its own and its neighbors' previous plans), then all inputs are
/// applied together.
inline SimLog simulate(const std::vector<Point>& starts, const OptimalVirtualTube& tube,
                       const SimConfig& cfg) {
  validate_mpc_config(cfg.mpc);
  const Index d = tube.poly.dim, R = static_cast<Index>(starts.size()), N = cfg.mpc.horizon;
  const double Ts = cfg.mpc.dt;
  const TimeScaling scaling = time_scaling(tube.public_knots, cfg.mpc.speed);
  const double limit = cfg.time_limit ? *cfg.time_limit : 3.0 * scaling.duration();
  const std::vector<SimRobot> robots = assign_members(tube, starts);
  const DiscreteDynamics dyn{d, Ts};

  SimLog log;
  log.dim = d;
  log.dt = Ts;
  for (const auto& r : robots) log.goals.push_back(r.goal);

  std::vector<RobotState> states;
  std::vector<std::vector<Point>> plans(R);  // p_0..p_N of the last plan
  std::vector<std::map<Index, Vec>> last_normal(R);
  for (Index i = 0; i < R; ++i) {
    states.push_back(RobotState{starts[i], Vec::Zero(d), i});
    for (Index k = 0; k <= N; ++k) plans[i].push_back(starts[i]);
  }

  auto record = [&](double time, const std::vector<Vec>& u) {
    log.times.push_back(time);
    std::vector<Point> ps;
    std::vector<Vec> vs;
    for (const auto& s : states) {
      ps.push_back(s.p);
      vs.push_back(s.v);
    }
    log.p.push_back(ps);
    log.v.push_back(vs);
    log.u.push_back(u);
  };

  for (Index tick = 0;; ++tick) {
    const double time = static_cast<double>(tick) * Ts;
    bool all_in = true;
    for (Index i = 0; i < R; ++i)
      if ((states[i].p - robots[i].goal).norm() > cfg.goal_radius) all_in = false;
    if (all_in || time >= limit - 1e-12) {
      record(time, std::vector<Vec>(R, Vec::Zero(d)));
      break;
    }

    // Predictions from the snapshot: previous plans shifted by one step.
    std::vector<std::vector<Point>> pred(R);
    for (Index i = 0; i < R; ++i) {
      if (tick == 0) {
        for (Index k = 0; k <= N; ++k) pred[i].push_back(states[i].p + static_cast<double>(k) * Ts * states[i].v);
      } else {
        for (Index k = 0; k <= N; ++k) pred[i].push_back(plans[i][std::min(k + 1, N)]);
        pred[i][0] = states[i].p;
      }
    }

    auto plan_one = [&](Index i) {
      std::vector<std::vector<Point>> nbr;
      std::vector<Index> ids;
      std::vector<Vec> fallback;
      for (Index j = 0; j < R; ++j) {
        if (j == i || (states[j].p - states[i].p).norm() > cfg.mpc.neighbor_radius) continue;
        nbr.push_back(pred[j]);
        ids.push_back(j);
        const auto it = last_normal[i].find(j);
        fallback.push_back(it != last_normal[i].end() ? it->second : Vec());
      }
      const std::vector<HalfSpace> hs = avoidance_halfspaces(pred[i], nbr, cfg.avoidance, fallback);
      const ReferenceWindow ref = reference_window(robots[i].trajectory, scaling, time, N, Ts);
      const std::vector<TubeStepSet> sets = tube_sets(tube, ref, cfg.mpc.boundary_tol);
      MpcResult res = mpc_step(states[i], ref, hs, sets, cfg.mpc);
      std::map<Index, Vec> normals;
      for (const auto& h : hs)
        if (h.step == 1) normals[ids[h.neighbor]] = h.normal;
      return std::make_pair(std::move(res), std::move(normals));
    };

    std::vector<MpcResult> results(R);
    const int threads = std::max(1, cfg.threads);
    auto run_range = [&](Index lo, Index hi) {
      for (Index i = lo; i < hi; ++i) {
        auto [res, normals] = plan_one(i);
        results[i] = std::move(res);
        for (auto& [j, n] : normals) last_normal[i][j] = n;
      }
    };
    if (threads == 1 || R < 2) {
      run_range(0, R);
    } else {
      std::vector<std::future<void>> jobs;
      const Index chunk = (R + threads - 1) / threads;
      for (Index lo = 0; lo < R; lo += chunk) jobs.push_back(std::async(std::launch::async, run_range, lo, std::min(R, lo + chunk)));
      for (auto& j : jobs) j.get();
    }

    std::vector<Vec> u(R);
    for (Index i = 0; i < R; ++i) {
      u[i] = results[i].u0;
      plans[i] = results[i].predicted;
      if (results[i].slack.size() > 0) log.max_slack = std::max(log.max_slack, results[i].slack.maxCoeff());
    }
    record(time, u);
    for (Index i = 0; i < R; ++i) states[i] = dyn.step(states[i], u[i]);
  }
  return log;
}

}  // namespace ovtube
