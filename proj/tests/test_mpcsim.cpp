#include <gtest/gtest.h>

#include "fixtures.hpp"

namespace {

using namespace ovtube;
using namespace ovtube::testing;

Vec v2(double x, double y) { return pt(x, y); }

OptimalVirtualTube straight_tube() {
  const OrderPairSet pairs{Terminal{{pt(0, -2), pt(0, 2)}}, Terminal{{pt(20, -2), pt(20, 2)}}, {0, 1}};
  std::vector<WaypointPath> paths;
  for (int k = 0; k < 2; ++k) {
    const Point a = pairs.start_vertex(k), b = pairs.goal_vertex(k);
    paths.push_back(WaypointPath{{a, 0.5 * (a + b), b}, k});
  }
  return assemble_tube(pairs, equalize_waypoints(paths, 7), TrajectoryConfig{});
}

// Reference generated by the discrete dynamics under a constant input, so
// that zero tracking error is attainable.
ReferenceWindow consistent_window(const Point& p0, const Vec& v0, const Vec& a, Index N, double Ts) {
  ReferenceWindow w;
  Point p = p0;
  Vec v = v0;
  for (Index k = 0; k <= N; ++k) {
    w.p.push_back(p);
    w.v.push_back(v);
    w.u.push_back(a);
    w.t.push_back(0.0);
    p = p + Ts * v;
    v = v + Ts * a;
  }
  return w;
}

TEST(Dynamics, MatricesAndStep) {
  const DiscreteDynamics dyn{2, 0.1};
  Mat A = Mat::Identity(4, 4);
  A(0, 2) = A(1, 3) = 0.1;
  Mat B = Mat::Zero(4, 2);
  B(2, 0) = B(3, 1) = 0.1;
  EXPECT_EQ(dyn.A(), A);
  EXPECT_EQ(dyn.B(), B);
  const RobotState s{v2(1, 2), v2(3, -4), 0};
  const RobotState n = dyn.step(s, v2(10, 10));
  EXPECT_LE((n.p - s.p - 0.1 * s.v).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(n.v, v2(4, -3));
}

TEST(TimeScaling, Completion) {
  const TimeScaling ts = time_scaling(KnotVector{{0, 4, 10}}, 5.0);
  EXPECT_DOUBLE_EQ(ts.duration(), 2.0);
  const TimeScaling id = time_scaling(KnotVector{{0, 3}}, 3.0);
  for (double s : {0.0, 0.25, 0.9}) EXPECT_DOUBLE_EQ(id.t(s), s);
  EXPECT_DOUBLE_EQ(id.t(5.0), 1.0);
}

TEST(ReferenceWindow, StraightLineAndHold) {
  // h(t) = (10 t, 0), u_m = 10, v_R = 2.
  const PolyConfig cfg{2, 5, 1};
  Vec x = Vec::Zero(cfg.size());
  x(2) = 10.0;
  const PiecewisePolynomial line{cfg, KnotVector{{0, 1}, true}, x};
  const TimeScaling ts{10.0, 2.0};
  const ReferenceWindow w = reference_window(line, ts, 1.0, 10, 0.1);
  ASSERT_EQ(w.p.size(), 11u);
  for (std::size_t k = 0; k < w.p.size(); ++k) {
    EXPECT_NEAR(w.v[k](0), 2.0, 1e-12);
    EXPECT_NEAR(w.u[k].norm(), 0.0, 1e-12);
  }
  // Finite difference of the composed map gives the desired speed.
  EXPECT_NEAR((w.p[1] - w.p[0]).norm() / 0.1, 2.0, 1e-9);

  const ReferenceWindow late = reference_window(line, ts, 7.0, 4, 0.1);
  for (std::size_t k = 0; k < late.p.size(); ++k) {
    EXPECT_EQ(late.p[k], v2(10, 0));
    EXPECT_EQ(late.v[k], v2(0, 0));
    EXPECT_EQ(late.u[k], v2(0, 0));
  }
  EXPECT_EQ(reference_window(line, ts, 0.0, 0, 0.1).p.size(), 1u);
}

TEST(Avoidance, SeparatedAlongX) {
  const AvoidanceModel model = AvoidanceModel::spherical(2, 0.65, 1.0);
  const std::vector<Point> self(3, v2(0, 0));
  const std::vector<std::vector<Point>> nbr{std::vector<Point>(3, v2(3, 0))};
  const auto hs = avoidance_halfspaces(self, nbr, model);
  ASSERT_EQ(hs.size(), 2u);  // steps 1..N
  for (const auto& h : hs) {
    EXPECT_LE((h.normal - v2(-1, 0)).norm(), 1e-12);
    // Tangent point at distance 2r from the neighbor: −x >= −(3 − 1.3).
    EXPECT_NEAR(h.offset, -1.7, 1e-12);
    EXPECT_GT(h.normal.dot(self[1]), h.offset);
  }
}

TEST(Avoidance, HeadOnNormalsAntiparallel) {
  const AvoidanceModel model = AvoidanceModel::spherical(2, 0.5, 1.0);
  std::vector<Point> a, b;
  for (int k = 0; k <= 5; ++k) {
    a.push_back(v2(-4 + 0.5 * k, 1));
    b.push_back(v2(4 - 0.5 * k, 1));
  }
  const auto ha = avoidance_halfspaces(a, {b}, model);
  const auto hb = avoidance_halfspaces(b, {a}, model);
  ASSERT_EQ(ha.size(), hb.size());
  for (std::size_t k = 0; k < ha.size(); ++k) {
    EXPECT_LE((ha[k].normal + hb[k].normal).norm(), 1e-12);
    EXPECT_LE((ha[k].normal - v2(-1, 0)).norm(), 1e-12);
  }
}

TEST(Avoidance, EllipticNormalIsSurfaceGradient) {
  AvoidanceModel model{v2(1.0, 2.0), 1.0};  // semi-axes 1 and 0.5
  const std::vector<Point> self{v2(0, 0), v2(3, 3)};
  const std::vector<std::vector<Point>> nbr{{v2(0, 0), v2(0, 0)}};
  const HalfSpace h = avoidance_halfspaces(self, nbr, model).front();
  // Surface point of the doubled ellipse {‖E p‖ = 2} along (1, 1).
  const Vec dir = v2(1, 1);
  const Vec ps = dir * (2.0 / (model.E() * dir).norm());
  EXPECT_NEAR((model.E() * ps).norm(), 2.0, 1e-12);
  const Vec grad = (model.E().transpose() * model.E() * ps).normalized();
  EXPECT_LE((h.normal - grad).norm(), 1e-12);
  EXPECT_NEAR(h.offset, grad.dot(ps), 1e-12);
}

TEST(Avoidance, CoincidentCenters) {
  const AvoidanceModel model = AvoidanceModel::spherical(2, 0.5, 1.0);
  const std::vector<Point> self(2, v2(1, 1));
  const std::vector<std::vector<Point>> nbr{self};
  try {
    avoidance_halfspaces(self, nbr, model, {}, true);
    ADD_FAILURE() << "expected CoincidentCenters";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CoincidentCenters);
  }
  const auto fb = avoidance_halfspaces(self, nbr, model, {v2(0, 2)});
  EXPECT_LE((fb[0].normal - v2(0, 1)).norm(), 1e-15);
  const auto axis = avoidance_halfspaces(self, nbr, model);
  EXPECT_LE((axis[0].normal - v2(1, 0)).norm(), 1e-15);
}

TEST(Mpc, ConsistentReferenceGivesFeedforward) {
  MpcConfig cfg;
  const Vec a = v2(1.0, -0.5);
  const ReferenceWindow w = consistent_window(v2(0, 0), v2(2, 0), a, cfg.horizon, cfg.dt);
  const MpcResult r = mpc_step(RobotState{w.p[0], w.v[0], 0}, w, {}, {}, cfg);
  EXPECT_LE((r.u0 - a).norm(), 1e-8);
  EXPECT_LE(r.slack.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Mpc, PullsTowardReference) {
  MpcConfig cfg;
  const ReferenceWindow w = consistent_window(v2(0, 0), v2(0, 0), v2(0, 0), cfg.horizon, cfg.dt);
  const RobotState s{v2(1, 0), v2(0, 0), 0};
  const MpcResult r = mpc_step(s, w, {}, {}, cfg);
  EXPECT_GT(r.u0.dot(w.p[0] - s.p), 0.0);
}

TEST(Mpc, SingleStepHandKkt) {
  // d = 1, N = 1: minimize q_u(u − u_d)² + 10·(w_p(p₁ − p_d)² + w_v(v₁ − v_d)²)
  // with p₁ = p₀ + Ts v₀, v₁ = v₀ + Ts u. Only v₁ depends on u, so
  //   u* = (q_u u_d + 10 w_v Ts (v_d − v₀)) / (q_u + 10 w_v Ts²) = 3.
  MpcConfig cfg;
  cfg.horizon = 1;
  cfg.input_limit = 10.0;
  ReferenceWindow w;
  Vec one(1), pd(1), vd(1), ud(1);
  one << 0.0;
  pd << 0.2;
  vd << 0.5;
  ud << 1.0;
  w.p = {one, pd};
  w.v = {one, vd};
  w.u = {ud, ud};
  w.t = {0, 0};
  const MpcResult r = mpc_step(RobotState{one, one, 0}, w, {}, {}, cfg);
  EXPECT_NEAR(r.u0(0), 3.0, 1e-12);
  EXPECT_NEAR(r.predicted_v[1](0), 0.3, 1e-12);
  EXPECT_NEAR(r.slack(0), 0.0, 1e-12);
}

TEST(Mpc, InputLimitRespected) {
  MpcConfig cfg;
  const ReferenceWindow w = consistent_window(v2(0, 0), v2(0, 0), v2(0, 0), cfg.horizon, cfg.dt);
  const MpcResult r = mpc_step(RobotState{v2(30, -30), v2(0, 0), 0}, w, {}, {}, cfg);
  EXPECT_NEAR(r.u0(0), -4.0, 1e-9);
  EXPECT_NEAR(r.u0(1), 4.0, 1e-9);
}

TEST(Mpc, HalfSpaceWithSlackKeepsDistance) {
  MpcConfig cfg;
  // Reference drives straight at a parked neighbor.
  const ReferenceWindow w = consistent_window(v2(0, 0), v2(2, 0), v2(0, 0), cfg.horizon, cfg.dt);
  const AvoidanceModel model = AvoidanceModel::spherical(2, 0.5, 1.0);
  std::vector<Point> self(w.p.begin(), w.p.end());
  const std::vector<std::vector<Point>> nbr{std::vector<Point>(self.size(), v2(2.5, 0))};
  const MpcResult r = mpc_step(RobotState{w.p[0], w.v[0], 0}, w, avoidance_halfspaces(self, nbr, model), {}, cfg);
  for (Index k = 1; k <= cfg.horizon; ++k) EXPECT_LE(r.predicted[k](0), 1.5 + r.slack(k - 1) + 1e-9);
}

TEST(Metrics, ArrivalArithmetic) {
  SimLog log;
  log.goals = {v2(4, 0), v2(6, 5)};
  for (int t = 0; t <= 6; ++t) {
    log.times.push_back(t);
    log.p.push_back({v2(std::min(t, 4), 0), v2(std::min(t, 6), 5)});
  }
  Metrics m = compute_metrics(log, 100.0, 0.2);
  EXPECT_DOUBLE_EQ(m.average_time, 5.0);
  EXPECT_DOUBLE_EQ(m.arrival_rate, 1.0);
  EXPECT_DOUBLE_EQ(m.average_speed, 1.0);
  EXPECT_DOUBLE_EQ(m.min_pairwise_distance, 5.0);

  log.goals[1] = v2(50, 5);
  m = compute_metrics(log, 100.0, 0.2);
  EXPECT_TRUE(std::isinf(m.average_time));
  EXPECT_DOUBLE_EQ(m.arrival_rate, 0.5);

  m = compute_metrics(log, 3.0, 0.2);  // robot 0 would arrive at 4 s
  EXPECT_DOUBLE_EQ(m.arrival_rate, 0.0);
}

TEST(Metrics, AverageSpeed) {
  SimLog log;
  log.goals = {v2(10, 0)};
  log.times = {0, 1, 2};
  log.p = {{v2(0, 0)}, {v2(5, 0)}, {v2(10, 0)}};
  EXPECT_DOUBLE_EQ(compute_metrics(log, 10.0, 0.2).average_speed, 5.0);
}

class SimTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { tube_ = new OptimalVirtualTube(straight_tube()); }
  static void TearDownTestSuite() { delete tube_; }
  static OptimalVirtualTube* tube_;
};
OptimalVirtualTube* SimTest::tube_ = nullptr;

SimConfig default_sim() {
  SimConfig c;
  c.avoidance = AvoidanceModel::spherical(2, 0.65, 1.0);
  return c;
}

TEST_F(SimTest, SingleRobotTracksReference) {
  // At v_R = 2 the waypoint timing asks for more than the input bound near
  // the ends; at v_R = 1 the reference stays inside it.
  SimConfig cfg = default_sim();
  cfg.mpc.speed = 1.0;
  const SimLog log = simulate({v2(0, 0.5)}, *tube_, cfg);
  const Metrics m = compute_metrics(log, 3.0 * tube_->public_knots.back() / cfg.mpc.speed, cfg.goal_radius);
  EXPECT_DOUBLE_EQ(m.arrival_rate, 1.0);
  EXPECT_LE(log.max_slack, 1e-6);

  const auto robots = assign_members(*tube_, {v2(0, 0.5)});
  const TimeScaling ts = time_scaling(tube_->public_knots, cfg.mpc.speed);
  double worst = 0.0;
  for (Index t = 0; t < log.ticks(); ++t) {
    if (log.times[t] < 1.0) continue;  // transient
    const ReferenceWindow w = reference_window(robots[0].trajectory, ts, log.times[t], 0, cfg.mpc.dt);
    worst = std::max(worst, (log.p[t][0] - w.p[0]).norm());
  }
  EXPECT_LE(worst, 0.1);
  for (Index t = 1; t < log.ticks(); ++t)
    EXPECT_LE((log.p[t][0] - log.p[t - 1][0] - cfg.mpc.dt * log.v[t - 1][0]).cwiseAbs().maxCoeff(), 1e-12);
}

TEST_F(SimTest, DeterministicAcrossThreadCounts) {
  SimConfig cfg = default_sim();
  cfg.time_limit = 3.0;
  const std::vector<Point> starts{v2(0, -1.5), v2(0, 0), v2(0, 1.5)};
  const SimLog a = simulate(starts, *tube_, cfg);
  cfg.threads = 3;
  const SimLog b = simulate(starts, *tube_, cfg);
  ASSERT_EQ(a.ticks(), b.ticks());
  for (Index t = 0; t < a.ticks(); ++t)
    for (Index i = 0; i < 3; ++i) EXPECT_EQ(a.p[t][i], b.p[t][i]);
}

TEST_F(SimTest, EmptySwarm) {
  const SimLog log = simulate({}, *tube_, default_sim());
  EXPECT_EQ(log.robots(), 0);
  const Metrics m = compute_metrics(log, 10.0, 0.2);
  EXPECT_DOUBLE_EQ(m.arrival_rate, 1.0);
  EXPECT_DOUBLE_EQ(m.average_time, 0.0);
}

TEST_F(SimTest, ZeroTimeLimit) {
  SimConfig cfg = default_sim();
  cfg.time_limit = 0.0;
  const SimLog log = simulate({v2(0, 0)}, *tube_, cfg);
  const Metrics m = compute_metrics(log, 0.0, cfg.goal_radius);
  EXPECT_DOUBLE_EQ(m.arrival_rate, 0.0);
  EXPECT_TRUE(std::isinf(m.average_time));
}

TEST_F(SimTest, StartOutsideTerminal) {
  try {
    simulate({v2(0.5, 0)}, *tube_, default_sim());
    ADD_FAILURE() << "expected StartOutsideTerminal";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StartOutsideTerminal);
  }
}

TEST_F(SimTest, TubeSetsMarkBoundaryRobots) {
  const auto robots = assign_members(*tube_, {v2(0, 2), v2(0, 0)});
  const TimeScaling ts = time_scaling(tube_->public_knots, 2.0);
  const auto edge = tube_sets(*tube_, reference_window(robots[0].trajectory, ts, 1.0, 3, 0.1), 1e-6);
  const auto mid = tube_sets(*tube_, reference_window(robots[1].trajectory, ts, 1.0, 3, 0.1), 1e-6);
  for (const auto& s : edge) EXPECT_TRUE(s.boundary);
  for (const auto& s : mid) {
    EXPECT_FALSE(s.boundary);
    EXPECT_EQ(s.normals.rows(), 2);
  }
}

}  // namespace
