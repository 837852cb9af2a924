#include <gtest/gtest.h>

#include "fixtures.hpp"

namespace {

using namespace ovtube;
using namespace ovtube::testing;

Vec W(std::initializer_list<double> c) {
  Vec v(static_cast<Index>(c.size()));
  Index i = 0;
  for (double x : c) v(i++) = x;
  return v;
}

class TubeTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    plain_ = new OptimalVirtualTube(equality_only_tube());
    active_ = new OptimalVirtualTube(active_corridor_tube());
  }
  static void TearDownTestSuite() {
    delete plain_;
    delete active_;
  }
  static OptimalVirtualTube* plain_;
  static OptimalVirtualTube* active_;
};
OptimalVirtualTube* TubeTest::plain_ = nullptr;
OptimalVirtualTube* TubeTest::active_ = nullptr;

TEST_F(TubeTest, UnitWeightsReproduceBasis) {
  for (Index k = 0; k < plain_->q(); ++k) {
    Vec th = Vec::Zero(plain_->q());
    th(k) = 1.0;
    EXPECT_EQ(member_trajectory(*plain_, th).x, plain_->basis_x[k]);
  }
}

TEST_F(TubeTest, MidpointWeights) {
  const Vec x = member_trajectory(*plain_, W({0.5, 0.5})).x;
  EXPECT_LE((x - 0.5 * (plain_->basis_x[0] + plain_->basis_x[1])).cwiseAbs().maxCoeff(), 0.0);
}

TEST_F(TubeTest, InvalidWeightsRejected) {
  for (const Vec& th : {W({-0.1, 1.1}), W({0.3, 0.3}), W({1.0})}) {
    try {
      member_trajectory(*plain_, th);
      ADD_FAILURE() << "accepted invalid weights";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidWeights);
    }
  }
}

TEST_F(TubeTest, EndpointsAreMappedPoints) {
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    const Vec th = random_weights(2, rng);
    const PiecewisePolynomial m = member_trajectory(*plain_, th);
    Point s = Point::Zero(2);
    for (Index k = 0; k < 2; ++k) s += th(k) * plain_->pairs.start_vertex(k);
    EXPECT_LE((m.evaluate(0.0) - s).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((m.evaluate(1.0) - map_point(plain_->pairs, s)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST_F(TubeTest, CrossSectionsSpanTerminals) {
  const CrossSection c0 = cross_section(*plain_, 0.0), c1 = cross_section(*plain_, 1.0);
  for (Index k = 0; k < 2; ++k) {
    EXPECT_LE((c0.points[k] - plain_->pairs.start_vertex(k)).norm(), 1e-9);
    EXPECT_LE((c1.points[k] - plain_->pairs.goal_vertex(k)).norm(), 1e-9);
  }
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    const Vec th = random_weights(2, rng);
    const double t = uniform01(rng);
    const Point p = member_trajectory(*plain_, th).evaluate(t);
    const Terminal cs{cross_section(*plain_, t).points};
    const Vec back = barycentric_weights(p, cs).theta;
    EXPECT_LE((cs.matrix() * back - p).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST_F(TubeTest, EqualityOnlyMembersAreOptimal) {
  EXPECT_EQ(plain_->qp_solves, 2);
  Rng rng(21);
  for (int i = 0; i < 10; ++i) {
    const MemberVerification v = verify_member_optimality(*plain_, random_weights(2, rng));
    EXPECT_TRUE(v.ok()) << "coef " << v.coefficient_error << " obj " << v.objective_rel_error << " var "
                        << v.variational_min;
    EXPECT_FALSE(v.corridor_active);
    EXPECT_EQ(v.variational_samples, 100);
  }
}

TEST_F(TubeTest, SharedActiveCorridorMembersAreOptimal) {
  for (Index k = 0; k < 2; ++k) {
    const Vec vals = basis_corridor(*active_, k).values(active_->basis_x[k]);
    EXPECT_GT(vals.maxCoeff(), -1e-9) << "basis " << k << " should touch the corridor";
  }
  Rng rng(22);
  for (int i = 0; i < 10; ++i) {
    const MemberVerification v = verify_member_optimality(*active_, random_weights(2, rng));
    EXPECT_TRUE(v.corridor_active);
    EXPECT_TRUE(v.ok()) << "coef " << v.coefficient_error << " obj " << v.objective_rel_error << " var "
                        << v.variational_min;
  }
}

TEST_F(TubeTest, TamperedBasisFailsVerification) {
  OptimalVirtualTube bad = *plain_;
  bad.basis_x[0](7) += 1e-3;
  rebuild_derived(bad);
  EXPECT_FALSE(verify_member_optimality(bad, W({0.4, 0.6})).ok());
}

TEST(Tube, SinglePairIsOneTrajectory) {
  const OrderPairSet pairs{Terminal{{pt(0, 0)}}, Terminal{{pt(10, 4)}}, {0}};
  const std::vector<WaypointPath> paths{WaypointPath{{pt(0, 0), pt(4, 1), pt(7, 3), pt(10, 4)}, 0}};
  const OptimalVirtualTube tube = assemble_tube(pairs, paths, TrajectoryConfig{});
  EXPECT_EQ(tube.q(), 1);
  EXPECT_EQ(tube.qp_solves, 1);
  EXPECT_EQ(member_trajectory(tube, W({1.0})).x, tube.basis_x[0]);
  EXPECT_LE((tube.basis(0).evaluate(1.0) - pt(10, 4)).norm(), 1e-9);
}

TEST(Tube, BuildPipelineThreeBases) {
  // Three-vertex terminals in 3-D, one box in between.
  const Terminal s{{pt(0, -1, 1), pt(0, 1, 1), pt(0, 0, 2.5)}};
  const Terminal g{{pt(20, -1, 1), pt(20, 1, 1), pt(20, 0, 2.5)}};
  ObstacleSet obs;
  obs.boxes = {Box{pt(9, -6, 0), pt(11, -2, 6)}};
  RrtConfig rc;
  rc.bounds = Box{pt(-2, -8, 0), pt(22, 8, 6)};
  rc.max_iterations = 1500;
  const OptimalVirtualTube tube = build_tube(assign_vertices(s, g), obs, rc, TrajectoryConfig{});
  EXPECT_EQ(tube.q(), 3);
  EXPECT_EQ(tube.qp_solves, 3);
  EXPECT_EQ(tube.poly.segments, 7);
  for (const auto& w : tube.waypoints) EXPECT_EQ(w.points.size(), 8u);
  EXPECT_DOUBLE_EQ(tube.knots.u.front(), 0.0);
  EXPECT_DOUBLE_EQ(tube.knots.u.back(), 1.0);
  for (Index k = 0; k < 3; ++k) {
    Vec th = Vec::Zero(3);
    th(k) = 1.0;
    EXPECT_TRUE(kkt_audit(solve_member_direct(tube, th)).ok());
  }
  const MemberVerification v = verify_member_optimality(tube, W({0.2, 0.3, 0.5}));
  EXPECT_TRUE(v.feasible());
  EXPECT_TRUE(v.optimal()) << v.coefficient_error;
}

TEST(Tube, CorridorModeNames) {
  for (auto m : {CorridorMode::None, CorridorMode::Shared, CorridorMode::PerPair})
    EXPECT_EQ(corridor_mode_from_string(to_string(m)), m);
  EXPECT_THROW(corridor_mode_from_string("loose"), Error);
}

}  // namespace
