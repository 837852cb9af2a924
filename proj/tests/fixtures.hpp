#pragma once

// Hand-built tubes shared by the unit and acceptance tests.

#include <string>

#include "ovtube/ovtube.hpp"

namespace ovtube::testing {

inline Point pt(double x, double y) { return (Point(2) << x, y).finished(); }
inline Point pt(double x, double y, double z) { return (Point(3) << x, y, z).finished(); }

inline std::string fixture(const std::string& name) { return std::string(OVTUBE_FIXTURE_DIR) + "/" + name; }

/// Two bent, non-congruent paths with no corridor: the equality-constrained
/// case.
inline OptimalVirtualTube equality_only_tube() {
  const Terminal s{{pt(0, -1), pt(0, 1)}};
  const Terminal g{{pt(12, -2), pt(12, 2)}};
  const OrderPairSet pairs{s, g, {0, 1}};
  const std::vector<WaypointPath> paths{
      WaypointPath{{pt(0, -1), pt(2, -1.5), pt(5, -2.5), pt(8, -2.2), pt(10, -2.4), pt(12, -2)}, 0},
      WaypointPath{{pt(0, 1), pt(3, 1.2), pt(6, 0.5), pt(8.5, 1.5), pt(10.5, 2.5), pt(12, 2)}, 1}};
  TrajectoryConfig cfg;
  cfg.corridor_mode = CorridorMode::None;
  return assemble_tube(pairs, paths, cfg);
}

/// Two pairs offset along the direction of travel, with lateral boundary
/// velocities that push both basis trajectories against a narrow shared
/// corridor. The pairs differ by a translation parallel to every corridor
/// segment, so the basis problems have the same active set.
inline OptimalVirtualTube active_corridor_tube() {
  const Terminal s{{pt(0, 0), pt(1, 0)}};
  const Terminal g{{pt(10, 0), pt(11, 0)}};
  const OrderPairSet pairs{s, g, {0, 1}};
  std::vector<WaypointPath> paths;
  for (int k = 0; k < 2; ++k) {
    WaypointPath p;
    p.pair_index = k;
    for (int i = 0; i <= 5; ++i) p.points.push_back(pt(k + 2.0 * i, 0));
    paths.push_back(p);
  }
  TrajectoryConfig cfg;
  cfg.corridor_mode = CorridorMode::Shared;
  cfg.corridor_width = 0.2;
  OptimalVirtualTube tube = assemble_tube(pairs, paths, cfg);

  // Feasible only for lateral speeds up to about 2.63; the corridor binds
  // above about 2.53.
  const Vec lateral = (Vec(2) << 0.0, 2.58).finished();
  for (Index k = 0; k < 2; ++k) {
    BoundarySpec bs = rest_to_rest(paths[k].points.front(), paths[k].points.back(), tube.continuity);
    bs.start_derivs[0] = lateral;
    bs.goal_derivs[0] = -lateral;
    const Vec b = assemble_equality_rhs(paths[k].points, bs, tube.poly, tube.continuity);
    const QpSolution sol = solve_tube_qp(tube, b, basis_corridor(tube, k), basis_corridor(tube, k, Frame::Local));
    tube.basis_x[k] = sol.x;
    tube.basis_b[k] = b;
  }
  rebuild_derived(tube);
  return tube;
}

}  // namespace ovtube::testing
