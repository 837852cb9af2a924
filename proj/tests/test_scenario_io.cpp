#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "fixtures.hpp"

namespace {

using namespace ovtube;
using namespace ovtube::testing;

ErrorCode parse_code(const std::string& text, std::string* what = nullptr) {
  try {
    parse_scenario(text);
  } catch (const Error& e) {
    if (what) *what = e.what();
    return e.code();
  }
  ADD_FAILURE() << "document accepted: " << text;
  return ErrorCode::IoError;
}

const char* kMinimal = R"({
  "schema_version": 1,
  "dimension": 2,
  "start_terminal": [[0, -2], [0, 2]],
  "goal_terminal": [[20, -2], [20, 2]],
  "robots": [[0, 0]]
})";

TEST(Scenario, DefaultsMaterialized) {
  const Scenario s = parse_scenario(kMinimal);
  EXPECT_EQ(s.dimension, 2);
  EXPECT_EQ(s.robots.size(), 1u);
  EXPECT_EQ(s.seed, 1u);
  EXPECT_FALSE(s.time_limit.has_value());
  EXPECT_DOUBLE_EQ(s.goal_radius, 0.2);
  EXPECT_DOUBLE_EQ(s.variance_weight, 1.0);
  EXPECT_EQ(s.rrt.max_iterations, 5000);
  EXPECT_DOUBLE_EQ(s.rrt.step_size, 1.0);
  EXPECT_DOUBLE_EQ(s.rrt.goal_bias, 0.1);
  EXPECT_DOUBLE_EQ(s.rrt.rewire_radius, 3.0);
  EXPECT_DOUBLE_EQ(s.rrt.corridor_shrink_radius, 3.0);
  EXPECT_EQ(s.trajectory.order, 5);
  EXPECT_EQ(s.trajectory.cost_derivative, 3);
  EXPECT_EQ(s.trajectory.continuity, 3);
  EXPECT_EQ(s.trajectory.m_target, 7);
  EXPECT_DOUBLE_EQ(s.trajectory.corridor_width, 1.0);
  EXPECT_EQ(s.trajectory.corridor_samples, 3);
  EXPECT_EQ(s.trajectory.corridor_mode, CorridorMode::Shared);
  EXPECT_EQ(s.controller.horizon, 10);
  EXPECT_DOUBLE_EQ(s.controller.dt, 0.1);
  EXPECT_DOUBLE_EQ(s.controller.position_weight, 10.0);
  EXPECT_DOUBLE_EQ(s.controller.velocity_weight, 1.0);
  EXPECT_DOUBLE_EQ(s.controller.input_weight, 0.1);
  EXPECT_DOUBLE_EQ(s.controller.terminal_scale, 10.0);
  EXPECT_DOUBLE_EQ(s.controller.slack_weight, 1000.0);
  EXPECT_DOUBLE_EQ(s.safety_distance, 1.0);
}

TEST(Scenario, LatticeRobots) {
  std::string doc = kMinimal;
  doc.replace(doc.find("[[0, 0]]"), 8, R"({"lattice": 10})");
  const Scenario s = parse_scenario(doc);
  ASSERT_EQ(s.robots.size(), 11u);
  for (const auto& r : s.robots) EXPECT_DOUBLE_EQ(r(0), 0.0);
  // 3 vertices, lattice 2 -> 6 points.
  const auto pts = detail::simplex_lattice(3, 2);
  EXPECT_EQ(pts.size(), 6u);
}

TEST(Scenario, TerminalsNotDisjoint) {
  std::string what;
  const std::string doc = R"({"schema_version": 1, "dimension": 2,
    "start_terminal": [[0, -2], [0, 2]], "goal_terminal": [[-1, 0], [1, 0]]})";
  EXPECT_EQ(parse_code(doc, &what), ErrorCode::ValidationError);
  EXPECT_NE(what.find("terminals not disjoint"), std::string::npos) << what;
}

TEST(Scenario, StartOutsideTerminal) {
  std::string what;
  std::string doc = kMinimal;
  doc.replace(doc.find("[[0, 0]]"), 8, "[[0, 0], [1, 0]]");
  EXPECT_EQ(parse_code(doc, &what), ErrorCode::ValidationError);
  EXPECT_NE(what.find("start outside terminal"), std::string::npos) << what;
}

TEST(Scenario, ParseErrors) {
  std::string what;
  const std::string text = kMinimal;
  EXPECT_EQ(parse_code(text.substr(0, text.size() / 2), &what), ErrorCode::ParseError);
  EXPECT_NE(what.find("line"), std::string::npos);
  std::string quoted = text;
  quoted.replace(quoted.find("\"dimension\": 2"), 14, "\"dimension\": \"2\"");
  EXPECT_EQ(parse_code(quoted), ErrorCode::ParseError);
  std::string str_coord = text;
  str_coord.replace(str_coord.find("[[0, 0]]"), 8, "[[\"0\", 0]]");
  EXPECT_EQ(parse_code(str_coord), ErrorCode::ParseError);
  std::string unknown = text;
  unknown.replace(unknown.find("\"robots\""), 8, "\"robotz\"");
  EXPECT_EQ(parse_code(unknown, &what), ErrorCode::ParseError);
  EXPECT_NE(what.find("robotz"), std::string::npos);
  std::string version = text;
  version.replace(version.find("\"schema_version\": 1"), 19, "\"schema_version\": 2");
  EXPECT_EQ(parse_code(version), ErrorCode::VersionError);
}

TEST(Scenario, InvariantsEachHaveMessages) {
  std::string what;
  std::string doc = kMinimal;
  doc.replace(doc.find("\"robots\""), 8, "\"goal_radius\": -1, \"robots\"");
  EXPECT_EQ(parse_code(doc, &what), ErrorCode::ValidationError);
  EXPECT_NE(what.find("goal_radius"), std::string::npos);

  doc = kMinimal;
  doc.replace(doc.find("\"robots\""), 8, "\"planner\": {\"continuity\": 5}, \"robots\"");
  EXPECT_EQ(parse_code(doc, &what), ErrorCode::ValidationError);
  EXPECT_NE(what.find("continuity"), std::string::npos);

  doc = kMinimal;
  doc.replace(doc.find("[[20, -2], [20, 2]]"), 19, "[[20, -2], [20, 2], [21, 0]]");
  EXPECT_EQ(parse_code(doc, &what), ErrorCode::ValidationError);
  EXPECT_NE(what.find("same vertex count"), std::string::npos);
}

TEST(Scenario, ShippedFixturesLoad) {
  for (const char* name : {"minimal_2d.json", "gap_2d.json", "triangle_3d.json", "tetra_3d.json", "walled_2d.json"}) {
    const Scenario s = load_scenario(fixture(name));
    EXPECT_GE(s.start_terminal.size(), 2) << name;
  }
  EXPECT_EQ(load_scenario(fixture("gap_2d.json")).robots.size(), 11u);
  EXPECT_EQ(load_scenario(fixture("tetra_3d.json")).robots.size(), 20u);
  try {
    load_scenario(fixture("does_not_exist.json"));
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

TEST(TubeFile, RoundTripIsExact) {
  const OptimalVirtualTube tube = active_corridor_tube();
  const std::string text = tube_to_string(tube);
  const OptimalVirtualTube back = tube_from_string(text);
  ASSERT_EQ(back.q(), tube.q());
  for (Index k = 0; k < tube.q(); ++k) {
    EXPECT_EQ(back.basis_x[k], tube.basis_x[k]);
    EXPECT_EQ(back.basis_b[k], tube.basis_b[k]);
  }
  EXPECT_EQ(back.knots.u, tube.knots.u);
  EXPECT_EQ(back.public_knots.u, tube.public_knots.u);
  EXPECT_EQ(back.pairs.pairing, tube.pairs.pairing);
  EXPECT_EQ(back.corridor_mode, tube.corridor_mode);
  EXPECT_EQ(back.A, tube.A);
  EXPECT_EQ(tube_to_string(back), text);

  const auto path = std::filesystem::temp_directory_path() / "ovtube_roundtrip.json";
  save_tube(tube, path.string());
  EXPECT_EQ(load_tube(path.string()).basis_x[1], tube.basis_x[1]);
  std::filesystem::remove(path);
}

TEST(TubeFile, TruncatedAndVersion) {
  const std::string text = tube_to_string(equality_only_tube());
  try {
    tube_from_string(text.substr(0, text.size() - 40));
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
  std::string v2 = text;
  v2.replace(v2.find("\"schema_version\": 1"), 19, "\"schema_version\": 9");
  try {
    tube_from_string(v2);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::VersionError);
  }
}

TEST(LogFile, CsvAndMetrics) {
  SimLog log;
  log.dim = 2;
  log.goals = {pt(1, 0)};
  log.times = {0.0, 0.1};
  log.p = {{pt(0, 0)}, {pt(0.5, 0)}};
  log.v = {{pt(5, 0)}, {pt(5, 0)}};
  log.u = {{pt(0, 0)}, {pt(0, 0)}};
  const std::string csv = log_to_csv(log);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "tick,time,robot,p0,p1,v0,v1,u0,u1");
  EXPECT_NE(csv.find("1,0.10000000000000001,0,0.5,0,5,0,0,0"), std::string::npos) << csv;
  Metrics m;
  m.average_time = std::numeric_limits<double>::infinity();
  m.arrival_rate = 0.0;
  const auto j = metrics_to_json(m, 1);
  EXPECT_EQ(j["average_time"], "inf");
  EXPECT_EQ(j["robots"], 1);
}

}  // namespace
