#pragma once

// Scenario documents, tube files, simulation logs and metrics.
//
// Scenario JSON (schema_version 1):
//   dimension            int, required
//   workspace            {min: [..], max: [..]}            optional (RRT bounds)
//   obstacles            {inflation: m, boxes: [{min, max}]} optional
//   start_terminal       [[..], ..]                          required
//   goal_terminal        [[..], ..]                          required
//   robots               [[..], ..] | {lattice: r}           optional, default []
//   seed, time_limit, goal_radius, threads                   optional
//   planner              {variance_weight, m_target, order, cost_derivative,
//                         continuity, rrt: {..}, corridor: {width, samples, mode}}
//   controller           {horizon, dt, position_weight, velocity_weight,
//                         input_weight, terminal_scale, slack_weight,
//                         input_limit, tube_tolerance, speed, safety_distance,
//                         avoidance_radius, neighbor_radius}
// Unknown keys are rejected. Numbers must be JSON numbers.

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ovtube/error.hpp"
#include "ovtube/geometry.hpp"
#include "ovtube/mpcsim.hpp"
#include "ovtube/pathfinder.hpp"
#include "ovtube/tube.hpp"

namespace ovtube {

inline constexpr int kSchemaVersion = 1;

struct Scenario {
  Index dimension = 2;
  std::optional<Box> workspace;
  ObstacleSet obstacles;
  Terminal start_terminal;
  Terminal goal_terminal;
  std::vector<Point> robots;
  std::uint64_t seed = 1;
  std::optional<double> time_limit;  // default: 3 × u_m / v_R once the tube exists
  double goal_radius = 0.2;
  int threads = 1;
  double variance_weight = 1.0;
  RrtConfig rrt;
  TrajectoryConfig trajectory;
  MpcConfig controller;
  double safety_distance = 1.0;
  double avoidance_radius = 0.65;  // per-robot ellipse radius; pair clearance is twice this

  AvoidanceModel avoidance() const {
    return AvoidanceModel::spherical(dimension, avoidance_radius, safety_distance);
  }
  SimConfig sim_config(const OptimalVirtualTube& tube) const {
    SimConfig c;
    c.mpc = controller;
    c.avoidance = avoidance();
    c.time_limit = resolved_time_limit(tube);
    c.goal_radius = goal_radius;
    c.threads = threads;
    return c;
  }
  double resolved_time_limit(const OptimalVirtualTube& tube) const {
    return time_limit ? *time_limit : 3.0 * tube.public_knots.back() / controller.speed;
  }
};

namespace detail {

using nlohmann::json;

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

inline void reject_unknown(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw Error(ErrorCode::ParseError, "field '" + join_path(path, it.key()) + "': unknown key");
}

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) throw Error(ErrorCode::ParseError, "field '" + join_path(path, key) + "': missing");
  return obj.at(key);
}

inline void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "field '" + path + "': expected object");
}

inline double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw Error(ErrorCode::ParseError, "field '" + path + "': expected number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw Error(ErrorCode::ParseError, "field '" + path + "': not finite");
  return v;
}

inline long long as_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw Error(ErrorCode::ParseError, "field '" + path + "': expected integer");
  return j.get<long long>();
}

inline std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw Error(ErrorCode::ParseError, "field '" + path + "': expected string");
  return j.get<std::string>();
}

inline Point as_point(const json& j, const std::string& path, Index dim) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "field '" + path + "': expected array");
  if (dim >= 0 && static_cast<Index>(j.size()) != dim)
    throw Error(ErrorCode::ParseError, "field '" + path + "': expected " + std::to_string(dim) + " coordinates");
  Point p(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) p(static_cast<Index>(i)) = as_number(j[i], path + "[" + std::to_string(i) + "]");
  return p;
}

inline std::vector<Point> as_points(const json& j, const std::string& path, Index dim) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "field '" + path + "': expected array");
  std::vector<Point> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_point(j[i], path + "[" + std::to_string(i) + "]", dim));
  return out;
}

inline Vec as_vector(const json& j, const std::string& path) { return as_point(j, path, -1); }

inline Box as_box(const json& j, const std::string& path, Index dim) {
  expect_object(j, path);
  reject_unknown(j, path, {"min", "max"});
  return Box{as_point(require(j, "min", path), path + ".min", dim), as_point(require(j, "max", path), path + ".max", dim)};
}

template <typename T, typename F>
void optional_field(const json& obj, const std::string& key, const std::string& path, T& target, F convert) {
  if (obj.contains(key)) target = static_cast<T>(convert(obj.at(key), join_path(path, key)));
}

/// Points θ·V for every θ with entries i_k / r, Σ i_k = r, in lexicographic
/// order of (i_0, i_1, …) descending.
inline std::vector<Vec> simplex_lattice(Index q, Index r) {
  std::vector<Vec> out;
  std::vector<Index> idx(q, 0);
  auto rec = [&](auto&& self, Index k, Index left) -> void {
    if (k == q - 1) {
      idx[k] = left;
      Vec th(q);
      for (Index i = 0; i < q; ++i) th(i) = static_cast<double>(idx[i]) / static_cast<double>(r);
      out.push_back(th);
      return;
    }
    for (Index i = left; i >= 0; --i) {
      idx[k] = i;
      self(self, k + 1, left - i);
    }
  };
  if (q == 1) {
    out.push_back(Vec::Ones(1));
  } else {
    rec(rec, 0, r);
  }
  return out;
}

inline std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

inline json parse_text(const std::string& text, const std::string& label) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, label + ": line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

inline void check_version(const json& doc) {
  const long long v = as_integer(require(doc, "schema_version", ""), "schema_version");
  if (v != kSchemaVersion)
    throw Error(ErrorCode::VersionError, "schema_version " + std::to_string(v) + " is not supported (expected " +
                                             std::to_string(kSchemaVersion) + ")");
}

}  // namespace detail

/// Every scenario invariant, each with its own message.
inline void validate_scenario(const Scenario& s) {
  if (s.dimension != 2 && s.dimension != 3)
    throw Error(ErrorCode::ValidationError, "dimension must be 2 or 3");
  try {
    validate_terminal(s.start_terminal, "start_terminal");
    validate_terminal(s.goal_terminal, "goal_terminal");
    validate_obstacles(s.obstacles);
    validate_rrt_config(s.rrt);
  } catch (const Error& e) {
    throw Error(ErrorCode::ValidationError, e.what());
  }
  if (s.start_terminal.size() != s.goal_terminal.size())
    throw Error(ErrorCode::ValidationError, "terminals must have the same vertex count");
  if (s.start_terminal.size() > kMaxAssignmentVertices)
    throw Error(ErrorCode::ValidationError, "terminals have too many vertices");
  if (!(s.variance_weight >= 0.0)) throw Error(ErrorCode::ValidationError, "variance_weight must be >= 0");
  validate_trajectory_config(s.trajectory);
  validate_mpc_config(s.controller);
  if (!(s.goal_radius > 0.0)) throw Error(ErrorCode::ValidationError, "goal_radius must be > 0");
  if (s.time_limit && !(*s.time_limit >= 0.0)) throw Error(ErrorCode::ValidationError, "time_limit must be >= 0");
  if (s.threads < 1) throw Error(ErrorCode::ValidationError, "threads must be >= 1");
  if (!(s.safety_distance > 0.0)) throw Error(ErrorCode::ValidationError, "safety_distance must be > 0");
  if (!(s.avoidance_radius > 0.0)) throw Error(ErrorCode::ValidationError, "avoidance_radius must be > 0");
  if (hull_distance(s.start_terminal.vertices, s.goal_terminal.vertices) <= kHullTol)
    throw Error(ErrorCode::ValidationError, "terminals not disjoint");
  for (std::size_t i = 0; i < s.robots.size(); ++i) {
    if (project_to_hull(s.robots[i], s.start_terminal.vertices).distance > kHullTol)
      throw Error(ErrorCode::ValidationError, "start outside terminal (robot " + std::to_string(i) + ")");
  }
}

inline Scenario parse_scenario(const std::string& text, const std::string& label = "scenario") {
  using detail::json;
  const json doc = detail::parse_text(text, label);
  detail::expect_object(doc, "<root>");
  detail::check_version(doc);
  detail::reject_unknown(doc, "", {"schema_version", "dimension", "workspace", "obstacles", "start_terminal",
                                   "goal_terminal", "robots", "seed", "time_limit", "goal_radius", "threads",
                                   "planner", "controller", "name", "description"});
  Scenario s;
  s.dimension = detail::as_integer(detail::require(doc, "dimension", ""), "dimension");
  if (s.dimension < 1) throw Error(ErrorCode::ParseError, "field 'dimension': must be positive");
  const Index d = s.dimension;
  if (doc.contains("workspace")) s.workspace = detail::as_box(doc["workspace"], "workspace", d);
  if (doc.contains("obstacles")) {
    const json& o = doc["obstacles"];
    detail::expect_object(o, "obstacles");
    detail::reject_unknown(o, "obstacles", {"inflation", "boxes"});
    detail::optional_field(o, "inflation", "obstacles", s.obstacles.inflation, detail::as_number);
    if (o.contains("boxes")) {
      if (!o["boxes"].is_array()) throw Error(ErrorCode::ParseError, "field 'obstacles.boxes': expected array");
      for (std::size_t i = 0; i < o["boxes"].size(); ++i)
        s.obstacles.boxes.push_back(detail::as_box(o["boxes"][i], "obstacles.boxes[" + std::to_string(i) + "]", d));
    }
  }
  s.start_terminal.vertices = detail::as_points(detail::require(doc, "start_terminal", ""), "start_terminal", d);
  s.goal_terminal.vertices = detail::as_points(detail::require(doc, "goal_terminal", ""), "goal_terminal", d);
  if (doc.contains("robots")) {
    const json& r = doc["robots"];
    if (r.is_object()) {
      detail::reject_unknown(r, "robots", {"lattice"});
      const long long n = detail::as_integer(detail::require(r, "lattice", "robots"), "robots.lattice");
      if (n < 1) throw Error(ErrorCode::ParseError, "field 'robots.lattice': must be >= 1");
      const Mat V = s.start_terminal.matrix();
      for (const Vec& th : detail::simplex_lattice(s.start_terminal.size(), n)) s.robots.push_back(V * th);
    } else {
      s.robots = detail::as_points(r, "robots", d);
    }
  }
  long long seed = static_cast<long long>(s.seed);
  detail::optional_field(doc, "seed", "", seed, detail::as_integer);
  if (seed < 0) throw Error(ErrorCode::ParseError, "field 'seed': must be >= 0");
  s.seed = static_cast<std::uint64_t>(seed);
  if (doc.contains("time_limit")) s.time_limit = detail::as_number(doc["time_limit"], "time_limit");
  detail::optional_field(doc, "goal_radius", "", s.goal_radius, detail::as_number);
  detail::optional_field(doc, "threads", "", s.threads, detail::as_integer);

  if (doc.contains("planner")) {
    const json& p = doc["planner"];
    const std::string P = "planner";
    detail::expect_object(p, P);
    detail::reject_unknown(p, P, {"variance_weight", "m_target", "order", "cost_derivative", "continuity", "rrt",
                                  "corridor"});
    detail::optional_field(p, "variance_weight", P, s.variance_weight, detail::as_number);
    detail::optional_field(p, "m_target", P, s.trajectory.m_target, detail::as_integer);
    detail::optional_field(p, "order", P, s.trajectory.order, detail::as_integer);
    detail::optional_field(p, "cost_derivative", P, s.trajectory.cost_derivative, detail::as_integer);
    detail::optional_field(p, "continuity", P, s.trajectory.continuity, detail::as_integer);
    if (p.contains("rrt")) {
      const json& r = p["rrt"];
      const std::string R = "planner.rrt";
      detail::expect_object(r, R);
      detail::reject_unknown(r, R, {"max_iterations", "step_size", "goal_bias", "rewire_radius", "corridor_shrink_radius"});
      detail::optional_field(r, "max_iterations", R, s.rrt.max_iterations, detail::as_integer);
      detail::optional_field(r, "step_size", R, s.rrt.step_size, detail::as_number);
      detail::optional_field(r, "goal_bias", R, s.rrt.goal_bias, detail::as_number);
      detail::optional_field(r, "rewire_radius", R, s.rrt.rewire_radius, detail::as_number);
      detail::optional_field(r, "corridor_shrink_radius", R, s.rrt.corridor_shrink_radius, detail::as_number);
    }
    if (p.contains("corridor")) {
      const json& c = p["corridor"];
      const std::string C = "planner.corridor";
      detail::expect_object(c, C);
      detail::reject_unknown(c, C, {"width", "samples", "mode"});
      detail::optional_field(c, "width", C, s.trajectory.corridor_width, detail::as_number);
      detail::optional_field(c, "samples", C, s.trajectory.corridor_samples, detail::as_integer);
      if (c.contains("mode")) {
        try {
          s.trajectory.corridor_mode = corridor_mode_from_string(detail::as_string(c["mode"], C + ".mode"));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::ValidationError) throw;
          throw Error(ErrorCode::ParseError, "field 'planner.corridor.mode': " + std::string(e.what()));
        }
      }
    }
  }
  if (doc.contains("controller")) {
    const json& c = doc["controller"];
    const std::string C = "controller";
    detail::expect_object(c, C);
    detail::reject_unknown(c, C, {"horizon", "dt", "position_weight", "velocity_weight", "input_weight",
                                  "terminal_scale", "slack_weight", "input_limit", "tube_tolerance", "speed",
                                  "safety_distance", "avoidance_radius", "neighbor_radius"});
    MpcConfig& m = s.controller;
    detail::optional_field(c, "horizon", C, m.horizon, detail::as_integer);
    detail::optional_field(c, "dt", C, m.dt, detail::as_number);
    detail::optional_field(c, "position_weight", C, m.position_weight, detail::as_number);
    detail::optional_field(c, "velocity_weight", C, m.velocity_weight, detail::as_number);
    detail::optional_field(c, "input_weight", C, m.input_weight, detail::as_number);
    detail::optional_field(c, "terminal_scale", C, m.terminal_scale, detail::as_number);
    detail::optional_field(c, "slack_weight", C, m.slack_weight, detail::as_number);
    detail::optional_field(c, "input_limit", C, m.input_limit, detail::as_number);
    detail::optional_field(c, "tube_tolerance", C, m.tube_tolerance, detail::as_number);
    detail::optional_field(c, "speed", C, m.speed, detail::as_number);
    detail::optional_field(c, "neighbor_radius", C, m.neighbor_radius, detail::as_number);
    detail::optional_field(c, "safety_distance", C, s.safety_distance, detail::as_number);
    detail::optional_field(c, "avoidance_radius", C, s.avoidance_radius, detail::as_number);
  }
  s.rrt.rng_seed = s.seed;
  s.rrt.bounds = s.workspace;
  validate_scenario(s);
  return s;
}

inline Scenario load_scenario(const std::string& path) { return parse_scenario(detail::read_file(path), path); }

// Tube files ------------------------------------------------------------------

inline nlohmann::json tube_to_json(const OptimalVirtualTube& tube) {
  using nlohmann::json;
  auto pts = [](const std::vector<Point>& v) {
    json a = json::array();
    for (const auto& p : v) a.push_back(std::vector<double>(p.data(), p.data() + p.size()));
    return a;
  };
  auto vec = [](const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "tube";
  doc["dimension"] = tube.poly.dim;
  doc["order"] = tube.poly.order;
  doc["segments"] = tube.poly.segments;
  doc["cost_derivative"] = tube.cost_derivative;
  doc["continuity"] = tube.continuity;
  doc["knots"] = tube.knots.u;
  doc["public_knots"] = tube.public_knots.u;
  doc["start_vertices"] = pts(tube.pairs.start.vertices);
  doc["goal_vertices"] = pts(tube.pairs.goal.vertices);
  doc["pairing"] = tube.pairs.pairing;
  doc["corridor"] = {{"mode", to_string(tube.corridor_mode)},
                     {"width", tube.corridor_width},
                     {"samples", tube.corridor_samples}};
  doc["qp_solves"] = tube.qp_solves;
  json bases = json::array();
  for (Index k = 0; k < tube.q(); ++k) {
    bases.push_back({{"x", vec(tube.basis_x[k])}, {"b", vec(tube.basis_b[k])}, {"waypoints", pts(tube.waypoints[k].points)}});
  }
  doc["bases"] = bases;
  return doc;
}

inline std::string tube_to_string(const OptimalVirtualTube& tube) { return tube_to_json(tube).dump(1) + "\n"; }

inline OptimalVirtualTube tube_from_string(const std::string& text, const std::string& label = "tube") {
  using detail::json;
  const json doc = detail::parse_text(text, label);
  detail::expect_object(doc, "<root>");
  detail::check_version(doc);
  if (detail::as_string(detail::require(doc, "kind", ""), "kind") != "tube")
    throw Error(ErrorCode::ParseError, "field 'kind': expected \"tube\"");
  OptimalVirtualTube t;
  const Index d = detail::as_integer(detail::require(doc, "dimension", ""), "dimension");
  t.poly = PolyConfig{d, static_cast<Index>(detail::as_integer(detail::require(doc, "order", ""), "order")),
                      static_cast<Index>(detail::as_integer(detail::require(doc, "segments", ""), "segments"))};
  t.cost_derivative = detail::as_integer(detail::require(doc, "cost_derivative", ""), "cost_derivative");
  t.continuity = detail::as_integer(detail::require(doc, "continuity", ""), "continuity");
  auto knots = [&](const std::string& key, bool normalized) {
    KnotVector k;
    k.normalized = normalized;
    const Vec v = detail::as_vector(detail::require(doc, key, ""), key);
    k.u.assign(v.data(), v.data() + v.size());
    if (k.segments() != t.poly.segments) throw Error(ErrorCode::ParseError, "field '" + key + "': wrong length");
    return k;
  };
  t.knots = knots("knots", true);
  t.public_knots = knots("public_knots", false);
  t.pairs.start.vertices = detail::as_points(detail::require(doc, "start_vertices", ""), "start_vertices", d);
  t.pairs.goal.vertices = detail::as_points(detail::require(doc, "goal_vertices", ""), "goal_vertices", d);
  const json& pairing = detail::require(doc, "pairing", "");
  if (!pairing.is_array() || pairing.size() != t.pairs.start.vertices.size())
    throw Error(ErrorCode::ParseError, "field 'pairing': expected one entry per start vertex");
  for (std::size_t i = 0; i < pairing.size(); ++i) {
    const long long v = detail::as_integer(pairing[i], "pairing[" + std::to_string(i) + "]");
    if (v < 0 || v >= static_cast<long long>(t.pairs.goal.vertices.size()))
      throw Error(ErrorCode::ParseError, "field 'pairing': index out of range");
    t.pairs.pairing.push_back(static_cast<int>(v));
  }
  const json& c = detail::require(doc, "corridor", "");
  detail::expect_object(c, "corridor");
  t.corridor_mode = corridor_mode_from_string(detail::as_string(detail::require(c, "mode", "corridor"), "corridor.mode"));
  t.corridor_width = detail::as_number(detail::require(c, "width", "corridor"), "corridor.width");
  t.corridor_samples = detail::as_integer(detail::require(c, "samples", "corridor"), "corridor.samples");
  if (doc.contains("qp_solves")) t.qp_solves = static_cast<int>(detail::as_integer(doc["qp_solves"], "qp_solves"));
  const json& bases = detail::require(doc, "bases", "");
  if (!bases.is_array() || static_cast<Index>(bases.size()) != t.pairs.size())
    throw Error(ErrorCode::ParseError, "field 'bases': expected one entry per vertex pair");
  for (std::size_t k = 0; k < bases.size(); ++k) {
    const std::string B = "bases[" + std::to_string(k) + "]";
    t.basis_x.push_back(detail::as_vector(detail::require(bases[k], "x", B), B + ".x"));
    t.basis_b.push_back(detail::as_vector(detail::require(bases[k], "b", B), B + ".b"));
    if (t.basis_x.back().size() != t.poly.size()) throw Error(ErrorCode::ParseError, "field '" + B + ".x': wrong length");
    WaypointPath w;
    w.points = detail::as_points(detail::require(bases[k], "waypoints", B), B + ".waypoints", d);
    w.pair_index = static_cast<Index>(k);
    if (w.segments() != t.poly.segments) throw Error(ErrorCode::ParseError, "field '" + B + ".waypoints': wrong length");
    t.waypoints.push_back(w);
  }
  try {
    rebuild_derived(t);
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, std::string("inconsistent tube: ") + e.what());
  }
  for (Index k = 0; k < t.q(); ++k)
    if (t.basis_b[k].size() != t.A.rows()) throw Error(ErrorCode::ParseError, "field 'bases.b': wrong length");
  return t;
}

inline void save_tube(const OptimalVirtualTube& tube, const std::string& path) {
  detail::write_file(path, tube_to_string(tube));
}

inline OptimalVirtualTube load_tube(const std::string& path) {
  return tube_from_string(detail::read_file(path), path);
}

// Logs and metrics --------------------------------------------------------------

inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

/// CSV: tick,time,robot,p0..,v0..,u0.. with one row per robot and tick.
inline std::string log_to_csv(const SimLog& log) {
  std::ostringstream ss;
  ss << "tick,time,robot";
  for (const char* f : {"p", "v", "u"})
    for (Index c = 0; c < log.dim; ++c) ss << ',' << f << c;
  ss << '\n';
  for (Index t = 0; t < log.ticks(); ++t) {
    for (Index i = 0; i < log.robots(); ++i) {
      ss << t << ',' << format_number(log.times[t]) << ',' << i;
      for (const Vec* v : {&log.p[t][i], &log.v[t][i], &log.u[t][i]})
        for (Index c = 0; c < v->size(); ++c) ss << ',' << format_number((*v)(c));
      ss << '\n';
    }
  }
  return ss.str();
}

inline void save_log(const SimLog& log, const std::string& path) { detail::write_file(path, log_to_csv(log)); }

/// Non-finite values are written as the strings "inf" / "-inf".
inline nlohmann::json metrics_to_json(const Metrics& m, Index robots) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return format_number(v);
  };
  nlohmann::json arrivals = nlohmann::json::array();
  for (double a : m.arrival_times) arrivals.push_back(num(a));
  return {{"robots", robots},
          {"average_time", num(m.average_time)},
          {"arrival_rate", m.arrival_rate},
          {"average_speed", m.average_speed},
          {"min_pairwise_distance", num(m.min_pairwise_distance)},
          {"arrival_times", arrivals}};
}

inline void save_metrics(const Metrics& m, Index robots, const std::string& path) {
  detail::write_file(path, metrics_to_json(m, robots).dump(2) + "\n");
}

}  // namespace ovtube
