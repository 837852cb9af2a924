// ovtube: plan, sample, verify and simulate optimal virtual tubes.
//
//   ovtube plan     --scenario s.json --out tube.json
//   ovtube members  --tube tube.json [--count 11 | --weights w.csv] --out members.csv
//   ovtube verify   --tube tube.json --samples 100
//   ovtube simulate --scenario s.json --tube tube.json --out log.csv --metrics metrics.json
//
// Exit codes: 0 success, 2 validation, 3 planning failure, 4 verification
// failure, 5 I/O.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ovtube/ovtube.hpp"

using namespace ovtube;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitPlanning = 3;
constexpr int kExitVerification = 4;
constexpr int kExitIo = 5;

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::IoError: return kExitIo;
    case ErrorCode::NoPathFound:
    case ErrorCode::HomotopyCheckFailed:
    case ErrorCode::TooFewSegments:
    case ErrorCode::ZeroChord:
    case ErrorCode::LengthMismatch:
    case ErrorCode::ZeroLength:
    case ErrorCode::RankDeficient:
    case ErrorCode::Infeasible:
    case ErrorCode::Unbounded:
    case ErrorCode::MaxIterations:
    case ErrorCode::CoincidentCenters: return kExitPlanning;
    default: return kExitValidation;
  }
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream ss;
  ss.precision(prec);
  ss << v;
  return ss.str();
}

/// Weights for `count` members: the centroid for count = 1, equispaced for
/// q = 2, and the finest simplex lattice with at least `count` points
/// (truncated in lattice order) otherwise.
std::vector<Vec> default_weights(Index q, Index count) {
  std::vector<Vec> out;
  if (count <= 0) return out;
  if (count == 1) {
    out.push_back(Vec::Constant(q, 1.0 / static_cast<double>(q)));
    return out;
  }
  if (q == 1) {
    for (Index i = 0; i < count; ++i) out.push_back(Vec::Ones(1));
    return out;
  }
  if (q == 2) {
    for (Index i = 0; i < count; ++i) {
      const double a = static_cast<double>(i) / static_cast<double>(count - 1);
      Vec th(2);
      th << 1.0 - a, a;
      out.push_back(th);
    }
    return out;
  }
  Index r = 1;
  while (static_cast<Index>(detail::simplex_lattice(q, r).size()) < count) ++r;
  out = detail::simplex_lattice(q, r);
  out.resize(static_cast<std::size_t>(count));
  return out;
}

std::vector<Vec> read_weights(const std::string& path, Index q) {
  std::istringstream in(detail::read_file(path));
  std::vector<Vec> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::vector<double> vals;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, path + ": line " + std::to_string(lineno) + ": bad number '" + tok + "'");
      }
    }
    if (static_cast<Index>(vals.size()) != q)
      throw Error(ErrorCode::InvalidWeights, path + ": line " + std::to_string(lineno) + ": expected " +
                                                 std::to_string(q) + " weights");
    Vec th = Eigen::Map<Vec>(vals.data(), q);
    check_weights(th, q);
    out.push_back(th);
  }
  return out;
}

int cmd_plan(const std::string& scenario_path, const std::string& out, std::optional<std::uint64_t> seed) {
  Scenario s = load_scenario(scenario_path);
  if (seed) s.rrt.rng_seed = *seed;
  const OrderPairSet pairs = assign_vertices(s.start_terminal, s.goal_terminal, s.variance_weight);
  const OptimalVirtualTube tube = build_tube(pairs, s.obstacles, s.rrt, s.trajectory);
  save_tube(tube, out);
  std::cout << "basis solves: " << tube.qp_solves << "\n";
  for (Index k = 0; k < tube.q(); ++k)
    std::cout << "basis " << k << " objective: " << fmt(tube.basis_objective[k], 10) << "\n";
  std::cout << "knots:";
  for (double u : tube.knots.u) std::cout << " " << fmt(u, 8);
  std::cout << "\nwrote " << out << "\n";
  return kExitOk;
}

int cmd_members(const std::string& tube_path, Index count, const std::string& weights_path,
                const std::string& out, Index points) {
  const OptimalVirtualTube tube = load_tube(tube_path);
  const std::vector<Vec> weights = weights_path.empty() ? default_weights(tube.q(), count)
                                                        : read_weights(weights_path, tube.q());
  std::ostringstream ss;
  ss << "member";
  for (Index k = 0; k < tube.q(); ++k) ss << ",theta" << k;
  ss << ",t";
  for (Index c = 0; c < tube.poly.dim; ++c) ss << ",p" << c;
  ss << "\n";
  for (std::size_t m = 0; m < weights.size(); ++m) {
    const PiecewisePolynomial traj = member_trajectory(tube, weights[m]);
    for (Index i = 0; i < points; ++i) {
      const double t = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
      const Vec p = traj.evaluate(t);
      ss << m;
      for (Index k = 0; k < tube.q(); ++k) ss << "," << format_number(weights[m](k));
      ss << "," << format_number(t);
      for (Index c = 0; c < p.size(); ++c) ss << "," << format_number(p(c));
      ss << "\n";
    }
  }
  detail::write_file(out, ss.str());
  std::cout << "members: " << weights.size() << "\nwrote " << out << "\n";
  return kExitOk;
}

int cmd_verify(const std::string& tube_path, Index samples, std::uint64_t seed) {
  const OptimalVirtualTube tube = load_tube(tube_path);
  std::vector<Vec> thetas;
  for (Index k = 0; k < tube.q(); ++k) thetas.push_back(Vec::Unit(tube.q(), k));
  Rng rng(seed);
  for (Index i = 0; i < samples; ++i) thetas.push_back(random_weights(tube.q(), rng));

  double coef = 0.0, obj = 0.0, eq = 0.0, viol = 0.0, var = std::numeric_limits<double>::infinity();
  bool ok = true, active = false;
  VerifyOptions opt;
  opt.seed = seed;
  opt.variational_samples = 20;
  for (const Vec& th : thetas) {
    const MemberVerification v = verify_member_optimality(tube, th, opt);
    coef = std::max(coef, v.coefficient_error);
    obj = std::max(obj, v.objective_rel_error);
    eq = std::max(eq, v.eq_residual);
    viol = std::max(viol, v.corridor_violation);
    var = std::min(var, v.variational_min);
    active = active || v.corridor_active;
    ok = ok && v.ok();
  }
  // Stored basis vectors must solve their own problems.
  for (Index k = 0; k < tube.q(); ++k) {
    const QpSolution direct = solve_member_direct(tube, Vec::Unit(tube.q(), k));
    ok = ok && (direct.x - tube.basis_x[k]).cwiseAbs().maxCoeff() <= 1e-6;
  }
  const std::vector<BenchmarkRow> bench = combination_benchmark(tube, {std::max<Index>(samples, 10)}, 5, seed);

  std::cout << "members checked: " << thetas.size() << " (" << tube.q() << " vertices, " << samples << " random)\n"
            << "max coefficient error: " << fmt(coef, 3) << " (tol 1e-6)\n"
            << "max relative objective error: " << fmt(obj, 3) << " (tol 1e-8)\n"
            << "max equality residual: " << fmt(eq, 3) << " (tol 1e-8)\n"
            << "max corridor violation: " << fmt(viol, 3) << " (tol 1e-8)\n"
            << "min variational value: " << fmt(var, 3) << " (tol -1e-8)\n"
            << "corridor active: " << (active ? "yes" : "no") << "\n"
            << "combination " << fmt(bench.front().combine_ns_per_member, 4) << " ns/member, direct solve "
            << fmt(bench.front().direct_ns_per_solve, 4) << " ns, ratio " << fmt(bench.front().ratio(), 4) << "\n"
            << (ok ? "verify: PASS" : "verify: FAIL") << "\n";
  return ok ? kExitOk : kExitVerification;
}

int cmd_simulate(const std::string& scenario_path, const std::string& tube_path, const std::string& out,
                 const std::string& metrics_path, std::optional<int> threads) {
  Scenario s = load_scenario(scenario_path);
  if (threads) s.threads = *threads;
  const OptimalVirtualTube tube = load_tube(tube_path);
  const SimConfig cfg = s.sim_config(tube);
  const SimLog log = simulate(s.robots, tube, cfg);
  const Metrics m = compute_metrics(log, *cfg.time_limit, s.goal_radius);
  if (!out.empty()) save_log(log, out);
  if (!metrics_path.empty()) save_metrics(m, log.robots(), metrics_path);
  std::cout << "robots: " << log.robots() << "\n"
            << "ticks: " << log.ticks() << "\n"
            << "arrival_rate: " << fmt(m.arrival_rate) << "\n"
            << "average_time: " << format_number(m.average_time) << "\n"
            << "average_speed: " << fmt(m.average_speed) << "\n"
            << "min_pairwise_distance: " << format_number(m.min_pairwise_distance) << "\n"
            << "max_slack: " << fmt(log.max_slack, 3) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal virtual tube planning and swarm simulation"};
  app.require_subcommand(1);

  std::string scenario, tube, out, weights, metrics;
  Index count = 11, samples = 100, points = 101;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;

  auto* plan = app.add_subcommand("plan", "Build a tube from a scenario");
  plan->add_option("--scenario", scenario, "Scenario JSON")->required();
  plan->add_option("--out", out, "Output tube JSON")->required();
  plan->add_option("--seed-override", seed, "Replace the scenario seed");

  auto* members = app.add_subcommand("members", "Sample member trajectories as CSV");
  members->add_option("--tube", tube, "Tube JSON")->required();
  auto* count_opt = members->add_option("--count", count, "Number of members")->check(CLI::NonNegativeNumber);
  members->add_option("--weights", weights, "CSV file with one weight vector per line")->excludes(count_opt);
  members->add_option("--points", points, "Samples per member")->check(CLI::PositiveNumber);
  members->add_option("--out", out, "Output CSV")->required();

  auto* verify = app.add_subcommand("verify", "Check member optimality against direct solves");
  verify->add_option("--tube", tube, "Tube JSON")->required();
  verify->add_option("--samples", samples, "Random interior members")->check(CLI::NonNegativeNumber);
  verify->add_option("--seed-override", seed, "Seed for the random members");

  auto* sim = app.add_subcommand("simulate", "Run the MPC swarm simulation");
  sim->add_option("--scenario", scenario, "Scenario JSON")->required();
  sim->add_option("--tube", tube, "Tube JSON")->required();
  sim->add_option("--out", out, "Output log CSV");
  sim->add_option("--metrics", metrics, "Output metrics JSON");
  sim->add_option("--threads", threads, "Worker threads (default: hardware concurrency)")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (*plan) return cmd_plan(scenario, out, seed);
    if (*members) return cmd_members(tube, count, weights, out, points);
    if (*verify) return cmd_verify(tube, samples, seed.value_or(7));
    if (*sim) {
      if (!threads) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
      return cmd_simulate(scenario, tube, out, metrics, threads);
    }
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
