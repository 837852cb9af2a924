#include <gtest/gtest.h>

#include "ovtube/qp.hpp"
#include "ovtube/rng.hpp"

namespace {

using namespace ovtube;

// Enumerates every subset of inequality rows, solves the KKT system with
// that subset held as equalities, and keeps the primal-dual feasible point.
// Exponential, so only usable for a handful of rows.
Vec brute_force_qp(const QpProblem& qp) {
  const Index n = qp.size(), p = qp.A.rows(), m = qp.G.rows();
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<Index> act;
    for (Index i = 0; i < m; ++i)
      if (mask & (1u << i)) act.push_back(i);
    const Index k = static_cast<Index>(act.size());
    if (p + k > n) continue;
    Mat K = Mat::Zero(n + p + k, n + p + k);
    Vec rhs = Vec::Zero(n + p + k);
    K.topLeftCorner(n, n) = qp.P;
    rhs.head(n) = -qp.q;
    for (Index r = 0; r < p; ++r) {
      K.block(n + r, 0, 1, n) = qp.A.row(r);
      K.block(0, n + r, n, 1) = qp.A.row(r).transpose();
      rhs(n + r) = qp.b(r);
    }
    for (Index r = 0; r < k; ++r) {
      K.block(n + p + r, 0, 1, n) = qp.G.row(act[r]);
      K.block(0, n + p + r, n, 1) = qp.G.row(act[r]).transpose();
      rhs(n + p + r) = qp.h(act[r]);
    }
    Eigen::FullPivLU<Mat> lu(K);
    if (lu.rank() < n + p + k) continue;
    const Vec sol = lu.solve(rhs);
    const Vec x = sol.head(n);
    if (k > 0 && sol.tail(k).minCoeff() < -1e-12) continue;
    if (m > 0 && (qp.G * x - qp.h).maxCoeff() > 1e-10) continue;
    return x;
  }
  return Vec();
}

QpProblem random_problem(Rng& rng, Index n, Index p, Index m) {
  QpProblem qp;
  Mat L(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) L(i, j) = standard_normal(rng);
  qp.P = L * L.transpose() + 0.5 * Mat::Identity(n, n);
  qp.q = Vec(n);
  for (Index i = 0; i < n; ++i) qp.q(i) = 3.0 * standard_normal(rng);
  qp.A = Mat(p, n);
  qp.b = Vec(p);
  for (Index r = 0; r < p; ++r) {
    for (Index i = 0; i < n; ++i) qp.A(r, i) = standard_normal(rng);
    qp.b(r) = standard_normal(rng);
  }
  // Rows G x <= h with h > 0 relative to a point x0 satisfying A x0 = b keep
  // the feasible set nonempty.
  const Vec x0 = qp.A.rows() > 0 ? Vec(qp.A.completeOrthogonalDecomposition().solve(qp.b)) : Vec(Vec::Zero(n));
  qp.G = Mat(m, n);
  qp.h = Vec(m);
  for (Index r = 0; r < m; ++r) {
    for (Index i = 0; i < n; ++i) qp.G(r, i) = standard_normal(rng);
    qp.h(r) = qp.G.row(r).dot(x0) + uniform(rng, 0.05, 0.5);
  }
  return qp;
}

TEST(Qp, MatchesActiveSetEnumeration) {
  Rng rng(2024);
  int with_active = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const Index p = trial % 3;
    const QpProblem qp = random_problem(rng, 5, p, 6);
    const Vec oracle = brute_force_qp(qp);
    ASSERT_EQ(oracle.size(), 5) << "trial " << trial;
    const QpResult r = solve_qp(qp);
    EXPECT_LE((r.x - oracle).cwiseAbs().maxCoeff(), 1e-9) << "trial " << trial;
    const KktResiduals k = kkt_residuals(qp, r);
    EXPECT_LE(k.equality, 1e-10);
    EXPECT_LE(k.inequality, 1e-10);
    EXPECT_LE(k.stationarity, 1e-8);
    EXPECT_GE(k.min_multiplier, 0.0);
    EXPECT_LE(k.complementarity, 1e-8);
    if (!r.active.empty()) ++with_active;
  }
  EXPECT_GE(with_active, 10);
}

TEST(Qp, EqualityOnlyWithSingularHessian) {
  // min x1² subject to x0 + x1 = 1, x0 − x1 = 1: P is singular but the
  // constraints pin x.
  QpProblem qp;
  qp.P = Mat::Zero(2, 2);
  qp.P(1, 1) = 2.0;
  qp.q = Vec::Zero(2);
  qp.A = (Mat(2, 2) << 1, 1, 1, -1).finished();
  qp.b = (Vec(2) << 1, 1).finished();
  qp.G = Mat(0, 2);
  qp.h = Vec(0);
  const QpResult r = solve_qp(qp);
  EXPECT_NEAR(r.x(0), 1.0, 1e-14);
  EXPECT_NEAR(r.x(1), 0.0, 1e-14);
}

TEST(Qp, DetectsInfeasibleBounds) {
  QpProblem qp;
  qp.P = Mat::Identity(1, 1);
  qp.q = Vec::Zero(1);
  qp.A = Mat(0, 1);
  qp.b = Vec(0);
  qp.G = (Mat(2, 1) << 1, -1).finished();
  qp.h = (Vec(2) << 0, -1).finished();  // x <= 0 and x >= 1
  try {
    solve_qp(qp);
    FAIL() << "expected Infeasible";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Infeasible);
  }
}

TEST(Qp, RejectsDependentEqualities) {
  QpProblem qp;
  qp.P = Mat::Identity(2, 2);
  qp.q = Vec::Zero(2);
  qp.A = (Mat(2, 2) << 1, 1, 2, 2).finished();
  qp.b = (Vec(2) << 1, 3).finished();
  qp.G = Mat(0, 2);
  qp.h = Vec(0);
  try {
    solve_qp(qp);
    FAIL() << "expected RankDeficient";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RankDeficient);
  }
}

TEST(Qp, UnboundedEqualityProblem) {
  QpProblem qp;
  qp.P = Mat::Zero(2, 2);
  qp.q = (Vec(2) << 1, 0).finished();
  qp.A = (Mat(1, 2) << 0, 1).finished();
  qp.b = Vec::Ones(1);
  qp.G = Mat(0, 2);
  qp.h = Vec(0);
  try {
    solve_qp(qp);
    FAIL() << "expected Unbounded";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Unbounded);
  }
}

TEST(Qp, SaturatedBoxWithDuplicateRows) {
  // min (x − 10)² + (y + 10)² with |x|, |y| <= 4, every bound listed twice.
  // Duplicated active rows are linearly dependent and must not stall the
  // active-set iteration.
  QpProblem qp;
  qp.P = 2.0 * Mat::Identity(2, 2);
  qp.q = (Vec(2) << -20, 20).finished();
  qp.A = Mat(0, 2);
  qp.b = Vec(0);
  qp.G = Mat::Zero(8, 2);
  qp.h = Vec::Constant(8, 4.0);
  for (int rep = 0; rep < 2; ++rep) {
    qp.G(4 * rep + 0, 0) = 1;
    qp.G(4 * rep + 1, 0) = -1;
    qp.G(4 * rep + 2, 1) = 1;
    qp.G(4 * rep + 3, 1) = -1;
  }
  const QpResult r = solve_qp(qp);
  EXPECT_NEAR(r.x(0), 4.0, 1e-12);
  EXPECT_NEAR(r.x(1), -4.0, 1e-12);
  const KktResiduals k = kkt_residuals(qp, r);
  EXPECT_LE(k.stationarity, 1e-10);
  EXPECT_GE(k.min_multiplier, 0.0);
}

TEST(Qp, InequalityWithEqualityMatchesHandSolution) {
  // min x² + y² s.t. x + y = 2, x >= 1.5  ->  (1.5, 0.5).
  QpProblem qp;
  qp.P = 2.0 * Mat::Identity(2, 2);
  qp.q = Vec::Zero(2);
  qp.A = (Mat(1, 2) << 1, 1).finished();
  qp.b = (Vec(1) << 2).finished();
  qp.G = (Mat(1, 2) << -1, 0).finished();
  qp.h = (Vec(1) << -1.5).finished();
  const QpResult r = solve_qp(qp);
  EXPECT_NEAR(r.x(0), 1.5, 1e-13);
  EXPECT_NEAR(r.x(1), 0.5, 1e-13);
  ASSERT_EQ(r.active.size(), 1u);
  // Stationarity: 2x + λ − μ = 0, 2y + λ = 0  ->  λ = −1, μ = 2.
  EXPECT_NEAR(r.eq_multipliers(0), -1.0, 1e-12);
  EXPECT_NEAR(r.ineq_multipliers(0), 2.0, 1e-12);
}

}  // namespace
