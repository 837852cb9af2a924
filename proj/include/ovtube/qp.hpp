#pragma once

// Dense convex quadratic programming.
//
//   minimize    ½ xᵀPx + qᵀx
//   subject to  A x  = b
//               G x <= h
//
// Equality-only problems are solved through the full KKT saddle system with a
// fully pivoted LU factorization (P may be singular on the null space of A).
// Problems with inequalities are reduced to the null space of A and solved
// with the Goldfarb-Idnani dual active-set method, which requires the reduced
// Hessian ZᵀPZ to be positive definite.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ovtube/error.hpp"

namespace ovtube {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

struct QpProblem {
  Mat P;
  Vec q;
  Mat A;  // may have zero rows
  Vec b;
  Mat G;  // may have zero rows
  Vec h;

  Index size() const { return P.rows(); }
};

struct QpOptions {
  double rank_tol = 1e-12;  // pivot threshold relative to the largest pivot
  double feas_tol = 1e-10;  // inequality violation accepted at termination
  int max_iterations = 0;   // 0 selects 100 * (number of variables)
};

struct QpResult {
  Vec x;
  Vec eq_multipliers;    // λ in  Px + q + Aᵀλ + Gᵀμ = 0
  Vec ineq_multipliers;  // μ >= 0, one per row of G
  std::vector<Index> active;
  double objective = 0.0;
  int iterations = 0;
};

struct KktResiduals {
  double equality = 0.0;      // ‖Ax − b‖∞
  double inequality = 0.0;    // max(0, max_i (Gx − h)_i)
  double stationarity = 0.0;  // ‖Px + q + Aᵀλ + Gᵀμ‖∞
  double min_multiplier = 0.0;
  double complementarity = 0.0;  // max_i |μ_i (Gx − h)_i|
};

inline KktResiduals kkt_residuals(const QpProblem& qp, const QpResult& r) {
  KktResiduals k;
  Vec grad = qp.P * r.x + qp.q;
  if (qp.A.rows() > 0) {
    k.equality = (qp.A * r.x - qp.b).cwiseAbs().maxCoeff();
    grad += qp.A.transpose() * r.eq_multipliers;
  }
  if (qp.G.rows() > 0) {
    const Vec slack = qp.G * r.x - qp.h;
    k.inequality = std::max(0.0, slack.maxCoeff());
    grad += qp.G.transpose() * r.ineq_multipliers;
    k.min_multiplier = r.ineq_multipliers.minCoeff();
    k.complementarity = r.ineq_multipliers.cwiseProduct(slack).cwiseAbs().maxCoeff();
  }
  k.stationarity = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
  return k;
}

namespace detail {

inline void check_shapes(const QpProblem& qp) {
  const Index n = qp.P.rows();
  const bool ok = qp.P.cols() == n && qp.q.size() == n &&
                  (qp.A.rows() == 0 || qp.A.cols() == n) &&
                  qp.b.size() == qp.A.rows() &&
                  (qp.G.rows() == 0 || qp.G.cols() == n) &&
                  qp.h.size() == qp.G.rows();
  if (!ok) throw Error(ErrorCode::SizeMismatch, "QP dimensions are inconsistent");
}

// Orthogonal decomposition of the equality constraints: Aᵀ Π = Q R.
struct EqualityFactor {
  Index n = 0, p = 0;
  Mat Q1, Z;                                   // range / null-space bases
  Mat R1;                                      // p×p upper triangular
  Eigen::PermutationMatrix<Eigen::Dynamic> perm;

  EqualityFactor(const Mat& A, Index n_vars, double rank_tol) : n(n_vars), p(A.rows()) {
    if (p == 0) {
      Z = Mat::Identity(n, n);
      Q1.resize(n, 0);
      R1.resize(0, 0);
      perm.setIdentity(0);
      return;
    }
    if (p > n) throw Error(ErrorCode::RankDeficient, "more equality rows than variables");
    Eigen::ColPivHouseholderQR<Mat> qr(A.transpose());
    const Mat R = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
    const double rmax = std::abs(R(0, 0));
    for (Index i = 0; i < p; ++i) {
      if (!(std::abs(R(i, i)) > rank_tol * rmax)) {
        throw Error(ErrorCode::RankDeficient,
                    "equality matrix loses row rank at pivot " + std::to_string(i));
      }
    }
    const Mat Q = qr.householderQ() * Mat::Identity(n, n);
    Q1 = Q.leftCols(p);
    Z = Q.rightCols(n - p);
    R1 = R;
    perm = qr.colsPermutation();
  }

  // Minimum-norm solution of A x = b.
  Vec particular(const Vec& b) const {
    if (p == 0) return Vec::Zero(n);
    const Vec pb = perm.transpose() * b;
    const Vec y = R1.transpose().template triangularView<Eigen::Lower>().solve(pb);
    return Q1 * y;
  }

  // Least-squares λ for Aᵀλ = rhs.
  Vec multipliers(const Vec& rhs) const {
    if (p == 0) return Vec(0);
    const Vec y = R1.template triangularView<Eigen::Upper>().solve(Q1.transpose() * rhs);
    return perm * y;
  }
};

inline double objective(const QpProblem& qp, const Vec& x) {
  return 0.5 * x.dot(qp.P * x) + qp.q.dot(x);
}

inline QpResult solve_equality_only(const QpProblem& qp, const QpOptions& opt) {
  const Index n = qp.size();
  const Index p = qp.A.rows();
  if (p > 0) {
    Eigen::FullPivLU<Mat> alu(qp.A);
    alu.setThreshold(opt.rank_tol);
    if (alu.rank() < p) {
      throw Error(ErrorCode::RankDeficient, "equality matrix rank " + std::to_string(alu.rank()) +
                                                " < " + std::to_string(p) + " rows");
    }
  }
  Mat K = Mat::Zero(n + p, n + p);
  K.topLeftCorner(n, n) = qp.P;
  if (p > 0) {
    K.topRightCorner(n, p) = qp.A.transpose();
    K.bottomLeftCorner(p, n) = qp.A;
  }
  Vec rhs(n + p);
  rhs.head(n) = -qp.q;
  rhs.tail(p) = qp.b;

  // Symmetric equilibration so the rank test does not depend on the
  // relative scaling of P and A.
  Vec D = K.cwiseAbs().rowwise().maxCoeff();
  for (Index i = 0; i < n + p; ++i) D(i) = D(i) > 0.0 ? 1.0 / std::sqrt(D(i)) : 1.0;
  const Mat Ks = D.asDiagonal() * K * D.asDiagonal();
  Eigen::FullPivLU<Mat> lu(Ks);
  lu.setThreshold(opt.rank_tol);
  if (lu.rank() < n + p) {
    throw Error(ErrorCode::Unbounded, "KKT matrix is singular: objective not strictly convex "
                                      "on the feasible affine set");
  }
  auto solve = [&](const Vec& r) -> Vec { return D.asDiagonal() * lu.solve(Vec(D.asDiagonal() * r)); };
  Vec sol = solve(rhs);
  sol += solve(rhs - K * sol);  // one step of iterative refinement

  QpResult r;
  r.x = sol.head(n);
  r.eq_multipliers = sol.tail(p);
  r.ineq_multipliers = Vec(0);
  r.objective = objective(qp, r.x);
  return r;
}

}  // namespace detail

/// Solves a dense convex QP. Throws Error with code RankDeficient, Infeasible,
/// Unbounded or MaxIterations.
inline QpResult solve_qp(const QpProblem& qp, const QpOptions& opt = {}) {
  detail::check_shapes(qp);
  if (qp.G.rows() == 0) return detail::solve_equality_only(qp, opt);

  const Index n = qp.size();
  const Index m = qp.G.rows();
  const int max_iter = opt.max_iterations > 0 ? opt.max_iterations : static_cast<int>(100 * n);

  const detail::EqualityFactor eq(qp.A, n, opt.rank_tol);
  const Vec xp = eq.particular(qp.b);
  const Index nz = n - eq.p;

  // Reduced problem: min ½ zᵀRz + cᵀz  s.t.  Nᵀz >= bn  (N = −(GZ)ᵀ).
  const Mat GZ = qp.G * eq.Z;
  const Vec hz = qp.h - qp.G * xp;

  QpResult res;
  res.ineq_multipliers = Vec::Zero(m);
  Vec z = Vec::Zero(nz);

  if (nz > 0) {
    const Mat R = eq.Z.transpose() * qp.P * eq.Z;
    const Vec c = eq.Z.transpose() * (qp.P * xp + qp.q);
    Eigen::LLT<Mat> llt(0.5 * (R + R.transpose()));
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::Unbounded, "reduced Hessian is not positive definite");
    }
    const Mat Rinv = llt.solve(Mat::Identity(nz, nz));
    z = -Rinv * c;

    std::vector<Index> act;  // active constraint indices
    Vec u;                   // their multipliers
    const double inf = std::numeric_limits<double>::infinity();
    auto slack_of = [&](Index i) { return hz(i) - GZ.row(i).dot(z); };  // >= 0 when satisfied
    auto tol_of = [&](Index i) { return opt.feas_tol * (1.0 + std::abs(hz(i))); };

    int iter = 0;
    for (;;) {
      // Most violated constraint outside the active set.
      Index pidx = -1;
      double worst = 0.0;
      for (Index i = 0; i < m; ++i) {
        if (std::find(act.begin(), act.end(), i) != act.end()) continue;
        const double s = slack_of(i);
        if (s < -tol_of(i) && s < worst) {
          worst = s;
          pidx = i;
        }
      }
      if (pidx < 0) break;

      const Vec np = -GZ.row(pidx).transpose();
      double up = 0.0;
      for (;;) {
        if (++iter > max_iter) {
          throw Error(ErrorCode::MaxIterations, "active-set iteration limit " +
                                                    std::to_string(max_iter) + " reached");
        }
        const Index k = static_cast<Index>(act.size());
        Vec dir = Rinv * np;
        Vec r(k);
        if (k > 0) {
          Mat N(nz, k);
          for (Index j = 0; j < k; ++j) N.col(j) = -GZ.row(act[j]).transpose();
          const Mat RinvN = Rinv * N;
          const Mat M = N.transpose() * RinvN;
          r = M.ldlt().solve(RinvN.transpose() * np);
          dir -= RinvN * r;
        }
        // Dual (partial) step: first active multiplier to hit zero.
        double t1 = inf;
        Index drop = -1;
        for (Index j = 0; j < k; ++j) {
          if (r(j) > 0.0) {
            const double tj = u(j) / r(j);
            if (tj < t1) {
              t1 = tj;
              drop = j;
            }
          }
        }
        // Primal (full) step: constraint p becomes tight.
        // np is treated as dependent on the active normals when its
        // R⁻¹-norm collapses after projection.
        const double denom = dir.dot(np);
        const double sp = slack_of(pidx);  // npᵀz − bn  (negative while violated)
        const double t2 = denom <= 1e-11 * np.dot(Rinv * np) ? inf : -sp / denom;
        if (!dir.allFinite() || (k > 0 && !r.allFinite())) {
          throw Error(ErrorCode::Infeasible, "active-set step is not finite");
        }
        const double t = std::min(t1, t2);
        if (t == inf) {
          throw Error(ErrorCode::Infeasible, "inequality constraints are inconsistent with the "
                                             "equality constraints");
        }
        if (t2 == inf) {
          if (k > 0) u -= t * r;
          up += t;
          act.erase(act.begin() + drop);
          Vec nu(k - 1);
          for (Index j = 0, w = 0; j < k; ++j)
            if (j != drop) nu(w++) = u(j);
          u = nu;
          continue;
        }
        z += t * dir;
        if (k > 0) u -= t * r;
        up += t;
        if (t2 <= t1) {
          act.push_back(pidx);
          u.conservativeResize(k + 1);
          u(k) = up;
          break;
        }
        act.erase(act.begin() + drop);
        Vec nu(k - 1);
        for (Index j = 0, w = 0; j < k; ++j)
          if (j != drop) nu(w++) = u(j);
        u = nu;
      }
    }
    for (std::size_t j = 0; j < act.size(); ++j) res.ineq_multipliers(act[j]) = std::max(0.0, u(j));
    res.active = act;
    std::sort(res.active.begin(), res.active.end());
    res.iterations = iter;
  } else {
    for (Index i = 0; i < m; ++i) {
      if (hz(i) < -opt.feas_tol * (1.0 + std::abs(qp.h(i)))) {
        throw Error(ErrorCode::Infeasible, "unique equality solution violates inequality " +
                                               std::to_string(i));
      }
    }
  }

  res.x = xp + eq.Z * z;
  Vec rhs = -(qp.P * res.x + qp.q + qp.G.transpose() * res.ineq_multipliers);
  res.eq_multipliers = eq.multipliers(rhs);
  res.objective = detail::objective(qp, res.x);
  return res;
}

}  // namespace ovtube
