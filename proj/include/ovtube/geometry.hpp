#pragma once

// Points, convex-hull terminals, barycentric weights and the start/goal
// vertex assignment that defines the linear map between terminals.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "ovtube/error.hpp"
#include "ovtube/qp.hpp"

namespace ovtube {

using Point = Eigen::VectorXd;

inline constexpr double kHullTol = 1e-9;
inline constexpr double kWeightTol = 1e-9;
inline constexpr int kMaxAssignmentVertices = 12;

/// Convex hull of a finite vertex list.
struct Terminal {
  std::vector<Point> vertices;

  Index size() const { return static_cast<Index>(vertices.size()); }
  Index dim() const { return vertices.empty() ? 0 : vertices.front().size(); }

  /// Vertices as the columns of a dim × q matrix.
  Mat matrix() const {
    Mat V(dim(), size());
    for (Index k = 0; k < size(); ++k) V.col(k) = vertices[k];
    return V;
  }
};

struct BarycentricWeights {
  Vec theta;
};

/// Start/goal terminals and the vertex pairing k -> pairing[k].
struct OrderPairSet {
  Terminal start;
  Terminal goal;
  std::vector<int> pairing;

  Index size() const { return start.size(); }
  const Point& start_vertex(Index k) const { return start.vertices[k]; }
  const Point& goal_vertex(Index k) const { return goal.vertices[pairing[k]]; }
};

/// Dimension of the affine hull of a point set.
inline Index affine_rank(const std::vector<Point>& pts, double tol = 1e-10) {
  if (pts.size() <= 1) return 0;
  Mat D(pts.front().size(), static_cast<Index>(pts.size()) - 1);
  for (Index k = 1; k < static_cast<Index>(pts.size()); ++k) D.col(k - 1) = pts[k] - pts[0];
  Eigen::ColPivHouseholderQR<Mat> qr(D);
  qr.setThreshold(tol);
  return qr.rank();
}

/// Throws InvalidWeights unless theta lies on the probability simplex of size q.
inline void check_weights(const Vec& theta, Index q) {
  if (theta.size() != q) {
    throw Error(ErrorCode::InvalidWeights, "expected " + std::to_string(q) + " weights, got " +
                                               std::to_string(theta.size()));
  }
  if (!theta.allFinite()) throw Error(ErrorCode::InvalidWeights, "non-finite weight");
  if (q > 0 && theta.minCoeff() < -kWeightTol) {
    throw Error(ErrorCode::InvalidWeights, "negative weight " + std::to_string(theta.minCoeff()));
  }
  if (std::abs(theta.sum() - 1.0) > kWeightTol) {
    throw Error(ErrorCode::InvalidWeights, "weights sum to " + std::to_string(theta.sum()));
  }
}

struct HullProjection {
  double distance = 0.0;
  Vec theta;  // weights of the nearest hull point
};

/// Euclidean distance from p to conv(vertices), with the weights of the
/// nearest point.
inline HullProjection project_to_hull(const Point& p, const std::vector<Point>& vertices) {
  const Index q = static_cast<Index>(vertices.size());
  if (q == 0) throw Error(ErrorCode::DegenerateTerminal, "empty vertex set");
  HullProjection out;
  if (q == 1) {
    out.theta = Vec::Ones(1);
    out.distance = (p - vertices[0]).norm();
    return out;
  }
  Mat D(p.size(), q);
  for (Index k = 0; k < q; ++k) D.col(k) = vertices[k] - p;
  Mat gram = D.transpose() * D;
  const double reg = 1e-13 * std::max(1.0, gram.diagonal().maxCoeff());
  QpProblem qp;
  qp.P = 2.0 * (gram + reg * Mat::Identity(q, q));
  qp.q = Vec::Zero(q);
  qp.A = Mat::Ones(1, q);
  qp.b = Vec::Ones(1);
  qp.G = -Mat::Identity(q, q);
  qp.h = Vec::Zero(q);
  const QpResult r = solve_qp(qp);
  out.theta = r.x.cwiseMax(0.0);
  out.theta /= out.theta.sum();
  out.distance = (D * out.theta).norm();
  return out;
}

/// Barycentric weights of p with respect to a terminal. Unique for affinely
/// independent vertices; otherwise the minimum-norm feasible weights.
inline BarycentricWeights barycentric_weights(const Point& p, const Terminal& term) {
  const Index q = term.size();
  if (q == 0) throw Error(ErrorCode::DegenerateTerminal, "terminal has no vertices");
  const Index d = term.dim();
  if (p.size() != d) throw Error(ErrorCode::SizeMismatch, "point dimension differs from terminal");
  const Index rank = affine_rank(term.vertices);
  const Mat V = term.matrix();

  BarycentricWeights w;
  if (rank == q - 1) {
    // Affinely independent: solve [V; 1ᵀ] θ = [p; 1] (full column rank).
    Mat M(d + 1, q);
    M.topRows(d) = V;
    M.row(d).setOnes();
    Vec rhs(d + 1);
    rhs.head(d) = p;
    rhs(d) = 1.0;
    Vec theta = M.colPivHouseholderQr().solve(rhs);
    const double resid = (V * theta - p).cwiseAbs().maxCoeff();
    if (resid > kHullTol || theta.minCoeff() < -kWeightTol) {
      const HullProjection proj = project_to_hull(p, term.vertices);
      if (proj.distance > kHullTol) {
        throw Error(ErrorCode::PointOutsideHull,
                    "distance to hull " + std::to_string(proj.distance));
      }
      theta = proj.theta;
    }
    theta = theta.cwiseMax(0.0);
    theta /= theta.sum();
    w.theta = theta;
    return w;
  }
  if (rank < d) {
    throw Error(ErrorCode::DegenerateTerminal,
                std::to_string(q) + " vertices span only " + std::to_string(rank) + " dimensions");
  }
  // q > d + 1: minimum Euclidean norm weights.
  QpProblem qp;
  qp.P = 2.0 * Mat::Identity(q, q);
  qp.q = Vec::Zero(q);
  qp.A.resize(d + 1, q);
  qp.A.topRows(d) = V;
  qp.A.row(d).setOnes();
  qp.b.resize(d + 1);
  qp.b.head(d) = p;
  qp.b(d) = 1.0;
  qp.G = -Mat::Identity(q, q);
  qp.h = Vec::Zero(q);
  try {
    w.theta = solve_qp(qp).x.cwiseMax(0.0);
    w.theta /= w.theta.sum();
    if ((V * w.theta - p).cwiseAbs().maxCoeff() <= kHullTol) return w;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Infeasible) throw;
  }
  const HullProjection proj = project_to_hull(p, term.vertices);
  if (proj.distance > kHullTol) {
    throw Error(ErrorCode::PointOutsideHull, "distance to hull " + std::to_string(proj.distance));
  }
  w.theta = proj.theta;
  return w;
}

/// Exhaustive search for the pairing that minimizes
/// mean(dist) + variance_weight * var(dist). Ties go to the lexicographically
/// smallest permutation.
inline OrderPairSet assign_vertices(const Terminal& starts, const Terminal& goals,
                                    double variance_weight = 1.0) {
  const Index q = starts.size();
  if (q != goals.size()) {
    throw Error(ErrorCode::SizeMismatch, "start terminal has " + std::to_string(q) +
                                             " vertices, goal terminal " +
                                             std::to_string(goals.size()));
  }
  if (q > kMaxAssignmentVertices) {
    throw Error(ErrorCode::TooManyVertices,
                std::to_string(q) + " vertices exceed the exhaustive bound of " +
                    std::to_string(kMaxAssignmentVertices));
  }
  Mat dist(q, q);
  for (Index i = 0; i < q; ++i)
    for (Index j = 0; j < q; ++j) dist(i, j) = (starts.vertices[i] - goals.vertices[j]).norm();

  std::vector<int> perm(q);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  if (q > 0) {
    do {
      double sum = 0.0, sum_sq = 0.0;
      for (Index k = 0; k < q; ++k) {
        const double v = dist(k, perm[k]);
        sum += v;
        sum_sq += v * v;
      }
      const double mean = sum / q;
      const double var = std::max(0.0, sum_sq / q - mean * mean);
      const double cost = mean + variance_weight * var;
      if (!std::isfinite(best_cost) || cost < best_cost - 1e-12 * (1.0 + std::abs(best_cost))) {
        best_cost = cost;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  return OrderPairSet{starts, goals, best};
}

/// Image of a start-terminal point under the linear map defined by the pairing.
inline Point map_point(const OrderPairSet& pairs, const Point& p) {
  const Vec theta = barycentric_weights(p, pairs.start).theta;
  Point out = Point::Zero(pairs.goal.dim());
  for (Index k = 0; k < pairs.size(); ++k) out += theta(k) * pairs.goal_vertex(k);
  return out;
}

/// Throws DegenerateTerminal if the terminal has duplicate vertices, vertices
/// that are not extreme points, or q >= d + 1 vertices that do not span d dims.
inline void validate_terminal(const Terminal& term, const std::string& label) {
  const Index q = term.size();
  if (q == 0) throw Error(ErrorCode::DegenerateTerminal, label + ": no vertices");
  const Index d = term.dim();
  for (const auto& v : term.vertices) {
    if (v.size() != d) throw Error(ErrorCode::SizeMismatch, label + ": mixed vertex dimensions");
    if (!v.allFinite()) throw Error(ErrorCode::DegenerateTerminal, label + ": non-finite vertex");
  }
  for (Index i = 0; i < q; ++i)
    for (Index j = i + 1; j < q; ++j)
      if ((term.vertices[i] - term.vertices[j]).norm() <= kHullTol) {
        throw Error(ErrorCode::DegenerateTerminal, label + ": duplicate vertices " +
                                                       std::to_string(i) + " and " +
                                                       std::to_string(j));
      }
  const Index rank = affine_rank(term.vertices);
  if (q >= d + 1 && rank < d) {
    throw Error(ErrorCode::DegenerateTerminal, label + ": vertices do not span the space");
  }
  if (rank < q - 1) {
    // Affinely dependent: every vertex must still be an extreme point.
    for (Index i = 0; i < q; ++i) {
      std::vector<Point> others;
      for (Index j = 0; j < q; ++j)
        if (j != i) others.push_back(term.vertices[j]);
      if (project_to_hull(term.vertices[i], others).distance <= kHullTol) {
        throw Error(ErrorCode::DegenerateTerminal,
                    label + ": vertex " + std::to_string(i) + " is not an extreme point");
      }
    }
  }
}

/// Distance between the convex hulls of two vertex sets.
inline double hull_distance(const std::vector<Point>& a, const std::vector<Point>& b) {
  const Index na = static_cast<Index>(a.size()), nb = static_cast<Index>(b.size());
  const Index n = na + nb;
  Mat D(a.front().size(), n);
  for (Index k = 0; k < na; ++k) D.col(k) = a[k];
  for (Index k = 0; k < nb; ++k) D.col(na + k) = -b[k];
  // Shift both sets by a common origin to keep the Gram matrix well scaled.
  const Point origin = a.front();
  for (Index k = 0; k < na; ++k) D.col(k) -= origin;
  for (Index k = 0; k < nb; ++k) D.col(na + k) += origin;
  Mat gram = D.transpose() * D;
  const double reg = 1e-13 * std::max(1.0, gram.diagonal().maxCoeff());
  QpProblem qp;
  qp.P = 2.0 * (gram + reg * Mat::Identity(n, n));
  qp.q = Vec::Zero(n);
  qp.A = Mat::Zero(2, n);
  qp.A.row(0).head(na).setOnes();
  qp.A.row(1).tail(nb).setOnes();
  qp.b = Vec::Ones(2);
  qp.G = -Mat::Identity(n, n);
  qp.h = Vec::Zero(n);
  const QpResult r = solve_qp(qp);
  return (D * r.x.cwiseMax(0.0)).norm();
}

/// Half-space description of a point set's convex hull inside its own affine
/// hull:  normals.row(i) · (p − center) <= offsets(i). Directions orthogonal
/// to the affine hull are left unconstrained.
struct RelativeHull {
  Point center;
  Mat basis;    // d × r orthonormal basis of the affine hull directions
  Mat normals;  // f × d, unit rows lying in span(basis)
  Vec offsets;  // f
  Index rank = 0;

  /// Signed distance to the relative boundary (positive inside), measured
  /// within the affine hull.
  double depth(const Point& p) const {
    if (normals.rows() == 0) return 0.0;
    return (offsets - normals * (p - center)).minCoeff();
  }
};

inline RelativeHull relative_hull(const std::vector<Point>& pts, double tol = 1e-9) {
  RelativeHull h;
  const Index q = static_cast<Index>(pts.size());
  const Index d = pts.front().size();
  h.center = Point::Zero(d);
  for (const auto& p : pts) h.center += p;
  h.center /= static_cast<double>(q);
  Mat D(d, q);
  for (Index k = 0; k < q; ++k) D.col(k) = pts[k] - h.center;
  Eigen::JacobiSVD<Mat> svd(D, Eigen::ComputeFullU);
  const Vec sv = svd.singularValues();
  const double scale = std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
  Index r = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol * scale) ++r;
  h.rank = r;
  h.basis = svd.matrixU().leftCols(r);
  if (r == 0) {
    h.normals.resize(0, d);
    h.offsets.resize(0);
    return h;
  }
  const Mat Y = h.basis.transpose() * D;  // r × q local coordinates

  std::vector<Vec> normals;
  std::vector<double> offsets;
  std::vector<Index> idx(r);
  // Enumerate r-subsets; each spanning a supporting hyperplane is a facet.
  std::vector<bool> mask(q, false);
  std::fill(mask.begin(), mask.begin() + r, true);
  do {
    Index w = 0;
    for (Index k = 0; k < q; ++k)
      if (mask[k]) idx[w++] = k;
    Vec n(r);
    if (r == 1) {
      n << 1.0;
    } else {
      Mat E(r - 1, r);
      for (Index j = 1; j < r; ++j) E.row(j - 1) = (Y.col(idx[j]) - Y.col(idx[0])).transpose();
      Eigen::FullPivLU<Mat> lu(E);
      lu.setThreshold(1e-10);
      if (lu.rank() < r - 1) continue;
      n = lu.kernel().col(0);
      n.normalize();
    }
    const double off = n.dot(Y.col(idx[0]));
    const Vec vals = n.transpose() * Y;
    const double mx = (vals.array() - off).maxCoeff();
    const double mn = (vals.array() - off).minCoeff();
    const double eps = tol * scale;
    auto push = [&](const Vec& nn, double oo) {
      for (std::size_t f = 0; f < normals.size(); ++f)
        if ((normals[f] - nn).norm() < 1e-9 && std::abs(offsets[f] - oo) < 1e-9 * scale) return;
      normals.push_back(nn);
      offsets.push_back(oo);
    };
    if (mx <= eps) push(n, off);
    if (mn >= -eps) push(-n, -off);
  } while (std::prev_permutation(mask.begin(), mask.end()));

  h.normals.resize(static_cast<Index>(normals.size()), d);
  h.offsets.resize(static_cast<Index>(normals.size()));
  for (std::size_t f = 0; f < normals.size(); ++f) {
    h.normals.row(static_cast<Index>(f)) = (h.basis * normals[f]).transpose();
    h.offsets(static_cast<Index>(f)) = offsets[f];
  }
  return h;
}

}  // namespace ovtube
