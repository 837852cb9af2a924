#pragma once

// Chord-length knots per path, public (averaged) knots, and normalization.

#include <string>
#include <vector>

#include "ovtube/error.hpp"
#include "ovtube/geometry.hpp"

namespace ovtube {

struct KnotVector {
  std::vector<double> u;
  bool normalized = false;

  Index segments() const { return static_cast<Index>(u.size()) - 1; }
  double back() const { return u.back(); }
};

inline KnotVector chord_length_knots(const std::vector<Point>& pts) {
  KnotVector k;
  k.u.reserve(pts.size());
  k.u.push_back(0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double chord = (pts[i] - pts[i - 1]).norm();
    if (!(chord > 0.0)) {
      throw Error(ErrorCode::ZeroChord, "waypoints " + std::to_string(i - 1) + " and " +
                                            std::to_string(i) + " coincide");
    }
    k.u.push_back(k.u.back() + chord);
  }
  return k;
}

/// Componentwise arithmetic mean of unnormalized knot vectors.
inline KnotVector public_knots(const std::vector<KnotVector>& all) {
  if (all.empty()) throw Error(ErrorCode::LengthMismatch, "no knot vectors");
  const std::size_t len = all.front().u.size();
  KnotVector out;
  out.u.assign(len, 0.0);
  for (const auto& k : all) {
    if (k.u.size() != len) {
      throw Error(ErrorCode::LengthMismatch, "knot vectors of length " + std::to_string(len) +
                                                 " and " + std::to_string(k.u.size()));
    }
    if (k.normalized) throw Error(ErrorCode::LengthMismatch, "public knots expect unnormalized input");
    for (std::size_t i = 0; i < len; ++i) out.u[i] += k.u[i];
  }
  for (double& v : out.u) v /= static_cast<double>(all.size());
  return out;
}

inline KnotVector normalize_knots(const KnotVector& k) {
  if (k.u.empty() || !(k.u.back() > 0.0)) throw Error(ErrorCode::ZeroLength, "knot span is zero");
  KnotVector out;
  out.normalized = true;
  out.u.reserve(k.u.size());
  const double total = k.u.back();
  for (double v : k.u) out.u.push_back(v / total);
  out.u.back() = 1.0;
  return out;
}

}  // namespace ovtube
