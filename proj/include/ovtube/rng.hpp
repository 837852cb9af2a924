#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace ovtube {

// std::mt19937_64 has a fully specified output sequence, the standard
// distributions do not. The helpers below keep results bit-identical across
// standard library implementations.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Box-Muller; one value per call, the twin is discarded.
inline double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace ovtube
