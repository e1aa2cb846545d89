#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace twinbeam::detail {

/// Pairwise (cascade) summation. Deterministic for a fixed input order and
/// accurate to ~eps*log2(n) relative, which the power/center-of-mass
/// invariants rely on.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 32) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double pairwise_sum(const std::vector<double>& v) {
  return pairwise_sum(std::span<const double>(v));
}

/// Uniform double in [0, 1) from the top 53 bits of a mt19937_64 draw.
/// Spelled out (rather than std::uniform_real_distribution) so that streams
/// are identical across standard library implementations.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal deviate via Box-Muller, one value per call (the cosine
/// branch only, again for cross-platform reproducibility).
inline double standard_normal(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(6.283185307179586476925286766559 * u2);
}

} // namespace twinbeam::detail
