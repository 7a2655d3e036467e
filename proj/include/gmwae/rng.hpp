#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace gmwae {

using Rng = std::mt19937_64;

/// Uniform draw in [0, 1) built from the top 53 bits of one engine output.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Box-Muller without caching, so every draw depends only on engine state.
inline double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace gmwae
