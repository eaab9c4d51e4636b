#pragma once

#include <cstddef>
#include <cstdint>
#include <cmath>
#include <random>

namespace mdepth {

// All sampling goes through a seeded 64-bit Mersenne twister passed by value or
// reference; the helpers below avoid the implementation-defined distributions
// of <random> so sequences match across standard libraries.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  const auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  return i < n ? i : n - 1;
}

// Box-Muller; one draw per call.
inline double normal(Rng& rng, double mean = 0.0, double stddev = 1.0) {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

}  // namespace mdepth
