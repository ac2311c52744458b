#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace svmrob {

// Deterministic draws on top of std::mt19937_64. The standard distribution
// objects are implementation-defined; these helpers are not, so seeded runs
// reproduce bit-identically on any platform.

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform01(gen);
}

/// Standard normal via Box-Muller (one value per call).
inline double normal(std::mt19937_64& gen) {
  double u1;
  do {
    u1 = uniform01(gen);
  } while (u1 <= 0.0);
  const double u2 = uniform01(gen);
  const double two_pi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

/// Seed-derivation scheme used everywhere: base seed plus a stable job index.
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t job_index) {
  return base_seed + job_index;
}

}  // namespace svmrob
