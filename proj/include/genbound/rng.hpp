#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace genbound {

// Child seed i of a root seed. Splitmix64 finalizer over (root, i), so
// children of different roots or indices are decorrelated.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Uniform in [0, 1) from the top 53 bits; portable across standard libraries,
// unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Inverse-CDF draw from a probability vector.
std::size_t sample_index(const std::vector<double>& probs, Rng& rng);

// Gamma(shape, 1) via Marsaglia-Tsang, built on uniform01 for portability.
double sample_gamma(double shape, Rng& rng);

double sample_normal(Rng& rng);

}  // namespace genbound
