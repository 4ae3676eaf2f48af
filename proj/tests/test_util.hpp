#pragma once

#include <random>
#include <vector>

#include "genbound/info_core.hpp"

namespace testutil {

// Dirichlet(1, ..., 1) draw, floored so every entry is positive.
inline std::vector<double> random_probs(std::size_t k, std::mt19937_64& rng, double floor = 1e-3) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(k);
  double s = 0.0;
  for (auto& x : p) s += (x = e(rng) + floor);
  for (auto& x : p) x /= s;
  return p;
}

inline genbound::Pmf random_pmf(std::size_t k, std::mt19937_64& rng) { return genbound::Pmf(random_probs(k, rng)); }

inline genbound::Joint random_joint(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  genbound::Matrix m(r, c);
  m.data = random_probs(r * c, rng);
  return genbound::Joint(m);
}

// Direct sum, written independently of the library.
inline double kl_sum(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0) s += p[i] * std::log(p[i] / q[i]);
  return s;
}

}  // namespace testutil
