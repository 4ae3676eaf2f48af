#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "genbound/info_core.hpp"
#include "test_util.hpp"

using namespace genbound;

TEST(Gdelta, ConstantObjective) {
  Pmf p({0.2, 0.3, 0.5});
  auto r = gdelta_sup(p, 0.2, [](const std::vector<double>&) { return 3.5; }, 60);
  EXPECT_EQ(r.sup_estimate, 3.5);
  EXPECT_EQ(r.baseline, 3.5);
  EXPECT_TRUE(in_gdelta(r.argmax, p.probs(), 0.2));
}

TEST(Gdelta, DeltaOneReturnsReference) {
  Pmf p({0.2, 0.3, 0.5});
  std::vector<double> h = {1.0, -2.0, 4.0};
  auto obj = [&](const std::vector<double>& nu) {
    double s = 0;
    for (std::size_t i = 0; i < nu.size(); ++i) s += nu[i] * h[i];
    return s;
  };
  auto r = gdelta_sup(p, 1.0, obj, 60);
  EXPECT_NEAR(r.sup_estimate, obj(p.probs()), 1e-12);
}

TEST(Gdelta, RejectsBadDelta) {
  Pmf p({0.5, 0.5});
  auto obj = [](const std::vector<double>&) { return 0.0; };
  EXPECT_THROW(gdelta_sup(p, 0.0, obj, 10), Error);
  EXPECT_THROW(gdelta_sup(p, 1.5, obj, 10), Error);
}

// Linear objective on a 3-letter alphabet against a 0.01 simplex grid.
TEST(Gdelta, LinearObjectiveMatchesGrid) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 5; ++t) {
    std::vector<double> p = testutil::random_probs(3, rng, 0.05);
    std::vector<double> h = {std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng),
                             std::normal_distribution<double>()(rng)};
    const double delta = 0.3, radius = std::log(1.0 / delta);
    auto obj = [&](const std::vector<double>& nu) { return nu[0] * h[0] + nu[1] * h[1] + nu[2] * h[2]; };
    double grid_best = -1e300;
    for (int i = 0; i <= 100; ++i)
      for (int j = 0; i + j <= 100; ++j) {
        std::vector<double> nu = {i / 100.0, j / 100.0, (100 - i - j) / 100.0};
        if (testutil::kl_sum(nu, p) <= radius) grid_best = std::max(grid_best, obj(nu));
      }
    auto r = gdelta_sup(Pmf(p), delta, obj, 200, t);
    EXPECT_GE(r.sup_estimate, grid_best - 0.01);
    EXPECT_TRUE(in_gdelta(r.argmax, p, delta));
    EXPECT_LE(testutil::kl_sum(r.argmax, p), radius + 1e-9);
  }
}

TEST(Gdelta, ArgmaxAlwaysInBall) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    Joint ref = testutil::random_joint(2, 3, rng);
    auto obj = [](const std::vector<double>& nu) {
      double s = 0;
      for (double x : nu) s += x * x;
      return s;
    };
    auto r = gdelta_sup(ref, 0.1, obj, 80, t);
    EXPECT_TRUE(in_gdelta(r.argmax, ref.flat(), 0.1));
    EXPECT_GE(r.sup_estimate, r.baseline);
    EXPECT_NEAR(r.sup_estimate, obj(r.argmax), 1e-12);
  }
}

TEST(Gdelta, DeterministicGivenSeed) {
  Pmf p({0.1, 0.2, 0.3, 0.4});
  auto obj = [](const std::vector<double>& nu) { return std::sin(5 * nu[0]) + nu[3] * nu[1]; };
  auto a = gdelta_sup(p, 0.2, obj, 100, 42), b = gdelta_sup(p, 0.2, obj, 100, 42);
  EXPECT_EQ(a.sup_estimate, b.sup_estimate);
  EXPECT_EQ(a.argmax, b.argmax);
}
