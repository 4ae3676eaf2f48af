#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "genbound/info_core.hpp"
#include "test_util.hpp"

using namespace genbound;

TEST(Pmf, RenormalizesNearUnitSums) {
  Pmf p({0.1, 0.2, 0.7});
  double s = p[0] + p[1] + p[2];
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(Pmf, RejectsNegativeOrUnnormalized) {
  EXPECT_THROW(Pmf({0.5, 0.6}), Error);
  EXPECT_THROW(Pmf({-0.1, 1.1}), Error);
  EXPECT_THROW(Pmf(std::vector<double>{}), Error);
}

TEST(Channel, RowsMustBePmfs) {
  EXPECT_THROW(Channel(Matrix::from_rows({{0.5, 0.4}})), Error);
  Channel c(Matrix::from_rows({{0.5, 0.5}, {0.0, 1.0}}));
  EXPECT_EQ(c.inputs(), 2u);
}

TEST(Joint, MarginalsAreValid) {
  Joint j(Matrix::from_rows({{0.1, 0.2}, {0.3, 0.4}}));
  EXPECT_NEAR(j.row_marginal()[0], 0.3, 1e-15);
  EXPECT_NEAR(j.col_marginal()[1], 0.6, 1e-15);
}

TEST(Kl, IdenticalIsZero) { EXPECT_EQ(kl_divergence(Pmf({0.5, 0.5}), Pmf({0.5, 0.5})), 0.0); }

TEST(Kl, TwoTermExample) {
  double oracle = 0.5 * std::log(0.5 / 0.25) + 0.5 * std::log(0.5 / 0.75);
  double v = kl_divergence(Pmf({0.5, 0.5}), Pmf({0.25, 0.75}));
  EXPECT_NEAR(v, oracle, 1e-14);
  EXPECT_NEAR(v, 0.14384, 1e-5);
}

TEST(Kl, DisjointSupportIsInfinite) { EXPECT_TRUE(std::isinf(kl_divergence(Pmf({1, 0}), Pmf({0, 1})))); }

TEST(Kl, AlphabetMismatchThrows) { EXPECT_THROW(kl_divergence(Pmf({1.0}), Pmf({0.5, 0.5})), Error); }

TEST(Kl, NonNegativeAndZeroOnlyAtEquality) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    Pmf p = testutil::random_pmf(5, rng), q = testutil::random_pmf(5, rng);
    EXPECT_GT(kl_divergence(p, q), 0.0);
    EXPECT_NEAR(kl_divergence(p, q), testutil::kl_sum(p.probs(), q.probs()), 1e-12);
    EXPECT_NEAR(kl_divergence(p, p), 0.0, 1e-15);
  }
}

TEST(Renyi, OrderTwoClosedForm) {
  double v = renyi_divergence(Pmf({0.5, 0.5}), Pmf({0.25, 0.75}), 2.0);
  double oracle = std::log(0.25 / 0.25 + 0.25 / 0.75);
  EXPECT_NEAR(v, oracle, 1e-14);
  EXPECT_NEAR(v, std::log(4.0 / 3.0), 1e-5);
}

TEST(Renyi, IdenticalIsZeroForEveryOrder) {
  Pmf p({0.2, 0.3, 0.5});
  for (double a : {0.3, 0.5, 2.0, 7.0}) EXPECT_NEAR(renyi_divergence(p, p, a), 0.0, 1e-14);
}

TEST(Renyi, OrderOneRejected) { EXPECT_THROW(renyi_divergence(Pmf({0.5, 0.5}), Pmf({0.5, 0.5}), 1.0), Error); }

TEST(Renyi, AbsoluteContinuityRule) {
  EXPECT_TRUE(std::isinf(renyi_divergence(Pmf({0.5, 0.5}), Pmf({1.0, 0.0}), 2.0)));
  EXPECT_TRUE(std::isfinite(renyi_divergence(Pmf({0.5, 0.5}), Pmf({1.0, 0.0}), 0.5)));
  EXPECT_TRUE(std::isinf(renyi_divergence(Pmf({0.0, 1.0}), Pmf({1.0, 0.0}), 0.5)));
}

TEST(Renyi, MatchesDirectSum) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 100; ++t) {
    auto p = testutil::random_probs(4, rng, 0.0), q = testutil::random_probs(4, rng, 0.0);
    for (double a : {0.5, 1.001, 2.0}) {
      double s = 0;
      for (int i = 0; i < 4; ++i) s += std::pow(p[i], a) * std::pow(q[i], 1 - a);
      EXPECT_NEAR(renyi_divergence(Pmf(p), Pmf(q), a), std::log(s) / (a - 1), 1e-9);
    }
  }
}

// D_alpha - KL is about (alpha - 1) Var(log p/q) / 2 near alpha = 1, so the
// 1e-3 (1 + KL) tolerance needs entries bounded away from 0: pmfs are mixed
// with the uniform law so every entry is at least 0.01.
TEST(Renyi, NearOneApproachesKl) {
  std::mt19937_64 rng(2);
  auto draw = [&] {
    auto p = testutil::random_probs(4, rng, 0.0);
    for (double& x : p) x = 0.96 * x + 0.01;
    return p;
  };
  for (int t = 0; t < 100; ++t) {
    auto p = draw(), q = draw();
    double kl = testutil::kl_sum(p, q);
    EXPECT_LE(std::abs(renyi_divergence(Pmf(p), Pmf(q), 1.001) - kl), 1e-3 * (1.0 + kl));
  }
}

TEST(Renyi, MonotoneInOrder) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    Pmf p = testutil::random_pmf(6, rng), q = testutil::random_pmf(6, rng);
    double prev = -1.0;
    for (double a : {0.5, 1.001, 2.0, 4.0}) {
      double v = renyi_divergence(p, q, a);
      EXPECT_GE(v, prev - 1e-12);
      prev = v;
    }
  }
}

TEST(MutualInformation, IndependentIsZero) {
  Joint j(Matrix::from_rows({{0.12, 0.28}, {0.18, 0.42}}));
  EXPECT_NEAR(mutual_information(j), 0.0, 1e-14);
}

TEST(MutualInformation, DeterministicBit) {
  EXPECT_NEAR(mutual_information(Joint(Matrix::from_rows({{0.5, 0.0}, {0.0, 0.5}}))), std::log(2.0), 1e-14);
}

TEST(MutualInformation, MatchesBruteForceAndEntropyCap) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    Joint j = testutil::random_joint(3, 3, rng);
    double oracle = 0.0, hs = 0.0, hw = 0.0;
    double ps[3] = {0, 0, 0}, pw[3] = {0, 0, 0};
    for (int s = 0; s < 3; ++s)
      for (int w = 0; w < 3; ++w) {
        ps[s] += j(s, w);
        pw[w] += j(s, w);
      }
    for (int s = 0; s < 3; ++s)
      for (int w = 0; w < 3; ++w) oracle += j(s, w) * std::log(j(s, w) / (ps[s] * pw[w]));
    for (int i = 0; i < 3; ++i) {
      hs -= ps[i] * std::log(ps[i]);
      hw -= pw[i] * std::log(pw[i]);
    }
    double mi = mutual_information(j);
    EXPECT_NEAR(mi, oracle, 1e-10);
    EXPECT_LE(mi, std::min(hs, hw) + 1e-12);
  }
}

TEST(BinaryKl, Examples) {
  EXPECT_EQ(binary_kl(0.3, 0.3), 0.0);
  double oracle = 0.25 * std::log(0.25 / 0.1) + 0.75 * std::log(0.75 / 0.9);
  EXPECT_NEAR(binary_kl(0.25, 0.1), oracle, 1e-14);
  EXPECT_NEAR(binary_kl(0.25, 0.1), 0.0923, 1e-3);
  EXPECT_NEAR(binary_kl(0.0, 0.5), std::log(2.0), 1e-14);
}

TEST(BinaryKl, BoundaryIsInfiniteUnlessEqual) {
  EXPECT_TRUE(std::isinf(binary_kl(0.5, 0.0)));
  EXPECT_TRUE(std::isinf(binary_kl(0.5, 1.0)));
  EXPECT_EQ(binary_kl(1.0, 1.0), 0.0);
}

TEST(BinaryKlInverse, ZeroRadius) { EXPECT_EQ(binary_kl_inverse(0.37, 0.0), 0.37); }

TEST(BinaryKlInverse, MatchesIndependentBisection) {
  // Oracle: plain bisection on the two-point KL formula.
  auto d = [](double p, double a) { return p * std::log(p / a) + (1 - p) * std::log((1 - p) / (1 - a)); };
  double lo = 0.1, hi = 1.0 - 1e-15;
  for (int i = 0; i < 100; ++i) {
    double m = 0.5 * (lo + hi);
    (d(m, 0.1) <= 0.05 ? lo : hi) = m;
  }
  EXPECT_NEAR(binary_kl_inverse(0.1, 0.05), lo, 1e-9);
  EXPECT_NEAR(binary_kl_inverse(0.1, 0.05), 0.2065, 1e-3);
}

TEST(BinaryKlInverse, GridHitsRadiusAndTolstikhinBound) {
  for (int i = 1; i <= 50; ++i)
    for (int k = 1; k <= 50; ++k) {
      double a = i / 51.0, b = 0.04 * k;
      double p = binary_kl_inverse(a, b);
      EXPECT_GE(p, a);
      EXPECT_LE(p, 1.0);
      if (p < 1.0) EXPECT_NEAR(binary_kl(p, a), b, 1e-9);
      EXPECT_LE(p, a + std::sqrt(2 * a * b) + 2 * b + 1e-12);
    }
}

TEST(BinaryKlInverse, RoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int t = 0; t < 200; ++t) {
    double a = u(rng), p = u(rng);
    if (p < a) std::swap(a, p);
    EXPECT_NEAR(binary_kl_inverse(a, binary_kl(p, a)), p, 1e-7);
  }
}

TEST(EmpiricalJoint, SmallCases) {
  Joint j = empirical_joint({{0, 0}}, 2, 2);
  EXPECT_EQ(j(0, 0), 1.0);
  Joint d = empirical_joint({{0, 0}, {1, 1}}, 2, 2);
  EXPECT_EQ(d(0, 0), 0.5);
  EXPECT_EQ(d(1, 1), 0.5);
  EXPECT_EQ(d(0, 1), 0.0);
  EXPECT_THROW(empirical_joint({}, 2, 2), Error);
  EXPECT_THROW(empirical_joint({{2, 0}}, 2, 2), Error);
}

TEST(EmpiricalJoint, ConcentratesOnTruth) {
  std::mt19937_64 rng(6);
  Joint truth = testutil::random_joint(2, 3, rng);
  std::discrete_distribution<std::size_t> draw(truth.flat().begin(), truth.flat().end());
  std::vector<std::pair<std::size_t, std::size_t>> samples;
  for (int i = 0; i < 1000; ++i) {
    std::size_t k = draw(rng);
    samples.push_back({k / 3, k % 3});
  }
  EXPECT_LT(total_variation(empirical_joint(samples, 2, 3).flat(), truth.flat()), 0.1);
}

TEST(LogSumExp, StableForLargeArguments) {
  EXPECT_NEAR(log_sum_exp({1000.0, 1000.0}, {1.0, 1.0}), 1000.0 + std::log(2.0), 1e-12);
  EXPECT_NEAR(log_sum_exp({0.0, std::log(3.0)}, {2.0, 1.0}), std::log(5.0), 1e-14);
}
