#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "genbound/rate_distortion.hpp"
#include "test_util.hpp"

using namespace genbound;

namespace {

double h_nats(double p) { return p <= 0 || p >= 1 ? 0.0 : -p * std::log(p) - (1 - p) * std::log(1 - p); }

Matrix hamming(std::size_t k) {
  Matrix d(k, k, 1.0);
  for (std::size_t i = 0; i < k; ++i) d(i, i) = 0.0;
  return d;
}

Matrix abs_grid(std::size_t k) {
  Matrix d(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) d(i, j) = std::fabs(double(i) - double(j)) / double(k - 1);
  return d;
}

// min over a 2x2 channel grid of I(S; W_hat) subject to sum_s p(s) ch(s, w) d(s, w) <= eps.
double grid_rd_2x2(const std::vector<double>& ps, const Matrix& d, double eps, double step) {
  double best = 1e300;
  const int m = int(std::lround(1.0 / step));
  for (int i = 0; i <= m; ++i)
    for (int j = 0; j <= m; ++j) {
      double a = i * step, b = j * step;  // P(w_hat = 1 | s)
      double ch[2][2] = {{1 - a, a}, {1 - b, b}};
      double dist = 0, q[2] = {0, 0};
      for (int s = 0; s < 2; ++s)
        for (int w = 0; w < 2; ++w) {
          dist += ps[s] * ch[s][w] * d(s, w);
          q[w] += ps[s] * ch[s][w];
        }
      if (dist > eps + 1e-12) continue;
      double mi = 0;
      for (int s = 0; s < 2; ++s)
        for (int w = 0; w < 2; ++w)
          if (ch[s][w] > 0) mi += ps[s] * ch[s][w] * std::log(ch[s][w] / q[w]);
      best = std::min(best, mi);
    }
  return best;
}

}  // namespace

TEST(BlahutArimoto, LagrangeZeroGivesRateZero) {
  RdSolution s = blahut_arimoto(Pmf({0.3, 0.7}), hamming(2), 0.0);
  EXPECT_NEAR(s.rate_nats, 0.0, 1e-12);
  EXPECT_NEAR(s.channel(0, 0), s.channel(1, 0), 1e-12);
}

TEST(BlahutArimoto, LagrangianNonIncreasing) {
  std::mt19937_64 rng(9);
  Pmf src = testutil::random_pmf(6, rng);
  Matrix d(6, 6);
  std::uniform_real_distribution<double> u(0, 1);
  for (double& x : d.data) x = u(rng);
  std::vector<double> trace;
  BaOptions o;
  o.on_iteration = [&](double v) { trace.push_back(v); };
  blahut_arimoto(src, d, 3.0, o);
  ASSERT_GT(trace.size(), 2u);
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-12);
}

TEST(RdCurve, BernoulliHamming) {
  Pmf src({0.5, 0.5});
  for (double D : {0.05, 0.1, 0.25}) {
    RdSolution s = rd_curve(src, hamming(2), D);
    EXPECT_NEAR(s.rate_nats, std::log(2.0) - h_nats(D), 1e-5) << "D=" << D;
    EXPECT_LE(s.achieved_distortion, D + 1e-9);
    EXPECT_TRUE(s.converged);
  }
  EXPECT_NEAR(rd_curve(src, hamming(2), 0.1).rate_nats, 0.36806, 1e-5);
  EXPECT_NEAR(rd_curve(src, hamming(2), 0.25).rate_nats, 0.13081, 1e-4);
}

TEST(RdCurve, HalfDistortionIsFree) {
  EXPECT_NEAR(rd_curve(Pmf({0.5, 0.5}), hamming(2), 0.5).rate_nats, 0.0, 1e-9);
  EXPECT_NEAR(rd_curve(Pmf({0.5, 0.5}), hamming(2), 0.7).rate_nats, 0.0, 1e-9);
}

TEST(RdCurve, MaxEntryDistortionIsFree) {
  Matrix d = Matrix::from_rows({{0.0, 0.4, 0.9}, {0.3, 0.0, 0.2}, {0.8, 0.6, 0.0}});
  EXPECT_NEAR(rd_curve(Pmf({0.2, 0.5, 0.3}), d, 0.9).rate_nats, 0.0, 1e-9);
}

TEST(RdCurve, LosslessIsEntropy) {
  EXPECT_NEAR(rd_curve(Pmf::uniform(3), hamming(3), 0.0).rate_nats, std::log(3.0), 1e-6);
}

TEST(RdCurve, InfeasibleThrows) {
  Matrix d = Matrix::from_rows({{0.1, 1.0}, {1.0, 0.1}});
  EXPECT_THROW(rd_curve(Pmf({0.5, 0.5}), d, 0.05), Error);
}

TEST(RdCurve, MatchesGridOnTwoByTwo) {
  Matrix d = Matrix::from_rows({{0.0, 0.7}, {0.4, 0.1}});
  std::vector<double> ps = {0.35, 0.65};
  for (double eps : {0.1, 0.15, 0.2}) {
    double oracle = grid_rd_2x2(ps, d, eps, 0.005);
    EXPECT_NEAR(rd_curve(Pmf(ps), d, eps).rate_nats, oracle, 0.01) << "eps=" << eps;
  }
}

TEST(RdCurve, MonotoneConvexAndBelowEntropy) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 5; ++t) {
    Pmf src = testutil::random_pmf(5, rng);
    Matrix d = hamming(5);
    std::vector<double> eps, rate;
    double H = 0;
    for (double p : src.probs()) H -= p * std::log(p);
    for (int i = 0; i <= 10; ++i) {
      eps.push_back(0.04 * i);
      rate.push_back(rd_curve(src, d, eps.back()).rate_nats);
      EXPECT_LE(rate.back(), H + 1e-9);
      EXPECT_GE(rate.back(), 0.0);
    }
    EXPECT_TRUE(curve_is_monotone_convex(eps, rate, 1e-6));
  }
}

TEST(RdGen, LargeEpsilonIsFree) {
  Joint q(Matrix::from_rows({{0.3, 0.2}, {0.1, 0.4}}));
  Matrix gen = Matrix::from_rows({{0.3, -0.1}, {-0.2, 0.4}});
  EXPECT_NEAR(rd_gen(q, gen, 1.0).rate_nats, 0.0, 1e-9);
}

TEST(RdGen, IdentityFeasibleBelowMutualInformation) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 5; ++t) {
    Joint q = testutil::random_joint(4, 3, rng);
    Matrix gen(4, 3);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (double& x : gen.data) x = u(rng);
    // W_hat = W meets eps = 0 exactly, so the optimum is at most I(S; W).
    EXPECT_LE(rd_gen(q, gen, 0.0).rate_nats, mutual_information(q) + 1e-9);
  }
}

TEST(RdGen, MatchesGridOnTwoDatasets) {
  Joint q(Matrix::from_rows({{0.3, 0.2}, {0.1, 0.4}}));
  Matrix gen = Matrix::from_rows({{0.3, -0.1}, {-0.2, 0.4}});
  double egw = 0;
  for (int s = 0; s < 2; ++s)
    for (int w = 0; w < 2; ++w) egw += q(s, w) * gen(s, w);
  // E[gen(S,W) - gen(S,W_hat)] <= eps as a distortion -gen with threshold eps - E[gen(S,W)].
  Matrix d = Matrix::from_rows({{-gen(0, 0), -gen(0, 1)}, {-gen(1, 0), -gen(1, 1)}});
  std::vector<double> ps = {0.5, 0.5};
  for (double eps : {0.0, 0.05, 0.1}) {
    double oracle = grid_rd_2x2(ps, d, eps - egw, 0.005);
    EXPECT_NEAR(rd_gen(q, gen, eps).rate_nats, oracle, 0.01) << "eps=" << eps;
  }
}

TEST(RdTrajectory, PointMassIsFree) {
  EXPECT_NEAR(rd_trajectory(Pmf::point_mass(3, 1), hamming(3), 0.0).rate_nats, 0.0, 1e-12);
}

TEST(RdTrajectory, TwoTrajectoriesLossless) {
  EXPECT_NEAR(rd_trajectory(Pmf({0.5, 0.5}), hamming(2), 0.0).rate_nats, std::log(2.0), 1e-6);
}

TEST(RdTrajectory, TwoStepSingleLetterization) {
  // Alphabet {00, 01, 10, 11}; rho = per-step Hamming averaged over 2 steps.
  Matrix rho(4, 4);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) rho(a, b) = 0.5 * (((a ^ b) & 1) + (((a ^ b) >> 1) & 1));
  for (double eps : {0.05, 0.1, 0.2}) {
    double oracle = 2.0 * (std::log(2.0) - h_nats(eps));
    EXPECT_NEAR(rd_trajectory(Pmf::uniform(4), rho, eps).rate_nats, oracle, 1e-4);
  }
}

TEST(RdDimension, PointMassSlopesZero) {
  auto r = rd_dimension(Pmf::point_mass(16, 3), abs_grid(16), {0.25, 0.125, 0.0625});
  for (double s : r.slopes) EXPECT_NEAR(s, 0.0, 1e-9);
}

TEST(RdDimension, UniformGridNearOneAndStable) {
  RdOptions o;
  o.ba.tol = 1e-7;
  o.distortion_tol = 1e-5;
  std::vector<double> eps = {0.25, 0.125, 0.0625, 0.03125};
  auto r64 = rd_dimension(Pmf::uniform(64), abs_grid(64), eps, o);
  auto r128 = rd_dimension(Pmf::uniform(128), abs_grid(128), eps, o);
  EXPECT_NEAR(r128.dim_estimate, 1.0, 0.2);
  EXPECT_LT(std::fabs(r128.dim_estimate - r64.dim_estimate), 0.1);
  EXPECT_TRUE(curve_is_monotone_convex({0.03125, 0.0625, 0.125, 0.25},
                                       {r128.rates[3], r128.rates[2], r128.rates[1], r128.rates[0]}, 1e-6));
}

TEST(RdDimension, NeedsThreePoints) {
  EXPECT_THROW(rd_dimension(Pmf::uniform(4), abs_grid(4), {0.25, 0.125}), Error);
}

TEST(LeastSquares, ExactLine) { EXPECT_NEAR(least_squares_slope({1, 2, 3, 4}, {3, 5, 7, 9}), 2.0, 1e-14); }
