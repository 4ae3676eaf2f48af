#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "genbound/counterexample.hpp"
#include "genbound/rate_distortion.hpp"

using namespace genbound;

namespace {

ScoDataset draw(const ScoInstance& inst, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return sample_sco_dataset(inst, rng);
}

ScoDataset all_ones(const ScoInstance& inst) {
  ScoDataset s;
  s.n = inst.n;
  s.bits.assign(inst.d, (std::uint64_t{1} << inst.n) - 1);
  return s;
}

// Loss written out term by term from its definition.
double naive_loss(const ScoInstance& inst, const std::vector<std::uint8_t>& z, const std::vector<double>& w) {
  double a = 0, b = 0, c = 0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    a += z[j] * w[j] * w[j];
    b += z[j] * w[j];
    c = std::max(c, w[j]);
  }
  return a + inst.lambda * b + c;
}

std::vector<double> random_ball_point(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> w(d);
  double s = 0;
  for (double& x : w) s += (x = g(rng)) * x;
  double r = u(rng) / std::sqrt(s);
  for (double& x : w) x *= r;
  return w;
}

ScoDataset first_event_dataset(const ScoInstance& inst, std::uint64_t seed) {
  for (std::uint64_t k = 0;; ++k) {
    ScoDataset s = draw(inst, derive_seed(seed, k));
    if (bad_coords(inst, s).event_ok) return s;
  }
}

}  // namespace

TEST(ScoInstance, ConstantsAtFour) {
  ScoInstance inst = ScoInstance::make(4);
  EXPECT_EQ(inst.T, 32u);
  EXPECT_EQ(inst.d, 384u);
  EXPECT_DOUBLE_EQ(inst.eta, 1.0 / (4.0 * std::sqrt(20.0)));
  EXPECT_DOUBLE_EQ(inst.lambda, 1.0 / (4.0 * std::sqrt(384.0)));
  EXPECT_NEAR(inst.v0(), -5.367e-3, 1e-6);
  EXPECT_NEAR(inst.v1(), -5.590e-2, 1e-5);
  EXPECT_EQ(ScoInstance::make(4).d, inst.d);
}

TEST(ScoInstance, RangeAndCap) {
  EXPECT_THROW(ScoInstance::make(1), Error);
  EXPECT_THROW(ScoInstance::make(16), Error);  // d = 0.75 * 512 * 2^16 > 2^24
  EXPECT_NO_THROW(ScoInstance::make(10));
  EXPECT_EQ(ScoInstance::make(4, std::nullopt, 0).d, 0u);
}

TEST(ScoLoss, Trivial) {
  ScoInstance inst = ScoInstance::make(4);
  std::vector<double> zero(inst.d, 0.0), neg(inst.d, -0.01);
  std::vector<std::uint8_t> z(inst.d, 1), z0(inst.d, 0);
  EXPECT_EQ(sco_loss(inst, z, zero), 0.0);
  EXPECT_EQ(sco_loss(inst, z0, neg), 0.0);
  EXPECT_THROW(sco_loss(inst, z, std::vector<double>(inst.d, 1.0)), Error);
}

TEST(ScoLoss, MatchesNaiveRecomputation) {
  ScoInstance inst = ScoInstance::make(4);
  std::mt19937_64 rng(40);
  std::bernoulli_distribution bit(0.5);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> w = random_ball_point(inst.d, rng);
    std::vector<std::uint8_t> z(inst.d);
    for (auto& x : z) x = bit(rng);
    EXPECT_NEAR(sco_loss(inst, z, w), naive_loss(inst, z, w), 1e-12);
  }
}

TEST(ScoRisk, SingleCoordinate) {
  ScoInstance inst = ScoInstance::make(4);
  std::vector<double> w(inst.d, 0.0);
  EXPECT_EQ(sco_population_risk(inst, w), 0.0);
  w[0] = -inst.eta;
  EXPECT_NEAR(sco_population_risk(inst, w), inst.eta * inst.eta / 2 - inst.lambda * inst.eta / 2, 1e-15);
}

TEST(ScoRisk, PopulationMatchesMonteCarlo) {
  ScoInstance inst = ScoInstance::make(4);
  std::mt19937_64 rng(41);
  std::vector<double> w = random_ball_point(inst.d, rng);
  std::bernoulli_distribution bit(0.5);
  const int N = 100000;
  double m = 0, m2 = 0;
  std::vector<std::uint8_t> z(inst.d);
  for (int i = 0; i < N; ++i) {
    for (auto& x : z) x = bit(rng);
    double l = naive_loss(inst, z, w);
    m += l;
    m2 += l * l;
  }
  m /= N;
  double se = std::sqrt((m2 / N - m * m) / N);
  EXPECT_NEAR(sco_population_risk(inst, w), m, 3 * se);
}

TEST(ScoRisk, GenIsPopulationMinusEmpirical) {
  ScoInstance inst = ScoInstance::make(4);
  ScoDataset s = draw(inst, 1);
  std::mt19937_64 rng(42);
  std::vector<double> w = random_ball_point(inst.d, rng);
  double emp = 0;
  for (int i = 0; i < inst.n; ++i) emp += naive_loss(inst, s.sample(i), w) / inst.n;
  EXPECT_NEAR(sco_empirical_risk(inst, s, w), emp, 1e-12);
  EXPECT_NEAR(sco_gen(inst, s, w), sco_population_risk(inst, w) - emp, 1e-12);
}

TEST(RunGd, AllOnesHasNoBadCoordinates) {
  ScoInstance inst = ScoInstance::make(4);
  ScoDataset s = all_ones(inst);
  GdResult cf = run_gd(inst, s, GdMode::ClosedForm), it = run_gd(inst, s, GdMode::Iterative);
  EXPECT_FALSE(cf.event_ok);
  EXPECT_EQ(cf.bad_count, 0u);
  double good = 0.5 * inst.lambda * (-1 + std::pow(1 - 2 * inst.eta, double(inst.T)));
  for (std::size_t j = 0; j < inst.d; ++j) {
    EXPECT_NEAR(cf.w[j], good, 1e-15);
    EXPECT_NEAR(it.w[j], good, 1e-12);
  }
}

TEST(RunGd, IterativeMatchesClosedForm) {
  for (int n : {4, 6, 8}) {
    ScoInstance inst = ScoInstance::make(n);
    for (std::uint64_t seed : {1, 2, 3}) {
      ScoDataset s = first_event_dataset(inst, seed * 100 + n);
      GdResult cf = run_gd(inst, s, GdMode::ClosedForm), it = run_gd(inst, s, GdMode::Iterative);
      ASSERT_TRUE(cf.event_ok);
      double worst = 0, norm = 0;
      for (std::size_t j = 0; j < inst.d; ++j) {
        worst = std::max(worst, std::fabs(cf.w[j] - it.w[j]));
        norm += it.w[j] * it.w[j];
      }
      EXPECT_LE(worst, 1e-9) << "n=" << n;
      EXPECT_LE(std::sqrt(norm), 1.0 + 1e-12);
    }
  }
}

TEST(RunGd, AveragingTieRuleDepartsFromClosedForm) {
  ScoInstance inst = ScoInstance::make(4);
  ScoDataset s = first_event_dataset(inst, 7);
  GdResult cf = run_gd(inst, s, GdMode::ClosedForm), avg = run_gd(inst, s, GdMode::Iterative, TieRule::Average);
  double worst = 0;
  for (std::size_t j = 0; j < inst.d; ++j) worst = std::max(worst, std::fabs(cf.w[j] - avg.w[j]));
  EXPECT_GT(worst, 1e-3);
}

TEST(RunGd, ZeroStepAndProjection) {
  ScoInstance still = ScoInstance::make(4, 0.0);
  ScoDataset s = draw(still, 5);
  for (double v : run_gd(still, s, GdMode::Iterative).w) EXPECT_EQ(v, 0.0);

  ScoInstance big = ScoInstance::make(4, 3.0);
  GdResult r = run_gd(big, draw(big, 5), GdMode::Iterative, TieRule::LowestIndex);
  double norm = 0;
  for (double v : r.w) norm += v * v;
  EXPECT_TRUE(r.projection_activated);
  EXPECT_LE(std::sqrt(norm), 1.0 + 1e-12);
}

TEST(BadCoordStats, FloorAndMean) {
  ScoInstance inst = ScoInstance::make(4);
  BadCoordStats st = bad_coord_stats(inst, 4000, 9, 4);
  EXPECT_NEAR(st.floor, 1 - 2 * std::exp(-32.0 / 36.0), 1e-15);
  EXPECT_NEAR(st.floor, 0.1777, 1e-4);
  EXPECT_TRUE(st.floor_ok);
  EXPECT_GE(st.event_freq, st.floor);
  EXPECT_EQ(st.expected_count, 0.75 * inst.T);
  EXPECT_NEAR(st.mean_count, st.expected_count, 3 * st.mean_count_se);
  BadCoordStats none = bad_coord_stats(ScoInstance::make(4, std::nullopt, 0), 200, 9);
  EXPECT_EQ(none.mean_count, 0.0);
}

TEST(Quantizer, EventFailureAndDeterministicCase) {
  ScoInstance inst = ScoInstance::make(4);
  ScoDataset ones = all_ones(inst);
  std::vector<double> w(inst.d, 0.0);
  for (double v : quantize_w(inst, ones, w, 1.0, 1)) EXPECT_EQ(v, 0.0);
  ScoDataset s = first_event_dataset(inst, 3);
  for (double v : quantize_w(inst, s, w, 1.0, 1)) EXPECT_EQ(v, inst.v0());
  EXPECT_THROW(quantize_w(inst, s, w, 0.5, 1), Error);
}

TEST(Quantizer, LossStaysBelowCap) {
  for (int n : {4, 6}) {
    ScoInstance inst = ScoInstance::make(n);
    std::mt19937_64 rng(43);
    std::bernoulli_distribution bit(0.5);
    for (std::uint64_t k = 0; k < 5; ++k) {
      ScoDataset s = first_event_dataset(inst, k);
      std::vector<double> wq = quantize_w(inst, s, run_gd(inst, s, GdMode::ClosedForm).w, default_quantizer_r(n), k);
      std::vector<std::uint8_t> z(inst.d);
      for (int t = 0; t < 20; ++t) {
        for (auto& x : z) x = bit(rng);
        double l = sco_loss(inst, z, wq);
        EXPECT_LT(l, inst.two_sigma());
        EXPECT_GE(l, -1.0 / (4.0 * n * n) - 1e-15);
      }
    }
  }
}

TEST(Quantizer, ExpectedGenMatchesMonteCarlo) {
  ScoInstance inst = ScoInstance::make(4);
  ScoDataset s = first_event_dataset(inst, 11);
  const double r = default_quantizer_r(4);
  std::vector<double> w = run_gd(inst, s, GdMode::ClosedForm).w;
  const int N = 20000;
  double m = 0, m2 = 0;
  for (int i = 0; i < N; ++i) {
    double g = sco_gen(inst, s, quantize_w(inst, s, w, r, derive_seed(77, i)));
    m += g;
    m2 += g * g;
  }
  m /= N;
  double se = std::sqrt((m2 / N - m * m) / N);
  EXPECT_NEAR(expected_quantized_gen(inst, s, r), m, 4 * se + 1e-12);
}

TEST(ExactGen, MatchesMonteCarloOverDatasets) {
  ScoInstance inst = ScoInstance::make(4);
  const int N = 20000;
  double m = 0, m2 = 0;
  for (int i = 0; i < N; ++i) {
    ScoDataset s = draw(inst, derive_seed(88, i));
    double g = sco_gen(inst, s, run_gd(inst, s, GdMode::ClosedForm).w);
    m += g;
    m2 += g * g;
  }
  m /= N;
  double se = std::sqrt((m2 / N - m * m) / N);
  EXPECT_NEAR(exact_expected_gen(inst), m, 4 * se);
}

TEST(AssembleBound, DeterministicQuantizerKeepsOnlyEventEntropy) {
  ScoInstance inst = ScoInstance::make(6);
  BoundReport r = assemble_bound(inst, 1.0, ScoBoundMode::Expectation);
  const double T = double(inst.T), lam = 36.0;
  EXPECT_NEAR(r.terms.at("rate_term") * lam, T / 18.0 * std::log2(std::exp(1.0)) * std::exp(-T / 36.0), 1e-12);
}

TEST(AssembleBound, TermsRebuildValue) {
  ScoInstance inst = ScoInstance::make(4);
  BoundReport e = assemble_bound(inst, default_quantizer_r(4), ScoBoundMode::Expectation);
  for (const auto& [k, v] : e.terms) EXPECT_TRUE(std::isfinite(v)) << k;
  EXPECT_NEAR(reconstruct_bound(e), e.value, 1e-12);
  EXPECT_GE(e.value, e.terms.at("reference_exact_gen"));

  ScoDataset s = first_event_dataset(inst, 5);
  BoundReport t = assemble_bound(inst, default_quantizer_r(4), ScoBoundMode::Tail, 0.1, &s);
  EXPECT_NEAR(reconstruct_bound(t), t.value, 1e-12);
  EXPECT_THROW(assemble_bound(inst, 1.0, ScoBoundMode::Tail), Error);

  ScoDataset ones = all_ones(inst);
  BoundReport f = assemble_bound(inst, 1.0, ScoBoundMode::Tail, 0.1, &ones);
  EXPECT_TRUE(std::isinf(f.value));
  EXPECT_TRUE(f.has_flag("event_failed"));
}

TEST(AssembleBound, ExpectationBoundScalesLikeOneOverN) {
  std::vector<double> x, y;
  for (int n = 4; n <= 10; ++n) {
    x.push_back(std::log(double(n)));
    y.push_back(std::log(assemble_bound(ScoInstance::make(n), default_quantizer_r(n), ScoBoundMode::Expectation).value));
  }
  double slope = least_squares_slope(x, y);
  EXPECT_GE(slope, -1.35);
  EXPECT_LE(slope, -0.65);
}

TEST(ScalingStudy, BoundsOnlyTable) {
  ScalingStudy st = scaling_study({4, 6}, 0, nullptr, 1);
  ASSERT_EQ(st.rows.size(), 2u);
  EXPECT_TRUE(std::isnan(st.rows[0].mc_mean_gen));
  EXPECT_TRUE(std::isnan(st.mc_slope));
  std::string csv = st.to_csv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_THROW(scaling_study({6, 4}, 0, nullptr, 1), Error);
}

TEST(ScalingStudy, DominanceAtFour) {
  ScalingStudy st = scaling_study({4}, 2000, nullptr, 3, 0.1, 4);
  const ScalingRow& r = st.rows[0];
  EXPECT_TRUE(r.dominance_ok);
  EXPECT_LE(r.mc_mean_gen, r.bound_expectation + 3 * r.se);
  EXPECT_NEAR(r.mc_mean_gen, r.exact_mean_gen, 4 * r.se);
  EXPECT_GE(r.event_freq, r.floor);
  EXPECT_LE(r.tail_violation_rate, 0.1);
  ScalingStudy again = scaling_study({4}, 2000, nullptr, 3, 0.1, 1);
  EXPECT_EQ(again.rows[0].mc_mean_gen, r.mc_mean_gen);
}
