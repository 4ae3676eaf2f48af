#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "genbound/bounds.hpp"
#include "genbound/rng.hpp"

namespace genbound {

// Stochastic convex optimization instance on the unit ball of R^d with
// Bernoulli(1/2)^d data. All constants are functions of n.
struct ScoInstance {
  int n = 0;
  std::size_t T = 0;   // 2 n^2 GD steps
  double eta = 0.0;    // 1 / (n sqrt(5n))
  std::size_t d = 0;   // (3/4) T 2^n
  double lambda = 0.0; // 1 / (n sqrt(d)), the linear weight in the loss

  static ScoInstance make(int n, std::optional<double> eta_override = std::nullopt,
                          std::optional<std::size_t> d_override = std::nullopt);

  double v0() const;  // (lambda/2)(-1 + (1 - eta)^T)
  double v1() const { return -eta; }
  double two_sigma() const;  // 2/(5n) + 1/(4n^2), range of the quantized loss
};

// n samples of a d-bit vector, stored per coordinate: bit i of bits[j] is z_{i,j}.
struct ScoDataset {
  int n = 0;
  std::vector<std::uint64_t> bits;

  std::size_t d() const { return bits.size(); }
  int count(std::size_t j) const;  // number of ones in coordinate j
  double mu_hat(std::size_t j) const { return double(count(j)) / n; }
  std::vector<std::uint8_t> sample(int i) const;
};

ScoDataset sample_sco_dataset(const ScoInstance& inst, Rng& rng);

double sco_loss(const ScoInstance& inst, const std::vector<std::uint8_t>& z, const std::vector<double>& w);
double sco_population_risk(const ScoInstance& inst, const std::vector<double>& w);
double sco_empirical_risk(const ScoInstance& inst, const ScoDataset& s, const std::vector<double>& w);
// Population minus empirical risk: sum_j (1/2 - mu_hat_j)(w_j^2 + lambda w_j).
double sco_gen(const ScoInstance& inst, const ScoDataset& s, const std::vector<double>& w);

enum class GdMode { Iterative, ClosedForm };

// Subgradient choice for max{max_j w_j, 0} when several branches tie.
//   BadFirst: a tied coordinate with mu_hat = 0 (lowest index), else the 0
//             branch if it attains the max, else the lowest-index argmax.
//   Average: average of e_j over tied coordinates.
//   LowestIndex: e_j for the lowest tied coordinate.
enum class TieRule { BadFirst, Average, LowestIndex };

struct BadCoords {
  std::vector<bool> mask;
  std::size_t count = 0;
  bool event_ok = false;  // T/2 <= count <= T
};

BadCoords bad_coords(const ScoInstance& inst, const ScoDataset& s);

struct GdResult {
  std::vector<double> w;
  bool event_ok = false;
  std::size_t bad_count = 0;
  bool projection_activated = false;
};

// Closed form: good coordinates at (lambda/2)(-1 + (1 - 2 eta mu_hat)^T), the
// first min(b, T) bad coordinates at -eta, the rest at 0. This is the exact
// iterate under the BadFirst rule, with or without the event.
GdResult run_gd(const ScoInstance& inst, const ScoDataset& s, GdMode mode, TieRule tie = TieRule::BadFirst);

struct BadCoordStats {
  std::size_t trials = 0;
  double event_freq = 0.0;
  double event_se = 0.0;
  double floor = 0.0;          // 1 - 2 e^{-T/36}
  bool floor_ok = false;       // event_freq >= floor - 3 se
  double mean_count = 0.0;
  double mean_count_se = 0.0;
  double expected_count = 0.0; // d 2^{-n}
};

BadCoordStats bad_coord_stats(const ScoInstance& inst, std::size_t trials, std::uint64_t seed, unsigned threads = 1);

inline double default_quantizer_r(int n) { return 1.0 - 1.0 / (double(n) * n); }

// Samples W_hat: mu_hat_j > 0 gives v0; mu_hat_j = 0 gives v0 w.p. r and v1
// otherwise; all zeros when the bad-coordinate event fails.
std::vector<double> quantize_w(const ScoInstance& inst, const ScoDataset& s, const std::vector<double>& w_T, double r,
                               std::uint64_t seed);

// E over the quantizer of gen(s, W_hat), in closed form.
double expected_quantized_gen(const ScoInstance& inst, const ScoDataset& s, double r);

enum class ScoBoundMode { Expectation, Tail };

// Expectation mode: rate + MGF terms from the explicit chain plus the exact
// distortion epsilon = E[gen(S, W_T) - gen(S, W_hat)]. Tail mode needs the
// realized dataset and delta; +inf when the bad-coordinate event fails.
BoundReport assemble_bound(const ScoInstance& inst, double r, ScoBoundMode mode, std::optional<double> delta = {},
                           const ScoDataset* s = nullptr);

// Exact E_S[gen(S, W_T)] under the closed-form dynamics.
double exact_expected_gen(const ScoInstance& inst);

struct ScalingRow {
  int n = 0;
  double mc_mean_gen = 0.0;
  double se = 0.0;
  double exact_mean_gen = 0.0;
  double bound_expectation = 0.0;
  double bound_tail = 0.0;          // median of the realized tail bounds
  double tail_violation_rate = 0.0; // fraction of trials with gen > tail bound
  double event_freq = 0.0;
  double floor = 0.0;
  bool dominance_ok = false;        // mc_mean_gen <= bound_expectation + 3 se
};

struct ScalingStudy {
  std::vector<ScalingRow> rows;
  double bound_slope = 0.0;       // log-log slope of bound_expectation against n
  double mc_slope = 0.0;          // same for mc_mean_gen (NaN without trials)
  double exact_gen_slope = 0.0;   // same for exact_mean_gen
  std::string to_csv() const;
};

inline constexpr std::size_t kScoMaxCoordinates = std::size_t{1} << 24;

ScalingStudy scaling_study(const std::vector<int>& n_list, std::size_t trials,
                           const std::function<double(int)>& r_rule, std::uint64_t seed, double delta = 0.1,
                           unsigned threads = 1);

}  // namespace genbound
