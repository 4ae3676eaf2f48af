#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "genbound/info_core.hpp"
#include "genbound/learning.hpp"

namespace genbound {

struct ValidationReport {
  std::size_t trials = 0;
  std::size_t violations = 0;
  double violation_rate = 0.0;
  double target_delta = 0.0;
  double binomial_se = 0.0;  // sqrt(delta (1 - delta) / trials)
  bool pass = false;

  // Recomputes rate, SE and pass from trials, violations and target_delta.
  static ValidationReport make(std::size_t trials, std::size_t violations, double target_delta);
};

// Per-(S, W) bound: value at the realized dataset and hypothesis index.
using TailBoundFn = std::function<double(const Dataset&, std::size_t)>;

// Counts trials with gen(S, W) > bound_fn(S, W). Trial i uses seed
// derive_seed(seed, i), so counts do not depend on `threads`.
ValidationReport mc_tail_validate(const FiniteLearningProblem& prob, const Algorithm& alg, const TailBoundFn& bound_fn,
                                  std::size_t n, double delta, std::size_t trials, std::uint64_t seed,
                                  unsigned threads = 1);

struct ExpectationReport {
  std::size_t trials = 0;
  double mc_mean = 0.0;
  double ci_halfwidth = 0.0;  // one standard error of the mean
  double bound_value = 0.0;
  bool pass = false;          // mc_mean - 3 ci <= bound_value
};

ExpectationReport mc_expectation_validate(const FiniteLearningProblem& prob, const Algorithm& alg, double bound_value,
                                          std::size_t n, std::size_t trials, std::uint64_t seed,
                                          unsigned threads = 1);

inline constexpr double kDefaultBookCap = double(std::size_t{1} << 24);

// Random-coding book over W_hat^m. Entry j is drawn iid from q_hat^{(x)m}
// with seed derive_seed(seed, j), so entries are generated on demand and a
// book is fully determined by (q_hat, m, seed).
class HypothesisBook {
 public:
  HypothesisBook(Pmf q_hat, std::size_t m, Matrix rates, std::uint64_t seed, double cap = kDefaultBookCap);

  std::size_t m() const { return m_; }
  std::vector<std::size_t> entry(std::size_t j) const;
  // floor(exp(sum_i R(s_i, w_i))), at least 1.
  std::size_t effective_size(const std::vector<std::size_t>& s, const std::vector<std::size_t>& w) const;
  std::size_t max_size() const { return max_size_; }

 private:
  Pmf q_;
  std::size_t m_;
  Matrix rates_;
  std::uint64_t seed_;
  std::size_t max_size_;
};

// Throws when the largest effective size exceeds `cap` or m = 0.
HypothesisBook build_hypothesis_book(const Pmf& q_hat, std::size_t m, const Matrix& rates, std::uint64_t seed,
                                     double cap = kDefaultBookCap);

// Finite instance for the covering simulation. W_hat shares the alphabet of W.
struct CoveringInstance {
  Joint P;       // S x W
  Matrix gen;    // gen(s, w)
  Pmf q;         // prior over W_hat
  Matrix rates;  // R(s, w)
};

struct CoveringRow {
  std::size_t m = 0;
  std::size_t trials = 0;
  std::size_t failures = 0;
  double failure_prob = 0.0;
  double exponent = 0.0;  // -(1/m) log failure_prob; +inf when no failures
  bool censored = false;  // fewer than 5 failures
  double rule_of_three = 0.0;  // 3 / trials, reported for censored rows
};

// Excess-distortion probability with d_m = (1/m) sum gen(s_i, w_i)^2 - gen(s_i, w_hat_i)^2:
// a trial fails when no entry among the first effective_size ones reaches d_m <= epsilon.
// Each (m, trial) has its own data and book seeds, shared across instances so
// runs with different rate tables are paired.
std::vector<CoveringRow> covering_failure_estimate(const CoveringInstance& inst, double epsilon,
                                                   const std::vector<std::size_t>& m_grid, std::size_t trials,
                                                   std::uint64_t seed, unsigned threads = 1,
                                                   double cap = kDefaultBookCap);

// The 2x2 instance used by the covering acceptance run.
CoveringInstance default_covering_instance(double nu1 = 0.1);

// 4 data symbols x 4 hypotheses with losses in [0, 1] and a uniform data law.
FiniteLearningProblem demo_gibbs_problem();

// Per-(S, W) Thm 1 bound with the lossless rate R = max(0, log P(w|S)/P_W(w)),
// where P_W is the exact output marginal at sample size n.
TailBoundFn information_density_bound(const FiniteLearningProblem& prob, const Algorithm& alg, std::size_t n,
                                      double delta, double epsilon = 0.0);

// Runs body(i) for i in [0, count) over `threads` workers.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace genbound
