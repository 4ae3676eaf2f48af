#include "genbound/validation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "genbound/bounds.hpp"
#include "genbound/rng.hpp"

namespace genbound {

namespace {

constexpr std::size_t kMinTrials = 100;

// Inverse CDF with a uniform built from a splitmix64 output.
std::size_t draw_from_cdf(const std::vector<double>& cdf, std::uint64_t bits) {
  double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  std::size_t k = static_cast<std::size_t>(it - cdf.begin());
  return std::min(k, cdf.size() - 1);
}

std::vector<double> cumulative(const std::vector<double>& p) {
  std::vector<double> c(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) c[i] = (acc += p[i]);
  return c;
}

}  // namespace

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!err) err = std::current_exception();
          next = count;
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

ValidationReport ValidationReport::make(std::size_t trials, std::size_t violations, double target_delta) {
  ValidationReport r;
  r.trials = trials;
  r.violations = violations;
  r.target_delta = target_delta;
  r.violation_rate = trials ? double(violations) / double(trials) : 0.0;
  r.binomial_se = trials ? std::sqrt(target_delta * (1.0 - target_delta) / double(trials)) : 0.0;
  r.pass = r.violation_rate <= target_delta + 3.0 * r.binomial_se;
  return r;
}

ValidationReport mc_tail_validate(const FiniteLearningProblem& prob, const Algorithm& alg, const TailBoundFn& bound_fn,
                                  std::size_t n, double delta, std::size_t trials, std::uint64_t seed,
                                  unsigned threads) {
  if (trials < kMinTrials) throw Error("mc_tail_validate: need at least 100 trials");
  if (!(delta > 0.0 && delta < 1.0)) throw Error("mc_tail_validate: delta must lie in (0, 1)");
  std::vector<char> violated(trials, 0);
  parallel_for(trials, threads, [&](std::size_t i) {
    Rng rng = make_rng(derive_seed(seed, i));
    Dataset s = sample_dataset(prob, n, rng);
    Pmf post = alg.posterior(s);
    std::size_t w = sample_index(post.probs(), rng);
    violated[i] = gen_error(prob, s, w) > bound_fn(s, w);
  });
  std::size_t v = static_cast<std::size_t>(std::count(violated.begin(), violated.end(), 1));
  return ValidationReport::make(trials, v, delta);
}

ExpectationReport mc_expectation_validate(const FiniteLearningProblem& prob, const Algorithm& alg, double bound_value,
                                          std::size_t n, std::size_t trials, std::uint64_t seed, unsigned threads) {
  if (trials < kMinTrials) throw Error("mc_expectation_validate: need at least 100 trials");
  std::vector<double> gens(trials);
  parallel_for(trials, threads, [&](std::size_t i) {
    Rng rng = make_rng(derive_seed(seed, i));
    Dataset s = sample_dataset(prob, n, rng);
    Pmf post = alg.posterior(s);
    gens[i] = gen_error(prob, s, sample_index(post.probs(), rng));
  });
  double mean = 0.0;
  for (double g : gens) mean += g;
  mean /= double(trials);
  double var = 0.0;
  for (double g : gens) var += (g - mean) * (g - mean);
  var /= double(trials - 1);
  ExpectationReport r;
  r.trials = trials;
  r.mc_mean = mean;
  r.ci_halfwidth = std::sqrt(var / double(trials));
  r.bound_value = bound_value;
  r.pass = mean - 3.0 * r.ci_halfwidth <= bound_value;
  return r;
}

HypothesisBook::HypothesisBook(Pmf q_hat, std::size_t m, Matrix rates, std::uint64_t seed, double cap)
    : q_(std::move(q_hat)), m_(m), rates_(std::move(rates)), seed_(seed) {
  if (m_ == 0) throw Error("hypothesis book: m must be at least 1");
  if (rates_.cols != q_.size()) throw Error("hypothesis book: rate table columns must match the W_hat alphabet");
  double rmax = 0.0;
  for (double r : rates_.data) {
    if (!std::isfinite(r) || r < 0.0) throw Error("hypothesis book: rates must be finite and non-negative");
    rmax = std::max(rmax, r);
  }
  double biggest = std::floor(std::exp(double(m_) * rmax) + 1e-9);
  if (biggest > cap) {
    throw Error("hypothesis book: largest effective size " + std::to_string(biggest) + " exceeds cap " +
                std::to_string(cap));
  }
  max_size_ = std::max<std::size_t>(1, static_cast<std::size_t>(biggest));
}

std::vector<std::size_t> HypothesisBook::entry(std::size_t j) const {
  // Splitmix64 per coordinate: seeding a Mersenne twister per entry would
  // dominate the covering simulation.
  std::vector<double> cdf = cumulative(q_.probs());
  std::uint64_t es = derive_seed(seed_, j);
  std::vector<std::size_t> e(m_);
  for (std::size_t i = 0; i < m_; ++i) e[i] = draw_from_cdf(cdf, derive_seed(es, i));
  return e;
}

std::size_t HypothesisBook::effective_size(const std::vector<std::size_t>& s, const std::vector<std::size_t>& w) const {
  if (s.size() != m_ || w.size() != m_) throw Error("hypothesis book: sequence length differs from m");
  double total = 0.0;
  for (std::size_t i = 0; i < m_; ++i) total += rates_(s[i], w[i]);
  double size = std::floor(std::exp(total) + 1e-9);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::min(size, double(max_size_))));
}

HypothesisBook build_hypothesis_book(const Pmf& q_hat, std::size_t m, const Matrix& rates, std::uint64_t seed,
                                     double cap) {
  return HypothesisBook(q_hat, m, rates, seed, cap);
}

std::vector<CoveringRow> covering_failure_estimate(const CoveringInstance& inst, double epsilon,
                                                   const std::vector<std::size_t>& m_grid, std::size_t trials,
                                                   std::uint64_t seed, unsigned threads, double cap) {
  const std::size_t ns = inst.P.rows(), nw = inst.P.cols();
  if (inst.gen.rows != ns || inst.gen.cols != nw) throw Error("covering: gen table shape differs from P");
  if (inst.rates.rows != ns || inst.rates.cols != nw) throw Error("covering: rate table shape differs from P");
  if (inst.q.size() != nw) throw Error("covering: prior size differs from the W alphabet");
  if (trials == 0) throw Error("covering: trials must be positive");
  const std::vector<double> cdf = cumulative(inst.P.flat());

  std::vector<CoveringRow> rows;
  for (std::size_t m : m_grid) {
    build_hypothesis_book(inst.q, m, inst.rates, 0, cap);  // cap check only
    const std::uint64_t mseed = derive_seed(seed, m);
    std::vector<char> failed(trials, 0);
    parallel_for(trials, threads, [&](std::size_t t) {
      const std::uint64_t ts = derive_seed(mseed, t);
      Rng rng = make_rng(derive_seed(ts, 0));
      std::vector<std::size_t> s(m), w(m);
      double base = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        std::size_t k = draw_from_cdf(cdf, rng());
        s[i] = k / nw;
        w[i] = k % nw;
        base += inst.gen(s[i], w[i]) * inst.gen(s[i], w[i]);
      }
      HypothesisBook book(inst.q, m, inst.rates, derive_seed(ts, 1), cap);
      const std::size_t L = book.effective_size(s, w);
      for (std::size_t j = 0; j < L; ++j) {
        std::vector<std::size_t> e = book.entry(j);
        double val = 0.0;
        for (std::size_t i = 0; i < m; ++i) val += inst.gen(s[i], e[i]) * inst.gen(s[i], e[i]);
        if ((base - val) / double(m) <= epsilon + 1e-12) return;
      }
      failed[t] = 1;
    });
    CoveringRow row;
    row.m = m;
    row.trials = trials;
    row.failures = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1));
    row.failure_prob = double(row.failures) / double(trials);
    row.exponent = row.failures == 0 ? kInf : -std::log(row.failure_prob) / double(m);
    row.censored = row.failures < 5;
    row.rule_of_three = 3.0 / double(trials);
    rows.push_back(row);
  }
  return rows;
}

CoveringInstance default_covering_instance(double nu1) {
  Joint P(Matrix::from_rows({{0.35, 0.15}, {0.15, 0.35}}));
  Matrix gen = Matrix::from_rows({{0.3, 0.1}, {0.1, 0.3}});
  Pmf q = P.col_marginal();
  Channel cond = P.conditional();
  Matrix rates(2, 2);
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t w = 0; w < 2; ++w) rates(s, w) = std::max(0.0, std::log(cond(s, w) / q[w])) + nu1;
  return CoveringInstance{std::move(P), std::move(gen), std::move(q), std::move(rates)};
}

FiniteLearningProblem demo_gibbs_problem() {
  Matrix loss = Matrix::from_rows({{0.1, 0.6, 0.8, 0.4},
                                   {0.7, 0.2, 0.5, 0.9},
                                   {0.4, 0.8, 0.1, 0.6},
                                   {0.9, 0.3, 0.6, 0.2}});
  return FiniteLearningProblem(std::move(loss), Pmf::uniform(4), 1.0);
}

TailBoundFn information_density_bound(const FiniteLearningProblem& prob, const Algorithm& alg, std::size_t n,
                                      double delta, double epsilon) {
  const Pmf p_w = induced_joint_auto(prob, alg, n).joint.col_marginal();
  const double sigma = prob.sigma();
  return [=](const Dataset& s, std::size_t w) {
    const double r = std::max(0.0, std::log(alg.posterior(s)[w] / p_w[w]));
    return thm1_bound(r, sigma, n, delta, epsilon).value;
  };
}

}  // namespace genbound
