#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "genbound/info_core.hpp"
#include "genbound/learning.hpp"

namespace genbound {

// A bound value with its additive pieces. `kind` names the formula that
// rebuilds `value` from `terms` and `params` (see reconstruct_bound).
struct BoundReport {
  std::string kind;
  double value = 0.0;
  std::map<std::string, double> terms;
  std::map<std::string, double> params;
  std::vector<std::string> flags;

  bool has_flag(const std::string& f) const;
};

double reconstruct_bound(const BoundReport& r);

// E_{nu_S}[D_alpha(p_s || q_s)] + log E_{P_S q}[exp g(S, W_hat)].
double t_functional(const Pmf& nu_s, const Channel& p_hat, const Channel& q_hat, const Matrix& g, double alpha,
                    const Pmf& p_s);

// log E_{P_S q}[exp g].
double log_mgf(const Pmf& p_s, const Channel& q_hat, const Matrix& g);

BoundReport thm1_bound(double R_sw, double sigma, std::size_t n, double delta, double epsilon);
BoundReport fixed_size_bound(double R, double sigma, std::size_t n, double delta, double epsilon);

struct RdTailOptions {
  int search_budget = 60;
  std::uint64_t seed = 0;
};

// sqrt(2 sigma^2 (sup_{nu in G^delta} RD(eps; nu) + log(1/delta)) / n) + eps, in
// exact mode. Reports the sup estimate and the nu = P baseline.
BoundReport rd_tail_bound(const FiniteLearningProblem& prob, const Algorithm& alg, std::size_t n, double delta,
                          double epsilon, const RdTailOptions& opts = {});

BoundReport seeger_fast_rate_bound(double emp_risk, double sup_mi, double sigma, std::size_t n, double delta);

// KL(pi || q) + logmgf + log(1/delta).
BoundReport pac_bayes_eq22(const Pmf& pi, const Pmf& q, double logmgf, double delta);

// Lossy PAC-Bayes, part i: bound on E_pi[f] through a quantizer p over W_hat.
struct Prop5iInput {
  Pmf pi;                      // posterior over W at the realized s
  std::vector<double> f_row;   // f(s, w)
  Pmf p_hat;                   // quantizer law over W_hat at the realized s
  std::vector<double> g_row;   // g(s, w_hat)
  Pmf q_hat;                   // prior over W_hat
  double log_mgf = 0.0;        // log E_{P_S q}[exp g]
  double delta = 0.05;
  double epsilon = 0.0;
};

// Part ii: disintegrated bound at the realized w with kernel p_{W_hat | W}.
struct Prop5iiInput {
  std::size_t w = 0;
  Channel kernel;              // W -> W_hat
  Pmf p_w_given_s;             // P_{W | s}
  Pmf q_hat;                   // prior over W_hat
  double log_mgf = 0.0;
  double delta = 0.05;
  double epsilon = 0.0;
  // Optional pointwise distortion check: Delta(s, w) - E_kernel g(s, .) <= eps for all w.
  std::optional<std::vector<double>> delta_row;
  std::optional<std::vector<double>> g_row;
};

BoundReport prop5_bound(const Prop5iInput& in);
BoundReport prop5_bound(const Prop5iiInput& in);

BoundReport toy_example_bound(double sample_means_sq_sum, double lipschitz_L, std::size_t d, double sigma,
                              std::size_t n, double delta);

struct ConditionCheck {
  double lhs = 0.0;
  double log_delta = 0.0;
  bool satisfied = false;
  bool distortion_ok = false;    // E[Delta - g] <= eps
  bool distortion_f_ok = false;  // E[f - g] <= eps (the sufficient form)
};

struct Thm3Input {
  Joint nu;          // S x W
  Channel p_hat;     // S -> W_hat (variant i)
  Channel q_hat;     // S -> W_hat (variant i) or S -> W (variant ii)
  double lambda = 1.0;
  Matrix f, g, Delta;  // f, Delta on S x W; g on S x W_hat
  double epsilon = 0.0;
  Joint P;           // S x W
  double delta = 0.05;
  double alpha = 2.0;  // variant ii only
};

ConditionCheck check_thm3_condition(int variant, const Thm3Input& in);

struct Thm4Input {
  Pmf nu_s;
  Channel pi_s;      // S -> W
  Channel p_hat;     // S -> W_hat (variant i)
  Channel q_hat;     // S -> W_hat (variant i) or S -> W (variant ii)
  double lambda = 1.0;
  Matrix f;          // S x W
  Matrix g;          // S x W_hat
  std::vector<double> Delta;  // Delta(s, pi_s)
  double epsilon = 0.0;
  Pmf P_s;
  double delta = 0.05;
  double alpha = 2.0;
};

ConditionCheck check_thm4_condition(int variant, const Thm4Input& in);

enum class MgfMode { Exact, Subgaussian };

struct Thm5Input {
  Joint P;           // S x W
  Channel p_hat;     // S -> W_hat
  Channel q_hat;     // S -> W_hat
  Matrix f;          // S x W
  Matrix g;          // S x W_hat
  double lambda = 0.0;  // <= 0: optimized over a grid
  double epsilon = 0.0;
  double alpha = 2.0;   // part ii
  MgfMode mgf = MgfMode::Exact;
  double sigma = 0.0;   // subgaussian path: g(s, w_hat) is sigma/sqrt(n)-subgaussian
  std::size_t n = 1;
};

BoundReport thm5_expectation_bound(int part, const Thm5Input& in);

// Minimizes h over lambda > 0: 64 log-spaced points on [lo, hi], then golden
// section around the best grid point. Returns (argmin, min).
std::pair<double, double> minimize_over_lambda(const std::function<double(double)>& h, double lo, double hi);

}  // namespace genbound
