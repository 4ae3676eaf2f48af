#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "genbound/bounds.hpp"
#include "genbound/learning.hpp"
#include "genbound/rate_distortion.hpp"

namespace genbound {

// Uniform grid on [lo, hi)^dim with `bins` cells per coordinate; states are
// cell centers, indexed with coordinate 0 varying fastest.
struct Quantizer {
  std::size_t dim = 1;
  std::size_t bins = 8;
  double lo = -4.0;
  double hi = 4.0;

  std::size_t size() const;
  double width() const { return (hi - lo) / double(bins); }
  // Cell index of w; nullopt when a coordinate leaves [lo, hi] or is not finite.
  std::optional<std::size_t> index(const std::vector<double>& w) const;
  std::vector<double> center(std::size_t idx) const;
  // L1 distance between every pair of cell centers.
  Matrix l1_distance() const;
};

enum class ToyKind { Logistic, Quadratic };

// Finite data set of points; a dataset of size n draws point indices from mu.
// Logistic: log(1 + exp(-y <w, x>)) + (reg/2)|w|^2. Quadratic: |w - x|^2.
// Losses are divided by their maximum over data points and grid cells so the
// finite problem has loss in [0, 1].
struct ToySpec {
  ToyKind kind = ToyKind::Logistic;
  std::vector<std::vector<double>> points;
  std::vector<int> labels;  // +1 / -1, logistic only
  std::vector<double> mu;   // empty means uniform
  double reg = 0.0;
  Quantizer quantizer;
  std::size_t n = 10;
  std::size_t steps = 40;
  bool full_batch = false;  // SGD with one sample per step otherwise
  std::vector<double> w0;   // empty means the origin

  void validate() const;
  double raw_loss(std::size_t z, const std::vector<double>& w) const;
  std::vector<double> raw_grad(std::size_t z, const std::vector<double>& w) const;
  double loss_scale() const;
  // Finite learning problem over the grid cells with B = 1.
  FiniteLearningProblem to_problem() const;
};

ToySpec default_logistic_spec();
// 0.125 * 2^k for k = 0..7.
std::vector<double> default_lr_grid();

struct TrajectoryProcess {
  std::size_t t1 = 0, t2 = 0;  // window [t1, t2)
  std::vector<std::size_t> state_index;  // one grid cell per recorded step
  Quantizer quantizer;

  std::vector<double> state(std::size_t t) const { return quantizer.center(state_index.at(t)); }
  std::size_t window_length() const { return t2 - t1; }
};

struct TrajectoryDivergence : Error {
  std::size_t step;
  TrajectoryDivergence(std::size_t t, const std::string& what) : Error(what), step(t) {}
};

// Runs `steps` optimizer steps from w0 and records the quantized iterates
// W^0 .. W^{steps-1}; the window defaults to the last half. Throws an error
// naming the step when an iterate leaves the grid range.
TrajectoryProcess simulate_trajectory(const ToySpec& spec, const Dataset& s, double lr, std::size_t steps,
                                      std::uint64_t seed, std::optional<std::size_t> t1 = {},
                                      std::optional<std::size_t> t2 = {});

// (1/dt) sum_{t in [t1, t2)} gen(s, W^t).
double gen_trajectory(const FiniteLearningProblem& prob, const Dataset& s, const TrajectoryProcess& traj);

BoundReport thm7_bound(double rd_sup, double delta, std::size_t n, double epsilon);
BoundReport thm8_bound(double rd_s, double log_M, double lipschitz_L, double delta, std::size_t n, double epsilon);

struct CouplingEstimate {
  double log_M = 0.0;         // tilt-sup estimate (a lower estimate of the true sup)
  double log_M_plugin = 0.0;  // nu_S = P_S
  std::string method = "tilt-sup";
};

// log M = sup_{nu in G^delta} KL(pi_s || sum_s' nu(s') pi_s') at the realized
// dataset row s, or the maximum over rows when s is absent.
CouplingEstimate estimate_M(const Channel& pi_S, const Pmf& P_S, double delta, int budget, std::uint64_t seed,
                            std::optional<std::size_t> s = {});

// Dataset -> pooled window state law, estimated from `trials` runs per dataset.
Channel window_state_channel(const ToySpec& spec, const std::vector<Dataset>& datasets, double lr,
                             std::size_t trials, std::uint64_t seed);

struct LrSweepRow {
  double lr = 0.0;
  double mean_gen = 0.0;
  double se = 0.0;
  double rd_nats = 0.0;
  std::vector<double> curve_eps;
  std::vector<double> curve_rate;
  bool curve_ok = false;  // non-increasing and convex in eps
  std::string flag;       // "ok" or "divergent@step=<t>"
};

struct LrSweep {
  std::vector<LrSweepRow> rows;
  double epsilon = 0.0;
  double spearman = 0.0;  // NaN when fewer than two usable rows
  bool correlation_defined = false;
  std::string to_csv() const;
};

// Per learning rate: mean trajectory gen over trials and the RD of the window
// state law pooled over trials, with rho = L1 between grid centers. epsilon
// defaults to 10% of the distortion range.
LrSweep lr_sweep(const ToySpec& spec, const std::vector<double>& lr_grid, std::size_t trials,
                 std::optional<double> epsilon, std::uint64_t seed, unsigned threads = 1);

// Spearman rank correlation with average ranks for ties; NaN when undefined.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace genbound
