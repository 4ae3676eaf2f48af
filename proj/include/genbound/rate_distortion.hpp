#pragma once

#include <vector>

#include "genbound/info_core.hpp"
#include "genbound/learning.hpp"

namespace genbound {

struct DistortionSpec {
  Matrix d;  // d(source symbol, reproduction symbol)
  double epsilon = 0.0;
};

struct RdSolution {
  double rate_nats = 0.0;
  double achieved_distortion = 0.0;
  Channel channel;
  Pmf output;
  double lagrange_lambda = 0.0;  // +inf marks the restricted (minimum-distortion) solve
  int iterations = 0;
  bool converged = false;
};

struct BaOptions {
  int max_iter = 10000;
  double tol = 1e-10;  // on successive rates
  // Called with the Lagrangian objective after each iteration; used by tests
  // to watch monotonicity.
  std::function<void(double)> on_iteration;
};

struct RdOptions {
  BaOptions ba;
  double distortion_tol = 1e-9;
  int max_bisection = 200;
};

// One Blahut-Arimoto solve at slope `lagrange` (s >= 0). lagrange = +inf
// restricts every row to its minimum-distortion columns.
RdSolution blahut_arimoto(const Pmf& source, const Matrix& d, double lagrange, const BaOptions& opts = {},
                          const std::vector<double>* init_output = nullptr);

// Mutual information of source x channel and its expected distortion.
double channel_rate(const Pmf& source, const Channel& ch);
double channel_distortion(const Pmf& source, const Channel& ch, const Matrix& d);

double min_distortion(const Pmf& source, const Matrix& d);
// Smallest distortion reachable at rate 0 (best constant reproduction).
double zero_rate_distortion(const Pmf& source, const Matrix& d);

// R(eps) = min I subject to E d <= eps.
RdSolution rd_curve(const Pmf& source, const Matrix& d, double epsilon, const RdOptions& opts = {});
inline RdSolution rd_curve(const Pmf& source, const DistortionSpec& spec, const RdOptions& opts = {}) {
  return rd_curve(source, spec.d, spec.epsilon, opts);
}

// Generalization-gap RD: minimize I(S; W_hat) under E[gen(S,W) - gen(S,W_hat)] <= eps
// with the expectation under q (a joint over the rows of `datasets` and W).
RdSolution rd_gen(const Joint& q, const FiniteLearningProblem& prob, const std::vector<Dataset>& datasets,
                  double epsilon, const RdOptions& opts = {});
// Same reduction with a precomputed gen table (rows of q by hypotheses).
RdSolution rd_gen(const Joint& q, const Matrix& gen, double epsilon, const RdOptions& opts = {});

// Trajectory RD: rho already averaged over the window.
RdSolution rd_trajectory(const Pmf& traj_dist, const Matrix& rho, double epsilon, const RdOptions& opts = {});

struct RdDimension {
  std::vector<double> eps;
  std::vector<double> rates;
  std::vector<double> slopes;  // R(eps) / log(1/eps)
  double dim_estimate = 0.0;   // least-squares slope of R against log(1/eps)
};

RdDimension rd_dimension(const Pmf& source, const Matrix& rho, const std::vector<double>& eps_grid,
                         const RdOptions& opts = {});

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

// Checks R(eps) non-increasing and 3-point convex along an increasing eps grid.
bool curve_is_monotone_convex(const std::vector<double>& eps, const std::vector<double>& rate, double tol);

}  // namespace genbound
