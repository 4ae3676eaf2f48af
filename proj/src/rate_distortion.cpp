#include "genbound/rate_distortion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace genbound {

namespace {

double max_abs(const Matrix& d) {
  double m = 0.0;
  for (double v : d.data) m = std::max(m, std::abs(v));
  return m;
}

void check_shapes(const Pmf& source, const Matrix& d) {
  if (d.rows != source.size()) throw Error("rate-distortion: distortion rows do not match the source alphabet");
  if (d.cols == 0) throw Error("rate-distortion: empty reproduction alphabet");
  for (double v : d.data)
    if (!std::isfinite(v)) throw Error("rate-distortion: non-finite distortion entry");
}

std::vector<double> row_minima(const Matrix& d) {
  std::vector<double> m(d.rows, kInf);
  for (std::size_t i = 0; i < d.rows; ++i)
    for (std::size_t j = 0; j < d.cols; ++j) m[i] = std::min(m[i], d(i, j));
  return m;
}

RdSolution zero_rate_solution(const Pmf& source, const Matrix& d) {
  std::size_t best = 0;
  double best_d = kInf;
  for (std::size_t j = 0; j < d.cols; ++j) {
    double e = 0.0;
    for (std::size_t i = 0; i < d.rows; ++i) e += source[i] * d(i, j);
    if (e < best_d) {
      best_d = e;
      best = j;
    }
  }
  RdSolution sol;
  sol.channel = Channel::constant(d.rows, Pmf::point_mass(d.cols, best));
  sol.output = Pmf::point_mass(d.cols, best);
  sol.rate_nats = 0.0;
  sol.achieved_distortion = best_d;
  sol.lagrange_lambda = 0.0;
  sol.converged = true;
  return sol;
}

void finalize(RdSolution& sol, const Pmf& source, const Matrix& d) {
  sol.rate_nats = channel_rate(source, sol.channel);
  sol.achieved_distortion = channel_distortion(source, sol.channel, d);
  std::vector<double> out(d.cols, 0.0);
  for (std::size_t i = 0; i < d.rows; ++i)
    for (std::size_t j = 0; j < d.cols; ++j) out[j] += source[i] * sol.channel(i, j);
  sol.output = Pmf(std::move(out));
}

}  // namespace

double channel_rate(const Pmf& source, const Channel& ch) {
  if (ch.inputs() != source.size()) throw Error("channel_rate: shape mismatch");
  return mutual_information(Joint::from_marginal(source, ch));
}

double channel_distortion(const Pmf& source, const Channel& ch, const Matrix& d) {
  double e = 0.0;
  for (std::size_t i = 0; i < d.rows; ++i) {
    if (source[i] <= 0.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < d.cols; ++j) row += ch(i, j) * d(i, j);
    e += source[i] * row;
  }
  return e;
}

double min_distortion(const Pmf& source, const Matrix& d) {
  check_shapes(source, d);
  auto m = row_minima(d);
  double e = 0.0;
  for (std::size_t i = 0; i < d.rows; ++i)
    if (source[i] > 0.0) e += source[i] * m[i];
  return e;
}

double zero_rate_distortion(const Pmf& source, const Matrix& d) {
  check_shapes(source, d);
  return zero_rate_solution(source, d).achieved_distortion;
}

// Alternating minimization of I + s E[d]. With A_ij = exp(-s (d_ij - m_i))
// and output law q, the minimizing channel is Q_ij = A_ij q_j / Z_i and the
// partial minimum -sum_i p_i log Z_i never increases from one iteration to
// the next.
RdSolution blahut_arimoto(const Pmf& source, const Matrix& d, double lagrange, const BaOptions& opts,
                          const std::vector<double>* init_output) {
  check_shapes(source, d);
  if (!(lagrange >= 0.0)) throw Error("blahut_arimoto: Lagrange multiplier must be non-negative");
  const std::size_t n = d.rows, m = d.cols;
  const bool restricted = std::isinf(lagrange);
  const auto mins = row_minima(d);
  const double scale = std::max(1.0, max_abs(d));

  Matrix A(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      if (restricted) A(i, j) = d(i, j) <= mins[i] + 1e-12 * scale ? 1.0 : 0.0;
      else A(i, j) = std::exp(-lagrange * (d(i, j) - mins[i]));
    }

  std::vector<double> q(m, 1.0 / static_cast<double>(m));
  if (init_output && init_output->size() == m) {
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      q[j] = std::max((*init_output)[j], 1e-12);
      z += q[j];
    }
    for (double& v : q) v /= z;
  }

  const double shift = restricted ? 0.0 : lagrange * min_distortion(source, d);
  std::vector<double> Z(n, 0.0), qn(m, 0.0);
  RdSolution sol;
  sol.lagrange_lambda = lagrange;
  double prev_rate = kInf;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (source[i] <= 0.0) continue;
      double z = 0.0;
      for (std::size_t j = 0; j < m; ++j) z += A(i, j) * q[j];
      Z[i] = z;
      obj -= source[i] * std::log(z);
    }
    if (opts.on_iteration) opts.on_iteration(obj + shift);

    std::fill(qn.begin(), qn.end(), 0.0);
    double dist = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (source[i] <= 0.0) continue;
      double w = source[i] / Z[i];
      for (std::size_t j = 0; j < m; ++j) {
        double t = w * A(i, j) * q[j];
        qn[j] += t;
        dist += t * d(i, j);
      }
    }
    // I(p, Q) = sum_j q'_j log(q_j / q'_j) + sum_ij p_i Q_ij log A_ij - sum_i p_i log Z_i.
    double rate = obj;
    for (std::size_t j = 0; j < m; ++j)
      if (qn[j] > 0.0) rate += qn[j] * std::log(q[j] / qn[j]);
    if (!restricted) rate -= lagrange * dist - shift;

    bool done = std::abs(rate - prev_rate) < opts.tol;
    prev_rate = rate;
    if (done) {
      sol.converged = true;
      break;
    }
    // Floor keeps dead columns representable; the mass involved is negligible.
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      q[j] = std::max(qn[j], 1e-250);
      z += q[j];
    }
    for (double& v : q) v /= z;
  }
  sol.iterations = it + (sol.converged ? 1 : 0);

  Matrix ch(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) z += A(i, j) * q[j];
    for (std::size_t j = 0; j < m; ++j) {
      if (source[i] <= 0.0 || z <= 0.0) ch(i, j) = q[j];
      else ch(i, j) = A(i, j) * q[j] / z;
    }
  }
  sol.channel = Channel(std::move(ch));
  finalize(sol, source, d);
  return sol;
}

RdSolution rd_curve(const Pmf& source, const Matrix& d, double epsilon, const RdOptions& opts) {
  check_shapes(source, d);
  const double scale = std::max(1.0, max_abs(d));
  const double tol_d = opts.distortion_tol * scale;
  const double dmin = min_distortion(source, d);
  if (epsilon < dmin - tol_d) {
    throw Error("rd_curve: epsilon " + std::to_string(epsilon) + " is below the minimum achievable distortion " +
                std::to_string(dmin));
  }
  RdSolution zero = zero_rate_solution(source, d);
  if (epsilon >= zero.achieved_distortion) return zero;
  if (epsilon <= dmin + tol_d) return blahut_arimoto(source, d, kInf, opts.ba);

  // Bracket: distortion decreases in the slope s.
  RdSolution sol_lo = zero;
  double lo = 0.0, hi = 1.0 / scale;
  RdSolution sol_hi = blahut_arimoto(source, d, hi, opts.ba);
  while (sol_hi.achieved_distortion > epsilon) {
    lo = hi;
    sol_lo = sol_hi;
    hi *= 2.0;
    if (hi > 1e12) {
      RdSolution r = blahut_arimoto(source, d, kInf, opts.ba);
      r.converged = false;
      return r;
    }
    sol_hi = blahut_arimoto(source, d, hi, opts.ba, &sol_lo.output.probs());
  }
  // Illinois regula falsi on D(s) - epsilon, with a bisection step whenever
  // the bracket fails to shrink by half.
  double f_lo = sol_lo.achieved_distortion - epsilon, f_hi = sol_hi.achieved_distortion - epsilon;
  int side = 0;
  double width = hi - lo;
  for (int it = 0; it < opts.max_bisection; ++it) {
    if (sol_hi.achieved_distortion >= epsilon - tol_d) return sol_hi;
    if (hi - lo <= 1e-13 * hi) break;
    double mid = (f_lo - f_hi) > 0.0 ? (lo * f_hi - hi * f_lo) / (f_hi - f_lo) : 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi) || (it % 3 == 2 && hi - lo > 0.5 * width)) mid = 0.5 * (lo + hi);
    if (it % 3 == 2) width = hi - lo;
    RdSolution s = blahut_arimoto(source, d, mid, opts.ba, &sol_hi.output.probs());
    double f = s.achieved_distortion - epsilon;
    if (f > 0.0) {
      lo = mid;
      f_lo = f;
      sol_lo = std::move(s);
      if (side == -1) f_hi *= 0.5;
      side = -1;
    } else {
      hi = mid;
      f_hi = f;
      sol_hi = std::move(s);
      if (side == 1) f_lo *= 0.5;
      side = 1;
    }
  }
  if (sol_hi.achieved_distortion >= epsilon - tol_d) return sol_hi;

  // The curve is linear between the bracket ends (a corner in the dual):
  // time-share the two channels to land exactly on epsilon.
  double dl = sol_lo.achieved_distortion, dh = sol_hi.achieved_distortion;
  double theta = dl > dh ? (dl - epsilon) / (dl - dh) : 1.0;
  theta = std::clamp(theta, 0.0, 1.0);
  Matrix mix(d.rows, d.cols);
  for (std::size_t i = 0; i < d.rows; ++i)
    for (std::size_t j = 0; j < d.cols; ++j)
      mix(i, j) = theta * sol_hi.channel(i, j) + (1.0 - theta) * sol_lo.channel(i, j);
  RdSolution out;
  out.channel = Channel(std::move(mix));
  out.lagrange_lambda = hi;
  out.iterations = sol_hi.iterations;
  out.converged = sol_hi.converged && sol_lo.converged;
  finalize(out, source, d);
  return out;
}

RdSolution rd_gen(const Joint& q, const Matrix& gen, double epsilon, const RdOptions& opts) {
  if (gen.rows != q.rows() || gen.cols != q.cols()) throw Error("rd_gen: gen table shape mismatch");
  // E[gen(S,W)] is fixed by q, so the constraint only involves -gen(s, w_hat):
  //   E[-gen(S, W_hat)] <= epsilon - E_q[gen(S, W)].
  double egen = 0.0;
  for (std::size_t i = 0; i < q.rows(); ++i)
    for (std::size_t j = 0; j < q.cols(); ++j) egen += q(i, j) * gen(i, j);
  Matrix d(gen.rows, gen.cols);
  for (std::size_t k = 0; k < d.data.size(); ++k) d.data[k] = -gen.data[k];
  return rd_curve(q.row_marginal(), d, epsilon - egen, opts);
}

RdSolution rd_gen(const Joint& q, const FiniteLearningProblem& prob, const std::vector<Dataset>& datasets,
                  double epsilon, const RdOptions& opts) {
  if (datasets.size() != q.rows()) throw Error("rd_gen: dataset list does not match the joint rows");
  if (prob.w_size() != q.cols()) throw Error("rd_gen: hypothesis alphabet does not match the joint columns");
  Matrix gen(q.rows(), q.cols());
  for (std::size_t i = 0; i < q.rows(); ++i)
    for (std::size_t w = 0; w < q.cols(); ++w) gen(i, w) = gen_error(prob, datasets[i], w);
  return rd_gen(q, gen, epsilon, opts);
}

RdSolution rd_trajectory(const Pmf& traj_dist, const Matrix& rho, double epsilon, const RdOptions& opts) {
  return rd_curve(traj_dist, rho, epsilon, opts);
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("least_squares_slope: need at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx <= 0.0) throw Error("least_squares_slope: degenerate x values");
  return sxy / sxx;
}

RdDimension rd_dimension(const Pmf& source, const Matrix& rho, const std::vector<double>& eps_grid,
                         const RdOptions& opts) {
  if (eps_grid.size() < 3) throw Error("rd_dimension: need at least three epsilon values");
  RdDimension out;
  std::vector<double> logs;
  for (double e : eps_grid) {
    if (!(e > 0.0) || e >= 1.0) throw Error("rd_dimension: epsilon values must lie in (0, 1)");
    RdSolution s = rd_curve(source, rho, e, opts);
    double l = std::log(1.0 / e);
    out.eps.push_back(e);
    out.rates.push_back(s.rate_nats);
    out.slopes.push_back(s.rate_nats / l);
    logs.push_back(l);
  }
  out.dim_estimate = least_squares_slope(logs, out.rates);
  return out;
}

bool curve_is_monotone_convex(const std::vector<double>& eps, const std::vector<double>& rate, double tol) {
  if (eps.size() != rate.size()) return false;
  for (std::size_t i = 0; i + 1 < eps.size(); ++i) {
    if (!(eps[i + 1] > eps[i])) return false;
    if (rate[i + 1] > rate[i] + tol) return false;
  }
  for (std::size_t i = 1; i + 1 < eps.size(); ++i) {
    double e0 = eps[i - 1], e1 = eps[i], e2 = eps[i + 1];
    double chord = ((e2 - e1) * rate[i - 1] + (e1 - e0) * rate[i + 1]) / (e2 - e0);
    if (rate[i] > chord + tol) return false;
  }
  return true;
}

}  // namespace genbound
