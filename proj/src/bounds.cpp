#include "genbound/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "genbound/rate_distortion.hpp"

namespace genbound {

namespace {

constexpr double kDistortionSlack = 1e-9;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void require_delta(double delta, const char* who) {
  if (!(delta > 0.0)) throw Error(std::string(who) + ": delta must be positive");
}

void require_n(std::size_t n, const char* who) {
  if (n == 0) throw Error(std::string(who) + ": n must be positive");
}

double term(const BoundReport& r, const char* name) {
  auto it = r.terms.find(name);
  if (it == r.terms.end()) throw Error("reconstruct_bound: report of kind " + r.kind + " lacks term " + name);
  return it->second;
}

double param(const BoundReport& r, const char* name) {
  auto it = r.params.find(name);
  if (it == r.params.end()) throw Error("reconstruct_bound: report of kind " + r.kind + " lacks param " + name);
  return it->second;
}

void finish(BoundReport& r) {
  r.value = reconstruct_bound(r);
  if (std::isinf(r.value)) r.flags.push_back("infinite");
}

double kl_term(const Pmf& nu_s, const Channel& p, const Channel& q) {
  double e = 0.0;
  for (std::size_t s = 0; s < nu_s.size(); ++s) {
    if (nu_s[s] <= 0.0) continue;
    e += nu_s[s] * kl_divergence(p.row(s), q.row(s));
  }
  return e;
}

void check_matrix(const Matrix& m, std::size_t r, std::size_t c, const char* what) {
  if (m.rows != r || m.cols != c) {
    throw Error(std::string(what) + ": expected " + std::to_string(r) + "x" + std::to_string(c) + ", got " +
                std::to_string(m.rows) + "x" + std::to_string(m.cols));
  }
}

Matrix scaled(const Matrix& m, double s) {
  Matrix out = m;
  for (double& v : out.data) v *= s;
  return out;
}

Matrix log_of_positive(const Matrix& m, const char* who) {
  Matrix out = m;
  for (double& v : out.data) {
    if (!(v > 0.0)) throw Error(std::string(who) + ": f must be strictly positive");
    v = std::log(v);
  }
  return out;
}

// KL(nu || P_{W|S} nu_S) = E_nu log(nu_{W|S} / P_{W|S}).
double conditional_kl(const Joint& nu, const Joint& P) {
  Channel nu_c = nu.conditional();
  Channel p_c = P.conditional();
  return kl_term(nu.row_marginal(), nu_c, p_c);
}

}  // namespace

bool BoundReport::has_flag(const std::string& f) const {
  return std::find(flags.begin(), flags.end(), f) != flags.end();
}

double reconstruct_bound(const BoundReport& r) {
  const std::string& k = r.kind;
  if (k == "thm1") {
    double n = param(r, "n"), s = param(r, "sigma");
    return std::sqrt(4.0 * s * s * (term(r, "rate_term") + term(r, "confidence_term")) / (2.0 * n - 1.0) +
                     term(r, "epsilon_term"));
  }
  if (k == "eq4" || k == "eq21") {
    double n = param(r, "n"), s = param(r, "sigma");
    return std::sqrt(2.0 * s * s * (term(r, "rate_term") + term(r, "confidence_term")) / n) +
           term(r, "epsilon_term");
  }
  if (k == "seeger") {
    double n = param(r, "n");
    double c = term(r, "C");
    return std::sqrt(param(r, "emp_risk") * c / n) + c / n;
  }
  if (k == "eq22") return term(r, "rate_term") + term(r, "mgf_term") + term(r, "confidence_term");
  if (k == "prop5i" || k == "prop5ii" || k == "sco_tail") {
    return term(r, "rate_term") + term(r, "mgf_term") + term(r, "confidence_term") + term(r, "epsilon_term");
  }
  if (k == "toy") {
    double n = param(r, "n"), s = param(r, "sigma");
    return std::sqrt(2.0 * s * s * (term(r, "rate_term") + term(r, "confidence_term")) / n);
  }
  if (k == "thm5i" || k == "sco_expectation") {
    return term(r, "rate_term") + term(r, "mgf_term") + term(r, "epsilon_term");
  }
  if (k == "thm5ii") return std::exp(term(r, "rate_term") + term(r, "mgf_term"));
  if (k == "thm7") {
    double n = param(r, "n");
    return std::sqrt((term(r, "rate_term") + term(r, "confidence_term")) / (2.0 * n)) + term(r, "epsilon_term");
  }
  if (k == "thm8") {
    double n = param(r, "n");
    return std::sqrt((term(r, "rate_term") + term(r, "coupling_term") + term(r, "confidence_term")) /
                         (2.0 * n - 1.0) +
                     term(r, "epsilon_term"));
  }
  throw Error("reconstruct_bound: unknown kind " + k);
}

double log_mgf(const Pmf& p_s, const Channel& q_hat, const Matrix& g) {
  check_matrix(g, p_s.size(), q_hat.outputs(), "log_mgf: g");
  if (q_hat.inputs() != p_s.size()) throw Error("log_mgf: q_hat rows do not match P_S");
  std::vector<double> x(g.data.size()), w(g.data.size());
  for (std::size_t s = 0; s < g.rows; ++s)
    for (std::size_t j = 0; j < g.cols; ++j) {
      x[s * g.cols + j] = g(s, j);
      w[s * g.cols + j] = p_s[s] * q_hat(s, j);
    }
  return log_sum_exp(x, w);
}

double t_functional(const Pmf& nu_s, const Channel& p_hat, const Channel& q_hat, const Matrix& g, double alpha,
                    const Pmf& p_s) {
  if (!(alpha >= 1.0)) throw Error("t_functional: alpha must be at least 1");
  if (p_hat.inputs() != nu_s.size() || q_hat.inputs() != nu_s.size() || p_s.size() != nu_s.size())
    throw Error("t_functional: source alphabet mismatch");
  if (p_hat.outputs() != q_hat.outputs()) throw Error("t_functional: reproduction alphabet mismatch");
  double div = 0.0;
  for (std::size_t s = 0; s < nu_s.size(); ++s) {
    if (nu_s[s] <= 0.0) continue;
    double d = alpha == 1.0 ? kl_divergence(p_hat.row(s), q_hat.row(s))
                            : renyi_divergence(p_hat.row(s), q_hat.row(s), alpha);
    div += nu_s[s] * d;
  }
  return div + log_mgf(p_s, q_hat, g);
}

BoundReport thm1_bound(double R_sw, double sigma, std::size_t n, double delta, double epsilon) {
  require_n(n, "thm1_bound");
  require_delta(delta, "thm1_bound");
  if (R_sw < 0.0) throw Error("thm1_bound: R must be non-negative");
  BoundReport r;
  r.kind = "thm1";
  r.params = {{"n", double(n)}, {"sigma", sigma}, {"delta", delta}, {"epsilon", epsilon}};
  r.terms = {{"rate_term", R_sw},
             {"confidence_term", std::log(std::sqrt(2.0 * double(n)) / delta)},
             {"epsilon_term", epsilon},
             {"mgf_term", 0.0}};
  double radicand = 4.0 * sigma * sigma * (r.terms["rate_term"] + r.terms["confidence_term"]) / (2.0 * n - 1.0) +
                    epsilon;
  if (radicand < 0.0) {
    throw Error("thm1_bound: negative radicand " + fmt(radicand) + " (epsilon = " + fmt(epsilon) +
                " outweighs the rate and confidence terms)");
  }
  finish(r);
  return r;
}

BoundReport fixed_size_bound(double R, double sigma, std::size_t n, double delta, double epsilon) {
  require_n(n, "fixed_size_bound");
  require_delta(delta, "fixed_size_bound");
  BoundReport r;
  r.kind = "eq4";
  r.params = {{"n", double(n)}, {"sigma", sigma}, {"delta", delta}, {"epsilon", epsilon}};
  r.terms = {{"rate_term", R}, {"confidence_term", std::log(1.0 / delta)}, {"epsilon_term", epsilon}, {"mgf_term", 0.0}};
  if (R + std::log(1.0 / delta) < 0.0) {
    throw Error("fixed_size_bound: negative radicand (R + log(1/delta) = " + fmt(R + std::log(1.0 / delta)) + ")");
  }
  finish(r);
  return r;
}

BoundReport rd_tail_bound(const FiniteLearningProblem& prob, const Algorithm& alg, std::size_t n, double delta,
                          double epsilon, const RdTailOptions& opts) {
  require_n(n, "rd_tail_bound");
  if (!(delta > 0.0) || delta > 1.0) throw Error("rd_tail_bound: delta must lie in (0, 1]");
  InducedJoint ij = induced_joint_auto(prob, alg, n);
  Matrix gen = ij.gen_table(prob);
  const std::size_t rows = ij.joint.rows(), cols = ij.joint.cols();
  auto objective = [&](const std::vector<double>& nu) {
    Matrix t(rows, cols);
    t.data = nu;
    try {
      return rd_gen(Joint(std::move(t)), gen, epsilon).rate_nats;
    } catch (const Error&) {
      return kInf;  // epsilon infeasible under this nu
    }
  };
  GdeltaResult sup = gdelta_sup(ij.joint, delta, objective, opts.search_budget, opts.seed);
  const double sigma = prob.sigma();

  BoundReport r;
  r.kind = "eq21";
  r.params = {{"n", double(n)}, {"sigma", sigma}, {"delta", delta}, {"epsilon", epsilon},
              {"search_budget", double(opts.search_budget)}};
  r.terms = {{"rate_term", sup.sup_estimate},
             {"rate_term_baseline", sup.baseline},
             {"confidence_term", std::log(1.0 / delta)},
             {"epsilon_term", epsilon},
             {"mgf_term", 0.0}};
  r.terms["baseline_bound"] =
      std::sqrt(2.0 * sigma * sigma * (sup.baseline + std::log(1.0 / delta)) / double(n)) + epsilon;
  r.flags.push_back("sup_is_lower_estimate");
  finish(r);
  return r;
}

BoundReport seeger_fast_rate_bound(double emp_risk, double sup_mi, double sigma, std::size_t n, double delta) {
  require_n(n, "seeger_fast_rate_bound");
  require_delta(delta, "seeger_fast_rate_bound");
  if (emp_risk < 0.0) throw Error("seeger_fast_rate_bound: empirical risk must be non-negative");
  BoundReport r;
  r.kind = "seeger";
  r.params = {{"n", double(n)}, {"sigma", sigma}, {"delta", delta}, {"emp_risk", emp_risk}};
  double conf = std::log(2.0 * std::sqrt(double(n)) / delta);
  r.terms = {{"rate_term", sup_mi}, {"confidence_term", conf}, {"C", 4.0 * sigma * sigma * (sup_mi + conf)}};
  finish(r);
  return r;
}

BoundReport pac_bayes_eq22(const Pmf& pi, const Pmf& q, double logmgf, double delta) {
  require_delta(delta, "pac_bayes_eq22");
  BoundReport r;
  r.kind = "eq22";
  r.params = {{"delta", delta}};
  r.terms = {{"rate_term", kl_divergence(pi, q)}, {"mgf_term", logmgf}, {"confidence_term", std::log(1.0 / delta)}};
  finish(r);
  return r;
}

BoundReport prop5_bound(const Prop5iInput& in) {
  require_delta(in.delta, "prop5_bound");
  if (in.f_row.size() != in.pi.size() || in.g_row.size() != in.p_hat.size() || in.q_hat.size() != in.p_hat.size())
    throw Error("prop5_bound (mode i): shape mismatch");
  double ef = 0.0, eg = 0.0;
  for (std::size_t w = 0; w < in.pi.size(); ++w) ef += in.pi[w] * in.f_row[w];
  for (std::size_t w = 0; w < in.p_hat.size(); ++w) eg += in.p_hat[w] * in.g_row[w];
  if (ef - eg > in.epsilon + kDistortionSlack) {
    throw Error("prop5_bound (mode i): distortion E[f - g] = " + fmt(ef - eg) + " exceeds epsilon = " +
                fmt(in.epsilon));
  }
  BoundReport r;
  r.kind = "prop5i";
  r.params = {{"delta", in.delta}, {"epsilon", in.epsilon}};
  r.terms = {{"rate_term", kl_divergence(in.p_hat, in.q_hat)},
             {"mgf_term", in.log_mgf},
             {"confidence_term", std::log(1.0 / in.delta)},
             {"epsilon_term", in.epsilon},
             {"reference_lhs", ef}};
  finish(r);
  return r;
}

BoundReport prop5_bound(const Prop5iiInput& in) {
  require_delta(in.delta, "prop5_bound");
  const std::size_t nw = in.kernel.inputs(), nh = in.kernel.outputs();
  if (in.p_w_given_s.size() != nw || in.q_hat.size() != nh || in.w >= nw)
    throw Error("prop5_bound (mode ii): shape mismatch");
  if (in.delta_row || in.g_row) {
    if (!in.delta_row || !in.g_row || in.delta_row->size() != nw || in.g_row->size() != nh)
      throw Error("prop5_bound (mode ii): distortion check needs both Delta(s, .) and g(s, .)");
    for (std::size_t w = 0; w < nw; ++w) {
      double eg = 0.0;
      for (std::size_t h = 0; h < nh; ++h) eg += in.kernel(w, h) * (*in.g_row)[h];
      double excess = (*in.delta_row)[w] - eg;
      if (excess > in.epsilon + kDistortionSlack) {
        throw Error("prop5_bound (mode ii): distortion Delta - E[g] = " + fmt(excess) + " at w = " +
                    std::to_string(w) + " exceeds epsilon = " + fmt(in.epsilon));
      }
    }
  }
  std::vector<double> pstar(nh, 0.0);
  for (std::size_t w = 0; w < nw; ++w)
    for (std::size_t h = 0; h < nh; ++h) pstar[h] += in.p_w_given_s[w] * in.kernel(w, h);
  double ratio = 0.0;
  for (std::size_t h = 0; h < nh; ++h) {
    double k = in.kernel(in.w, h);
    if (k <= 0.0) continue;
    if (in.q_hat[h] <= 0.0) {
      ratio = kInf;
      break;
    }
    ratio += k * std::log(pstar[h] / in.q_hat[h]);
  }
  BoundReport r;
  r.kind = "prop5ii";
  r.params = {{"delta", in.delta}, {"epsilon", in.epsilon}, {"w", double(in.w)}};
  r.terms = {{"rate_term", ratio},
             {"mgf_term", in.log_mgf},
             {"confidence_term", std::log(1.0 / in.delta)},
             {"epsilon_term", in.epsilon}};
  finish(r);
  return r;
}

BoundReport toy_example_bound(double sample_means_sq_sum, double lipschitz_L, std::size_t d, double sigma,
                              std::size_t n, double delta) {
  require_n(n, "toy_example_bound");
  require_delta(delta, "toy_example_bound");
  if (sample_means_sq_sum < 0.0 || lipschitz_L < 0.0 || sigma < 0.0)
    throw Error("toy_example_bound: inputs must be non-negative");
  BoundReport r;
  r.kind = "toy";
  r.params = {{"n", double(n)}, {"sigma", sigma}, {"delta", delta}, {"L", lipschitz_L}, {"d", double(d)},
              {"sample_means_sq_sum", sample_means_sq_sum}};
  r.terms = {{"rate_term", 2.0 * std::sqrt(lipschitz_L * double(d) * sample_means_sq_sum)},
             {"confidence_term", std::log(1.0 / delta)}};
  finish(r);
  return r;
}

ConditionCheck check_thm3_condition(int variant, const Thm3Input& in) {
  const std::size_t ns = in.nu.rows(), nw = in.nu.cols();
  if (in.P.rows() != ns || in.P.cols() != nw) throw Error("check_thm3_condition: nu and P shapes differ");
  check_matrix(in.f, ns, nw, "check_thm3_condition: f");
  check_matrix(in.Delta, ns, nw, "check_thm3_condition: Delta");
  require_delta(in.delta, "check_thm3_condition");
  ConditionCheck out;
  out.log_delta = std::log(in.delta);
  const Pmf nu_s = in.nu.row_marginal();
  const Pmf p_s = in.P.row_marginal();
  const double kl = conditional_kl(in.nu, in.P);

  if (variant == 1) {
    check_matrix(in.g, ns, in.p_hat.outputs(), "check_thm3_condition: g");
    double e_delta = 0.0, e_f = 0.0, e_g = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t w = 0; w < nw; ++w) {
        e_delta += in.nu(s, w) * in.Delta(s, w);
        e_f += in.nu(s, w) * in.f(s, w);
      }
      for (std::size_t h = 0; h < in.g.cols; ++h) e_g += nu_s[s] * in.p_hat(s, h) * in.g(s, h);
    }
    double t = t_functional(nu_s, in.p_hat, in.q_hat, scaled(in.g, in.lambda), 1.0, p_s);
    out.lhs = std::isinf(kl) && std::isfinite(t) ? -kInf : t - kl - in.lambda * (e_delta - in.epsilon);
    out.distortion_ok = e_delta - e_g <= in.epsilon + kDistortionSlack;
    out.distortion_f_ok = e_f - e_g <= in.epsilon + kDistortionSlack;
  } else if (variant == 2) {
    if (!(in.alpha > 1.0)) throw Error("check_thm3_condition: variant ii needs alpha > 1");
    if (in.lambda < in.alpha / (in.alpha - 1.0))
      throw Error("check_thm3_condition: variant ii needs lambda >= alpha/(alpha-1)");
    if (in.q_hat.outputs() != nw) throw Error("check_thm3_condition: variant ii prior must live on W");
    Matrix lf = scaled(log_of_positive(in.f, "check_thm3_condition"), in.lambda);
    double t = t_functional(nu_s, in.nu.conditional(), in.q_hat, lf, in.alpha, p_s);
    Channel nu_c = in.nu.conditional();
    double e = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      if (nu_s[s] <= 0.0) continue;
      double inner = 0.0;
      for (std::size_t w = 0; w < nw; ++w) inner += nu_c(s, w) * in.Delta(s, w);
      e += nu_s[s] * std::log(inner);
    }
    out.lhs = std::isinf(kl) && std::isfinite(t) ? -kInf : t - kl - in.lambda * e;
    out.distortion_ok = out.distortion_f_ok = true;
  } else {
    throw Error("check_thm3_condition: variant must be 1 or 2");
  }
  out.satisfied = out.lhs <= out.log_delta;
  return out;
}

ConditionCheck check_thm4_condition(int variant, const Thm4Input& in) {
  const std::size_t ns = in.nu_s.size(), nw = in.pi_s.outputs();
  if (in.pi_s.inputs() != ns || in.P_s.size() != ns || in.Delta.size() != ns)
    throw Error("check_thm4_condition: source alphabet mismatch");
  check_matrix(in.f, ns, nw, "check_thm4_condition: f");
  require_delta(in.delta, "check_thm4_condition");
  ConditionCheck out;
  out.log_delta = std::log(in.delta);

  if (variant == 1) {
    check_matrix(in.g, ns, in.p_hat.outputs(), "check_thm4_condition: g");
    double e_delta = 0.0, e_f = 0.0, e_g = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      e_delta += in.nu_s[s] * in.Delta[s];
      for (std::size_t w = 0; w < nw; ++w) e_f += in.nu_s[s] * in.pi_s(s, w) * in.f(s, w);
      for (std::size_t h = 0; h < in.g.cols; ++h) e_g += in.nu_s[s] * in.p_hat(s, h) * in.g(s, h);
    }
    double t = t_functional(in.nu_s, in.p_hat, in.q_hat, scaled(in.g, in.lambda), 1.0, in.P_s);
    out.lhs = t - in.lambda * (e_delta - in.epsilon);
    out.distortion_ok = e_delta - e_g <= in.epsilon + kDistortionSlack;
    out.distortion_f_ok = e_f - e_g <= in.epsilon + kDistortionSlack;
  } else if (variant == 2) {
    if (!(in.alpha > 1.0)) throw Error("check_thm4_condition: variant ii needs alpha > 1");
    if (in.lambda < in.alpha / (in.alpha - 1.0))
      throw Error("check_thm4_condition: variant ii needs lambda >= alpha/(alpha-1)");
    Matrix lf = scaled(log_of_positive(in.f, "check_thm4_condition"), in.lambda);
    double t = t_functional(in.nu_s, in.pi_s, in.q_hat, lf, in.alpha, in.P_s);
    double e = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      if (in.nu_s[s] <= 0.0) continue;
      if (!(in.Delta[s] > 0.0)) throw Error("check_thm4_condition: Delta must be positive in variant ii");
      e += in.nu_s[s] * std::log(in.Delta[s]);
    }
    out.lhs = t - in.lambda * e;
    out.distortion_ok = out.distortion_f_ok = true;
  } else {
    throw Error("check_thm4_condition: variant must be 1 or 2");
  }
  out.satisfied = out.lhs <= out.log_delta;
  return out;
}

std::pair<double, double> minimize_over_lambda(const std::function<double(double)>& h, double lo, double hi) {
  if (!(lo > 0.0) || !(hi > lo)) throw Error("minimize_over_lambda: need 0 < lo < hi");
  constexpr int kGrid = 64;
  const double llo = std::log(lo), lhi = std::log(hi);
  std::vector<double> xs(kGrid), vs(kGrid);
  std::size_t best = 0;
  for (int i = 0; i < kGrid; ++i) {
    xs[i] = llo + (lhi - llo) * i / (kGrid - 1);
    vs[i] = h(std::exp(xs[i]));
    if (vs[i] < vs[best]) best = i;
  }
  double a = xs[best == 0 ? 0 : best - 1];
  double b = xs[best + 1 == kGrid ? kGrid - 1 : best + 1];
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = h(std::exp(c)), fd = h(std::exp(d));
  for (int it = 0; it < 80; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = h(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = h(std::exp(d));
    }
  }
  double x = fc < fd ? c : d;
  double v = std::min(fc, fd);
  if (vs[best] <= v) return {std::exp(xs[best]), vs[best]};
  return {std::exp(x), v};
}

BoundReport thm5_expectation_bound(int part, const Thm5Input& in) {
  const std::size_t ns = in.P.rows(), nw = in.P.cols();
  check_matrix(in.f, ns, nw, "thm5_expectation_bound: f");
  const Pmf p_s = in.P.row_marginal();
  double truth = 0.0;
  for (std::size_t s = 0; s < ns; ++s)
    for (std::size_t w = 0; w < nw; ++w) truth += in.P(s, w) * in.f(s, w);

  BoundReport r;
  if (part == 1) {
    check_matrix(in.g, ns, in.p_hat.outputs(), "thm5_expectation_bound: g");
    if (in.p_hat.inputs() != ns || in.q_hat.inputs() != ns || in.q_hat.outputs() != in.p_hat.outputs())
      throw Error("thm5_expectation_bound: channel shapes do not match P");
    double e_g = 0.0;
    for (std::size_t s = 0; s < ns; ++s)
      for (std::size_t h = 0; h < in.g.cols; ++h) e_g += p_s[s] * in.p_hat(s, h) * in.g(s, h);
    if (truth - e_g > in.epsilon + kDistortionSlack) {
      throw Error("thm5_expectation_bound: distortion E[f - g] = " + fmt(truth - e_g) + " exceeds epsilon = " +
                  fmt(in.epsilon));
    }
    const double kl = kl_term(p_s, in.p_hat, in.q_hat);
    double mean_g = 0.0;  // E_{P_S q}[g], used by the subgaussian surrogate
    for (std::size_t s = 0; s < ns; ++s)
      for (std::size_t h = 0; h < in.g.cols; ++h) mean_g += p_s[s] * in.q_hat(s, h) * in.g(s, h);
    auto mgf = [&](double lambda) {
      if (in.mgf == MgfMode::Subgaussian)
        return lambda * mean_g + lambda * lambda * in.sigma * in.sigma / (2.0 * double(in.n));
      return log_mgf(p_s, in.q_hat, scaled(in.g, lambda));
    };
    double lambda = in.lambda;
    if (!(lambda > 0.0)) {
      double scale = 1e-12;
      for (double v : in.g.data) scale = std::max(scale, std::abs(v));
      lambda = minimize_over_lambda([&](double l) { return (kl + mgf(l)) / l; }, 1e-4 / scale, 1e4 / scale).first;
      r.flags.push_back("lambda_optimized");
    }
    r.kind = "thm5i";
    r.params = {{"lambda", lambda}, {"epsilon", in.epsilon}, {"sigma", in.sigma}, {"n", double(in.n)}};
    r.terms = {{"rate_term", kl / lambda}, {"mgf_term", mgf(lambda) / lambda}, {"epsilon_term", in.epsilon},
               {"confidence_term", 0.0}, {"reference_truth", truth}};
    if (in.mgf == MgfMode::Subgaussian) r.flags.push_back("subgaussian_surrogate");
  } else if (part == 2) {
    if (!(in.alpha > 1.0)) throw Error("thm5_expectation_bound: part ii needs alpha > 1");
    if (in.q_hat.inputs() != ns || in.q_hat.outputs() != nw) throw Error("thm5_expectation_bound: q must be S -> W");
    Matrix lf = log_of_positive(in.f, "thm5_expectation_bound");
    // D_alpha(P_{S,W} || q_{W|S} P_S).
    std::vector<double> x, wts;
    bool infinite = false;
    for (std::size_t s = 0; s < ns; ++s)
      for (std::size_t w = 0; w < nw; ++w) {
        double pv = in.P(s, w);
        if (pv <= 0.0) continue;
        double qv = in.q_hat(s, w) * p_s[s];
        if (qv <= 0.0) {
          infinite = true;
          continue;
        }
        x.push_back(in.alpha * std::log(pv) + (1.0 - in.alpha) * std::log(qv));
        wts.push_back(1.0);
      }
    const double dalpha = infinite ? kInf : std::max(0.0, log_sum_exp(x, wts) / (in.alpha - 1.0));
    auto logmom = [&](double lambda) { return log_mgf(p_s, in.q_hat, scaled(lf, lambda)); };
    double lmin = in.alpha / (in.alpha - 1.0);
    double lambda = in.lambda;
    if (!(lambda > 0.0)) {
      lambda = minimize_over_lambda([&](double l) { return (dalpha + logmom(l)) / l; }, lmin, lmin * 1e4).first;
      r.flags.push_back("lambda_optimized");
    }
    if (lambda < lmin) throw Error("thm5_expectation_bound: part ii needs lambda >= alpha/(alpha-1)");
    r.kind = "thm5ii";
    r.params = {{"lambda", lambda}, {"alpha", in.alpha}};
    r.terms = {{"rate_term", dalpha / lambda}, {"mgf_term", logmom(lambda) / lambda}, {"reference_truth", truth}};
  } else {
    throw Error("thm5_expectation_bound: part must be 1 or 2");
  }
  finish(r);
  if (r.value < truth - 1e-12) r.flags.push_back("dominance_violated");
  return r;
}

}  // namespace genbound
