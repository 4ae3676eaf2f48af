#include "genbound/learning.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace genbound {

FiniteLearningProblem::FiniteLearningProblem(Matrix loss_table, Pmf data_law, std::optional<double> B)
    : loss(std::move(loss_table)), mu(std::move(data_law)), bound_B(B) {
  if (loss.rows == 0 || loss.cols == 0) throw Error("FiniteLearningProblem: empty loss table");
  if (loss.rows != mu.size()) {
    throw Error("FiniteLearningProblem: loss has " + std::to_string(loss.rows) + " rows but mu has " +
                std::to_string(mu.size()) + " symbols");
  }
  for (double v : loss.data) {
    if (!std::isfinite(v)) throw Error("FiniteLearningProblem: non-finite loss entry");
    if (bound_B && (v < 0.0 || v > *bound_B)) {
      throw Error("FiniteLearningProblem: loss entry " + std::to_string(v) + " outside [0, " +
                  std::to_string(*bound_B) + "]");
    }
  }
}

double FiniteLearningProblem::sigma() const {
  if (bound_B) return *bound_B / 2.0;
  auto [lo, hi] = std::minmax_element(loss.data.begin(), loss.data.end());
  return (*hi - *lo) / 2.0;
}

namespace {

void check_w(const FiniteLearningProblem& prob, std::size_t w) {
  if (w >= prob.w_size()) throw Error("hypothesis index " + std::to_string(w) + " out of range");
}

}  // namespace

double population_risk(const FiniteLearningProblem& prob, std::size_t w) {
  check_w(prob, w);
  double r = 0.0;
  for (std::size_t z = 0; z < prob.z_size(); ++z) r += prob.mu[z] * prob.loss(z, w);
  return r;
}

double empirical_risk(const FiniteLearningProblem& prob, const Dataset& s, std::size_t w) {
  check_w(prob, w);
  if (s.samples.empty()) throw Error("empirical_risk: empty dataset");
  double r = 0.0;
  for (std::size_t z : s.samples) {
    if (z >= prob.z_size()) throw Error("dataset sample " + std::to_string(z) + " out of range");
    r += prob.loss(z, w);
  }
  return r / static_cast<double>(s.n());
}

double gen_error(const FiniteLearningProblem& prob, const Dataset& s, std::size_t w) {
  return population_risk(prob, w) - empirical_risk(prob, s, w);
}

Pmf gibbs_posterior(const FiniteLearningProblem& prob, const Pmf& prior, double beta, const Dataset& s) {
  if (prior.size() != prob.w_size()) throw Error("gibbs_posterior: prior size mismatch");
  if (beta < 0.0) throw Error("gibbs_posterior: beta must be non-negative");
  const double n = static_cast<double>(s.n());
  std::vector<double> logw(prob.w_size(), -kInf);
  double mx = -kInf;
  for (std::size_t w = 0; w < prob.w_size(); ++w) {
    if (prior[w] <= 0.0) continue;
    logw[w] = std::log(prior[w]) - beta * n * empirical_risk(prob, s, w);
    mx = std::max(mx, logw[w]);
  }
  if (mx == -kInf) throw Error("gibbs_posterior: prior has no mass");
  std::vector<double> p(prob.w_size(), 0.0);
  double z = 0.0;
  for (std::size_t w = 0; w < prob.w_size(); ++w) {
    if (logw[w] == -kInf) continue;
    p[w] = std::exp(logw[w] - mx);
    z += p[w];
  }
  for (double& v : p) v /= z;
  return Pmf(std::move(p));
}

Algorithm gibbs_algorithm(const FiniteLearningProblem& prob, Pmf prior, double beta) {
  return Algorithm{[prob, prior = std::move(prior), beta](const Dataset& s) {
                     return gibbs_posterior(prob, prior, beta, s);
                   },
                   true};
}

Algorithm constant_algorithm(Pmf out) {
  return Algorithm{[out = std::move(out)](const Dataset&) { return out; }, true};
}

Dataset sample_dataset(const FiniteLearningProblem& prob, std::size_t n, Rng& rng) {
  if (n == 0) throw Error("sample_dataset: n must be positive");
  Dataset s;
  s.samples.resize(n);
  for (auto& z : s.samples) z = sample_index(prob.mu.probs(), rng);
  return s;
}

Dataset sample_dataset(const FiniteLearningProblem& prob, std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return sample_dataset(prob, n, rng);
}

Matrix InducedJoint::gen_table(const FiniteLearningProblem& prob) const {
  Matrix g(datasets.size(), prob.w_size());
  for (std::size_t i = 0; i < datasets.size(); ++i)
    for (std::size_t w = 0; w < prob.w_size(); ++w) g(i, w) = gen_error(prob, datasets[i], w);
  return g;
}

namespace {

InducedJoint assemble(const FiniteLearningProblem& prob, const Algorithm& alg, std::vector<Dataset> sets,
                      std::vector<double> probs, bool collapsed) {
  InducedJoint out;
  Matrix t(sets.size(), prob.w_size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    Pmf post = alg.posterior(sets[i]);
    if (post.size() != prob.w_size()) throw Error("induced_joint: posterior size mismatch");
    for (std::size_t w = 0; w < prob.w_size(); ++w) t(i, w) = probs[i] * post[w];
  }
  out.datasets = std::move(sets);
  out.dataset_prob = std::move(probs);
  out.joint = Joint(std::move(t));
  out.type_collapsed = collapsed;
  return out;
}

}  // namespace

InducedJoint induced_joint(const FiniteLearningProblem& prob, const Algorithm& alg, std::size_t n,
                           std::size_t cap) {
  if (n == 0) throw Error("induced_joint: n must be positive");
  const std::size_t k = prob.z_size();
  double count = std::pow(static_cast<double>(k), static_cast<double>(n));
  if (count > static_cast<double>(cap)) {
    throw Error("induced_joint: " + std::to_string(k) + "^" + std::to_string(n) +
                " datasets exceed the enumeration cap of " + std::to_string(cap));
  }
  std::vector<Dataset> sets;
  std::vector<double> probs;
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    double p = 1.0;
    for (std::size_t z : idx) p *= prob.mu[z];
    if (p > 0.0) {
      sets.push_back(Dataset{idx});
      probs.push_back(p);
    }
    std::size_t pos = 0;
    while (pos < n && ++idx[pos] == k) idx[pos++] = 0;
    if (pos == n) break;
  }
  return assemble(prob, alg, std::move(sets), std::move(probs), false);
}

InducedJoint induced_joint_types(const FiniteLearningProblem& prob, const Algorithm& alg, std::size_t n,
                                 std::size_t cap) {
  if (n == 0) throw Error("induced_joint_types: n must be positive");
  if (!alg.exchangeable) throw Error("induced_joint_types: algorithm is not exchangeable");
  const std::size_t k = prob.z_size();
  std::vector<Dataset> sets;
  std::vector<double> probs;
  std::vector<std::size_t> c(k, 0);
  const double log_nfact = std::lgamma(static_cast<double>(n) + 1.0);
  // Enumerate compositions of n into k parts.
  auto visit = [&](auto&& self, std::size_t pos, std::size_t left) -> void {
    if (pos + 1 == k) {
      c[pos] = left;
      double lp = log_nfact;
      for (std::size_t z = 0; z < k; ++z) {
        if (c[z] == 0) continue;
        if (prob.mu[z] <= 0.0) return;
        lp += static_cast<double>(c[z]) * std::log(prob.mu[z]) - std::lgamma(static_cast<double>(c[z]) + 1.0);
      }
      if (sets.size() >= cap) throw Error("induced_joint_types: type count exceeds the enumeration cap");
      Dataset s;
      s.samples.reserve(n);
      for (std::size_t z = 0; z < k; ++z) s.samples.insert(s.samples.end(), c[z], z);
      sets.push_back(std::move(s));
      probs.push_back(std::exp(lp));
      return;
    }
    for (std::size_t v = 0; v <= left; ++v) {
      c[pos] = v;
      self(self, pos + 1, left - v);
    }
  };
  visit(visit, 0, n);
  return assemble(prob, alg, std::move(sets), std::move(probs), true);
}

InducedJoint induced_joint_auto(const FiniteLearningProblem& prob, const Algorithm& alg, std::size_t n,
                                std::size_t cap) {
  return alg.exchangeable ? induced_joint_types(prob, alg, n, cap) : induced_joint(prob, alg, n, cap);
}

}  // namespace genbound
