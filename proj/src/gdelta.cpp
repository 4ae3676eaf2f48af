// Heuristic maximization over the KL ball around a reference distribution.
//
// Candidates: the reference itself, exponential tilts of p_ref along the
// objective's finite-difference gradient and along each atom, Dirichlet
// restarts pulled back into the ball by mixing with p_ref, and finally a
// pairwise mass-transfer ascent from the incumbent. Each accepted point is
// re-checked against the radius, so the returned value is attained inside the
// ball.
#include <algorithm>
#include <cmath>

#include "genbound/info_core.hpp"
#include "genbound/rng.hpp"

namespace genbound {

namespace {

constexpr double kMembershipSlack = 1e-9;

struct Search {
  const std::vector<double>& p;
  double radius;
  const DistObjective& f;
  std::size_t budget;
  std::vector<std::size_t> support;
  GdeltaResult res;

  bool spent() const { return res.evaluations >= budget; }

  // Evaluates nu if it is inside the ball; returns the value or -inf.
  double consider(const std::vector<double>& nu) {
    double kl = kl_divergence(nu, p);
    if (!(kl <= radius + kMembershipSlack)) return -kInf;
    double v = f(nu);
    ++res.evaluations;
    if (v > res.sup_estimate) {
      res.sup_estimate = v;
      res.argmax = nu;
      res.argmax_kl = kl;
    }
    return v;
  }

  std::vector<double> tilt(const std::vector<double>& h, double theta) const {
    std::vector<double> nu(p.size(), 0.0);
    double mx = -kInf;
    for (std::size_t i : support) mx = std::max(mx, theta * h[i]);
    double z = 0.0;
    for (std::size_t i : support) {
      nu[i] = p[i] * std::exp(theta * h[i] - mx);
      z += nu[i];
    }
    for (std::size_t i : support) nu[i] /= z;
    return nu;
  }

  // Largest theta >= 0 keeping the tilt inside the ball (KL grows with theta).
  double saturating_theta(const std::vector<double>& h) const {
    double lo = 0.0, hi = 1.0;
    while (kl_divergence(tilt(h, hi), p) <= radius) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e8) return lo;
    }
    for (int it = 0; it < 80; ++it) {
      double mid = 0.5 * (lo + hi);
      if (kl_divergence(tilt(h, mid), p) <= radius) lo = mid;
      else hi = mid;
    }
    return lo;
  }

  void tilt_family(const std::vector<double>& h) {
    double spread = 0.0;
    for (std::size_t i : support) spread = std::max(spread, std::abs(h[i] - h[support.front()]));
    if (spread <= 0.0) return;
    double theta = saturating_theta(h);
    for (double frac : {1.0, 0.5}) {
      if (spent()) return;
      consider(tilt(h, frac * theta));
    }
  }

  // Largest t in [0, 1] with (1 - t) p + t x inside the ball.
  std::vector<double> pull_into_ball(const std::vector<double>& x) const {
    auto mix = [&](double t) {
      std::vector<double> nu(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) nu[i] = (1.0 - t) * p[i] + t * x[i];
      return nu;
    };
    if (kl_divergence(mix(1.0), p) <= radius) return mix(1.0);
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      double mid = 0.5 * (lo + hi);
      if (kl_divergence(mix(mid), p) <= radius) lo = mid;
      else hi = mid;
    }
    return mix(lo);
  }
};

}  // namespace

bool in_gdelta(const std::vector<double>& nu, const std::vector<double>& p_ref, double delta) {
  return kl_divergence(nu, p_ref) <= std::log(1.0 / delta) + kMembershipSlack;
}

GdeltaResult gdelta_sup(const std::vector<double>& p_ref, double delta, const DistObjective& objective,
                        int search_budget, std::uint64_t seed) {
  if (!(delta > 0.0) || delta > 1.0) throw Error("gdelta_sup: delta must lie in (0, 1]");
  Pmf checked(p_ref);
  const std::vector<double>& p = checked.probs();
  Search s{p, std::log(1.0 / delta), objective,
           static_cast<std::size_t>(std::max(search_budget, 1)), {}, {}};
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) s.support.push_back(i);

  s.res.baseline = objective(p);
  s.res.evaluations = 1;
  s.res.sup_estimate = s.res.baseline;
  s.res.argmax = p;
  s.res.argmax_kl = 0.0;
  if (s.radius <= 0.0 || s.support.size() < 2) return s.res;

  const std::size_t k = s.support.size();
  const std::size_t budget = s.budget;

  // Gradient tilt: directional derivatives toward each vertex.
  if (budget >= 4 * (k + 2)) {
    const double h = 1e-4;
    std::vector<double> grad(p.size(), 0.0);
    for (std::size_t i : s.support) {
      std::vector<double> nu = p;
      for (std::size_t j : s.support) nu[j] *= (1.0 - h);
      nu[i] += h;
      grad[i] = (objective(nu) - s.res.baseline) / h;
      ++s.res.evaluations;
    }
    s.tilt_family(grad);
  }

  // Atom tilts: push mass onto a single symbol.
  for (std::size_t i : s.support) {
    if (s.res.evaluations >= budget / 2) break;
    std::vector<double> e(p.size(), 0.0);
    e[i] = 1.0;
    s.tilt_family(e);
  }

  // Dirichlet(1) restarts on the support.
  Rng rng = make_rng(derive_seed(seed, 0x6764656c7461ULL));
  const std::size_t restart_stop = budget - budget / 4;
  while (s.res.evaluations < restart_stop) {
    std::vector<double> x(p.size(), 0.0);
    double z = 0.0;
    for (std::size_t i : s.support) {
      x[i] = sample_gamma(1.0, rng);
      z += x[i];
    }
    for (std::size_t i : s.support) x[i] /= z;
    s.consider(s.pull_into_ball(x));
  }

  // Pairwise mass transfer from the incumbent.
  std::vector<double> cur = s.res.argmax;
  double cur_val = s.res.sup_estimate;
  double step = 0.5;
  while (!s.spent() && step > 1e-6) {
    bool improved = false;
    for (std::size_t a = 0; a < k && !s.spent(); ++a) {
      for (std::size_t b = 0; b < k && !s.spent(); ++b) {
        if (a == b) continue;
        std::size_t to = s.support[a], from = s.support[b];
        double amount = step * cur[from];
        if (amount <= 0.0) continue;
        std::vector<double> nu = cur;
        nu[from] -= amount;
        nu[to] += amount;
        double v = s.consider(nu);
        if (v > cur_val) {
          cur = std::move(nu);
          cur_val = v;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return s.res;
}

GdeltaResult gdelta_sup(const Pmf& p_ref, double delta, const DistObjective& objective,
                        int search_budget, std::uint64_t seed) {
  return gdelta_sup(p_ref.probs(), delta, objective, search_budget, seed);
}

GdeltaResult gdelta_sup(const Joint& p_ref, double delta, const DistObjective& objective,
                        int search_budget, std::uint64_t seed) {
  return gdelta_sup(p_ref.flat(), delta, objective, search_budget, seed);
}

}  // namespace genbound
