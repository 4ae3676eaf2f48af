#include "genbound/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "genbound/rng.hpp"
#include "genbound/validation.hpp"

namespace genbound {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kNoDivergence = std::numeric_limits<std::size_t>::max();

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    double r = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace

std::size_t Quantizer::size() const {
  std::size_t s = 1;
  for (std::size_t i = 0; i < dim; ++i) s *= bins;
  return s;
}

std::optional<std::size_t> Quantizer::index(const std::vector<double>& w) const {
  if (w.size() != dim) throw Error("quantizer: vector has dimension " + std::to_string(w.size()) + ", expected " +
                                   std::to_string(dim));
  std::size_t idx = 0, stride = 1;
  const double h = width();
  for (double v : w) {
    if (!(v >= lo && v <= hi)) return std::nullopt;
    std::size_t k = std::min(bins - 1, static_cast<std::size_t>(std::floor((v - lo) / h)));
    idx += k * stride;
    stride *= bins;
  }
  return idx;
}

std::vector<double> Quantizer::center(std::size_t idx) const {
  std::vector<double> c(dim);
  const double h = width();
  for (std::size_t i = 0; i < dim; ++i) {
    c[i] = lo + (double(idx % bins) + 0.5) * h;
    idx /= bins;
  }
  return c;
}

Matrix Quantizer::l1_distance() const {
  const std::size_t k = size();
  Matrix rho(k, k);
  for (std::size_t a = 0; a < k; ++a) {
    std::vector<double> ca = center(a);
    for (std::size_t b = 0; b < k; ++b) {
      std::vector<double> cb = center(b);
      double d = 0.0;
      for (std::size_t i = 0; i < dim; ++i) d += std::abs(ca[i] - cb[i]);
      rho(a, b) = d;
    }
  }
  return rho;
}

void ToySpec::validate() const {
  if (points.empty()) throw Error("toy spec: no data points");
  if (quantizer.dim == 0 || quantizer.bins == 0 || !(quantizer.hi > quantizer.lo))
    throw Error("toy spec: invalid quantizer");
  for (const auto& x : points)
    if (x.size() != quantizer.dim) throw Error("toy spec: point dimension differs from quantizer dimension");
  if (kind == ToyKind::Logistic) {
    if (labels.size() != points.size()) throw Error("toy spec: logistic model needs one label per point");
    for (int y : labels)
      if (y != 1 && y != -1) throw Error("toy spec: labels must be +1 or -1");
  }
  if (!mu.empty() && mu.size() != points.size()) throw Error("toy spec: mu size differs from the number of points");
  if (!w0.empty() && w0.size() != quantizer.dim) throw Error("toy spec: w0 dimension differs from quantizer");
  if (n == 0) throw Error("toy spec: n must be positive");
  if (reg < 0.0) throw Error("toy spec: reg must be non-negative");
  if (quantizer.size() > 4096) throw Error("toy spec: grid larger than 4096 cells");
}

double ToySpec::raw_loss(std::size_t z, const std::vector<double>& w) const {
  const auto& x = points.at(z);
  if (kind == ToyKind::Quadratic) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (w[i] - x[i]) * (w[i] - x[i]);
    return s;
  }
  double m = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    m += w[i] * x[i];
    sq += w[i] * w[i];
  }
  return softplus(-labels[z] * m) + 0.5 * reg * sq;
}

std::vector<double> ToySpec::raw_grad(std::size_t z, const std::vector<double>& w) const {
  const auto& x = points.at(z);
  std::vector<double> g(x.size());
  if (kind == ToyKind::Quadratic) {
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = 2.0 * (w[i] - x[i]);
    return g;
  }
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m += w[i] * x[i];
  const double y = labels[z];
  const double sig = 1.0 / (1.0 + std::exp(y * m));  // sigmoid(-y m)
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = -y * x[i] * sig + reg * w[i];
  return g;
}

double ToySpec::loss_scale() const {
  double mx = 0.0;
  for (std::size_t c = 0; c < quantizer.size(); ++c) {
    std::vector<double> w = quantizer.center(c);
    for (std::size_t z = 0; z < points.size(); ++z) mx = std::max(mx, raw_loss(z, w));
  }
  return mx > 0.0 ? mx : 1.0;
}

FiniteLearningProblem ToySpec::to_problem() const {
  validate();
  const double scale = loss_scale();
  Matrix loss(points.size(), quantizer.size());
  for (std::size_t c = 0; c < quantizer.size(); ++c) {
    std::vector<double> w = quantizer.center(c);
    for (std::size_t z = 0; z < points.size(); ++z) loss(z, c) = raw_loss(z, w) / scale;
  }
  Pmf law = mu.empty() ? Pmf::uniform(points.size()) : Pmf(mu);
  return FiniteLearningProblem(std::move(loss), std::move(law), 1.0);
}

ToySpec default_logistic_spec() {
  ToySpec s;
  s.kind = ToyKind::Logistic;
  s.points = {{1.0, 0.2}, {0.6, 0.8}, {0.2, 1.0}, {-0.4, 0.6}, {-1.0, -0.2}, {-0.6, -0.8}, {0.5, -0.5}, {-0.3, 0.2}};
  s.labels = {1, 1, 1, -1, -1, -1, 1, 1};
  s.reg = 0.2;
  s.quantizer = Quantizer{2, 16, -3.0, 3.0};
  s.n = 10;
  s.steps = 40;
  return s;
}

std::vector<double> default_lr_grid() {
  std::vector<double> g;
  for (int k = 0; k < 8; ++k) g.push_back(0.125 * double(1 << k));
  return g;
}

TrajectoryProcess simulate_trajectory(const ToySpec& spec, const Dataset& s, double lr, std::size_t steps,
                                      std::uint64_t seed, std::optional<std::size_t> t1,
                                      std::optional<std::size_t> t2) {
  spec.validate();
  if (steps < 2) throw Error("simulate_trajectory: need at least 2 steps");
  if (s.n() == 0) throw Error("simulate_trajectory: empty dataset");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw Error("simulate_trajectory: learning rate must be finite and >= 0");
  for (std::size_t z : s.samples)
    if (z >= spec.points.size()) throw Error("simulate_trajectory: dataset index out of range");

  TrajectoryProcess tp;
  tp.quantizer = spec.quantizer;
  tp.t1 = t1 ? *t1 : steps / 2;
  tp.t2 = t2 ? *t2 : steps;
  if (!(tp.t2 > tp.t1) || tp.t2 > steps) throw Error("simulate_trajectory: window must satisfy t1 < t2 <= steps");

  const double scale = spec.loss_scale();
  const std::size_t dim = spec.quantizer.dim;
  std::vector<double> w = spec.w0.empty() ? std::vector<double>(dim, 0.0) : spec.w0;
  Rng rng = make_rng(seed);
  auto record = [&](std::size_t t) {
    auto idx = spec.quantizer.index(w);
    if (!idx) {
      throw TrajectoryDivergence(t, "trajectory left the grid range [" + num(spec.quantizer.lo) + ", " +
                                        num(spec.quantizer.hi) + "] at step " + std::to_string(t) +
                                        " (lr = " + num(lr) + ")");
    }
    tp.state_index.push_back(*idx);
  };
  record(0);
  for (std::size_t t = 1; t < steps; ++t) {
    std::vector<double> g(dim, 0.0);
    if (spec.full_batch) {
      for (std::size_t z : s.samples) {
        std::vector<double> gz = spec.raw_grad(z, w);
        for (std::size_t i = 0; i < dim; ++i) g[i] += gz[i] / double(s.n());
      }
    } else {
      std::size_t pick = std::min(s.n() - 1, static_cast<std::size_t>(uniform01(rng) * double(s.n())));
      g = spec.raw_grad(s.samples[pick], w);
    }
    for (std::size_t i = 0; i < dim; ++i) w[i] -= lr * g[i] / scale;
    record(t);
  }
  return tp;
}

double gen_trajectory(const FiniteLearningProblem& prob, const Dataset& s, const TrajectoryProcess& traj) {
  if (!(traj.t2 > traj.t1) || traj.t2 > traj.state_index.size()) throw Error("gen_trajectory: invalid window");
  double acc = 0.0;
  for (std::size_t t = traj.t1; t < traj.t2; ++t) acc += gen_error(prob, s, traj.state_index[t]);
  return acc / double(traj.window_length());
}

BoundReport thm7_bound(double rd_sup, double delta, std::size_t n, double epsilon) {
  if (n == 0) throw Error("thm7_bound: n must be positive");
  if (!(delta > 0.0)) throw Error("thm7_bound: delta must be positive");
  BoundReport r;
  r.kind = "thm7";
  r.params = {{"n", double(n)}, {"delta", delta}, {"epsilon", epsilon}};
  r.terms = {{"rate_term", rd_sup}, {"confidence_term", std::log(1.0 / delta)}, {"epsilon_term", epsilon}};
  double radicand = rd_sup + std::log(1.0 / delta);
  if (radicand < 0.0) throw Error("thm7_bound: negative radicand (rd + log(1/delta) = " + num(radicand) + ")");
  r.value = reconstruct_bound(r);
  return r;
}

BoundReport thm8_bound(double rd_s, double log_M, double lipschitz_L, double delta, std::size_t n, double epsilon) {
  if (n == 0) throw Error("thm8_bound: n must be positive");
  if (!(delta > 0.0)) throw Error("thm8_bound: delta must be positive");
  BoundReport r;
  r.kind = "thm8";
  r.params = {{"n", double(n)}, {"delta", delta}, {"epsilon", epsilon}, {"L", lipschitz_L}};
  r.terms = {{"rate_term", rd_s},
             {"coupling_term", log_M},
             {"confidence_term", std::log(std::sqrt(2.0 * double(n)) / delta)},
             {"epsilon_term", 4.0 * lipschitz_L * epsilon}};
  double radicand = (rd_s + log_M + r.terms["confidence_term"]) / (2.0 * double(n) - 1.0) + 4.0 * lipschitz_L * epsilon;
  if (radicand < 0.0) throw Error("thm8_bound: negative radicand " + num(radicand));
  r.value = reconstruct_bound(r);
  r.flags.push_back("M_is_lower_estimate");
  return r;
}

CouplingEstimate estimate_M(const Channel& pi_S, const Pmf& P_S, double delta, int budget, std::uint64_t seed,
                            std::optional<std::size_t> s) {
  const std::size_t k = pi_S.inputs(), nw = pi_S.outputs();
  if (P_S.size() != k) throw Error("estimate_M: P_S size differs from the channel inputs");
  if (s && *s >= k) throw Error("estimate_M: dataset row out of range");
  CouplingEstimate out;
  out.log_M = out.log_M_plugin = 0.0;
  auto rows = s ? std::vector<std::size_t>{*s} : std::vector<std::size_t>{};
  if (!s)
    for (std::size_t i = 0; i < k; ++i)
      if (P_S[i] > 0.0) rows.push_back(i);
  for (std::size_t row : rows) {
    const Pmf target = pi_S.row(row);
    auto objective = [&](const std::vector<double>& nu) {
      std::vector<double> mix(nw, 0.0);
      for (std::size_t i = 0; i < k; ++i) {
        if (nu[i] <= 0.0) continue;
        for (std::size_t w = 0; w < nw; ++w) mix[w] += nu[i] * pi_S(i, w);
      }
      return kl_divergence(target.probs(), mix);
    };
    GdeltaResult res = gdelta_sup(P_S, delta, objective, budget, derive_seed(seed, row));
    out.log_M_plugin = std::max(out.log_M_plugin, res.baseline);
    out.log_M = std::max(out.log_M, res.sup_estimate);
  }
  return out;
}

Channel window_state_channel(const ToySpec& spec, const std::vector<Dataset>& datasets, double lr,
                             std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw Error("window_state_channel: trials must be positive");
  const std::size_t k = spec.quantizer.size();
  Matrix m(datasets.size(), k);
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    std::size_t total = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      TrajectoryProcess tp = simulate_trajectory(spec, datasets[i], lr, spec.steps, derive_seed(derive_seed(seed, i), t));
      for (std::size_t u = tp.t1; u < tp.t2; ++u) {
        m(i, tp.state_index[u]) += 1.0;
        ++total;
      }
    }
    for (std::size_t c = 0; c < k; ++c) m(i, c) /= double(total);
  }
  return Channel(std::move(m));
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return kNaN;
  std::vector<double> rx = average_ranks(x), ry = average_ranks(y);
  const double n = double(x.size());
  double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return kNaN;
  return sxy / std::sqrt(sxx * syy);
}

std::string LrSweep::to_csv() const {
  std::string out = "lr,mean_gen,se,rd_nats,curve_ok,flag\n";
  for (const auto& r : rows) {
    out += num(r.lr) + "," + num(r.mean_gen) + "," + num(r.se) + "," + num(r.rd_nats) + "," +
           (r.curve_ok ? "true" : "false") + "," + r.flag + "\n";
  }
  return out;
}

LrSweep lr_sweep(const ToySpec& spec, const std::vector<double>& lr_grid, std::size_t trials,
                 std::optional<double> epsilon, std::uint64_t seed, unsigned threads) {
  if (lr_grid.empty()) throw Error("lr_sweep: learning-rate grid is empty");
  if (trials == 0) throw Error("lr_sweep: trials must be positive");
  const FiniteLearningProblem prob = spec.to_problem();
  const Matrix rho = spec.quantizer.l1_distance();
  const std::size_t k = spec.quantizer.size();
  const std::vector<double> curve_fracs = {0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5};

  // Datasets and SGD noise depend only on the trial index, so every learning
  // rate sees the same random inputs.
  const std::uint64_t data_root = derive_seed(seed, 0), noise_root = derive_seed(seed, 1);

  LrSweep sweep;
  std::vector<std::vector<double>> pooled_laws;
  for (double lr : lr_grid) {
    LrSweepRow row;
    row.lr = lr;
    std::vector<double> gens(trials);
    std::vector<std::vector<std::size_t>> counts(trials);
    std::vector<std::size_t> diverged(trials, kNoDivergence);
    parallel_for(trials, threads, [&](std::size_t i) {
      Dataset s = sample_dataset(prob, spec.n, derive_seed(data_root, i));
      try {
        TrajectoryProcess tp = simulate_trajectory(spec, s, lr, spec.steps, derive_seed(noise_root, i));
        gens[i] = gen_trajectory(prob, s, tp);
        counts[i].assign(k, 0);
        for (std::size_t t = tp.t1; t < tp.t2; ++t) ++counts[i][tp.state_index[t]];
      } catch (const TrajectoryDivergence& e) {
        diverged[i] = e.step;
      }
    });
    std::vector<double> pooled(k, 0.0);
    std::size_t first = *std::min_element(diverged.begin(), diverged.end());
    if (first != kNoDivergence) {
      row.flag = "divergent@step=" + std::to_string(first);
      row.mean_gen = row.se = row.rd_nats = kNaN;
    } else {
      row.flag = "ok";
      double mean = std::accumulate(gens.begin(), gens.end(), 0.0) / double(trials);
      double var = 0.0;
      for (double g : gens) var += (g - mean) * (g - mean);
      row.mean_gen = mean;
      row.se = trials > 1 ? std::sqrt(var / double(trials - 1) / double(trials)) : 0.0;
      for (const auto& c : counts)
        for (std::size_t j = 0; j < k; ++j) pooled[j] += double(c[j]);
    }
    sweep.rows.push_back(row);
    pooled_laws.push_back(std::move(pooled));
  }

  // Distortion range of the trajectories: largest rho between cells visited
  // at any non-divergent learning rate.
  std::vector<char> visited(k, 0);
  for (const auto& p : pooled_laws)
    for (std::size_t j = 0; j < k; ++j) visited[j] |= p[j] > 0.0;
  double range = 0.0;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      if (visited[a] && visited[b]) range = std::max(range, rho(a, b));
  sweep.epsilon = epsilon ? *epsilon : 0.1 * range;

  RdOptions rd_opts;
  rd_opts.ba.tol = 1e-11;
  for (std::size_t r = 0; r < sweep.rows.size(); ++r) {
    LrSweepRow& row = sweep.rows[r];
    if (row.flag != "ok") continue;
    const std::vector<double>& pooled = pooled_laws[r];
    // Source restricted to its support; reproductions range over the full grid.
    std::vector<std::size_t> support;
    for (std::size_t j = 0; j < k; ++j)
      if (pooled[j] > 0.0) support.push_back(j);
    double total = std::accumulate(pooled.begin(), pooled.end(), 0.0);
    std::vector<double> src;
    Matrix sub(support.size(), k);
    for (std::size_t a = 0; a < support.size(); ++a) {
      src.push_back(pooled[support[a]] / total);
      for (std::size_t b = 0; b < k; ++b) sub(a, b) = rho(support[a], b);
    }
    Pmf source(src);
    row.rd_nats = sweep.epsilon > 0.0 ? rd_trajectory(source, sub, sweep.epsilon, rd_opts).rate_nats
                                      : rd_trajectory(source, sub, 0.0, rd_opts).rate_nats;
    if (range > 0.0) {
      for (double f : curve_fracs) {
        row.curve_eps.push_back(f * range);
        row.curve_rate.push_back(rd_trajectory(source, sub, f * range, rd_opts).rate_nats);
      }
    }
    row.curve_ok = curve_is_monotone_convex(row.curve_eps, row.curve_rate, 1e-6);
  }

  std::vector<double> xs, ys;
  for (const auto& r : sweep.rows)
    if (r.flag == "ok") {
      xs.push_back(r.mean_gen);
      ys.push_back(r.rd_nats);
    }
  sweep.spearman = spearman(xs, ys);
  sweep.correlation_defined = !std::isnan(sweep.spearman);
  return sweep;
}

}  // namespace genbound
