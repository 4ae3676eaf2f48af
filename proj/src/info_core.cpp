#include "genbound/info_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace genbound {

namespace {

constexpr double kSumTolerance = 1e-9;

void check_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(std::string(what) + ": alphabet size mismatch (" + std::to_string(a) + " vs " +
                std::to_string(b) + ")");
  }
}

}  // namespace

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m;
  m.rows = rows.size();
  m.cols = rows.empty() ? 0 : rows.front().size();
  m.data.reserve(m.rows * m.cols);
  for (const auto& r : rows) {
    if (r.size() != m.cols) throw Error("Matrix::from_rows: ragged rows");
    m.data.insert(m.data.end(), r.begin(), r.end());
  }
  return m;
}

std::vector<double> Matrix::row(std::size_t i) const {
  return std::vector<double>(data.begin() + i * cols, data.begin() + (i + 1) * cols);
}

Pmf::Pmf(std::vector<double> probs) : p_(std::move(probs)) {
  if (p_.empty()) throw Error("Pmf: empty alphabet");
  double sum = 0.0;
  for (double v : p_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error("Pmf: negative or non-finite entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw Error("Pmf: entries sum to " + std::to_string(sum) + ", expected 1");
  }
  for (double& v : p_) v /= sum;
}

Pmf Pmf::uniform(std::size_t k) {
  if (k == 0) throw Error("Pmf::uniform: empty alphabet");
  return Pmf(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

Pmf Pmf::point_mass(std::size_t k, std::size_t at) {
  if (at >= k) throw Error("Pmf::point_mass: index out of range");
  std::vector<double> p(k, 0.0);
  p[at] = 1.0;
  return Pmf(std::move(p));
}

Channel::Channel(Matrix m) : m_(std::move(m)) {
  if (m_.rows == 0 || m_.cols == 0) throw Error("Channel: empty matrix");
  for (std::size_t i = 0; i < m_.rows; ++i) {
    Pmf r(m_.row(i));  // validates
    std::copy(r.probs().begin(), r.probs().end(), m_.data.begin() + i * m_.cols);
  }
}

Channel Channel::identity(std::size_t k) {
  Matrix m(k, k);
  for (std::size_t i = 0; i < k; ++i) m(i, i) = 1.0;
  return Channel(std::move(m));
}

Channel Channel::constant(std::size_t rows, const Pmf& p) {
  Matrix m(rows, p.size());
  for (std::size_t i = 0; i < rows; ++i)
    std::copy(p.probs().begin(), p.probs().end(), m.data.begin() + i * p.size());
  return Channel(std::move(m));
}

Joint::Joint(Matrix table) : t_(std::move(table)) {
  Pmf flat(t_.data);  // validates non-negativity and total mass
  t_.data = flat.probs();
}

Joint Joint::from_marginal(const Pmf& ps, const Channel& w_given_s) {
  check_same_size(ps.size(), w_given_s.inputs(), "Joint::from_marginal");
  Matrix m(ps.size(), w_given_s.outputs());
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = ps[i] * w_given_s(i, j);
  return Joint(std::move(m));
}

Pmf Joint::row_marginal() const {
  std::vector<double> p(t_.rows, 0.0);
  for (std::size_t i = 0; i < t_.rows; ++i)
    for (std::size_t j = 0; j < t_.cols; ++j) p[i] += t_(i, j);
  return Pmf(std::move(p));
}

Pmf Joint::col_marginal() const {
  std::vector<double> p(t_.cols, 0.0);
  for (std::size_t i = 0; i < t_.rows; ++i)
    for (std::size_t j = 0; j < t_.cols; ++j) p[j] += t_(i, j);
  return Pmf(std::move(p));
}

Channel Joint::conditional() const {
  Pmf pw = col_marginal();
  Matrix m(t_.rows, t_.cols);
  for (std::size_t i = 0; i < t_.rows; ++i) {
    double mass = 0.0;
    for (std::size_t j = 0; j < t_.cols; ++j) mass += t_(i, j);
    for (std::size_t j = 0; j < t_.cols; ++j) m(i, j) = mass > 0.0 ? t_(i, j) / mass : pw[j];
  }
  return Channel(std::move(m));
}

double entropy(const Pmf& p) {
  double h = 0.0;
  for (double v : p.probs())
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  check_same_size(p.size(), q.size(), "kl_divergence");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return kInf;
    d += p[i] * std::log(p[i] / q[i]);
  }
  // Rounding can push a true zero slightly negative.
  return std::max(d, 0.0);
}

double kl_divergence(const Pmf& p, const Pmf& q) { return kl_divergence(p.probs(), q.probs()); }

double renyi_divergence(const Pmf& p, const Pmf& q, double alpha) {
  check_same_size(p.size(), q.size(), "renyi_divergence");
  if (!(alpha > 0.0)) throw Error("renyi_divergence: alpha must be positive");
  if (alpha == 1.0) throw Error("renyi_divergence: alpha = 1 is the KL divergence; use kl_divergence");
  // Work in log space: log sum_i p_i^alpha q_i^(1-alpha).
  std::vector<double> logs;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) {
      if (alpha > 1.0) return kInf;
      continue;  // term is zero for alpha < 1
    }
    logs.push_back(alpha * std::log(p[i]) + (1.0 - alpha) * std::log(q[i]));
  }
  if (logs.empty()) return kInf;  // disjoint supports
  double mx = *std::max_element(logs.begin(), logs.end());
  double s = 0.0;
  for (double l : logs) s += std::exp(l - mx);
  double d = (mx + std::log(s)) / (alpha - 1.0);
  return std::max(d, 0.0);
}

double mutual_information(const Joint& j) {
  Pmf ps = j.row_marginal();
  Pmf pw = j.col_marginal();
  double mi = 0.0;
  for (std::size_t s = 0; s < j.rows(); ++s)
    for (std::size_t w = 0; w < j.cols(); ++w) {
      double v = j(s, w);
      if (v > 0.0) mi += v * std::log(v / (ps[s] * pw[w]));
    }
  return std::max(mi, 0.0);
}

double binary_kl(double a, double b) {
  if (a < 0.0 || a > 1.0 || b < 0.0 || b > 1.0) throw Error("binary_kl: arguments must lie in [0, 1]");
  auto term = [](double x, double y) {
    if (x <= 0.0) return 0.0;
    if (y <= 0.0) return kInf;
    return x * std::log(x / y);
  };
  double d = term(a, b) + term(1.0 - a, 1.0 - b);
  return std::max(d, 0.0);
}

double binary_kl_inverse(double a, double b) {
  if (a < 0.0 || a > 1.0) throw Error("binary_kl_inverse: a must lie in [0, 1]");
  if (!(b >= 0.0)) throw Error("binary_kl_inverse: b must be non-negative");
  if (b == 0.0 || a == 1.0) return a;
  if (binary_kl(1.0, a) <= b) return 1.0;
  // binary_kl(., a) is increasing on [a, 1].
  double lo = a, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double v = binary_kl(mid, a);
    if (std::abs(v - b) <= 1e-12) return mid;
    if (v <= b) lo = mid;
    else hi = mid;
  }
  return lo;
}

Joint empirical_joint(const std::vector<std::pair<std::size_t, std::size_t>>& samples,
                      std::size_t rows, std::size_t cols) {
  if (samples.empty()) throw Error("empirical_joint: empty sample list");
  Matrix m(rows, cols);
  for (auto [s, w] : samples) {
    if (s >= rows || w >= cols) throw Error("empirical_joint: index out of range");
    m(s, w) += 1.0;
  }
  for (double& v : m.data) v /= static_cast<double>(samples.size());
  return Joint(std::move(m));
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  check_same_size(p.size(), q.size(), "total_variation");
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

double log_sum_exp(const std::vector<double>& x, const std::vector<double>& weights) {
  check_same_size(x.size(), weights.size(), "log_sum_exp");
  double mx = -kInf;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (weights[i] > 0.0) mx = std::max(mx, x[i]);
  if (mx == -kInf) return -kInf;
  if (mx == kInf) return kInf;
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (weights[i] > 0.0) s += weights[i] * std::exp(x[i] - mx);
  return mx + std::log(s);
}

}  // namespace genbound
