#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

// Finite-alphabet information primitives. Everything is in nats.
namespace genbound {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::vector<double> row(std::size_t i) const;
  bool operator==(const Matrix&) const = default;
};

class Pmf {
 public:
  Pmf() = default;
  // Entries must be non-negative and sum to 1 within 1e-9; they are
  // renormalized so the stored sum is 1 to rounding.
  explicit Pmf(std::vector<double> probs);

  static Pmf uniform(std::size_t k);
  static Pmf point_mass(std::size_t k, std::size_t at);

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  const std::vector<double>& probs() const { return p_; }
  bool operator==(const Pmf&) const = default;

 private:
  std::vector<double> p_;
};

// Conditional pmf, one row per source symbol.
class Channel {
 public:
  Channel() = default;
  explicit Channel(Matrix m);
  static Channel identity(std::size_t k);
  // Every row equal to p.
  static Channel constant(std::size_t rows, const Pmf& p);

  std::size_t inputs() const { return m_.rows; }
  std::size_t outputs() const { return m_.cols; }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  Pmf row(std::size_t i) const { return Pmf(m_.row(i)); }
  const Matrix& matrix() const { return m_; }

 private:
  Matrix m_;
};

// Joint law on S x W, stored as a table summing to 1.
class Joint {
 public:
  Joint() = default;
  explicit Joint(Matrix table);
  static Joint from_marginal(const Pmf& ps, const Channel& w_given_s);

  std::size_t rows() const { return t_.rows; }
  std::size_t cols() const { return t_.cols; }
  double operator()(std::size_t i, std::size_t j) const { return t_(i, j); }
  const Matrix& table() const { return t_; }
  const std::vector<double>& flat() const { return t_.data; }

  Pmf row_marginal() const;
  Pmf col_marginal() const;
  // Rows with zero mass get the column marginal so the result stays a valid
  // channel; such rows never carry weight in expectations under this joint.
  Channel conditional() const;

 private:
  Matrix t_;
};

double entropy(const Pmf& p);

// +inf when support(p) is not inside support(q).
double kl_divergence(const Pmf& p, const Pmf& q);
// Same on raw probability vectors (used for flattened joints).
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);

// alpha > 0, alpha != 1. For alpha > 1 infinite when p is not absolutely
// continuous w.r.t. q; for alpha < 1 infinite only for disjoint supports.
double renyi_divergence(const Pmf& p, const Pmf& q, double alpha);

double mutual_information(const Joint& j);

// Two-point KL D(a || b).
double binary_kl(double a, double b);

// sup { p in [a, 1] : binary_kl(p, a) <= b }, by bisection.
double binary_kl_inverse(double a, double b);

Joint empirical_joint(const std::vector<std::pair<std::size_t, std::size_t>>& samples,
                      std::size_t rows, std::size_t cols);

double total_variation(const std::vector<double>& p, const std::vector<double>& q);

// Numerically stable log(sum_i w_i exp(x_i)) over w_i > 0.
double log_sum_exp(const std::vector<double>& x, const std::vector<double>& weights);

// ---- optimization over the KL ball G^delta = { nu : KL(nu || p_ref) <= log(1/delta) }

using DistObjective = std::function<double(const std::vector<double>&)>;

struct GdeltaResult {
  double sup_estimate = 0.0;
  double baseline = 0.0;  // objective at p_ref
  std::vector<double> argmax;
  double argmax_kl = 0.0;
  std::size_t evaluations = 0;
};

// Heuristic sup of `objective` over the ball around p_ref (a flattened Pmf or
// Joint). Every candidate is re-checked for membership, so the result is a
// certified lower estimate of the true sup. delta in (0, 1]; delta = 1 gives a
// zero radius and returns objective(p_ref).
GdeltaResult gdelta_sup(const std::vector<double>& p_ref, double delta,
                        const DistObjective& objective, int search_budget,
                        std::uint64_t seed = 0);
GdeltaResult gdelta_sup(const Pmf& p_ref, double delta, const DistObjective& objective,
                        int search_budget, std::uint64_t seed = 0);
GdeltaResult gdelta_sup(const Joint& p_ref, double delta, const DistObjective& objective,
                        int search_budget, std::uint64_t seed = 0);

bool in_gdelta(const std::vector<double>& nu, const std::vector<double>& p_ref, double delta);

}  // namespace genbound
