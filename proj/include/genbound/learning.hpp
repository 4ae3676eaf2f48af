#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "genbound/info_core.hpp"
#include "genbound/rng.hpp"

namespace genbound {

struct FiniteLearningProblem {
  Matrix loss;  // loss(z, w)
  Pmf mu;       // data law over z
  std::optional<double> bound_B;  // declared loss range [0, B]

  FiniteLearningProblem() = default;
  FiniteLearningProblem(Matrix loss_table, Pmf data_law, std::optional<double> B = std::nullopt);

  std::size_t z_size() const { return loss.rows; }
  std::size_t w_size() const { return loss.cols; }
  // Subgaussian parameter of a loss bounded in [0, B] (Hoeffding's lemma).
  double sigma() const;
};

struct Dataset {
  std::vector<std::size_t> samples;
  std::size_t n() const { return samples.size(); }
  bool operator==(const Dataset&) const = default;
};

struct Algorithm {
  std::function<Pmf(const Dataset&)> posterior;
  // Output law depends on the dataset only through its empirical measure.
  bool exchangeable = false;
};

double population_risk(const FiniteLearningProblem& prob, std::size_t w);
double empirical_risk(const FiniteLearningProblem& prob, const Dataset& s, std::size_t w);
double gen_error(const FiniteLearningProblem& prob, const Dataset& s, std::size_t w);

Pmf gibbs_posterior(const FiniteLearningProblem& prob, const Pmf& prior, double beta, const Dataset& s);
Algorithm gibbs_algorithm(const FiniteLearningProblem& prob, Pmf prior, double beta);
// Data-independent algorithm with a fixed output law.
Algorithm constant_algorithm(Pmf out);

Dataset sample_dataset(const FiniteLearningProblem& prob, std::size_t n, std::uint64_t seed);
Dataset sample_dataset(const FiniteLearningProblem& prob, std::size_t n, Rng& rng);

inline constexpr std::size_t kEnumerationCap = std::size_t{1} << 22;

// Exact joint law of (dataset, hypothesis). Rows are either all z^n datasets
// or, for exchangeable algorithms, one representative (sorted) dataset per
// type class weighted by its multinomial probability.
struct InducedJoint {
  std::vector<Dataset> datasets;
  std::vector<double> dataset_prob;  // P_S of each row
  Joint joint;
  bool type_collapsed = false;

  Pmf p_s() const { return Pmf(dataset_prob); }
  // gen(s, w) for every row and hypothesis.
  Matrix gen_table(const FiniteLearningProblem& prob) const;
};

InducedJoint induced_joint(const FiniteLearningProblem& prob, const Algorithm& alg, std::size_t n,
                           std::size_t cap = kEnumerationCap);
InducedJoint induced_joint_types(const FiniteLearningProblem& prob, const Algorithm& alg, std::size_t n,
                                 std::size_t cap = kEnumerationCap);
// Picks the type-class path for exchangeable algorithms.
InducedJoint induced_joint_auto(const FiniteLearningProblem& prob, const Algorithm& alg, std::size_t n,
                                std::size_t cap = kEnumerationCap);

}  // namespace genbound
