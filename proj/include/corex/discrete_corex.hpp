// discrete_corex.hpp
//
// One CorEx layer for sparse binary data. Latent discrete factors are
// trained by alternating posterior computation with re-estimation of the
// factor priors and per-variable conditional marginals, plus a soft
// competition over the variable-to-factor connection strengths alpha.
// The per-factor bound is  sum_i alpha_ij I(X_i;Y_j) - I(Y_j;X),  with
// I(Y_j;X) measured as the mean posterior KL to the factor prior.
// Evaluation cost scales with the nonzero count, not docs x variables.

#ifndef COREX_DISCRETE_COREX_HPP
#define COREX_DISCRETE_COREX_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "corex/common.hpp"
#include "corex/data.hpp"

namespace corex {

struct DiscreteTrainConfig {
  std::uint64_t seed = 0;
  int max_iterations = 200;
  double tolerance = 1e-6;        // stop when bound improves less than this
  double beta = 10.0;             // alpha competition sharpness
  double smoothing_strength = 0.1;  // pseudo-count = strength * sqrt(ess)
  int factor_cardinality = 2;
};

struct DiscreteFitReport {
  std::vector<double> tc_bound_per_factor;  // nats, tiny negatives zeroed
  double total_bound = 0.0;
  std::vector<double> iteration_trace;      // total bound per iteration
  int iterations_run = 0;
  bool converged = false;
  std::vector<int> excluded_columns;        // all-zero columns
};

class DiscreteFactorModel {
 public:
  DiscreteFactorModel() = default;
  DiscreteFactorModel(int n_vars, int n_factors, int cardinality);

  int n_vars() const { return n_vars_; }
  int n_factors() const { return n_factors_; }
  int factor_cardinality() const { return cardinality_; }

  // log p(y_j = s)
  double log_prior(int j, int s) const { return log_prior_[idx_js(j, s)]; }
  // log p(x_i = v | y_j = s), v in {0, 1}
  double log_marginal(int j, int s, int i, int v) const {
    return log_marginals_[idx_jsiv(j, s, i, v)];
  }
  // log p(x_i = v) under the data marginal recorded at fit time
  double log_px(int i, int v) const { return log_px_[2 * i + v]; }
  double alpha(int i, int j) const { return alpha_(i, j); }
  const Eigen::MatrixXd& alpha_matrix() const { return alpha_; }
  const std::map<int, int>& anchors() const { return anchors_; }

  void set_log_prior(int j, int s, double v) { log_prior_[idx_js(j, s)] = v; }
  void set_log_marginal(int j, int s, int i, int vv, double v) {
    log_marginals_[idx_jsiv(j, s, i, vv)] = v;
  }
  void set_log_px(int i, int v, double lp) { log_px_[2 * i + v] = lp; }
  void set_alpha(int i, int j, double a) { alpha_(i, j) = a; }
  void set_anchors(std::map<int, int> anchors);

  const std::vector<double>& raw_log_prior() const { return log_prior_; }
  const std::vector<double>& raw_log_marginals() const { return log_marginals_; }
  const std::vector<double>& raw_log_px() const { return log_px_; }
  std::vector<double>& raw_log_prior() { return log_prior_; }
  std::vector<double>& raw_log_marginals() { return log_marginals_; }
  std::vector<double>& raw_log_px() { return log_px_; }

  void validate() const;  // normalization and alpha range checks

 private:
  std::size_t idx_js(int j, int s) const {
    return static_cast<std::size_t>(j) * cardinality_ + s;
  }
  std::size_t idx_jsiv(int j, int s, int i, int v) const {
    return ((static_cast<std::size_t>(j) * cardinality_ + s) * n_vars_ + i) * 2 + v;
  }
  int n_vars_ = 0;
  int n_factors_ = 0;
  int cardinality_ = 2;
  std::vector<double> log_prior_;      // m * k
  std::vector<double> log_marginals_;  // m * k * n * 2
  std::vector<double> log_px_;         // n * 2
  Eigen::MatrixXd alpha_;              // n x m
  std::map<int, int> anchors_;         // variable -> factor, alpha pinned at 1
};

// A document for inference: observed-one variables plus missing ones;
// everything else is an observed zero.
struct SparseDoc {
  std::vector<int> ones;
  std::vector<int> missing;
};

// Unnormalized per-factor log scores of the all-zeros document. One of
// these amortizes the O(n_vars) part of posterior evaluation across docs.
struct PosteriorBaseline {
  Eigen::MatrixXd log_score;  // n_factors x cardinality
};

PosteriorBaseline posterior_baseline(const DiscreteFactorModel& model);

std::pair<DiscreteFactorModel, DiscreteFitReport> fit(
    const SparseBinaryData& data, int n_factors,
    const DiscreteTrainConfig& config = {},
    const std::map<int, int>& anchors = {});

// Per-factor posterior state distributions for one document; rows are
// factors, columns are states. Touches only the document's nonzero and
// missing entries plus a per-factor all-zeros baseline.
Eigen::MatrixXd posterior(const DiscreteFactorModel& model,
                          const SparseDoc& doc);
Eigen::MatrixXd posterior(const DiscreteFactorModel& model, const SparseDoc& doc,
                          const PosteriorBaseline& baseline);

// Plug-in I(X_i;Y_j) from empirical co-occurrence of x_i with the
// posterior-weighted factor states. n_vars x n_factors, nonnegative.
Eigen::MatrixXd factor_mutual_informations(const DiscreteFactorModel& model,
                                           const SparseBinaryData& data);

// Variables ranked by MI with factor j, descending, ties toward the
// lower index; at most k entries.
std::vector<int> top_words(const DiscreteFactorModel& model,
                           const SparseBinaryData& data, int factor, int k);
std::vector<int> top_words_from_mi(const Eigen::MatrixXd& mi, int factor, int k);

}  // namespace corex

#endif  // COREX_DISCRETE_COREX_HPP
