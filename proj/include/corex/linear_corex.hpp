// linear_corex.hpp
//
// One CorEx layer for continuous data under a Gaussian model. Latent
// factors are noisy linear maps of the standardized inputs,
// Y_j = w_j . x~ + eps_j with unit Gaussian noise, so every information
// quantity in the objective
//
//     minimize  sum_j I(Y_j; X) - sum_i I(X_i; Y)
//
// is a closed-form function of the sample correlation matrix. The
// negated optimum is a lower bound on the total correlation of X.

#ifndef COREX_LINEAR_COREX_HPP
#define COREX_LINEAR_COREX_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "corex/common.hpp"
#include "corex/data.hpp"

namespace corex {

struct TrainConfig {
  std::uint64_t seed = 0;
  int max_iterations = 10000;
  double step_size = 5e-3;
  double objective_tolerance = 1e-7;  // |delta objective| per iteration
  int tolerance_streak = 10;          // consecutive small deltas to converge
  int n_restarts = 3;
  double weight_norm_cap = 1e3;       // per-row 2-norm cap on weights
  double eigenvalue_clip = 1e-6;      // PD projection floor for correlations
};

struct FitReport {
  std::vector<double> objective_trace;  // objective value per iteration, nats
  double tc_lower_bound = 0.0;          // negated final objective, nats
  int iterations_run = 0;
  bool converged = false;
  bool pd_projected = false;  // input correlation needed eigenvalue clipping
  std::vector<std::string> warnings;
};

class LinearLayer {
 public:
  LinearLayer() = default;
  // `correlation` is the matrix the layer was fit against; the factor
  // moments Cov(X,Y) and Cov(Y) are derived from it and stored so that
  // downstream operations need no further access to the data.
  LinearLayer(Eigen::MatrixXd weights, Eigen::VectorXd noise_variance,
              Eigen::VectorXd input_means, Eigen::VectorXd input_scales,
              const Eigen::MatrixXd& correlation);
  // Restores a layer from serialized moments.
  static LinearLayer from_moments(Eigen::MatrixXd weights,
                                  Eigen::VectorXd noise_variance,
                                  Eigen::VectorXd input_means,
                                  Eigen::VectorXd input_scales,
                                  Eigen::MatrixXd cov_xy, Eigen::MatrixXd cov_y);

  int n_factors() const { return static_cast<int>(weights_.rows()); }
  int n_vars() const { return static_cast<int>(weights_.cols()); }
  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& noise_variance() const { return noise_variance_; }
  const Eigen::VectorXd& input_means() const { return input_means_; }
  const Eigen::VectorXd& input_scales() const { return input_scales_; }
  const Eigen::MatrixXd& cov_xy() const { return cov_xy_; }  // n x m
  const Eigen::MatrixXd& cov_y() const { return cov_y_; }    // m x m

 private:
  Eigen::MatrixXd weights_;        // m x n
  Eigen::VectorXd noise_variance_; // m
  Eigen::VectorXd input_means_;    // n
  Eigen::VectorXd input_scales_;   // n
  Eigen::MatrixXd cov_xy_;         // n x m
  Eigen::MatrixXd cov_y_;          // m x m
};

// --- correlation preparation -------------------------------------------

struct Standardization {
  Eigen::VectorXd means;
  Eigen::VectorXd scales;
};

// Column means and (n-1)-denominator standard deviations over observed
// entries; throws input_error naming any constant or near-empty column.
Standardization column_standardization(const DataMatrix& data);

struct CorrelationResult {
  Eigen::MatrixXd correlation;
  double shrinkage = 0.0;    // identity-shrinkage weight applied (0 if none)
  bool pd_projected = false; // eigenvalue clipping was needed
};

// Pairwise-complete sample correlation, identity shrinkage in the
// under-sampled regime (rows < columns, analytic weight), and PD
// projection by eigenvalue clipping.
CorrelationResult prepare_correlation(const DataMatrix& data,
                                      const Standardization& st,
                                      double eigenvalue_clip = 1e-6);

// --- objective ----------------------------------------------------------

// Objective J(W) = sum_j I(Y_j;X) - sum_i I(X_i;Y) and dJ/dW for the
// given weights and correlation matrix. Exposed for gradient checks.
double objective_and_gradient(const Eigen::MatrixXd& weights,
                              const Eigen::MatrixXd& correlation,
                              const Eigen::VectorXd& noise_variance,
                              Eigen::MatrixXd* gradient);

// What fit_layer actually minimizes: J(W) plus an overlap penalty that
// breaks the objective's rotational tie toward factors aligned with
// individual variables. The penalty is nonnegative and zero on modular
// solutions; reported bounds always come from the plain objective.
double training_objective_and_gradient(const Eigen::MatrixXd& weights,
                                       const Eigen::MatrixXd& correlation,
                                       const Eigen::VectorXd& noise_variance,
                                       Eigen::MatrixXd* gradient);

// --- operations ---------------------------------------------------------

std::pair<LinearLayer, FitReport> fit_layer(const DataMatrix& data,
                                            int n_factors,
                                            const TrainConfig& config = {});

// (sum_j I(Y_j;X), sum_i I(X_i;Y)) under the given correlation matrix.
std::pair<InfoValue, InfoValue> objective_value(
    const LinearLayer& layer, const Eigen::MatrixXd& correlation);

// Factor scores W x~ per sample; missing entries impute to the
// standardized mean (zero). Rows that were fully missing come back
// flagged in the output's missing mask.
DataMatrix transform(const LinearLayer& layer, const DataMatrix& data);

// Correlation matrix implied by conditional independence of X given Y:
// off-diagonals Cov(X_i,Y) Cov(Y)^-1 Cov(Y,X_j), unit diagonal. With
// `original_units`, rescales by the recorded input scales.
Eigen::MatrixXd implied_covariance(const LinearLayer& layer,
                                   bool original_units = false);

// Pairwise I(X_i; Y_j) table (n x m) under the given correlation.
Eigen::MatrixXd factor_variable_mi(const LinearLayer& layer,
                                   const Eigen::MatrixXd& correlation);
// Same, from the layer's stored fit moments.
Eigen::MatrixXd factor_variable_mi(const LinearLayer& layer);

// argmax_j I(X_i;Y_j) per variable, ties toward the lower factor index.
std::vector<int> cluster_assignments(const LinearLayer& layer,
                                     const Eigen::MatrixXd& correlation);
std::vector<int> cluster_assignments(const LinearLayer& layer);

// Per-factor display attribution: sum_i I(X_i;Y_j) - I(Y_j;X) from the
// stored moments. Rounding-level negatives report as zero; larger negative
// values are possible when factors genuinely overlap and are kept as-is.
std::vector<double> per_factor_bounds(const LinearLayer& layer);

}  // namespace corex

#endif  // COREX_LINEAR_COREX_HPP
