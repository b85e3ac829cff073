// sieve.hpp
//
// Incremental extraction for continuous data. Each pass fits a single
// latent factor (one factor means no dependence among factors to pay
// for), records the dependence it captured, then regresses every column
// on the factor's noisy channel realization y = w x + eps so the next
// pass sees only what is left. The noise is seeded and orthogonalized
// against the inputs in sample, which makes the remainder's sample
// covariance exactly the conditional covariance: extracted amounts plus
// remainder TC equal the input's TC, so the capped running total is a
// lower bound on the total correlation of the input.

#ifndef COREX_SIEVE_HPP
#define COREX_SIEVE_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "corex/data.hpp"
#include "corex/linear_corex.hpp"

namespace corex {

struct SieveConfig {
  TrainConfig train;             // inner one-factor fits
  double variance_floor = 1e-8;  // remainder columns below this are dropped
  double tc_cap = 30.0;          // per-component ledger cap, nats

  SieveConfig() { train.eigenvalue_clip = 1e-8; }
};

struct SieveComponent {
  // Indices into the original data of the columns this component was
  // fit on; weights and loadings are aligned with this list.
  std::vector<int> active_columns;
  Eigen::VectorXd weights;              // factor weights on the remainder
  Eigen::VectorXd regression_loadings;  // per-column coefficient on the noisy channel score
  double extracted_tc = 0.0;            // nats, uncapped
  bool saturated = false;               // extracted_tc exceeded the ledger cap
  bool pd_projected = false;            // remainder correlation needed clipping
  std::vector<int> dropped_columns;     // near-zero-variance inputs dropped here
};

struct SieveModel {
  std::vector<SieveComponent> components;
  std::vector<double> cumulative_tc;  // running capped sums, nats
  bool instability_stop = false;      // halted after repeated PD projections
  int n_vars = 0;
  std::vector<std::string> column_names;
};

// One extraction pass. Drops near-zero-variance columns of `remainder`,
// fits one factor to the survivors, and returns the component plus the
// residualized, re-standardized remainder (same shape; dropped and
// exhausted columns pass through unstandardized so the next pass drops
// them). Throws input_error when fewer than two usable columns remain.
std::pair<SieveComponent, DataMatrix> extract_next(const DataMatrix& remainder,
                                                   const SieveConfig& config = {});

// Repeats extract_next until the extracted dependence falls below
// `epsilon`, `k_max` components exist, or instability is detected. The
// final below-threshold component is kept in the model.
SieveModel run_sieve(const DataMatrix& data, int k_max, double epsilon,
                     const SieveConfig& config = {});

}  // namespace corex

#endif  // COREX_SIEVE_HPP
