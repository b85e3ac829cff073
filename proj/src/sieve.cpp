#include "corex/sieve.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "corex/rng.hpp"

namespace corex {

namespace {

struct ColumnVariance {
  bool usable = false;  // >= 2 observed entries and variance above floor
  double mean = 0.0;
  double variance = 0.0;
};

ColumnVariance observed_variance(const DataMatrix& data, int c, double floor) {
  ColumnVariance out;
  double sum = 0.0;
  int count = 0;
  for (int r = 0; r < data.n_rows; ++r) {
    if (data.is_missing(r, c)) continue;
    sum += data.at(r, c);
    ++count;
  }
  if (count < 2) return out;
  out.mean = sum / count;
  double ss = 0.0;
  for (int r = 0; r < data.n_rows; ++r) {
    if (data.is_missing(r, c)) continue;
    const double d = data.at(r, c) - out.mean;
    ss += d * d;
  }
  out.variance = ss / (count - 1);
  out.usable = out.variance >= floor;
  return out;
}

DataMatrix select_columns(const DataMatrix& data, const std::vector<int>& cols) {
  DataMatrix sub(data.n_rows, static_cast<int>(cols.size()));
  if (!data.column_names.empty()) {
    sub.column_names.reserve(cols.size());
    for (int c : cols) sub.column_names.push_back(data.column_names[c]);
  }
  for (int r = 0; r < data.n_rows; ++r) {
    for (std::size_t k = 0; k < cols.size(); ++k) {
      sub.at(r, static_cast<int>(k)) = data.at(r, cols[k]);
      if (data.is_missing(r, cols[k])) sub.set_missing(r, static_cast<int>(k));
    }
  }
  return sub;
}

}  // namespace

std::pair<SieveComponent, DataMatrix> extract_next(const DataMatrix& remainder,
                                                   const SieveConfig& config) {
  remainder.validate();
  SieveComponent comp;
  std::vector<int> active;
  for (int c = 0; c < remainder.n_cols; ++c) {
    if (observed_variance(remainder, c, config.variance_floor).usable)
      active.push_back(c);
    else
      comp.dropped_columns.push_back(c);
  }
  if (active.size() < 2)
    throw input_error("sieve remainder has fewer than 2 usable columns (" +
                      std::to_string(active.size()) + " left)");
  comp.active_columns = active;

  const DataMatrix sub = select_columns(remainder, active);
  auto [layer, report] = fit_layer(sub, 1, config.train);

  // Largest-|weight| entry made positive so reruns agree in sign.
  Eigen::VectorXd w = layer.weights().row(0);
  int peak = 0;
  for (int i = 1; i < w.size(); ++i)
    if (std::abs(w(i)) > std::abs(w(peak))) peak = i;
  const double flip = (w(peak) < 0.0) ? -1.0 : 1.0;
  comp.weights = flip * w;
  comp.extracted_tc = report.tc_lower_bound;
  comp.saturated = comp.extracted_tc > config.tc_cap;
  comp.pd_projected = report.pd_projected;

  const int rows = remainder.n_rows;
  const int n_active = static_cast<int>(active.size());

  // Standardized inputs as the fit saw them; missing left at zero.
  Eigen::MatrixXd xs = Eigen::MatrixXd::Zero(rows, n_active);
  for (int r = 0; r < rows; ++r)
    for (int k = 0; k < n_active; ++k)
      if (!sub.is_missing(r, k))
        xs(r, k) = (sub.at(r, k) - layer.input_means()(k)) / layer.input_scales()(k);

  // The factor is removed through its noisy channel y = w x + eps, not
  // through the noiseless score. The noise realization is seeded and then
  // made exactly zero-mean, unit-variance, and orthogonal to every input
  // column in sample. Regressing the inputs on this y leaves a remainder
  // whose sample covariance equals the conditional covariance
  // S - c c^T / K, so extracted amounts and remainder TC add up to the
  // input's TC; the noiseless score would subtract too much and make
  // leftover columns of a tight block anti-correlated.
  Eigen::VectorXd noise(rows);
  {
    Rng rng(mix_seed(config.train.seed, 0x51e7eul));
    for (int r = 0; r < rows; ++r) noise(r) = rng.normal();
    noise.array() -= noise.mean();
    if (rows > n_active + 4) {
      const Eigen::HouseholderQR<Eigen::MatrixXd> qr(xs);
      const Eigen::MatrixXd basis =
          qr.householderQ() * Eigen::MatrixXd::Identity(rows, n_active);
      noise -= basis * (basis.transpose() * noise);
      noise.array() -= noise.mean();
    }
    const double ss = noise.squaredNorm() / static_cast<double>(rows - 1);
    if (ss > 1e-24) noise /= std::sqrt(ss);
  }
  const Eigen::VectorXd y = xs * comp.weights + noise;
  const double y_mean = y.mean();
  double y_var = 0.0;
  for (int r = 0; r < rows; ++r) y_var += (y(r) - y_mean) * (y(r) - y_mean);
  y_var /= static_cast<double>(rows - 1);

  comp.regression_loadings = Eigen::VectorXd::Zero(n_active);
  if (y_var > 1e-15) {
    for (int k = 0; k < n_active; ++k) {
      double cov = 0.0;
      long count = 0;
      for (int r = 0; r < rows; ++r) {
        if (sub.is_missing(r, k)) continue;
        cov += xs(r, k) * (y(r) - y_mean);
        ++count;
      }
      if (count > 1)
        comp.regression_loadings(k) =
            cov / static_cast<double>(count - 1) / y_var;
    }
  }

  // Residualize, then put surviving columns back on unit scale. Columns
  // whose residual variance fell below the floor stay raw so the next
  // pass reports them as exhausted.
  DataMatrix next = remainder;
  for (int k = 0; k < n_active; ++k) {
    const int c = active[k];
    for (int r = 0; r < rows; ++r) {
      if (remainder.is_missing(r, c)) {
        next.at(r, c) = 0.0;
        continue;
      }
      next.at(r, c) = xs(r, k) - comp.regression_loadings(k) * (y(r) - y_mean);
    }
    const ColumnVariance cv = observed_variance(next, c, config.variance_floor);
    if (!cv.usable) continue;
    const double sd = std::sqrt(cv.variance);
    for (int r = 0; r < rows; ++r)
      if (!next.is_missing(r, c)) next.at(r, c) = (next.at(r, c) - cv.mean) / sd;
  }
  return {std::move(comp), std::move(next)};
}

SieveModel run_sieve(const DataMatrix& data, int k_max, double epsilon,
                     const SieveConfig& config) {
  if (k_max < 1) throw input_error("k_max must be >= 1");
  data.validate();

  SieveModel model;
  model.n_vars = data.n_cols;
  model.column_names = data.column_names;

  DataMatrix remainder = data;
  int pd_events = 0;
  double running = 0.0;
  while (static_cast<int>(model.components.size()) < k_max) {
    std::pair<SieveComponent, DataMatrix> step;
    try {
      step = extract_next(remainder, config);
    } catch (const input_error&) {
      if (model.components.empty()) throw;  // first pass errors are the caller's
      break;  // remainder exhausted
    }
    SieveComponent comp = std::move(step.first);
    remainder = std::move(step.second);

    running += std::clamp(comp.extracted_tc, 0.0, config.tc_cap);
    const double extracted = comp.extracted_tc;
    if (comp.pd_projected) ++pd_events;
    model.components.push_back(std::move(comp));
    model.cumulative_tc.push_back(running);

    if (pd_events >= 2) {
      model.instability_stop = true;
      break;
    }
    if (extracted < epsilon) break;  // kept: it documents where extraction died
  }
  return model;
}

}  // namespace corex
