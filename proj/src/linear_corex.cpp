// linear_corex.cpp

#include "corex/linear_corex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "corex/info_core.hpp"
#include "corex/rng.hpp"

namespace corex {

namespace {

constexpr double kVarFloor = 1e-12;

// Shared pieces of the objective at a given W.
struct ObjectiveParts {
  Eigen::MatrixXd cy;       // W S (m x n)
  Eigen::MatrixXd k;        // W S W^T + diag(noise) (m x m)
  Eigen::MatrixXd u;        // K^-1 W S (m x n)
  Eigen::VectorXd v;        // residual variance ratio per variable
  double sum_i_yx = 0.0;    // sum_j I(Y_j;X)
  double sum_i_xy = 0.0;    // sum_i I(X_i;Y)
  double objective = 0.0;
};

ObjectiveParts evaluate(const Eigen::MatrixXd& w, const Eigen::MatrixXd& s,
                        const Eigen::VectorXd& noise) {
  ObjectiveParts p;
  const int m = static_cast<int>(w.rows());
  const int n = static_cast<int>(w.cols());
  p.cy.noalias() = w * s;
  p.k.noalias() = p.cy * w.transpose();
  p.k = 0.5 * (p.k + p.k.transpose());
  p.k.diagonal() += noise;
  Eigen::LLT<Eigen::MatrixXd> llt(p.k);
  if (llt.info() != Eigen::Success) {
    throw numerical_error("linear objective: factor covariance not PD");
  }
  p.u = llt.solve(p.cy);
  p.v.resize(n);
  for (int i = 0; i < n; ++i) {
    const double explained = p.cy.col(i).dot(p.u.col(i));
    p.v(i) = std::max(s(i, i) - explained, kVarFloor) / s(i, i);
  }
  for (int j = 0; j < m; ++j) {
    p.sum_i_yx += 0.5 * std::log(p.k(j, j) / noise(j));
  }
  for (int i = 0; i < n; ++i) {
    p.sum_i_xy -= 0.5 * std::log(p.v(i));
  }
  p.objective = p.sum_i_yx - p.sum_i_xy;
  return p;
}

double objective_only(const Eigen::MatrixXd& w, const Eigen::MatrixXd& s,
                      const Eigen::VectorXd& noise) {
  return evaluate(w, s, noise).objective;
}

// Training surrogate: the objective plus an overlap penalty
//
//   P(W) = sum_i [ I(X_i;Y) - sum_j softmax_beta(I_i:)_j I(X_i;Y_j) ] >= 0,
//
// the part of each variable's joint information that no single factor
// carries on its own. The objective value is invariant under rotations
// of the factor space, so sample noise alone decides the orientation;
// the penalty breaks that tie toward factors aligned with individual
// variables. It vanishes on one-factor models and on exactly modular
// solutions, and the reported bound is always the unpenalized objective.
constexpr double kOverlapPenaltyWeight = 0.5;
constexpr double kCreditSharpness = 10.0;  // softmax beta over MI in nats

}  // namespace

double training_objective_and_gradient(const Eigen::MatrixXd& w,
                                       const Eigen::MatrixXd& s,
                                       const Eigen::VectorXd& noise,
                                       Eigen::MatrixXd* gradient) {
  const ObjectiveParts p = evaluate(w, s, noise);
  const int m = static_cast<int>(w.rows());
  const int n = static_cast<int>(w.cols());

  // Pairwise MI table I(X_i;Y_j) and row-wise softmax credit.
  Eigen::MatrixXd q(m, n);   // squared correlation of x_i with y_j
  Eigen::MatrixXd mi(m, n);  // pairwise MI, nats
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) {
      const double c = p.cy(j, i);
      q(j, i) = std::min(c * c / (p.k(j, j) * s(i, i)), 1.0 - kVarFloor);
      mi(j, i) = -0.5 * std::log1p(-q(j, i));
    }
  }
  Eigen::MatrixXd alpha(m, n);
  Eigen::VectorXd credit(n);
  for (int i = 0; i < n; ++i) {
    const double top = mi.col(i).maxCoeff();
    double z = 0.0;
    for (int j = 0; j < m; ++j) {
      alpha(j, i) = std::exp(kCreditSharpness * (mi(j, i) - top));
      z += alpha(j, i);
    }
    alpha.col(i) /= z;
    credit(i) = alpha.col(i).dot(mi.col(i));
  }
  const double penalty = p.sum_i_xy - credit.sum();

  if (gradient) {
    // d objective / dW, reusing the shared parts.
    Eigen::MatrixXd dk_c(m, n);
    for (int j = 0; j < m; ++j) dk_c.row(j) = p.cy.row(j) / p.k(j, j);
    Eigen::MatrixXd u_dv = p.u;
    for (int i = 0; i < n; ++i) u_dv.col(i) /= p.v(i) * s(i, i);
    Eigen::MatrixXd grad_joint = u_dv * s;              // d sum_i I(X_i;Y) / dW
    grad_joint.noalias() -= (u_dv * p.u.transpose()) * p.cy;
    gradient->noalias() = dk_c - grad_joint;

    // d credit / dW through the softmax:
    //   d credit_i / d mi_ji = alpha_ji (1 + beta (mi_ji - credit_i))
    //   d mi_ji / d w_j = c / ((1-q) K_jj s_ii) [ S_:,i - (c/K_jj) S w_j ].
    Eigen::MatrixXd e(m, n);
    Eigen::VectorXd row_ec = Eigen::VectorXd::Zero(m);
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < n; ++i) {
        const double d_credit =
            alpha(j, i) * (1.0 + kCreditSharpness * (mi(j, i) - credit(i)));
        const double c = p.cy(j, i);
        e(j, i) = d_credit * c /
                  (std::max(1.0 - q(j, i), kVarFloor) * p.k(j, j) * s(i, i));
        row_ec(j) += e(j, i) * c;
      }
    }
    Eigen::MatrixXd grad_credit = e * s;
    for (int j = 0; j < m; ++j) {
      grad_credit.row(j) -= (row_ec(j) / p.k(j, j)) * p.cy.row(j);
    }
    gradient->noalias() +=
        kOverlapPenaltyWeight * (grad_joint - grad_credit);
  }
  return p.objective + kOverlapPenaltyWeight * penalty;
}

namespace {

double training_objective_only(const Eigen::MatrixXd& w,
                               const Eigen::MatrixXd& s,
                               const Eigen::VectorXd& noise) {
  return training_objective_and_gradient(w, s, noise, nullptr);
}

void project_row_norms(Eigen::MatrixXd& w, double cap) {
  for (int j = 0; j < w.rows(); ++j) {
    const double norm = w.row(j).norm();
    if (norm > cap) w.row(j) *= cap / norm;
  }
}

struct OptimizeResult {
  Eigen::MatrixXd weights;
  std::vector<double> trace;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Adam with a global trust scale: a candidate step that would raise the
// trained objective by more than 1e-6 is retried at half scale, so the
// recorded trace is non-increasing up to that tolerance. Optimizes the
// penalized surrogate; callers re-evaluate the plain objective at the end.
OptimizeResult optimize(Eigen::MatrixXd w0, const Eigen::MatrixXd& s,
                        const Eigen::VectorXd& noise,
                        const TrainConfig& config) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  constexpr double kAscentSlack = 1e-6;

  OptimizeResult res;
  res.weights = std::move(w0);
  project_row_norms(res.weights, config.weight_norm_cap);

  Eigen::MatrixXd mom = Eigen::MatrixXd::Zero(res.weights.rows(), res.weights.cols());
  Eigen::MatrixXd vel = mom;
  Eigen::MatrixXd grad(mom.rows(), mom.cols());
  double scale = 1.0;
  double b1t = 1.0, b2t = 1.0;
  int streak = 0;

  double current = training_objective_and_gradient(res.weights, s, noise, &grad);
  res.trace.push_back(current);

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    b1t *= kBeta1;
    b2t *= kBeta2;
    mom = kBeta1 * mom + (1.0 - kBeta1) * grad;
    vel = kBeta2 * vel + (1.0 - kBeta2) * grad.cwiseProduct(grad);
    const Eigen::MatrixXd mhat = mom / (1.0 - b1t);
    const Eigen::MatrixXd vhat = vel / (1.0 - b2t);
    const Eigen::MatrixXd direction =
        (mhat.array() / (vhat.array().sqrt() + kEps)).matrix();

    Eigen::MatrixXd candidate;
    double next = current;
    bool accepted = false;
    for (int tries = 0; tries < 40; ++tries) {
      candidate = res.weights - (config.step_size * scale) * direction;
      project_row_norms(candidate, config.weight_norm_cap);
      next = training_objective_only(candidate, s, noise);
      if (next <= current + kAscentSlack) {
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) {
      // Step has shrunk below noise level; treat as converged in place.
      res.iterations = iter + 1;
      res.converged = true;
      break;
    }
    scale = std::min(scale * 1.1, 1.0);
    res.weights = candidate;
    const double delta = std::abs(next - current);
    current = next;
    res.trace.push_back(current);
    res.iterations = iter + 1;
    if (delta < config.objective_tolerance) {
      if (++streak >= config.tolerance_streak) {
        res.converged = true;
        break;
      }
    } else {
      streak = 0;
    }
    if (iter + 1 < config.max_iterations) {
      training_objective_and_gradient(res.weights, s, noise, &grad);
    }
  }
  // Report the plain objective; the penalty only steers the search. The
  // penalty is nonnegative, so this final entry keeps the trace monotone.
  res.objective = objective_only(res.weights, s, noise);
  res.trace.push_back(res.objective);
  return res;
}

Eigen::MatrixXd standardized_scores(const LinearLayer& layer,
                                    const DataMatrix& data,
                                    std::vector<std::uint8_t>* row_all_missing) {
  const int n = layer.n_vars();
  const int m = layer.n_factors();
  if (data.n_cols != n) {
    throw input_error("transform: data has " + std::to_string(data.n_cols) +
                      " columns, layer expects " + std::to_string(n));
  }
  Eigen::MatrixXd scores(data.n_rows, m);
  Eigen::VectorXd xt(n);
  if (row_all_missing) row_all_missing->assign(data.n_rows, 0);
  for (int r = 0; r < data.n_rows; ++r) {
    bool any_observed = false;
    for (int c = 0; c < n; ++c) {
      if (data.is_missing(r, c)) {
        xt(c) = 0.0;
      } else {
        xt(c) = (data.at(r, c) - layer.input_means()(c)) / layer.input_scales()(c);
        any_observed = true;
      }
    }
    scores.row(r) = (layer.weights() * xt).transpose();
    if (!any_observed && row_all_missing) (*row_all_missing)[r] = 1;
  }
  return scores;
}

}  // namespace

LinearLayer::LinearLayer(Eigen::MatrixXd weights, Eigen::VectorXd noise_variance,
                         Eigen::VectorXd input_means, Eigen::VectorXd input_scales,
                         const Eigen::MatrixXd& correlation)
    : weights_(std::move(weights)),
      noise_variance_(std::move(noise_variance)),
      input_means_(std::move(input_means)),
      input_scales_(std::move(input_scales)) {
  if (weights_.cols() != correlation.rows() ||
      correlation.rows() != correlation.cols()) {
    throw input_error("LinearLayer: weights/correlation dimension mismatch");
  }
  if (noise_variance_.size() != weights_.rows()) {
    throw input_error("LinearLayer: noise variance length mismatch");
  }
  if ((input_scales_.array() <= 0.0).any()) {
    throw input_error("LinearLayer: input scales must be positive");
  }
  if (!weights_.allFinite()) {
    throw input_error("LinearLayer: weights must be finite");
  }
  cov_xy_.noalias() = correlation * weights_.transpose();
  cov_y_.noalias() = weights_ * cov_xy_;
  cov_y_ = 0.5 * (cov_y_ + cov_y_.transpose());
  cov_y_.diagonal() += noise_variance_;
}

LinearLayer LinearLayer::from_moments(Eigen::MatrixXd weights,
                                      Eigen::VectorXd noise_variance,
                                      Eigen::VectorXd input_means,
                                      Eigen::VectorXd input_scales,
                                      Eigen::MatrixXd cov_xy,
                                      Eigen::MatrixXd cov_y) {
  LinearLayer layer;
  layer.weights_ = std::move(weights);
  layer.noise_variance_ = std::move(noise_variance);
  layer.input_means_ = std::move(input_means);
  layer.input_scales_ = std::move(input_scales);
  layer.cov_xy_ = std::move(cov_xy);
  layer.cov_y_ = std::move(cov_y);
  return layer;
}

Standardization column_standardization(const DataMatrix& data) {
  const int n = data.n_cols;
  Standardization st;
  st.means.resize(n);
  st.scales.resize(n);
  for (int c = 0; c < n; ++c) {
    double sum = 0.0, sumsq = 0.0;
    long count = 0;
    for (int r = 0; r < data.n_rows; ++r) {
      if (data.is_missing(r, c)) continue;
      const double x = data.at(r, c);
      sum += x;
      sumsq += x * x;
      ++count;
    }
    if (count < 2) {
      throw input_error("column " + data.column_label(c) +
                        " has fewer than 2 observed values");
    }
    const double mean = sum / static_cast<double>(count);
    const double var =
        (sumsq - static_cast<double>(count) * mean * mean) /
        static_cast<double>(count - 1);
    const double sd = var > 0.0 ? std::sqrt(var) : 0.0;
    if (!(sd > 1e-12 * (1.0 + std::abs(mean)))) {
      throw input_error("column " + data.column_label(c) + " is constant");
    }
    st.means(c) = mean;
    st.scales(c) = sd;
  }
  return st;
}

CorrelationResult prepare_correlation(const DataMatrix& data,
                                      const Standardization& st,
                                      double eigenvalue_clip) {
  const int n = data.n_cols;
  const int rows = data.n_rows;
  CorrelationResult result;
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd counts;  // pairwise observation counts, missing case only

  const bool missing = data.has_missing();
  if (!missing) {
    Eigen::MatrixXd xt(rows, n);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < n; ++c) {
        xt(r, c) = (data.at(r, c) - st.means(c)) / st.scales(c);
      }
    }
    corr.noalias() = xt.transpose() * xt / static_cast<double>(rows - 1);
  } else {
    counts = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(n, n);
    std::vector<double> xt(n);
    std::vector<char> obs(n);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < n; ++c) {
        obs[c] = !data.is_missing(r, c);
        xt[c] = obs[c] ? (data.at(r, c) - st.means(c)) / st.scales(c) : 0.0;
      }
      for (int i = 0; i < n; ++i) {
        if (!obs[i]) continue;
        for (int j = i; j < n; ++j) {
          if (!obs[j]) continue;
          sums(i, j) += xt[i] * xt[j];
          counts(i, j) += 1.0;
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const double c = counts(i, j);
        const double val = c >= 2.0 ? sums(i, j) / (c - 1.0) : 0.0;
        corr(i, j) = val;
        corr(j, i) = val;
      }
    }
  }
  corr.diagonal().setOnes();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) corr(i, j) = std::clamp(corr(i, j), -1.0, 1.0);
    }
  }

  // Under-sampled regime: shrink toward identity with the analytic
  // weight  lambda = sum var(r_ij) / sum r_ij^2  (off-diagonal sums,
  // var(r) ~ (1-r^2)^2 / (n_ij - 1)), clipped to [0, 1].
  if (rows < n) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double r = corr(i, j);
        const double nij =
            missing ? std::max(counts(i, j), 2.0) : static_cast<double>(rows);
        const double one_minus = 1.0 - r * r;
        num += one_minus * one_minus / (nij - 1.0);
        den += r * r;
      }
    }
    const double lambda = den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 1.0;
    if (lambda > 0.0) {
      corr *= (1.0 - lambda);
      corr.diagonal().array() += lambda;
      result.shrinkage = lambda;
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
  if (eig.info() != Eigen::Success) {
    throw numerical_error("prepare_correlation: eigendecomposition failed");
  }
  if (eig.eigenvalues().minCoeff() < eigenvalue_clip) {
    Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(eigenvalue_clip);
    corr = eig.eigenvectors() * clipped.asDiagonal() *
           eig.eigenvectors().transpose();
    // Restore unit diagonal after clipping.
    Eigen::VectorXd d = corr.diagonal().cwiseSqrt();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) corr(i, j) /= d(i) * d(j);
    }
    corr = 0.5 * (corr + corr.transpose());
    corr.diagonal().setOnes();
    result.pd_projected = true;
  }
  result.correlation = std::move(corr);
  return result;
}

double objective_and_gradient(const Eigen::MatrixXd& weights,
                              const Eigen::MatrixXd& correlation,
                              const Eigen::VectorXd& noise_variance,
                              Eigen::MatrixXd* gradient) {
  const ObjectiveParts p = evaluate(weights, correlation, noise_variance);
  if (gradient) {
    const int m = static_cast<int>(weights.rows());
    const int n = static_cast<int>(weights.cols());
    Eigen::MatrixXd dk_c(m, n);
    for (int j = 0; j < m; ++j) {
      dk_c.row(j) = p.cy.row(j) / p.k(j, j);
    }
    Eigen::MatrixXd u_dv = p.u;
    for (int i = 0; i < n; ++i) {
      u_dv.col(i) /= p.v(i) * correlation(i, i);
    }
    gradient->noalias() = dk_c - u_dv * correlation;
    gradient->noalias() += (u_dv * p.u.transpose()) * p.cy;
  }
  return p.objective;
}

std::pair<LinearLayer, FitReport> fit_layer(const DataMatrix& data,
                                            int n_factors,
                                            const TrainConfig& config) {
  data.validate();
  if (data.n_cols < 2) {
    throw input_error("fit_layer: need at least 2 variables");
  }
  if (n_factors < 1) {
    throw input_error("fit_layer: need at least 1 factor");
  }
  FitReport report;
  if (n_factors > data.n_cols) {
    report.warnings.push_back("more factors (" + std::to_string(n_factors) +
                              ") than variables (" +
                              std::to_string(data.n_cols) + ")");
  }

  const Standardization st = column_standardization(data);
  CorrelationResult prep =
      prepare_correlation(data, st, config.eigenvalue_clip);
  if (prep.shrinkage > 0.0) {
    report.warnings.push_back("under-sampled: identity shrinkage " +
                              std::to_string(prep.shrinkage) + " applied");
  }
  if (prep.pd_projected) {
    report.pd_projected = true;
    report.warnings.push_back("correlation projected to nearest PD matrix");
  }
  const Eigen::MatrixXd& s = prep.correlation;
  const int n = data.n_cols;
  const Eigen::VectorXd noise = Eigen::VectorXd::Ones(n_factors);

  OptimizeResult best;
  best.objective = std::numeric_limits<double>::infinity();
  const double init_scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int restart = 0; restart < std::max(config.n_restarts, 1); ++restart) {
    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(restart)));
    Eigen::MatrixXd w0(n_factors, n);
    for (int j = 0; j < n_factors; ++j) {
      for (int i = 0; i < n; ++i) w0(j, i) = init_scale * rng.normal();
    }
    OptimizeResult res = optimize(std::move(w0), s, noise, config);
    if (res.objective < best.objective) best = std::move(res);
  }
  // The zero layer achieves objective 0 exactly; never return worse.
  if (!(best.objective <= 0.0)) {
    best.weights.setZero();
    best.objective = 0.0;
    best.trace = {0.0};
    best.converged = true;
    report.warnings.push_back("optimizer did not beat the zero solution");
  }

  report.objective_trace = std::move(best.trace);
  report.tc_lower_bound = -best.objective;
  report.iterations_run = best.iterations;
  report.converged = best.converged;

  LinearLayer layer(std::move(best.weights), noise, st.means, st.scales, s);
  return {std::move(layer), std::move(report)};
}

std::pair<InfoValue, InfoValue> objective_value(
    const LinearLayer& layer, const Eigen::MatrixXd& correlation) {
  if (correlation.rows() != layer.n_vars() ||
      correlation.cols() != layer.n_vars()) {
    throw input_error("objective_value: correlation dimension mismatch");
  }
  const ObjectiveParts p =
      evaluate(layer.weights(), correlation, layer.noise_variance());
  return {InfoValue(p.sum_i_yx), InfoValue(p.sum_i_xy)};
}

DataMatrix transform(const LinearLayer& layer, const DataMatrix& data) {
  std::vector<std::uint8_t> row_all_missing;
  Eigen::MatrixXd scores = standardized_scores(layer, data, &row_all_missing);
  DataMatrix out(data.n_rows, layer.n_factors());
  for (int r = 0; r < out.n_rows; ++r) {
    for (int j = 0; j < out.n_cols; ++j) {
      out.at(r, j) = scores(r, j);
      if (row_all_missing[r]) out.set_missing(r, j);
    }
  }
  out.column_names.reserve(out.n_cols);
  for (int j = 0; j < out.n_cols; ++j) {
    out.column_names.push_back("factor" + std::to_string(j));
  }
  return out;
}

Eigen::MatrixXd implied_covariance(const LinearLayer& layer,
                                   bool original_units) {
  const int n = layer.n_vars();
  Eigen::LLT<Eigen::MatrixXd> llt(layer.cov_y());
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(layer.cov_y());
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    throw numerical_error(
        "implied_covariance: factor covariance is singular (condition ~ " +
        std::to_string(lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity()) +
        ")");
  }
  Eigen::MatrixXd result =
      layer.cov_xy() * llt.solve(layer.cov_xy().transpose());
  result = 0.5 * (result + result.transpose());
  result.diagonal().setOnes();
  if (original_units) {
    const Eigen::VectorXd& sc = layer.input_scales();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) result(i, j) *= sc(i) * sc(j);
    }
  }
  return result;
}

Eigen::MatrixXd factor_variable_mi(const LinearLayer& layer,
                                   const Eigen::MatrixXd& correlation) {
  const int n = layer.n_vars();
  const int m = layer.n_factors();
  if (correlation.rows() != n || correlation.cols() != n) {
    throw input_error("factor_variable_mi: correlation dimension mismatch");
  }
  Eigen::MatrixXd cov_xy = correlation * layer.weights().transpose();
  Eigen::MatrixXd cov_y = layer.weights() * cov_xy;
  cov_y.diagonal() += layer.noise_variance();
  Eigen::MatrixXd mi(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double denom = cov_y(j, j) * correlation(i, i);
      const double rho2 = denom > 0.0 ? cov_xy(i, j) * cov_xy(i, j) / denom : 0.0;
      mi(i, j) = gaussian_mi_from_correlation(std::sqrt(std::min(rho2, 1.0))).nats();
    }
  }
  return mi;
}

Eigen::MatrixXd factor_variable_mi(const LinearLayer& layer) {
  const int n = layer.n_vars();
  const int m = layer.n_factors();
  Eigen::MatrixXd mi(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double denom = layer.cov_y()(j, j);
      const double rho2 =
          denom > 0.0 ? layer.cov_xy()(i, j) * layer.cov_xy()(i, j) / denom : 0.0;
      mi(i, j) = gaussian_mi_from_correlation(std::sqrt(std::min(rho2, 1.0))).nats();
    }
  }
  return mi;
}

namespace {
std::vector<int> argmax_rows(const Eigen::MatrixXd& mi) {
  std::vector<int> out(mi.rows());
  for (int i = 0; i < mi.rows(); ++i) {
    int arg = 0;
    for (int j = 1; j < mi.cols(); ++j) {
      if (mi(i, j) > mi(i, arg)) arg = j;  // strict: ties keep lower index
    }
    out[i] = arg;
  }
  return out;
}
}  // namespace

std::vector<int> cluster_assignments(const LinearLayer& layer,
                                     const Eigen::MatrixXd& correlation) {
  return argmax_rows(factor_variable_mi(layer, correlation));
}

std::vector<int> cluster_assignments(const LinearLayer& layer) {
  return argmax_rows(factor_variable_mi(layer));
}

std::vector<double> per_factor_bounds(const LinearLayer& layer) {
  const Eigen::MatrixXd mi = factor_variable_mi(layer);
  std::vector<double> out(layer.n_factors());
  for (int j = 0; j < layer.n_factors(); ++j) {
    const double i_yx =
        0.5 * std::log(layer.cov_y()(j, j) / layer.noise_variance()(j));
    double v = mi.col(j).sum() - i_yx;
    if (v < 0.0 && v > -1e-6) v = 0.0;
    out[j] = v;
  }
  return out;
}

}  // namespace corex
