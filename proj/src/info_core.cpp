// info_core.cpp

#include "corex/info_core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace corex {

namespace {

void check_subset(const std::vector<int>& subset, int n_vars,
                  const char* name) {
  std::set<int> seen;
  for (int v : subset) {
    if (v < 0 || v >= n_vars) {
      throw input_error(std::string(name) + ": variable index " +
                        std::to_string(v) + " out of range [0, " +
                        std::to_string(n_vars) + ")");
    }
    if (!seen.insert(v).second) {
      throw input_error(std::string(name) + ": duplicate variable index " +
                        std::to_string(v));
    }
  }
}

void check_disjoint(const std::vector<int>& a, const std::vector<int>& b) {
  std::set<int> sa(a.begin(), a.end());
  for (int v : b) {
    if (sa.count(v)) {
      throw input_error("index sets overlap at variable " + std::to_string(v));
    }
  }
}

double entropy_of_table(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs) h -= plogp(p);
  return h;
}

}  // namespace

DiscreteJoint::DiscreteJoint(std::vector<int> cardinalities,
                             std::vector<double> probs)
    : cardinalities_(std::move(cardinalities)), probs_(std::move(probs)) {
  if (cardinalities_.empty()) {
    throw input_error("DiscreteJoint: needs at least one variable");
  }
  std::size_t total = 1;
  for (int c : cardinalities_) {
    if (c < 1) throw input_error("DiscreteJoint: cardinality must be >= 1");
    if (total > kMaxStates / static_cast<std::size_t>(c)) {
      throw input_error("DiscreteJoint: joint state space exceeds 2^24");
    }
    total *= static_cast<std::size_t>(c);
  }
  if (probs_.size() != total) {
    throw input_error("DiscreteJoint: table length " +
                      std::to_string(probs_.size()) +
                      " does not match product of cardinalities " +
                      std::to_string(total));
  }
  double sum = 0.0;
  for (double& p : probs_) {
    if (p < 0.0) throw input_error("DiscreteJoint: negative probability");
    if (p < 1e-15) p = 0.0;
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw input_error("DiscreteJoint: probabilities sum to " +
                      std::to_string(sum) + ", not 1 within 1e-12");
  }
  strides_.assign(cardinalities_.size(), 1);
  for (int i = n_vars() - 2; i >= 0; --i) {
    strides_[i] = strides_[i + 1] * static_cast<std::size_t>(cardinalities_[i + 1]);
  }
}

std::size_t DiscreteJoint::index_of(const std::vector<int>& state) const {
  std::size_t idx = 0;
  for (int i = 0; i < n_vars(); ++i) {
    idx += static_cast<std::size_t>(state[i]) * strides_[i];
  }
  return idx;
}

void DiscreteJoint::decode(std::size_t index, std::vector<int>& state) const {
  state.resize(cardinalities_.size());
  for (int i = 0; i < n_vars(); ++i) {
    state[i] = static_cast<int>(index / strides_[i]) % cardinalities_[i];
  }
}

DiscreteJoint DiscreteJoint::marginal(const std::vector<int>& subset) const {
  check_subset(subset, n_vars(), "marginal");
  if (subset.empty()) {
    return DiscreteJoint({1}, {1.0});
  }
  std::vector<int> sub_cards;
  sub_cards.reserve(subset.size());
  std::size_t sub_total = 1;
  for (int v : subset) {
    sub_cards.push_back(cardinalities_[v]);
    sub_total *= static_cast<std::size_t>(cardinalities_[v]);
  }
  std::vector<std::size_t> sub_strides(subset.size(), 1);
  for (int i = static_cast<int>(subset.size()) - 2; i >= 0; --i) {
    sub_strides[i] = sub_strides[i + 1] * static_cast<std::size_t>(sub_cards[i + 1]);
  }
  std::vector<double> out(sub_total, 0.0);
  std::vector<int> state;
  for (std::size_t s = 0; s < probs_.size(); ++s) {
    if (probs_[s] == 0.0) continue;
    decode(s, state);
    std::size_t idx = 0;
    for (std::size_t k = 0; k < subset.size(); ++k) {
      idx += static_cast<std::size_t>(state[subset[k]]) * sub_strides[k];
    }
    out[idx] += probs_[s];
  }
  // Renormalize away accumulated rounding so the marginal revalidates.
  double sum = 0.0;
  for (double p : out) sum += p;
  if (sum > 0.0) {
    for (double& p : out) p /= sum;
  }
  return DiscreteJoint(std::move(sub_cards), std::move(out));
}

GaussianModel::GaussianModel(Eigen::MatrixXd covariance, Eigen::VectorXd mean)
    : covariance_(std::move(covariance)), mean_(std::move(mean)) {
  const auto n = covariance_.rows();
  if (n == 0 || covariance_.cols() != n) {
    throw input_error("GaussianModel: covariance must be square and nonempty");
  }
  const double scale = std::max(1.0, covariance_.cwiseAbs().maxCoeff());
  if ((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * scale) {
    throw input_error("GaussianModel: covariance not symmetric within 1e-10");
  }
  if (mean_.size() == 0) {
    mean_ = Eigen::VectorXd::Zero(n);
  } else if (mean_.size() != n) {
    throw input_error("GaussianModel: mean length does not match covariance");
  }
  logdet_spd(covariance_, "GaussianModel covariance");
}

double logdet_spd(const Eigen::MatrixXd& m, const char* context) {
  const int n = static_cast<int>(m.rows());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  double logdet = 0.0;
  for (int j = 0; j < n; ++j) {
    double d = m(j, j);
    for (int k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw numerical_error(std::string(context) +
                            ": not positive definite (leading minor of order " +
                            std::to_string(j + 1) + " fails)");
    }
    L(j, j) = std::sqrt(d);
    logdet += std::log(d);
    for (int i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / L(j, j);
    }
  }
  return logdet;
}

InfoValue entropy(const DiscreteJoint& joint, const std::vector<int>& subset) {
  check_subset(subset, joint.n_vars(), "entropy");
  if (subset.empty()) return InfoValue(0.0);
  return InfoValue(entropy_of_table(joint.marginal(subset).probs()));
}

InfoValue mutual_information(const DiscreteJoint& joint,
                             const std::vector<int>& a,
                             const std::vector<int>& b) {
  if (a.empty() || b.empty()) {
    throw input_error("mutual_information: index sets must be nonempty");
  }
  check_subset(a, joint.n_vars(), "mutual_information");
  check_subset(b, joint.n_vars(), "mutual_information");
  check_disjoint(a, b);
  std::vector<int> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  const double ha = entropy(joint, a).nats();
  const double hb = entropy(joint, b).nats();
  const double hab = entropy(joint, ab).nats();
  return InfoValue(ha + hb - hab);
}

InfoValue total_correlation(const DiscreteJoint& joint) {
  double sum_marginal = 0.0;
  for (int i = 0; i < joint.n_vars(); ++i) {
    sum_marginal += entropy(joint, {i}).nats();
  }
  const double joint_h = entropy_of_table(joint.probs());
  return InfoValue(sum_marginal - joint_h);
}

InfoValue total_correlation_kl(const DiscreteJoint& joint) {
  const int n = joint.n_vars();
  std::vector<std::vector<double>> marginals(n);
  for (int i = 0; i < n; ++i) {
    marginals[i] = joint.marginal({i}).probs();
  }
  double kl = 0.0;
  std::vector<int> state;
  for (std::size_t s = 0; s < joint.n_states(); ++s) {
    const double p = joint.probs()[s];
    if (p == 0.0) continue;
    joint.decode(s, state);
    double log_prod = 0.0;
    for (int i = 0; i < n; ++i) {
      log_prod += std::log(marginals[i][state[i]]);
    }
    kl += p * (std::log(p) - log_prod);
  }
  return InfoValue(kl);
}

InfoValue conditional_tc(const DiscreteJoint& joint, const std::vector<int>& x,
                         const std::vector<int>& y) {
  if (x.size() < 2) {
    throw input_error("conditional_tc: x needs at least 2 variables");
  }
  check_subset(x, joint.n_vars(), "conditional_tc");
  check_subset(y, joint.n_vars(), "conditional_tc");
  check_disjoint(x, y);
  // TC(x|y) = sum_i H(x_i, y) - H(x, y) - (|x| - 1) H(y); this equals the
  // expectation over y-states of the per-state KL, with p(y)=0 states
  // contributing nothing.
  const double hy = entropy(joint, y).nats();
  std::vector<int> xy = x;
  xy.insert(xy.end(), y.begin(), y.end());
  const double hxy = entropy(joint, xy).nats();
  double sum_iy = 0.0;
  for (int v : x) {
    std::vector<int> iy = {v};
    iy.insert(iy.end(), y.begin(), y.end());
    sum_iy += entropy(joint, iy).nats();
  }
  const double n_x = static_cast<double>(x.size());
  return InfoValue(sum_iy - hxy - (n_x - 1.0) * hy);
}

InfoValue tc_gaussian(const Eigen::MatrixXd& covariance,
                      const std::vector<int>& subset) {
  if (covariance.rows() != covariance.cols()) {
    throw input_error("tc_gaussian: covariance must be square");
  }
  check_subset(subset, static_cast<int>(covariance.rows()), "tc_gaussian");
  if (subset.size() < 2) return InfoValue(0.0);
  const int k = static_cast<int>(subset.size());
  Eigen::MatrixXd sub(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) sub(i, j) = covariance(subset[i], subset[j]);
  }
  double sum_log_var = 0.0;
  for (int i = 0; i < k; ++i) {
    if (!(sub(i, i) > 0.0)) {
      throw numerical_error("tc_gaussian: nonpositive variance at variable " +
                            std::to_string(subset[i]));
    }
    sum_log_var += std::log(sub(i, i));
  }
  const double logdet = logdet_spd(sub, "tc_gaussian submatrix");
  return InfoValue(0.5 * (sum_log_var - logdet));
}

InfoValue tc_gaussian(const GaussianModel& model,
                      const std::vector<int>& subset) {
  return tc_gaussian(model.covariance(), subset);
}

InfoValue tc_gaussian(const Eigen::MatrixXd& covariance) {
  std::vector<int> all(covariance.rows());
  for (int i = 0; i < static_cast<int>(all.size()); ++i) all[i] = i;
  return tc_gaussian(covariance, all);
}

InfoValue gaussian_mi_from_correlation(double rho) {
  const double r2 = std::min(rho * rho, 1.0 - 1e-15);
  return InfoValue(-0.5 * std::log1p(-r2));
}

}  // namespace corex
