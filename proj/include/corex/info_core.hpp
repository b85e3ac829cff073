// info_core.hpp
//
// Exact information-theoretic primitives over small discrete joint
// distributions, plus closed-form Gaussian total correlation. These are
// the ground-truth oracles the rest of the library is verified against:
// everything here is computed by exact enumeration or closed form, never
// by sampling.

#ifndef COREX_INFO_CORE_HPP
#define COREX_INFO_CORE_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "corex/common.hpp"

namespace corex {

// Exact joint probability table over a handful of small-cardinality
// variables. Flat storage, last variable fastest. Capped at 2^24 joint
// states; this type exists for desk-scale verification, not for data.
class DiscreteJoint {
 public:
  DiscreteJoint(std::vector<int> cardinalities, std::vector<double> probs);

  int n_vars() const { return static_cast<int>(cardinalities_.size()); }
  int cardinality(int var) const { return cardinalities_[var]; }
  const std::vector<int>& cardinalities() const { return cardinalities_; }
  std::size_t n_states() const { return probs_.size(); }
  const std::vector<double>& probs() const { return probs_; }

  std::size_t index_of(const std::vector<int>& state) const;
  void decode(std::size_t index, std::vector<int>& state) const;

  // Exact marginal over the given variables (kept in the given order).
  DiscreteJoint marginal(const std::vector<int>& subset) const;

  static constexpr std::size_t kMaxStates = std::size_t{1} << 24;

 private:
  std::vector<int> cardinalities_;
  std::vector<std::size_t> strides_;
  std::vector<double> probs_;
};

// Zero-mean multivariate Gaussian; the mean is informational only since
// every information quantity here is mean-invariant.
class GaussianModel {
 public:
  explicit GaussianModel(Eigen::MatrixXd covariance,
                         Eigen::VectorXd mean = Eigen::VectorXd());
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  const Eigen::VectorXd& mean() const { return mean_; }

 private:
  Eigen::MatrixXd covariance_;
  Eigen::VectorXd mean_;
};

// H of the marginal over `subset`, exact enumeration.
InfoValue entropy(const DiscreteJoint& joint, const std::vector<int>& subset);

// I(a; b) = H(a) + H(b) - H(a,b); `a`, `b` disjoint and nonempty.
InfoValue mutual_information(const DiscreteJoint& joint,
                             const std::vector<int>& a,
                             const std::vector<int>& b);

// TC = sum_i H(X_i) - H(X), via entropy sums.
InfoValue total_correlation(const DiscreteJoint& joint);

// TC as D_KL(joint || product of marginals). Independent route from
// total_correlation; the two are cross-checked in tests, never merged.
InfoValue total_correlation_kl(const DiscreteJoint& joint);

// TC(x | y) = E_y[ D_KL(p(x|y) || prod_i p(x_i|y)) ]; `x` needs >= 2
// variables; zero-probability conditioning states are skipped.
InfoValue conditional_tc(const DiscreteJoint& joint, const std::vector<int>& x,
                         const std::vector<int>& y);

// Gaussian TC in closed form: 1/2 (sum_i log S_ii - log det S) over the
// subset; throws numerical_error naming the offending leading minor when
// the submatrix is not positive definite.
InfoValue tc_gaussian(const Eigen::MatrixXd& covariance,
                      const std::vector<int>& subset);
InfoValue tc_gaussian(const GaussianModel& model, const std::vector<int>& subset);
InfoValue tc_gaussian(const Eigen::MatrixXd& covariance);

// MI between two jointly Gaussian scalars with correlation rho.
InfoValue gaussian_mi_from_correlation(double rho);

// log det of a symmetric positive definite matrix via Cholesky; throws
// numerical_error naming the first failing leading minor.
double logdet_spd(const Eigen::MatrixXd& m, const char* context);

}  // namespace corex

#endif  // COREX_INFO_CORE_HPP
