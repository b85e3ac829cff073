#include <doctest.h>

#include <cmath>
#include <vector>

#include "corex/common.hpp"
#include "corex/info_core.hpp"
#include "corex/rng.hpp"
#include "test_support.hpp"

using namespace corex;

TEST_CASE("total correlation: entropy-sum and KL routes agree") {
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const DiscreteJoint joint = test_support::random_joint(rng);
    const double via_entropy = total_correlation(joint).nats();
    const double via_kl = total_correlation_kl(joint).nats();
    CHECK(std::abs(via_entropy - via_kl) < 1e-10);
    CHECK(via_entropy >= 0.0);
  }
}

TEST_CASE("grouping identity TC(x) = TC(a) + TC(b) + I(a;b)") {
  Rng rng(202);
  for (int trial = 0; trial < 100; ++trial) {
    const DiscreteJoint joint = test_support::random_joint(rng, 4, 3);
    const int n = joint.n_vars();
    // Split variables into a prefix group and a suffix group.
    const int cut = 1 + static_cast<int>(rng.below(n - 1));
    std::vector<int> a, b;
    for (int i = 0; i < cut; ++i) a.push_back(i);
    for (int i = cut; i < n; ++i) b.push_back(i);

    const double whole = total_correlation(joint).nats();
    const double tc_a =
        a.size() > 1 ? total_correlation(joint.marginal(a)).nats() : 0.0;
    const double tc_b =
        b.size() > 1 ? total_correlation(joint.marginal(b)).nats() : 0.0;
    const double cross = mutual_information(joint, a, b).nats();
    CHECK(std::abs(whole - (tc_a + tc_b + cross)) < 1e-10);
  }
}

TEST_CASE("binary symmetric channel mutual information") {
  // x uniform, y = x flipped with probability 0.1:
  // I(x;y) = ln 2 - H_b(0.1).
  const DiscreteJoint joint({2, 2}, {0.45, 0.05, 0.05, 0.45});
  const double expected =
      std::log(2.0) + 0.1 * std::log(0.1) + 0.9 * std::log(0.9);
  CHECK(mutual_information(joint, {0}, {1}).nats() ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("xor triple: pairwise independent, jointly dependent") {
  // Uniform over even-parity triples. Any two variables are independent,
  // so TC comes entirely from the three-way constraint: TC = ln 2.
  std::vector<double> probs(8, 0.0);
  probs[0b000] = probs[0b011] = probs[0b101] = probs[0b110] = 0.25;
  const DiscreteJoint joint({2, 2, 2}, probs);

  CHECK(total_correlation(joint).nats() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(mutual_information(joint, {0}, {1}).nats() ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(mutual_information(joint, {0}, {2}).nats() ==
        doctest::Approx(0.0).epsilon(1e-12));
  // Conditioned on either variable, the other two become fully coupled.
  CHECK(conditional_tc(joint, {0, 1}, {2}).nats() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("conditional TC matches the entropy route") {
  Rng rng(303);
  for (int trial = 0; trial < 50; ++trial) {
    const DiscreteJoint joint = test_support::random_joint(rng, 4, 3);
    const int n = joint.n_vars();
    if (n < 3) continue;
    std::vector<int> x, y;
    for (int i = 0; i + 1 < n; ++i) x.push_back(i);
    y.push_back(n - 1);

    // TC(x|y) = sum_i H(x_i, y) - H(x, y) - (|x| - 1) H(y).
    double via_entropy = 0.0;
    for (int xi : x) via_entropy += entropy(joint, {xi, y[0]}).nats();
    std::vector<int> all = x;
    all.push_back(y[0]);
    via_entropy -= entropy(joint, all).nats();
    via_entropy -=
        (static_cast<double>(x.size()) - 1.0) * entropy(joint, y).nats();

    CHECK(std::abs(conditional_tc(joint, x, y).nats() - via_entropy) < 1e-10);
  }
}

TEST_CASE("conditional TC vanishes when conditioning explains everything") {
  // x0 and x1 are noisy copies of y: conditionally independent given y.
  // p(y) uniform; p(x_i = y | y) = 0.8.
  std::vector<double> probs(8, 0.0);
  for (int y = 0; y < 2; ++y)
    for (int x0 = 0; x0 < 2; ++x0)
      for (int x1 = 0; x1 < 2; ++x1) {
        const double p0 = x0 == y ? 0.8 : 0.2;
        const double p1 = x1 == y ? 0.8 : 0.2;
        probs[std::size_t(x0) * 4 + std::size_t(x1) * 2 + y] = 0.5 * p0 * p1;
      }
  const DiscreteJoint joint({2, 2, 2}, probs);
  CHECK(conditional_tc(joint, {0, 1}, {2}).nats() ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(total_correlation(joint.marginal({0, 1})).nats() > 0.05);
}

TEST_CASE("gaussian TC closed forms") {
  SUBCASE("independent variables have zero TC") {
    CHECK(tc_gaussian(Eigen::MatrixXd::Identity(4, 4)).nats() ==
          doctest::Approx(0.0).epsilon(1e-14));
  }
  SUBCASE("equicorrelated trio") {
    const double rho = 0.9;
    Eigen::MatrixXd s = Eigen::MatrixXd::Constant(3, 3, rho);
    s.diagonal().setOnes();
    // det = (1 - rho)^2 (1 + 2 rho) for the 3x3 equicorrelated matrix.
    const double expected = -0.5 * std::log((1 - rho) * (1 - rho) * (1 + 2 * rho));
    CHECK(tc_gaussian(s).nats() == doctest::Approx(expected).epsilon(1e-12));
    // Pair subset: TC reduces to the bivariate MI.
    CHECK(tc_gaussian(s, {0, 1}).nats() ==
          doctest::Approx(-0.5 * std::log(1 - rho * rho)).epsilon(1e-12));
  }
  SUBCASE("bivariate MI equals 2-variable TC") {
    for (double rho : {-0.95, -0.5, 0.0, 0.3, 0.8}) {
      Eigen::MatrixXd s(2, 2);
      s << 1, rho, rho, 1;
      CHECK(gaussian_mi_from_correlation(rho).nats() ==
            doctest::Approx(tc_gaussian(s).nats()).epsilon(1e-12));
    }
  }
  SUBCASE("scale invariance") {
    Eigen::MatrixXd s(3, 3);
    s << 4.0, 1.2, 0.4, 1.2, 2.25, 0.9, 0.4, 0.9, 1.0;
    Eigen::VectorXd d(3);
    d << 5.0, 0.25, 2.0;
    const Eigen::MatrixXd scaled = d.asDiagonal() * s * d.asDiagonal();
    CHECK(tc_gaussian(scaled).nats() ==
          doctest::Approx(tc_gaussian(s).nats()).epsilon(1e-10));
  }
  SUBCASE("non-PD input names the failing minor") {
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS((void)tc_gaussian(bad), numerical_error);
  }
}

TEST_CASE("marginalization keeps probabilities consistent") {
  Rng rng(404);
  const DiscreteJoint joint = test_support::random_joint(rng, 4, 3);
  const DiscreteJoint m0 = joint.marginal({0});
  double total = 0.0;
  for (double p : m0.probs()) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  // Marginal entropy never exceeds joint entropy.
  std::vector<int> all(joint.n_vars());
  for (int i = 0; i < joint.n_vars(); ++i) all[i] = i;
  CHECK(entropy(joint, {0}).nats() <= entropy(joint, all).nats() + 1e-12);
}

TEST_CASE("InfoValue rejects genuinely negative information") {
  CHECK_THROWS_AS(InfoValue(-1e-3), numerical_error);
  CHECK(InfoValue(-1e-10).nats() == 0.0);  // rounding residue clamps
}
