#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "corex/common.hpp"
#include "corex/info_core.hpp"
#include "corex/linear_corex.hpp"
#include "corex/sieve.hpp"
#include "corex/rng.hpp"
#include "test_support.hpp"

using namespace corex;

TEST_CASE("one strong pair is extracted and neutralized") {
  // Columns 0 and 1 share a factor; 2..7 are independent noise.
  Rng rng(11);
  const int n = 4000;
  DataMatrix data(n, 8);
  for (int r = 0; r < n; ++r) {
    const double z = rng.normal();
    data.at(r, 0) = std::sqrt(0.8) * z + std::sqrt(0.2) * rng.normal();
    data.at(r, 1) = std::sqrt(0.8) * z + std::sqrt(0.2) * rng.normal();
    for (int c = 2; c < 8; ++c) data.at(r, c) = rng.normal();
  }
  auto [component, remainder] = extract_next(data, {});

  // The pair carries TC = -1/2 ln(1 - 0.8^2) = 0.5 nats; the extraction
  // must capture most of it.
  CHECK(component.extracted_tc > 0.35);
  CHECK_FALSE(component.saturated);
  CHECK(component.dropped_columns.empty());

  // Remainder columns are decorrelated from each other where the factor
  // used to tie them together.
  std::vector<double> r0(n), r1(n);
  for (int r = 0; r < n; ++r) {
    r0[r] = remainder.at(r, 0);
    r1[r] = remainder.at(r, 1);
  }
  CHECK(std::abs(test_support::sample_corr(r0, r1)) < 0.05);
}

TEST_CASE("independent data stops immediately with one kept component") {
  const DataMatrix data = test_support::independent_data(3000, 10, 21);
  const SieveModel model = run_sieve(data, 5, 0.05, {});
  REQUIRE(model.components.size() == 1);  // below-threshold final kept
  CHECK(model.components[0].extracted_tc < 0.05);
  CHECK_FALSE(model.instability_stop);
}

TEST_CASE("planted two-factor structure is recovered in two passes") {
  const DataMatrix data = test_support::block_data(6000, 2, 5, 0.75, 31);
  const SieveModel model = run_sieve(data, 6, 0.05, {});
  REQUIRE(model.components.size() >= 2);

  // The first two components carry nearly everything; later ones are dregs.
  const Standardization st = column_standardization(data);
  const Eigen::MatrixXd corr = prepare_correlation(data, st).correlation;
  const double plug_in = tc_gaussian(corr).nats();
  REQUIRE(model.cumulative_tc.size() == model.components.size());
  CHECK(model.cumulative_tc.back() > 0.9 * plug_in);
  CHECK(model.cumulative_tc.back() <= plug_in + 1e-6);
  for (std::size_t k = 2; k < model.components.size(); ++k)
    CHECK(model.components[k].extracted_tc < 0.05 + 1e-9);

  // Cumulative ledger is a running sum of clamped terms.
  double running = 0.0;
  for (std::size_t k = 0; k < model.components.size(); ++k) {
    running += std::clamp(model.components[k].extracted_tc, 0.0, 30.0);
    CHECK(model.cumulative_tc[k] == doctest::Approx(running).epsilon(1e-12));
  }
}

TEST_CASE("extraction ledger saturates on duplicated columns") {
  // Ten exact copies: the remainder correlation is clipped to stay PD and
  // the extracted dependence blows past any honest per-component cap.
  Rng rng(41);
  const int n = 500;
  DataMatrix data(n, 10);
  for (int r = 0; r < n; ++r) {
    const double z = rng.normal();
    for (int c = 0; c < 10; ++c) data.at(r, c) = z;
  }
  auto [component, remainder] = extract_next(data, {});
  CHECK(component.extracted_tc > 30.0);
  CHECK(component.saturated);
  CHECK(component.pd_projected);

  const SieveModel model = run_sieve(data, 3, 0.01, {});
  CHECK(model.cumulative_tc[0] == doctest::Approx(30.0));
}

TEST_CASE("near-constant columns are dropped, not amplified") {
  Rng rng(51);
  const int n = 800;
  DataMatrix data(n, 5);
  for (int r = 0; r < n; ++r) {
    const double z = rng.normal();
    data.at(r, 0) = z + 0.5 * rng.normal();
    data.at(r, 1) = z + 0.5 * rng.normal();
    data.at(r, 2) = rng.normal();
    data.at(r, 3) = rng.normal();
    data.at(r, 4) = 3.25;  // constant
  }
  auto [component, remainder] = extract_next(data, {});
  REQUIRE(component.dropped_columns.size() == 1);
  CHECK(component.dropped_columns[0] == 4);
  CHECK(std::find(component.active_columns.begin(),
                  component.active_columns.end(),
                  4) == component.active_columns.end());
  // The dropped column passes through untouched.
  for (int r = 0; r < 5; ++r) CHECK(remainder.at(r, 4) == 3.25);
}

TEST_CASE("component scores are mutually near-orthogonal") {
  const DataMatrix data = test_support::block_data(5000, 3, 4, 0.7, 61);
  const SieveModel model = run_sieve(data, 3, 0.01, {});
  REQUIRE(model.components.size() == 3);

  // Reconstruct each component's score on the original data by replaying
  // the remainder chain.
  const int n = data.n_rows;
  std::vector<std::vector<double>> scores;
  DataMatrix remainder = data;
  for (std::size_t k = 0; k < model.components.size(); ++k) {
    auto [component, next] = extract_next(remainder, {});
    std::vector<double> score(n, 0.0);
    const Standardization st = column_standardization(remainder);
    for (int r = 0; r < n; ++r) {
      for (std::size_t a = 0; a < component.active_columns.size(); ++a) {
        const int c = component.active_columns[a];
        score[r] += component.weights(static_cast<int>(a)) *
                    (remainder.at(r, c) - st.means(c)) / st.scales(c);
      }
    }
    scores.push_back(std::move(score));
    remainder = std::move(next);
  }
  for (std::size_t a = 0; a < scores.size(); ++a)
    for (std::size_t b = a + 1; b < scores.size(); ++b)
      CHECK(std::abs(test_support::sample_corr(scores[a], scores[b])) < 0.05);
}

TEST_CASE("residuals are exactly decorrelated from each factor channel") {
  // The regression target is y = w x + eps with eps orthogonalized against
  // the inputs in sample, so cov(y, residual_a) = c_a - b_a K with c = S w
  // and K = w' S w + 1. All moments here come from the pre-extraction
  // correlation matrix plus the stored loadings, no scores needed.
  const DataMatrix data = test_support::block_data(4000, 3, 4, 0.65, 67);
  DataMatrix remainder = data;
  for (int k = 0; k < 3; ++k) {
    const Standardization st = column_standardization(remainder);
    const CorrelationResult prep = prepare_correlation(remainder, st);
    auto [component, next] = extract_next(remainder, {});
    REQUIRE(component.active_columns.size() ==
            static_cast<std::size_t>(remainder.n_cols));
    const Eigen::VectorXd c = prep.correlation * component.weights;
    const double channel_var = component.weights.dot(c) + 1.0;
    for (int a = 0; a < c.size(); ++a) {
      const double resid_var =
          std::max(prep.correlation(a, a) - c(a) * c(a) / channel_var, 1e-12);
      const double cross =
          (c(a) - component.regression_loadings(a) * channel_var) /
          (std::sqrt(channel_var) * std::sqrt(resid_var));
      CHECK(std::abs(cross) < 1e-8);
    }
    remainder = std::move(next);
  }
}

TEST_CASE("k_max caps the pass count") {
  const DataMatrix data = test_support::block_data(2000, 3, 4, 0.7, 71);
  const SieveModel model = run_sieve(data, 1, 0.01, {});
  CHECK(model.components.size() == 1);
}

TEST_CASE("column permutation leaves the extraction ledger invariant") {
  const DataMatrix data = test_support::block_data(3000, 2, 4, 0.7, 81);
  const int n_cols = data.n_cols;
  std::vector<int> perm(n_cols);
  for (int i = 0; i < n_cols; ++i) perm[i] = (i * 3) % n_cols;
  DataMatrix shuffled(data.n_rows, n_cols);
  for (int r = 0; r < data.n_rows; ++r)
    for (int c = 0; c < n_cols; ++c) shuffled.at(r, perm[c]) = data.at(r, c);

  const SieveModel base = run_sieve(data, 2, 0.01, {});
  const SieveModel moved = run_sieve(shuffled, 2, 0.01, {});
  REQUIRE(base.components.size() == moved.components.size());
  for (std::size_t k = 0; k < base.components.size(); ++k)
    CHECK(base.components[k].extracted_tc ==
          doctest::Approx(moved.components[k].extracted_tc).epsilon(1e-3));
}

TEST_CASE("too few usable columns is an input error up front") {
  DataMatrix one(100, 1);
  for (int r = 0; r < 100; ++r) one.at(r, 0) = r * 0.1;
  CHECK_THROWS_AS((void)extract_next(one, {}), input_error);

  DataMatrix flat(100, 3);
  for (int r = 0; r < 100; ++r)
    for (int c = 0; c < 3; ++c) flat.at(r, c) = 1.0;
  CHECK_THROWS_AS((void)extract_next(flat, {}), input_error);
}

TEST_CASE("sieve runs are deterministic") {
  const DataMatrix data = test_support::block_data(1000, 2, 4, 0.7, 91);
  SieveConfig cfg;
  cfg.train.seed = 5;
  const SieveModel a = run_sieve(data, 3, 0.01, cfg);
  const SieveModel b = run_sieve(data, 3, 0.01, cfg);
  REQUIRE(a.components.size() == b.components.size());
  for (std::size_t k = 0; k < a.components.size(); ++k) {
    CHECK(a.components[k].extracted_tc == b.components[k].extracted_tc);
    CHECK((a.components[k].weights.array() ==
           b.components[k].weights.array()).all());
  }
}
