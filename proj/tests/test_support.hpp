// Shared generators and scoring helpers for the test suites. Everything
// here is deliberately independent of the library's internals: oracles are
// computed by enumeration or closed form inside the tests themselves.

#ifndef COREX_TESTS_TEST_SUPPORT_HPP
#define COREX_TESTS_TEST_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "corex/data.hpp"
#include "corex/info_core.hpp"
#include "corex/rng.hpp"

namespace test_support {

// Block data: `blocks` independent latent factors, `per` observed columns
// each, x = loading * z + sqrt(1 - loading^2) * noise.
inline corex::DataMatrix block_data(int n_rows, int blocks, int per,
                                    double loading, std::uint64_t seed) {
  corex::Rng rng(seed);
  corex::DataMatrix data(n_rows, blocks * per);
  const double noise_scale = std::sqrt(1.0 - loading * loading);
  for (int r = 0; r < n_rows; ++r) {
    for (int b = 0; b < blocks; ++b) {
      const double z = rng.normal();
      for (int k = 0; k < per; ++k) {
        data.at(r, b * per + k) = loading * z + noise_scale * rng.normal();
      }
    }
  }
  return data;
}

inline corex::DataMatrix independent_data(int n_rows, int n_cols,
                                          std::uint64_t seed) {
  corex::Rng rng(seed);
  corex::DataMatrix data(n_rows, n_cols);
  for (int r = 0; r < n_rows; ++r) {
    for (int c = 0; c < n_cols; ++c) data.at(r, c) = rng.normal();
  }
  return data;
}

// Adjusted Rand index between two labelings of the same items.
inline double ari(const std::vector<int>& a, const std::vector<int>& b) {
  const int n = static_cast<int>(a.size());
  std::map<std::pair<int, int>, long> joint;
  std::map<int, long> ra, rb;
  for (int i = 0; i < n; ++i) {
    joint[{a[i], b[i]}]++;
    ra[a[i]]++;
    rb[b[i]]++;
  }
  auto choose2 = [](long m) { return 0.5 * static_cast<double>(m) * (m - 1); };
  double sum_joint = 0, sum_a = 0, sum_b = 0;
  for (const auto& kv : joint) sum_joint += choose2(kv.second);
  for (const auto& kv : ra) sum_a += choose2(kv.second);
  for (const auto& kv : rb) sum_b += choose2(kv.second);
  const double expected = sum_a * sum_b / choose2(n);
  const double maximum = 0.5 * (sum_a + sum_b);
  if (maximum == expected) return 1.0;
  return (sum_joint - expected) / (maximum - expected);
}

// Pearson correlation of two columns of samples.
inline double sample_corr(const std::vector<double>& x,
                          const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  const double vx = sxx - sx * sx / n;
  const double vy = syy - sy * sy / n;
  if (vx <= 0 || vy <= 0) return 0.0;
  return (sxy - sx * sy / n) / std::sqrt(vx * vy);
}

// Random joint distribution over small discrete variables; probabilities
// are independent exponentials normalized to sum 1 (flat Dirichlet).
inline corex::DiscreteJoint random_joint(corex::Rng& rng, int max_vars = 4,
                                         int max_card = 3) {
  const int n_vars = 2 + static_cast<int>(rng.below(max_vars - 1));
  std::vector<int> cards(n_vars);
  std::size_t states = 1;
  for (int& c : cards) {
    c = 2 + static_cast<int>(rng.below(max_card - 1));
    states *= c;
  }
  std::vector<double> probs(states);
  double total = 0.0;
  for (double& p : probs) {
    p = -std::log(rng.uniform_open());
    total += p;
  }
  for (double& p : probs) p /= total;
  return corex::DiscreteJoint(std::move(cards), std::move(probs));
}

// Empirical joint distribution of binary columns, for brute-force TC of a
// dataset small enough to enumerate.
inline corex::DiscreteJoint empirical_joint(
    const std::vector<std::vector<int>>& rows, int n_vars) {
  std::vector<int> cards(n_vars, 2);
  std::vector<double> probs(std::size_t{1} << n_vars, 0.0);
  for (const auto& row : rows) {
    std::size_t idx = 0;
    for (int v : row) idx = idx * 2 + static_cast<std::size_t>(v);
    probs[idx] += 1.0;
  }
  for (double& p : probs) p /= static_cast<double>(rows.size());
  return corex::DiscreteJoint(std::move(cards), std::move(probs));
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace test_support

#endif  // COREX_TESTS_TEST_SUPPORT_HPP
