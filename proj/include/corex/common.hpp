// common.hpp
//
// Shared error types, the InfoValue unit wrapper, and small numeric
// helpers used across the library. All information quantities are held
// in nats internally; bit conversion happens only at display time.

#ifndef COREX_COMMON_HPP
#define COREX_COMMON_HPP

#include <cmath>
#include <stdexcept>
#include <string>

namespace corex {

// Bad user-supplied data: malformed files, invalid indices, shape
// mismatches. The CLI maps this to exit code 2.
class input_error : public std::runtime_error {
 public:
  explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: non-positive-definite matrices, singular systems,
// instability guards. The CLI maps this to exit code 3.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr double kLn2 = 0.6931471805599453;

// Entropies, mutual informations and total correlations are nonnegative;
// values in [-1e-9, 0) are rounding residue and report as zero. Anything
// more negative means the computation producing it is broken.
class InfoValue {
 public:
  InfoValue() = default;
  explicit InfoValue(double nats) {
    if (nats < -1e-9) {
      throw numerical_error("information value below -1e-9 nats: " +
                            std::to_string(nats));
    }
    nats_ = nats < 0.0 ? 0.0 : nats;
  }
  double nats() const { return nats_; }
  double bits() const { return nats_ / kLn2; }

 private:
  double nats_ = 0.0;
};

// 0 * log 0 := 0; probabilities below 1e-15 are treated as exact zeros.
inline double plogp(double p) {
  return p < 1e-15 ? 0.0 : p * std::log(p);
}

inline double nats_to_bits(double nats) { return nats / kLn2; }

}  // namespace corex

#endif  // COREX_COMMON_HPP
