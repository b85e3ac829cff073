// rng.hpp
//
// Deterministic random number generation. std::mt19937_64 is
// bit-specified by the standard; the uniform and normal maps are spelled
// out here instead of using std:: distributions so that seeded runs
// reproduce byte-identically across standard library implementations.

#ifndef COREX_RNG_HPP
#define COREX_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace corex {

// Stafford mix13 finalizer; used to derive independent substream seeds.
inline std::uint64_t mix_seed(std::uint64_t x, std::uint64_t salt) {
  x += 0x9e3779b97f4a7c15ULL * (salt + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1); never returns an exact zero (safe under log).
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; pairs are cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return engine_() % n;
  }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace corex

#endif  // COREX_RNG_HPP
