// Deterministic random streams. All draws go through this wrapper so that a
// (seed, platform-independent engine) pair reproduces every artifact bit for
// bit; std::* distributions are avoided because their output is
// implementation-defined.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "cranbeam/types.hpp"

namespace cranbeam {

// SplitMix64 step, used for seed mixing and stream derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a base seed and a tag path.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  std::uint64_t s = base;
  std::uint64_t a = splitmix64(s);
  s ^= tag + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2);
  return splitmix64(s);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t t1, std::uint64_t t2) {
  return derive_seed(derive_seed(base, t1), t2);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t t1, std::uint64_t t2,
                                 std::uint64_t t3) {
  return derive_seed(derive_seed(base, t1, t2), t3);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Modulo bias is ~n/2^64, irrelevant here.
  std::uint64_t below(std::uint64_t n) { return eng_() % n; }

  // Standard normal via Box-Muller; two uniforms per draw keeps the stream
  // position independent of any caching.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // CN(0, 1): unit-variance circularly-symmetric complex Gaussian.
  Complex complex_normal() {
    const double re = normal();
    const double im = normal();
    return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace cranbeam
