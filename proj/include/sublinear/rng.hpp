// SPDX-License-Identifier: Apache-2.0
// Seeded xorshift64* generator.
//
// Recurrence (all arithmetic modulo 2^64):
//   x ^= x >> 12;  x ^= x << 25;  x ^= x >> 27;  out = x * 0x2545F4914F6CDD1D
// A zero seed is replaced by 0x9E3779B97F4A7C15. uniform() takes the top
// 53 bits of `out` scaled by 2^-53, so streams are reproducible in any
// language with 64-bit unsigned integers.
#pragma once

#include <cstdint>

namespace sublinear {

class XorShift64Star {
 public:
  using result_type = std::uint64_t;

  explicit XorShift64Star(std::uint64_t seed = 1)
      : state_(seed == 0 ? 0x9E3779B97F4A7C15ULL : seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  //! Uniform double in [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  //! Integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
  }

 private:
  std::uint64_t state_;
};

}  // namespace sublinear
