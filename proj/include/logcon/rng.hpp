// Deterministic 64-bit generator with a documented stream.
//
// SplitMix64 (Steele, Lea, Flood 2014; public domain construction): one
// 64-bit state advanced by the golden-ratio increment, output scrambled by
// two xor-multiply rounds. The same seed always yields the same stream, on
// every platform, which is part of this library's reproducibility contract.
//
// Stream layout used by the samplers:
//   - uniform01()  consumes one raw 64-bit word, returns [0, 1) on a 53-bit grid.
//   - uniform_open() consumes one word, returns (0, 1) strictly.
//   - normal()     consumes exactly two words (Box-Muller, cosine branch).
//   - fork(k)      derives an independent child stream from the *initial* seed,
//                  so workers can be seeded as fork(0), fork(1), ... in any order.

#pragma once

#include <cstdint>
#include <cmath>
#include <numbers>

namespace logcon {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : seed0_(seed), state_(seed) {}

  std::uint64_t next_u64() {
    state_ += kGamma;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1), 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
  }

  /// Standard normal draw; consumes exactly two 64-bit words.
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Child stream k, a pure function of the initial seed and k.
  SplitMix64 fork(std::uint64_t k) const {
    return SplitMix64(scramble(scramble(seed0_) + (k + 1) * kGamma));
  }

  std::uint64_t initial_seed() const { return seed0_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  static std::uint64_t scramble(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed0_;
  std::uint64_t state_;
};

}  // namespace logcon
