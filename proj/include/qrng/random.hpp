#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

#include "qrng/constants.hpp"

namespace qrng {

/// Counter-based generator: word k of stream `seed` is the SplitMix64
/// finaliser of seed + (k + 1) * golden gamma. Any word can be computed
/// independently, so streams are reproducible bit-for-bit on every platform.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t word(std::uint64_t counter) const {
    std::uint64_t z = seed_ + (counter + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in (0, 1): 53 random bits, offset by half an ulp so log() is finite.
  double uniform(std::uint64_t counter) const {
    return (static_cast<double>(word(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Two independent standard normals (Box-Muller) from words 2k and 2k+1.
  std::pair<double, double> normal_pair(std::uint64_t k) const {
    const double r = std::sqrt(-2.0 * std::log(uniform(2 * k)));
    const double theta = 2.0 * constants::pi * uniform(2 * k + 1);
    return {r * std::cos(theta), r * std::sin(theta)};
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

}  // namespace qrng
