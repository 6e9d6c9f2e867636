// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace stratdisc {

/// Deterministic generator. Uniform draws are built from raw bits so that
/// streams do not depend on the standard library's distribution code.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : eng_(mix(seed)) {}

  /// Derive an independent stream from a base seed and a stream tag.
  static Rng stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0) {
    return Rng(mix(seed ^ mix(tag + 0x9e3779b97f4a7c15ULL * (index + 1))));
  }

  std::uint64_t next() { return eng_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n) {
    if (n <= 1) return 0;
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
  }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace stratdisc
