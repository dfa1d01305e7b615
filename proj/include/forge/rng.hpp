#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace forge {

/// Deterministic random source. mt19937_64 has a standard-specified output
/// sequence, and the value transforms below are hand-rolled, so any two
/// builds produce identical streams for the same seed (std::*_distribution
/// implementations are not portable across standard libraries).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], bounds inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    auto range = static_cast<std::uint64_t>(hi - lo) + 1;
    auto scaled = static_cast<std::uint64_t>(
        (static_cast<__uint128_t>(engine_()) * range) >> 64);
    return lo + static_cast<std::int64_t>(scaled);
  }

  /// Standard normal via Box-Muller; generates pairs and caches the spare.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  std::uint64_t raw() { return engine_(); }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace forge
