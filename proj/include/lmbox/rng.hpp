#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace lmbox {

/// SplitMix64 generator. Small state, splittable by key mixing, and entirely
/// deterministic across platforms, which keeps Monte Carlo runs reproducible
/// no matter how trials are scheduled.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Poisson draw. Knuth's product method for small means, a rounded normal
  /// approximation once the product would underflow.
  int poisson(double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
    if (mean == 0.0) return 0;
    if (mean > 30.0) {
      const double x = mean + std::sqrt(mean) * normal();
      return x < 0.0 ? 0 : static_cast<int>(std::lround(x));
    }
    const double limit = std::exp(-mean);
    int k = 0;
    double product = 1.0;
    do {
      ++k;
      product *= uniform();
    } while (product > limit);
    return k - 1;
  }

 private:
  uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Derives a child seed from a parent seed and a stream index. Chaining
/// mix_seed(seed, trial) -> (, sensor) -> (, frame) gives every scan its own
/// decorrelated substream.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  SplitMix64 g(seed ^ (0x632be59bd9b4e019ULL * (stream + 1)));
  return g.next();
}

}  // namespace lmbox
