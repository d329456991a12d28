#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace rstmrf {

// Counter-based stream: output k is splitmix64(seed + k * golden). All variate
// transforms are implemented here so that a seed reproduces the same doubles on
// every standard library, which std::*_distribution does not guarantee.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed = 0) : seed_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  /// Standard normal (Marsaglia polar method).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  /// Exponential with the given rate.
  double exponential(double rate) { return -std::log(uniform_open()) / rate; }

  /// +1 or -1 with equal probability.
  double rademacher() { return ((*this)() >> 63) ? 1.0 : -1.0; }

  /// Inverse Gaussian (Wald) with mean mu and shape lambda; Michael, Schucany & Haas.
  double inverse_gaussian(double mu, double shape) {
    const double n = normal();
    const double a = mu * n * n / (2.0 * shape);
    // mu * (1 + a - sqrt(a^2 + 2a)) rewritten to avoid cancellation for large a
    const double x = mu / (1.0 + a + std::sqrt(a * a + 2.0 * a));
    return (uniform() * (mu + x) <= mu) ? x : mu * mu / x;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rstmrf
