#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

#include "hlc/errors.hpp"

namespace hlc {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Splittable 64-bit generator: xoshiro256++ streams keyed through splitmix64.
// substream() derives an independent child stream from integer tags, so every
// (cell, replicate, purpose) triple in a simulation gets its own reproducible
// stream regardless of scheduling order.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = detail::splitmix64(sm);
    key_ = seed;
  }

  SplitRng substream(std::initializer_list<std::uint64_t> tags) const {
    std::uint64_t sm = key_ ^ 0xa02b9fe5e8f9b7a1ULL;
    for (std::uint64_t t : tags) {
      sm ^= detail::splitmix64(sm) + t;
      (void)detail::splitmix64(sm);
    }
    return SplitRng(detail::splitmix64(sm));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl(s_[3], 45);
    return result;
  }

  // uniform on (0, 1]; never returns 0 so log() is safe
  double uniform01() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // Marsaglia polar method
    for (;;) {
      double u = 2.0 * uniform01() - 1.0;
      double v = 2.0 * uniform01() - 1.0;
      double q = u * u + v * v;
      if (q > 0.0 && q < 1.0) {
        double f = std::sqrt(-2.0 * std::log(q) / q);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
      }
    }
  }

  // Gamma(shape, rate 1), Marsaglia-Tsang; shape < 1 boosted via u^{1/shape}
  double gamma(double shape) {
    if (!(shape > 0.0)) throw ConfigError("gamma: shape must be positive");
    if (shape < 1.0) {
      double u = uniform01();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double t = 1.0 + c * x;
      if (t <= 0.0) continue;
      double v = t * t * t;
      double u = uniform01();
      double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

 private:
  std::uint64_t s_[4];
  std::uint64_t key_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace hlc
