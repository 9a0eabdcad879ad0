#pragma once

// Pinned pseudorandom machinery. Every random quantity the engine produces is
// drawn from a Stream keyed by (seed, index), so results depend only on the
// key and never on evaluation order or thread count.
//
//   key mixing    : SplitMix64 finalizer
//   state seeding : four SplitMix64 outputs from the mixed key
//   generator     : xoshiro256** 1.0
//   uniform01     : top 53 bits * 2^-53, in [0, 1)
//   normal        : Box-Muller, cosine branch only
//   binomial      : inversion when n*min(p,1-p) < 30, Bernoulli sum otherwise

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace causal::rng {

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t state) noexcept : state_(state) {}
  constexpr std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64_mix(state_);
  }

 private:
  std::uint64_t state_;
};

/// xoshiro256** substream. Satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  Stream(std::uint64_t seed, std::uint64_t index) noexcept {
    const std::uint64_t key =
        splitmix64_mix(seed) ^ splitmix64_mix(index + 0x632be59bd9b4e019ULL);
    SplitMix64 sm(key);
    for (auto& s : s_) s = sm.next();
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  double uniform01() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform01();
  }

  /// Uniform integer in [0, bound) by Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound) noexcept {
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>((*this)()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double normal(double mean = 0.0, double sd = 1.0) noexcept {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sd * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  bool bernoulli(double p) noexcept { return uniform01() < p; }

  std::uint64_t binomial(std::uint64_t n, double p) noexcept {
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    const bool flip = p > 0.5;
    const double q = flip ? 1.0 - p : p;
    std::uint64_t k = 0;
    if (static_cast<double>(n) * q < 30.0) {
      const double ratio = q / (1.0 - q);
      double f = std::pow(1.0 - q, static_cast<double>(n));
      double u = uniform01();
      while (u > f && k < n) {
        u -= f;
        f *= ratio * static_cast<double>(n - k) / static_cast<double>(k + 1);
        ++k;
      }
    } else {
      for (std::uint64_t i = 0; i < n; ++i) k += bernoulli(q) ? 1 : 0;
    }
    return flip ? n - k : k;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

}  // namespace causal::rng
