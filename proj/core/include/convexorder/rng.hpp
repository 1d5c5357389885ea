#pragma once

#include <cmath>
#include <cstdint>

namespace convexorder::rng {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: each draw hashes (key, counter), so streams are
/// cheap to split and replay independently of scheduling. One stream per
/// simulated path keeps results bit-identical under any thread count.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static CounterRng stream(std::uint64_t seed, std::uint64_t salt, std::uint64_t index) {
    std::uint64_t k = mix64(seed);
    k = mix64(k ^ mix64(salt ^ 0xa076'1d64'78bd'642fULL));
    k = mix64(k ^ mix64(index ^ 0xe703'7ed1'a0b4'28dbULL));
    return CounterRng(k);
  }

  std::uint64_t next_u64() {
    std::uint64_t z = key_ + (++ctr_) * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on (0, 1].
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * (1.0 / 9007199254740992.0);
  }

  /// Standard normal via Box-Muller, pairs cached.
  double next_normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  /// Poisson count by Knuth's product method; large means are split into
  /// chunks of at most 16 (sums of Poissons are Poisson) to bound the loop
  /// and avoid exp underflow.
  std::uint64_t next_poisson(double mean) {
    std::uint64_t total = 0;
    while (mean > 16.0) {
      total += poisson_knuth(16.0);
      mean -= 16.0;
    }
    if (mean > 0.0) total += poisson_knuth(mean);
    return total;
  }

 private:
  std::uint64_t poisson_knuth(double mean) {
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= next_unit();
    } while (p > limit);
    return k - 1;
  }

  std::uint64_t key_ = 0;
  std::uint64_t ctr_ = 0;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace convexorder::rng
