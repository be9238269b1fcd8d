#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace wlasso {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seeded random stream. Replicate streams are derived from
/// (seed, cell, replicate) so results do not depend on scheduling.
/// Normal variates use the Marsaglia polar method on raw 53-bit uniforms,
/// keeping draws identical across standard-library implementations.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  static RngStream derive(std::uint64_t seed, std::uint64_t cell, std::uint64_t replicate) {
    std::uint64_t s = seed;
    splitmix64(s);
    s ^= 0x2545f4914f6cdd1dULL * (cell + 1);
    splitmix64(s);
    s ^= 0x9e3779b97f4a7c15ULL * (replicate + 1);
    return RngStream(splitmix64(s));
  }

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

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
    double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  /// Uniform +1/-1.
  int sign() { return (next_u64() & 1ULL) ? 1 : -1; }

  /// Uniform index in [0, bound), rejection sampled to avoid modulo bias.
  std::uint64_t uniform_index(std::uint64_t bound) {
    std::uint64_t threshold = (~bound + 1) % bound;  // 2^64 mod bound
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace wlasso
