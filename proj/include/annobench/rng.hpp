#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace annobench {

// splitmix64 stream. All randomness in the project (random-query baseline,
// phantom jitter and noise) flows through this generator so that runs are
// reproducible bit for bit from a single integer seed.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53 mantissa bits.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log() argument.
  double next_unit_positive() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform integer in [0, n) by rejection sampling on the high bits of the
  // raw 64-bit output. n == 1 returns 0 without consuming a draw.
  std::uint64_t next_below(std::uint64_t n) {
    if (n <= 1) return 0;
    const int bits = std::bit_width(n - 1);
    for (;;) {
      const std::uint64_t v = next() >> (64 - bits);
      if (v < n) return v;
    }
  }

  // Standard normal via Box-Muller, cosine branch only. Two uniform draws
  // per variate; no cached state.
  double next_gaussian() {
    const double u1 = next_unit_positive();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

// Decorrelated per-stream seed (e.g. one stream per phantom case).
inline std::uint64_t derive_stream_seed(std::uint64_t seed,
                                        std::uint64_t stream) {
  return seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
}

}  // namespace annobench
