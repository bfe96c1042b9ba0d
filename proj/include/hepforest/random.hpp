#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace hepforest {

// SplitMix64 finalizer. Used to derive independent seeds for per-tree and
// per-stage streams so results do not depend on scheduling order.
inline constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return mix_seed(mix_seed(parent) ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

// Seeded generator with platform-independent draws. std::mt19937_64 output is
// fully specified by the standard; the std:: distributions are not, so the
// conversions below are done by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (lo, hi). Requires lo < hi.
  double uniform_open(double lo, double hi) {
    for (;;) {
      const double v = lo + (hi - lo) * uniform01();
      if (v > lo && v < hi) return v;
    }
  }

  // Uniform integer in [0, n). Requires n > 0. Rejection sampling, no modulo bias.
  std::size_t uniform_index(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return static_cast<std::size_t>(v % bound);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hepforest
