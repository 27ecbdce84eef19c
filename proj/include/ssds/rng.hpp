#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace ssds {

/// Seeded generator with portable draws.
///
/// std::mt19937_64's raw output is fixed by the standard, but the standard
/// distributions are not, so every draw used by the library goes through the
/// helpers below. Same seed means the same stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01();

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal (Box-Muller, one draw per call).
  double normal();

  /// Fisher-Yates shuffle.
  void shuffle(std::span<std::size_t> items);

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to derive independent per-item seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace ssds
