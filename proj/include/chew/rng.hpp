#pragma once

#include <cstdint>
#include <initializer_list>
#include <utility>

namespace chew {

/// Deterministic PRNG (xoshiro256++ seeded via splitmix64).
///
/// All stochastic behaviour in the project flows through this class so that
/// runs are reproducible bit-for-bit across compilers; standard-library
/// distributions are implementation-defined and deliberately avoided.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform();

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (two uniforms consumed per call).
  double normal();

  /// Uniform integer in [0, n), rejection-sampled (n > 0).
  std::uint64_t below(std::uint64_t n);

  /// In-place Fisher-Yates shuffle.
  template <typename RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    const std::uint64_t n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const std::uint64_t j = below(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

/// splitmix64 step; advances `state` and returns the next value.
std::uint64_t splitmix64_next(std::uint64_t& state);

/// Combines several seed components into one stream seed. Used for
/// per-(seed, epoch, index) augmentation streams and similar derivations.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts);

}  // namespace chew
