#pragma once

#include <cstdint>
#include <vector>

#include "chew/rng.hpp"

namespace chew::augment {

/// Ranges of the two augmentations: T1 scales a whole window by one
/// uniform draw, T2 adds bounded uniform noise per sample.
struct AugmentConfig {
  double amp_low = 0.5;
  double amp_high = 2.0;
  double noise_bound = 0.005;
  std::uint64_t seed = 0;
};

/// Views ordered [T1(x_1)..T1(x_n), T2(x_1)..T2(x_n)]; the positive pair of
/// view i is view i+n.
template <typename T>
struct ContrastiveBatch {
  std::vector<std::vector<T>> samples;
  std::size_t n = 0;
};

/// T1: one amplification factor drawn uniformly from [amp_low, amp_high]
/// per call, applied to every sample of the window.
template <typename T>
std::vector<T> amplify(const std::vector<T>& x, const AugmentConfig& cfg, SeededRng& rng);

/// T2: adds i.i.d. uniform noise in [-noise_bound, +noise_bound] per sample.
template <typename T>
std::vector<T> add_noise(const std::vector<T>& x, const AugmentConfig& cfg,
                         SeededRng& rng);

/// Doubles a batch: first half amplified copies (T1), second half noisy
/// copies (T2), in window order. Every view draws from its own stream seeded
/// by (cfg.seed, epoch, source index, view kind), so a window's views do not
/// depend on which other windows share the batch or on their order. Needs
/// n >= 2 windows of equal length; `indices` parallels `windows` and names
/// each window's position in the full corpus.
template <typename T>
ContrastiveBatch<T> double_batch(const std::vector<std::vector<T>>& windows,
                                 const AugmentConfig& cfg, std::uint64_t epoch,
                                 const std::vector<std::size_t>& indices);

}  // namespace chew::augment
