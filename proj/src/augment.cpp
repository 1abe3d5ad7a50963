#include <stdexcept>
#include <string>

#include "chew/augment.hpp"

namespace chew::augment {
namespace {

void check_config(const AugmentConfig& cfg) {
  if (!(cfg.amp_low <= cfg.amp_high))
    throw std::invalid_argument("augment: amp_low must be <= amp_high");
  if (!(cfg.noise_bound >= 0.0))
    throw std::invalid_argument("augment: noise_bound must be non-negative");
}

}  // namespace

template <typename T>
std::vector<T> amplify(const std::vector<T>& x, const AugmentConfig& cfg, SeededRng& rng) {
  check_config(cfg);
  const double alpha = rng.uniform(cfg.amp_low, cfg.amp_high);
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = static_cast<T>(alpha * static_cast<double>(x[i]));
  return out;
}

template <typename T>
std::vector<T> add_noise(const std::vector<T>& x, const AugmentConfig& cfg,
                         SeededRng& rng) {
  check_config(cfg);
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = rng.uniform(-cfg.noise_bound, cfg.noise_bound);
    out[i] = static_cast<T>(static_cast<double>(x[i]) + v);
  }
  return out;
}

template <typename T>
ContrastiveBatch<T> double_batch(const std::vector<std::vector<T>>& windows,
                                 const AugmentConfig& cfg, std::uint64_t epoch,
                                 const std::vector<std::size_t>& indices) {
  check_config(cfg);
  if (windows.size() < 2)
    throw std::invalid_argument("double_batch: need at least 2 windows, got " +
                                std::to_string(windows.size()));
  if (indices.size() != windows.size())
    throw std::invalid_argument("double_batch: expected " +
                                std::to_string(windows.size()) + " indices, got " +
                                std::to_string(indices.size()));
  for (const auto& w : windows)
    if (w.size() != windows.front().size())
      throw std::invalid_argument("double_batch: windows differ in length");

  constexpr std::uint64_t kSaltT1 = 0x7431u;
  constexpr std::uint64_t kSaltT2 = 0x7432u;
  ContrastiveBatch<T> batch;
  batch.n = windows.size();
  batch.samples.reserve(2 * batch.n);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    SeededRng rng(mix_seed({cfg.seed, kSaltT1, epoch, indices[i]}));
    batch.samples.push_back(amplify(windows[i], cfg, rng));
  }
  for (std::size_t i = 0; i < windows.size(); ++i) {
    SeededRng rng(mix_seed({cfg.seed, kSaltT2, epoch, indices[i]}));
    batch.samples.push_back(add_noise(windows[i], cfg, rng));
  }
  return batch;
}

#define CHEW_AUGMENT_INSTANTIATE(T)                                                \
  template std::vector<T> amplify<T>(const std::vector<T>&, const AugmentConfig&,  \
                                     SeededRng&);                                  \
  template std::vector<T> add_noise<T>(const std::vector<T>&, const AugmentConfig&, \
                                       SeededRng&);                                \
  template ContrastiveBatch<T> double_batch<T>(const std::vector<std::vector<T>>&, \
                                               const AugmentConfig&, std::uint64_t, \
                                               const std::vector<std::size_t>&);

CHEW_AUGMENT_INSTANTIATE(float)
CHEW_AUGMENT_INSTANTIATE(double)
#undef CHEW_AUGMENT_INSTANTIATE

}  // namespace chew::augment
