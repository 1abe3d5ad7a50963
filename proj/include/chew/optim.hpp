#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "chew/tensor.hpp"

namespace chew::optim {

/// LARS hyperparameters. Tensors whose name satisfies `adaptation_exempt`
/// (biases, by default) skip both the trust ratio and weight decay.
struct LarsConfig {
  double base_lr = 0.3;
  double momentum = 0.9;
  double weight_decay = 1e-6;
  double trust_coefficient = 1e-3;
  std::function<bool(const std::string&)> adaptation_exempt = [](const std::string& name) {
    return name.ends_with("/bias");
  };
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Linear warmup over the first warmup_fraction of epochs, then cosine decay
/// from max_lr to zero.
struct ScheduleConfig {
  std::size_t total_epochs = 100;
  double warmup_fraction = 0.1;
  double max_lr = 0.3;
};

/// Learning rate for 1-based epoch e. With W = warmup_fraction * E:
/// e <= W -> max_lr * e / W; otherwise the half-cosine from max_lr at W to
/// zero at E.
double lr_at_epoch(std::size_t e, const ScheduleConfig& cfg);

/// Parameters are updated in place; gradients must be name- and
/// shape-parallel to them.
template <typename T>
using ParamRefs = std::vector<std::pair<std::string, Tensor<T>*>>;

template <typename T>
using GradRefs = std::vector<std::pair<std::string, const Tensor<T>*>>;

/// Momentum buffers keyed by parameter name, created lazily at zero.
template <typename T>
struct LarsState {
  std::map<std::string, std::vector<T>> momentum;
};

/// Per tensor: g' = grad + weight_decay * w; trust ratio
/// r = trust_coefficient * ||w|| / ||g'|| when both norms are positive,
/// else 1; m <- momentum * m + r * lr * g'; w <- w - m. Exempt tensors use
/// r = 1 and no decay.
template <typename T>
void lars_step(ParamRefs<T>& params, const GradRefs<T>& grads, LarsState<T>& state,
               double lr, const LarsConfig& cfg);

/// First and second moment buffers keyed by parameter name.
template <typename T>
struct AdamState {
  std::map<std::string, std::vector<T>> m;
  std::map<std::string, std::vector<T>> v;
};

/// Standard bias-corrected Adam; t is the 1-based step count.
template <typename T>
void adam_step(ParamRefs<T>& params, const GradRefs<T>& grads, AdamState<T>& state,
               const AdamConfig& cfg, std::size_t t);

}  // namespace chew::optim
