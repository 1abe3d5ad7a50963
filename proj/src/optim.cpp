#include "chew/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace chew::optim {

namespace {

void check_schedule(const ScheduleConfig& cfg) {
  if (cfg.total_epochs < 1)
    throw std::invalid_argument("lr_at_epoch: total_epochs must be at least 1");
  if (!(cfg.warmup_fraction >= 0.0) || cfg.warmup_fraction >= 1.0)
    throw std::invalid_argument("lr_at_epoch: warmup_fraction must be in [0, 1)");
  if (!(cfg.max_lr > 0.0)) throw std::invalid_argument("lr_at_epoch: max_lr must be positive");
}

template <typename T>
void check_pairing(const ParamRefs<T>& params, const GradRefs<T>& grads,
                   const char* who) {
  if (params.size() != grads.size())
    throw std::invalid_argument(std::string(who) + ": parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].first != grads[i].first)
      throw std::invalid_argument(std::string(who) + ": parameter/gradient name mismatch at '" +
                                  params[i].first + "' vs '" + grads[i].first + "'");
    if (params[i].second->shape != grads[i].second->shape)
      throw std::invalid_argument(std::string(who) + ": shape mismatch for '" +
                                  params[i].first + "'");
  }
}

template <typename T>
std::vector<T>& buffer(std::map<std::string, std::vector<T>>& store, const std::string& name,
                       std::size_t size, const char* who) {
  auto [it, inserted] = store.try_emplace(name, size, T(0));
  if (!inserted && it->second.size() != size)
    throw std::invalid_argument(std::string(who) + ": state size mismatch for '" + name + "'");
  return it->second;
}

}  // namespace

double lr_at_epoch(std::size_t e, const ScheduleConfig& cfg) {
  check_schedule(cfg);
  const double total = static_cast<double>(cfg.total_epochs);
  if (e < 1 || e > cfg.total_epochs)
    throw std::invalid_argument("lr_at_epoch: epoch must be in [1, " +
                                std::to_string(cfg.total_epochs) + "]");
  const double warm = cfg.warmup_fraction * total;
  const double epoch = static_cast<double>(e);
  if (epoch <= warm) return cfg.max_lr * epoch / warm;
  const double pi = std::acos(-1.0);
  return cfg.max_lr * 0.5 * (1.0 + std::cos(pi * (epoch - warm) / (total - warm)));
}

template <typename T>
void lars_step(ParamRefs<T>& params, const GradRefs<T>& grads, LarsState<T>& state,
               double lr, const LarsConfig& cfg) {
  if (!(lr >= 0.0)) throw std::invalid_argument("lars_step: learning rate must be non-negative");
  if (!(cfg.momentum >= 0.0) || cfg.momentum >= 1.0)
    throw std::invalid_argument("lars_step: momentum must be in [0, 1)");
  if (!(cfg.weight_decay >= 0.0))
    throw std::invalid_argument("lars_step: weight_decay must be non-negative");
  if (!(cfg.trust_coefficient > 0.0))
    throw std::invalid_argument("lars_step: trust_coefficient must be positive");
  if (!cfg.adaptation_exempt)
    throw std::invalid_argument("lars_step: adaptation_exempt predicate must be set");
  check_pairing(params, grads, "lars_step");

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T>& w = *params[i].second;
    const Tensor<T>& g = *grads[i].second;
    std::vector<T>& m = buffer(state.momentum, params[i].first, w.size(), "lars_step");
    const bool exempt = cfg.adaptation_exempt(params[i].first);
    const T wd = exempt ? T(0) : static_cast<T>(cfg.weight_decay);

    T ratio = T(1);
    if (!exempt) {
      double wnorm = 0.0, gnorm = 0.0;
      for (std::size_t j = 0; j < w.size(); ++j) {
        const T gp = g[j] + wd * w[j];
        wnorm += static_cast<double>(w[j]) * static_cast<double>(w[j]);
        gnorm += static_cast<double>(gp) * static_cast<double>(gp);
      }
      if (wnorm > 0.0 && gnorm > 0.0)
        ratio = static_cast<T>(cfg.trust_coefficient * std::sqrt(wnorm) / std::sqrt(gnorm));
    }

    const T scale = ratio * static_cast<T>(lr);
    const T mu = static_cast<T>(cfg.momentum);
    for (std::size_t j = 0; j < w.size(); ++j) {
      const T gp = g[j] + wd * w[j];
      m[j] = mu * m[j] + scale * gp;
      w[j] -= m[j];
    }
  }
}

template <typename T>
void adam_step(ParamRefs<T>& params, const GradRefs<T>& grads, AdamState<T>& state,
               const AdamConfig& cfg, std::size_t t) {
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("adam_step: lr must be positive");
  if (!(cfg.beta1 >= 0.0) || cfg.beta1 >= 1.0 || !(cfg.beta2 >= 0.0) || cfg.beta2 >= 1.0)
    throw std::invalid_argument("adam_step: betas must be in [0, 1)");
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("adam_step: epsilon must be positive");
  if (t < 1) throw std::invalid_argument("adam_step: step count is 1-based");
  check_pairing(params, grads, "adam_step");

  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T mc = static_cast<T>(1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
  const T vc = static_cast<T>(1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
  const T lr = static_cast<T>(cfg.lr);
  const T eps = static_cast<T>(cfg.epsilon);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T>& w = *params[i].second;
    const Tensor<T>& g = *grads[i].second;
    std::vector<T>& m = buffer(state.m, params[i].first, w.size(), "adam_step");
    std::vector<T>& v = buffer(state.v, params[i].first, w.size(), "adam_step");
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = b1 * m[j] + (T(1) - b1) * g[j];
      v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
      w[j] -= lr * (m[j] / mc) / (std::sqrt(v[j] / vc) + eps);
    }
  }
}

#define CHEW_OPTIM_INSTANTIATE(T)                                                      \
  template void lars_step<T>(ParamRefs<T>&, const GradRefs<T>&, LarsState<T>&, double, \
                             const LarsConfig&);                                       \
  template void adam_step<T>(ParamRefs<T>&, const GradRefs<T>&, AdamState<T>&,         \
                             const AdamConfig&, std::size_t);

CHEW_OPTIM_INSTANTIATE(float)
CHEW_OPTIM_INSTANTIATE(double)

}  // namespace chew::optim
