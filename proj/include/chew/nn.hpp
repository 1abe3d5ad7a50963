#pragma once

#include <cstdint>
#include <vector>

#include "chew/tensor.hpp"

namespace chew::nn {

/// Gradients of conv1d_forward. grad_x is empty when the caller skipped it
/// (first layer of a network needs no input gradient).
template <typename T>
struct Conv1dGrads {
  Tensor<T> grad_x;
  Tensor<T> grad_kernel;
  Tensor<T> grad_bias;
};

template <typename T>
struct DenseGrads {
  Tensor<T> grad_x;
  Tensor<T> grad_w;
  Tensor<T> grad_b;
};

/// Pooling output plus the flat input index that won each output slot,
/// which is all the backward pass needs.
template <typename T>
struct PoolResult {
  Tensor<T> y;
  std::vector<std::size_t> argmax;  // flat indices into the pooled input
  std::size_t input_ch = 0;
  std::size_t input_len = 0;
};

/// Valid (no padding) cross-correlation:
/// y[c,t] = bias[c] + sum_{i,j} kernel[c,i,j] * x[i,t+j].
/// x: [ch_in, L], kernel: [ch_out, ch_in, k], bias: [ch_out] -> [ch_out, L-k+1].
template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const Tensor<T>& kernel,
                         const Tensor<T>& bias);

/// Exact gradients of conv1d_forward with respect to x, kernel and bias.
/// Pass need_grad_x = false at the network input to skip the grad_x GEMM.
template <typename T>
Conv1dGrads<T> conv1d_backward(const Tensor<T>& x, const Tensor<T>& kernel,
                               const Tensor<T>& upstream, bool need_grad_x = true);

/// Non-overlapping 2:1 max-pool; an odd trailing element is dropped.
/// Ties resolve to the first (lower) index.
template <typename T>
PoolResult<T> maxpool2_forward(const Tensor<T>& x);

/// Max over target_len bins; bin b covers [floor(b*L/T), floor((b+1)*L/T)).
template <typename T>
PoolResult<T> adaptive_maxpool_forward(const Tensor<T>& x, std::size_t target_len);

/// Routes each upstream value to its recorded argmax position, zero elsewhere.
/// Shared by maxpool2 and adaptive_maxpool.
template <typename T>
Tensor<T> pool_backward(const PoolResult<T>& fwd, const Tensor<T>& upstream);

/// Same routing from the bare argmax record (lets callers drop the pooled
/// values once forward is done).
template <typename T>
Tensor<T> pool_backward(const std::vector<std::size_t>& argmax, std::size_t input_ch,
                        std::size_t input_len, const Tensor<T>& upstream);

/// y = W x + b. x: [in], w: [out, in], b: [out] -> [out].
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& x, const Tensor<T>& w,
                             const Tensor<T>& upstream);

/// Elementwise max(0, x), any shape.
template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x);

/// Subgradient at 0 is 0; takes the forward *output* (y > 0 iff x > 0).
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& y, const Tensor<T>& upstream);

/// Elementwise logistic 1/(1+e^{-x}), numerically stable for large |x|.
template <typename T>
Tensor<T> sigmoid_forward(const Tensor<T>& x);

/// Gradient through the sigmoid given its forward output: y*(1-y)*upstream.
template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& y, const Tensor<T>& upstream);

/// A scalar-valued differentiable function of a flat coordinate vector
/// (parameters and/or inputs concatenated), for finite-difference checks.
class DiffProblem {
 public:
  virtual ~DiffProblem() = default;
  virtual std::size_t dim() const = 0;
  virtual double eval(const std::vector<double>& coords) = 0;
  virtual std::vector<double> analytic_grad(const std::vector<double>& coords) = 0;
};

struct GradCheckOptions {
  double step = 1e-6;
  /// 0 = check every coordinate; otherwise check this many, sampled with `seed`.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
};

/// Central-difference check of analytic_grad at `point`. Relative error per
/// coordinate uses denominator max(|analytic|, |numeric|, 1e-12).
GradCheckResult grad_check(DiffProblem& problem, const std::vector<double>& point,
                           const GradCheckOptions& options = {});

}  // namespace chew::nn
