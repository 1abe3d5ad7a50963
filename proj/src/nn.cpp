#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "chew/nn.hpp"
#include "chew/rng.hpp"

namespace chew::nn {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using VecMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
template <typename T>
using ConstVecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

template <typename T>
void check_conv_args(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias) {
  if (x.rank() != 2)
    throw std::invalid_argument("conv1d: input must be [ch, len], got " +
                                shape_to_string(x.shape));
  if (kernel.rank() != 3)
    throw std::invalid_argument("conv1d: kernel must be [out, in, k], got " +
                                shape_to_string(kernel.shape));
  if (bias.rank() != 1 || bias.shape[0] != kernel.shape[0])
    throw std::invalid_argument("conv1d: bias shape " + shape_to_string(bias.shape) +
                                " does not match kernel " + shape_to_string(kernel.shape));
  if (kernel.shape[1] != x.shape[0])
    throw std::invalid_argument("conv1d: input has " + std::to_string(x.shape[0]) +
                                " channels but kernel expects " +
                                std::to_string(kernel.shape[1]));
  if (x.shape[1] < kernel.shape[2])
    throw std::invalid_argument("conv1d: input length " + std::to_string(x.shape[1]) +
                                " shorter than kernel length " +
                                std::to_string(kernel.shape[2]));
}

/// Patch matrix for valid cross-correlation: cols[(i*k + j), t] = x[i, t + j].
template <typename T>
Tensor<T> im2col(const Tensor<T>& x, std::size_t k) {
  const std::size_t ci = x.shape[0], len = x.shape[1], lout = len - k + 1;
  Tensor<T> cols({ci * k, lout});
  for (std::size_t i = 0; i < ci; ++i)
    for (std::size_t j = 0; j < k; ++j)
      std::copy_n(x.ptr() + i * len + j, lout, cols.ptr() + (i * k + j) * lout);
  return cols;
}

}  // namespace

template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const Tensor<T>& kernel,
                         const Tensor<T>& bias) {
  check_conv_args(x, kernel, bias);
  const std::size_t ci = x.shape[0], co = kernel.shape[0], k = kernel.shape[2];
  const std::size_t lout = x.shape[1] - k + 1;

  const Tensor<T> cols = im2col(x, k);
  Tensor<T> y({co, lout});
  ConstMatMap<T> kmat(kernel.ptr(), static_cast<Eigen::Index>(co),
                      static_cast<Eigen::Index>(ci * k));
  ConstMatMap<T> cmat(cols.ptr(), static_cast<Eigen::Index>(ci * k),
                      static_cast<Eigen::Index>(lout));
  MatMap<T> ymat(y.ptr(), static_cast<Eigen::Index>(co), static_cast<Eigen::Index>(lout));
  ymat.noalias() = kmat * cmat;
  ConstVecMap<T> bvec(bias.ptr(), static_cast<Eigen::Index>(co));
  ymat.colwise() += bvec;
  return y;
}

template <typename T>
Conv1dGrads<T> conv1d_backward(const Tensor<T>& x, const Tensor<T>& kernel,
                               const Tensor<T>& upstream, bool need_grad_x) {
  // bias shape is implied by the kernel here; reuse the forward validation.
  Tensor<T> implied_bias({kernel.shape.empty() ? 0 : kernel.shape[0]});
  check_conv_args(x, kernel, implied_bias);
  const std::size_t ci = x.shape[0], len = x.shape[1];
  const std::size_t co = kernel.shape[0], k = kernel.shape[2];
  const std::size_t lout = len - k + 1;
  if (upstream.rank() != 2 || upstream.shape[0] != co || upstream.shape[1] != lout)
    throw std::invalid_argument("conv1d_backward: upstream shape " +
                                shape_to_string(upstream.shape) + " expected [" +
                                std::to_string(co) + ", " + std::to_string(lout) + "]");

  const Tensor<T> cols = im2col(x, k);
  ConstMatMap<T> umat(upstream.ptr(), static_cast<Eigen::Index>(co),
                      static_cast<Eigen::Index>(lout));
  ConstMatMap<T> cmat(cols.ptr(), static_cast<Eigen::Index>(ci * k),
                      static_cast<Eigen::Index>(lout));
  ConstMatMap<T> kmat(kernel.ptr(), static_cast<Eigen::Index>(co),
                      static_cast<Eigen::Index>(ci * k));

  Conv1dGrads<T> grads;
  grads.grad_bias = Tensor<T>({co});
  // Fixed-order row sums: Eigen's rowwise().sum() groups lanes differently
  // depending on the buffer address, which breaks bitwise reproducibility
  // when the same computation reruns on a reallocated buffer.
  for (std::size_t c = 0; c < co; ++c) {
    T acc{};
    const T* row = upstream.ptr() + c * lout;
    for (std::size_t t = 0; t < lout; ++t) acc += row[t];
    grads.grad_bias.data[c] = acc;
  }

  grads.grad_kernel = Tensor<T>({co, ci, k});
  MatMap<T> gk(grads.grad_kernel.ptr(), static_cast<Eigen::Index>(co),
               static_cast<Eigen::Index>(ci * k));
  gk.noalias() = umat * cmat.transpose();

  if (need_grad_x) {
    RowMat<T> patch_grads = kmat.transpose() * umat;  // [ci*k, lout]
    grads.grad_x = Tensor<T>({ci, len});
    for (std::size_t i = 0; i < ci; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> dst(
            grads.grad_x.ptr() + i * len + j, static_cast<Eigen::Index>(lout));
        dst += patch_grads.row(static_cast<Eigen::Index>(i * k + j));
      }
  }
  return grads;
}

template <typename T>
PoolResult<T> maxpool2_forward(const Tensor<T>& x) {
  if (x.rank() != 2)
    throw std::invalid_argument("maxpool2: input must be [ch, len], got " +
                                shape_to_string(x.shape));
  const std::size_t ch = x.shape[0], len = x.shape[1];
  if (len < 2) throw std::invalid_argument("maxpool2: input length must be >= 2");

  const std::size_t lout = len / 2;
  PoolResult<T> r;
  r.y = Tensor<T>({ch, lout});
  r.argmax.resize(ch * lout);
  r.input_ch = ch;
  r.input_len = len;
  for (std::size_t c = 0; c < ch; ++c) {
    const T* row = x.ptr() + c * len;
    for (std::size_t t = 0; t < lout; ++t) {
      const std::size_t a = 2 * t;
      const std::size_t best = row[a + 1] > row[a] ? a + 1 : a;  // ties keep first
      r.y.data[c * lout + t] = row[best];
      r.argmax[c * lout + t] = c * len + best;
    }
  }
  return r;
}

template <typename T>
PoolResult<T> adaptive_maxpool_forward(const Tensor<T>& x, std::size_t target_len) {
  if (x.rank() != 2)
    throw std::invalid_argument("adaptive_maxpool: input must be [ch, len], got " +
                                shape_to_string(x.shape));
  const std::size_t ch = x.shape[0], len = x.shape[1];
  if (target_len == 0)
    throw std::invalid_argument("adaptive_maxpool: target length must be positive");
  if (len < target_len)
    throw std::invalid_argument("adaptive_maxpool: input length " + std::to_string(len) +
                                " shorter than target " + std::to_string(target_len));

  PoolResult<T> r;
  r.y = Tensor<T>({ch, target_len});
  r.argmax.resize(ch * target_len);
  r.input_ch = ch;
  r.input_len = len;
  for (std::size_t c = 0; c < ch; ++c) {
    const T* row = x.ptr() + c * len;
    for (std::size_t b = 0; b < target_len; ++b) {
      const std::size_t lo = b * len / target_len;
      const std::size_t hi = (b + 1) * len / target_len;
      std::size_t best = lo;
      for (std::size_t t = lo + 1; t < hi; ++t)
        if (row[t] > row[best]) best = t;
      r.y.data[c * target_len + b] = row[best];
      r.argmax[c * target_len + b] = c * len + best;
    }
  }
  return r;
}

template <typename T>
Tensor<T> pool_backward(const PoolResult<T>& fwd, const Tensor<T>& upstream) {
  if (!upstream.same_shape(fwd.y))
    throw std::invalid_argument("pool_backward: upstream shape " +
                                shape_to_string(upstream.shape) + " expected " +
                                shape_to_string(fwd.y.shape));
  return pool_backward(fwd.argmax, fwd.input_ch, fwd.input_len, upstream);
}

template <typename T>
Tensor<T> pool_backward(const std::vector<std::size_t>& argmax, std::size_t input_ch,
                        std::size_t input_len, const Tensor<T>& upstream) {
  if (upstream.size() != argmax.size())
    throw std::invalid_argument("pool_backward: upstream has " +
                                std::to_string(upstream.size()) + " values for " +
                                std::to_string(argmax.size()) + " pooled outputs");
  Tensor<T> grad({input_ch, input_len});
  for (std::size_t o = 0; o < argmax.size(); ++o) grad.data[argmax[o]] += upstream.data[o];
  return grad;
}

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  if (x.rank() != 1 || w.rank() != 2 || b.rank() != 1 || w.shape[1] != x.shape[0] ||
      w.shape[0] != b.shape[0])
    throw std::invalid_argument("dense: incompatible shapes x=" +
                                shape_to_string(x.shape) + " w=" +
                                shape_to_string(w.shape) + " b=" +
                                shape_to_string(b.shape));
  const auto out = static_cast<Eigen::Index>(w.shape[0]);
  const auto in = static_cast<Eigen::Index>(w.shape[1]);
  Tensor<T> y({w.shape[0]});
  VecMap<T>(y.ptr(), out).noalias() =
      ConstMatMap<T>(w.ptr(), out, in) * ConstVecMap<T>(x.ptr(), in) +
      ConstVecMap<T>(b.ptr(), out);
  return y;
}

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& x, const Tensor<T>& w,
                             const Tensor<T>& upstream) {
  if (x.rank() != 1 || w.rank() != 2 || w.shape[1] != x.shape[0])
    throw std::invalid_argument("dense_backward: incompatible shapes x=" +
                                shape_to_string(x.shape) + " w=" +
                                shape_to_string(w.shape));
  if (upstream.rank() != 1 || upstream.shape[0] != w.shape[0])
    throw std::invalid_argument("dense_backward: upstream shape " +
                                shape_to_string(upstream.shape) + " expected [" +
                                std::to_string(w.shape[0]) + "]");
  const auto out = static_cast<Eigen::Index>(w.shape[0]);
  const auto in = static_cast<Eigen::Index>(w.shape[1]);

  DenseGrads<T> grads;
  grads.grad_x = Tensor<T>({w.shape[1]});
  grads.grad_w = Tensor<T>({w.shape[0], w.shape[1]});
  grads.grad_b = upstream;
  VecMap<T>(grads.grad_x.ptr(), in).noalias() =
      ConstMatMap<T>(w.ptr(), out, in).transpose() * ConstVecMap<T>(upstream.ptr(), out);
  MatMap<T>(grads.grad_w.ptr(), out, in).noalias() =
      ConstVecMap<T>(upstream.ptr(), out) * ConstVecMap<T>(x.ptr(), in).transpose();
  return grads;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (T& v : y.data) v = v > T{0} ? v : T{0};
  return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& y, const Tensor<T>& upstream) {
  if (!y.same_shape(upstream))
    throw std::invalid_argument("relu_backward: shape mismatch " +
                                shape_to_string(y.shape) + " vs " +
                                shape_to_string(upstream.shape));
  Tensor<T> grad = upstream;
  for (std::size_t i = 0; i < grad.data.size(); ++i)
    if (!(y.data[i] > T{0})) grad.data[i] = T{0};
  return grad;
}

template <typename T>
Tensor<T> sigmoid_forward(const Tensor<T>& x) {
  // Clamp to the open interval so saturated outputs never round to exactly
  // 0 or 1, which would blow up downstream log terms.
  const T lo = std::nextafter(T{0}, T{1});
  const T hi = std::nextafter(T{1}, T{0});
  Tensor<T> y = x;
  for (T& v : y.data) {
    const double d = static_cast<double>(v);
    const double s = d >= 0.0 ? 1.0 / (1.0 + std::exp(-d))
                              : std::exp(d) / (1.0 + std::exp(d));
    v = std::clamp(static_cast<T>(s), lo, hi);
  }
  return y;
}

template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& y, const Tensor<T>& upstream) {
  if (!y.same_shape(upstream))
    throw std::invalid_argument("sigmoid_backward: shape mismatch " +
                                shape_to_string(y.shape) + " vs " +
                                shape_to_string(upstream.shape));
  Tensor<T> grad = upstream;
  for (std::size_t i = 0; i < grad.data.size(); ++i)
    grad.data[i] *= y.data[i] * (T{1} - y.data[i]);
  return grad;
}

GradCheckResult grad_check(DiffProblem& problem, const std::vector<double>& point,
                           const GradCheckOptions& options) {
  if (point.size() != problem.dim())
    throw std::invalid_argument("grad_check: point has " + std::to_string(point.size()) +
                                " coords, problem expects " +
                                std::to_string(problem.dim()));
  if (!(options.step > 0.0))
    throw std::invalid_argument("grad_check: step must be positive");

  const std::vector<double> analytic = problem.analytic_grad(point);
  if (analytic.size() != point.size())
    throw std::runtime_error("grad_check: analytic gradient size mismatch");

  std::vector<std::size_t> coords(point.size());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (options.max_coords != 0 && options.max_coords < coords.size()) {
    SeededRng rng(mix_seed({options.seed, 0x9cadc0de}));
    rng.shuffle(coords.begin(), coords.end());
    coords.resize(options.max_coords);
  }

  std::vector<double> p = point;
  GradCheckResult res;
  res.coords_checked = coords.size();
  for (std::size_t i : coords) {
    const double orig = p[i];
    p[i] = orig + options.step;
    const double fp = problem.eval(p);
    p[i] = orig - options.step;
    const double fm = problem.eval(p);
    p[i] = orig;
    const double numeric = (fp - fm) / (2.0 * options.step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-12});
    res.max_rel_error = std::max(res.max_rel_error, std::abs(analytic[i] - numeric) / denom);
  }
  return res;
}

#define CHEW_NN_INSTANTIATE(T)                                                        \
  template Tensor<T> conv1d_forward<T>(const Tensor<T>&, const Tensor<T>&,            \
                                       const Tensor<T>&);                             \
  template Conv1dGrads<T> conv1d_backward<T>(const Tensor<T>&, const Tensor<T>&,      \
                                             const Tensor<T>&, bool);                 \
  template PoolResult<T> maxpool2_forward<T>(const Tensor<T>&);                       \
  template PoolResult<T> adaptive_maxpool_forward<T>(const Tensor<T>&, std::size_t);  \
  template Tensor<T> pool_backward<T>(const PoolResult<T>&, const Tensor<T>&);        \
  template Tensor<T> pool_backward<T>(const std::vector<std::size_t>&, std::size_t,   \
                                      std::size_t, const Tensor<T>&);                 \
  template Tensor<T> dense_forward<T>(const Tensor<T>&, const Tensor<T>&,             \
                                      const Tensor<T>&);                              \
  template DenseGrads<T> dense_backward<T>(const Tensor<T>&, const Tensor<T>&,        \
                                           const Tensor<T>&);                         \
  template Tensor<T> relu_forward<T>(const Tensor<T>&);                               \
  template Tensor<T> relu_backward<T>(const Tensor<T>&, const Tensor<T>&);            \
  template Tensor<T> sigmoid_forward<T>(const Tensor<T>&);                            \
  template Tensor<T> sigmoid_backward<T>(const Tensor<T>&, const Tensor<T>&);

CHEW_NN_INSTANTIATE(float)
CHEW_NN_INSTANTIATE(double)
#undef CHEW_NN_INSTANTIATE

}  // namespace chew::nn
