#include "chew/objective.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace chew::objective {

namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
void check_tau(T tau) {
  if (!(tau > T(0))) throw std::invalid_argument("ntxent: temperature must be positive");
}

template <typename T>
void check_batch(const EmbeddingBatch<T>& batch) {
  if (batch.n < 1) throw std::invalid_argument("ntxent: batch must contain at least one pair");
  if (batch.vectors.size() != 2 * batch.n)
    throw std::invalid_argument("ntxent: expected " + std::to_string(2 * batch.n) +
                                " embeddings, have " + std::to_string(batch.vectors.size()));
  const std::size_t dim = batch.vectors.front().size();
  if (dim == 0) throw std::invalid_argument("ntxent: empty embedding");
  for (const auto& v : batch.vectors)
    if (v.size() != dim) throw std::invalid_argument("ntxent: embedding dimension mismatch");
}

/// Rows of `unit` are the embeddings scaled to unit Euclidean norm.
template <typename T>
struct Normalized {
  Mat<T> unit;
  std::vector<T> norm;
};

template <typename T>
Normalized<T> normalize(const EmbeddingBatch<T>& batch) {
  const std::size_t m = batch.vectors.size();
  const std::size_t dim = batch.vectors.front().size();
  Normalized<T> out;
  out.unit.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(dim));
  out.norm.resize(m);
  for (std::size_t a = 0; a < m; ++a) {
    T sq = T(0);
    for (T x : batch.vectors[a]) sq += x * x;
    const T r = std::sqrt(sq);
    if (!(r > T(0)))
      throw std::invalid_argument("ntxent: zero-norm embedding at index " + std::to_string(a));
    out.norm[a] = r;
    for (std::size_t j = 0; j < dim; ++j)
      out.unit(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j)) =
          batch.vectors[a][j] / r;
  }
  return out;
}

inline std::size_t partner(std::size_t a, std::size_t n) { return a < n ? a + n : a - n; }

/// -ln softmax weight of the positive among the anchor's 2n-1 similarities,
/// computed in log-sum-exp form. `sims` holds cs(anchor, b) for all b.
template <typename T>
T anchor_loss(const std::vector<T>& sims, std::size_t a, std::size_t pa) {
  T hi = sims[pa];
  for (std::size_t b = 0; b < sims.size(); ++b)
    if (b != a && sims[b] > hi) hi = sims[b];
  T sum = T(0);
  for (std::size_t b = 0; b < sims.size(); ++b)
    if (b != a) sum += std::exp(sims[b] - hi);
  return hi + std::log(sum) - sims[pa];
}

}  // namespace

template <typename T>
T cosine_sim_temp(const std::vector<T>& u, const std::vector<T>& v, T tau) {
  check_tau(tau);
  if (u.empty() || u.size() != v.size())
    throw std::invalid_argument("cosine_sim_temp: dimension mismatch");
  T uu = T(0), vv = T(0), uv = T(0);
  for (std::size_t j = 0; j < u.size(); ++j) {
    uu += u[j] * u[j];
    vv += v[j] * v[j];
    uv += u[j] * v[j];
  }
  if (!(uu > T(0)) || !(vv > T(0)))
    throw std::invalid_argument("cosine_sim_temp: zero-norm input");
  return uv / (std::sqrt(uu) * std::sqrt(vv)) / tau;
}

template <typename T>
T ntxent_asym(std::size_t i, int anchor_view, const EmbeddingBatch<T>& batch, T tau) {
  check_tau(tau);
  check_batch(batch);
  if (i >= batch.n) throw std::invalid_argument("ntxent: pair index out of range");
  if (anchor_view != 1 && anchor_view != 2)
    throw std::invalid_argument("ntxent: anchor view must be 1 or 2");
  const Normalized<T> nrm = normalize(batch);
  const std::size_t a = anchor_view == 1 ? i : i + batch.n;
  Eigen::Matrix<T, Eigen::Dynamic, 1> row =
      nrm.unit * nrm.unit.row(static_cast<Eigen::Index>(a)).transpose() / tau;
  std::vector<T> sims(row.data(), row.data() + row.size());
  return anchor_loss(sims, a, partner(a, batch.n));
}

template <typename T>
T ntxent_pair(std::size_t i, const EmbeddingBatch<T>& batch, T tau) {
  return (ntxent_asym(i, 1, batch, tau) + ntxent_asym(i, 2, batch, tau)) / T(2);
}

template <typename T>
T ntxent_batch(const EmbeddingBatch<T>& batch, T tau, std::vector<std::vector<T>>* grad) {
  check_tau(tau);
  check_batch(batch);
  const std::size_t n = batch.n;
  const std::size_t m = 2 * n;
  const Normalized<T> nrm = normalize(batch);

  Mat<T> sim = nrm.unit * nrm.unit.transpose() / tau;

  // Per anchor a the loss is -cs(a, partner) plus the log of the summed
  // exponentials over every b != a; the batch loss averages the 2n anchors
  // (equivalently: mean over pairs of the two-anchor average).
  T loss = T(0);
  Mat<T> weights;  // d(loss)/d(sim(a,b)) as seen from anchor a's term
  if (grad) weights = Mat<T>::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t a = 0; a < m; ++a) {
    const std::size_t pa = partner(a, n);
    T hi = sim(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(pa));
    for (std::size_t b = 0; b < m; ++b)
      if (b != a) hi = std::max(hi, sim(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
    T sum = T(0);
    for (std::size_t b = 0; b < m; ++b)
      if (b != a) sum += std::exp(sim(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) - hi);
    loss += hi + std::log(sum) - sim(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(pa));
    if (grad) {
      for (std::size_t b = 0; b < m; ++b) {
        if (b == a) continue;
        const T p = std::exp(sim(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) - hi) / sum;
        weights(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            (p - (b == pa ? T(1) : T(0))) / T(m);
      }
    }
  }
  loss /= T(m);

  if (grad) {
    // sim(a,b) and sim(b,a) are the same scalar, so both anchors' weights
    // flow into it; d(sim)/d(unit_a) = unit_b / tau, and the unit-norm map
    // projects the gradient onto the tangent space before the 1/norm scale.
    Mat<T> gu = (weights + weights.transpose()) * nrm.unit / tau;
    grad->assign(m, std::vector<T>(static_cast<std::size_t>(nrm.unit.cols())));
    for (std::size_t a = 0; a < m; ++a) {
      const auto ga = gu.row(static_cast<Eigen::Index>(a));
      const auto ua = nrm.unit.row(static_cast<Eigen::Index>(a));
      const T along = ga.dot(ua);
      for (Eigen::Index j = 0; j < nrm.unit.cols(); ++j)
        (*grad)[a][static_cast<std::size_t>(j)] = (ga(j) - along * ua(j)) / nrm.norm[a];
    }
  }
  return loss;
}

template <typename T>
BceResult<T> bce(T y_hat, int y) {
  if (y != 0 && y != 1) throw std::invalid_argument("bce: label must be 0 or 1");
  if (!std::isfinite(static_cast<double>(y_hat)))
    throw std::invalid_argument("bce: prediction must be finite");
  const T lo = static_cast<T>(kBceEpsilon);
  const T p = std::clamp(y_hat, lo, T(1) - lo);
  BceResult<T> out;
  if (y == 1) {
    out.loss = -std::log(p);
    out.grad = T(-1) / p;
  } else {
    out.loss = -std::log(T(1) - p);
    out.grad = T(1) / (T(1) - p);
  }
  return out;
}

#define CHEW_OBJECTIVE_INSTANTIATE(T)                                                        \
  template T cosine_sim_temp<T>(const std::vector<T>&, const std::vector<T>&, T);            \
  template T ntxent_asym<T>(std::size_t, int, const EmbeddingBatch<T>&, T);                  \
  template T ntxent_pair<T>(std::size_t, const EmbeddingBatch<T>&, T);                       \
  template T ntxent_batch<T>(const EmbeddingBatch<T>&, T, std::vector<std::vector<T>>*);     \
  template BceResult<T> bce<T>(T, int);

CHEW_OBJECTIVE_INSTANTIATE(float)
CHEW_OBJECTIVE_INSTANTIATE(double)

}  // namespace chew::objective
