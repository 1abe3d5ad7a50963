#pragma once

#include <cstddef>
#include <vector>

namespace chew::objective {

/// 2n projection embeddings; views of source window i sit at indices i and
/// i + n (same pairing convention as augment::ContrastiveBatch).
template <typename T>
struct EmbeddingBatch {
  std::vector<std::vector<T>> vectors;
  std::size_t n = 0;
};

/// Cosine similarity scaled by 1/tau. Rejects zero-norm inputs and tau <= 0.
template <typename T>
T cosine_sim_temp(const std::vector<T>& u, const std::vector<T>& v, T tau);

/// Asymmetric contrastive term for pair i with anchor view `anchor_view`
/// (0 or 1): -ln of the softmax weight of the positive pair among the
/// 2n - 1 similarities from the anchor to every other embedding. The
/// anchor's own-view self term is excluded; the cross-view partner term is
/// the numerator and also appears in the denominator.
template <typename T>
T ntxent_asym(std::size_t i, int anchor_view, const EmbeddingBatch<T>& batch, T tau);

/// Symmetric per-pair loss: mean of the two anchor choices.
template <typename T>
T ntxent_pair(std::size_t i, const EmbeddingBatch<T>& batch, T tau);

/// Batch loss: mean of ntxent_pair over i = 0..n-1. When `grad` is non-null
/// it receives d(loss)/d(embedding) in the batch's layout.
template <typename T>
T ntxent_batch(const EmbeddingBatch<T>& batch, T tau,
               std::vector<std::vector<T>>* grad = nullptr);

/// Predictions are clipped to [kBceEpsilon, 1 - kBceEpsilon] before the log
/// so saturated sigmoids cannot produce ln(0).
inline constexpr double kBceEpsilon = 1e-7;

template <typename T>
struct BceResult {
  T loss;
  T grad;  // d(loss)/d(y_hat), evaluated at the clipped prediction
};

/// Binary cross-entropy -y ln(p) - (1-y) ln(1-p). Rejects labels outside
/// {0, 1} and non-finite predictions.
template <typename T>
BceResult<T> bce(T y_hat, int y);

}  // namespace chew::objective
