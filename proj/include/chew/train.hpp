#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "chew/augment.hpp"
#include "chew/dataset.hpp"
#include "chew/metrics.hpp"
#include "chew/model.hpp"
#include "chew/optim.hpp"

namespace chew::train {

/// Projection head attached to f during contrastive pretraining.
enum class HeadKind { linear, nonlinear };

/// Frozen feature stack the classifier head h is trained on: f pretrained
/// with the linear head, f pretrained with the nonlinear head, or the first
/// dense+ReLU of g^NL kept on top of the latter.
enum class Variant { h_fL, h_fNL, h_gNL1_fNL };

std::string head_kind_name(HeadKind kind);
std::string variant_name(Variant variant);
HeadKind variant_head_kind(Variant variant);

struct PretrainConfig {
  std::size_t batch_size = 256;
  std::size_t epochs = 100;
  double tau = 0.5;
  HeadKind head_kind = HeadKind::nonlinear;
  augment::AugmentConfig augment;  // augment.seed drives the view streams
  optim::LarsConfig lars;
  // schedule.total_epochs is overridden by `epochs`; only warmup_fraction
  // and max_lr are read from here.
  optim::ScheduleConfig schedule;
  std::uint64_t seed = 0;
};

struct PretrainResult {
  model::ModelGraph<float> f;
  model::ModelGraph<float> g;
  std::vector<double> epoch_loss;  // mean NT-Xent per epoch
};

/// SimCLR-style pretraining of f with projection head g. Every epoch
/// reshuffles the windows (seeded), doubles each batch into 2*batch_size
/// augmented views, and takes one LARS step per batch on the NT-Xent loss at
/// the scheduled learning rate. Windows must share one length (this sets f's
/// input length) and there must be at least batch_size of them; the trailing
/// partial batch of an epoch is skipped. Bit-identical per config.
PretrainResult pretrain(const std::vector<std::vector<double>>& windows,
                        const PretrainConfig& cfg);

struct HeadTrainConfig {
  std::size_t batch_size = 64;
  std::size_t epochs = 100;
  optim::AdamConfig adam;
  std::uint64_t seed = 0;
};

struct HeadTrainResult {
  model::ModelGraph<float> h;  // snapshot at selected_epoch
  std::size_t selected_epoch = 0;  // 1-based argmin of validation_loss
  std::vector<double> validation_loss;
  std::vector<double> train_loss;
};

struct FeatureSet {
  std::vector<std::vector<float>> x;
  std::vector<int> y;  // 1 = chewing
};

/// Chains pretrained parts into one frozen, forward-only feature stack.
/// Validates the segment shape chain like model::compose.
model::ModelGraph<float> freeze_stack(const std::vector<model::ModelGraph<float>>& parts);

/// Forward pass of a frozen stack over raw windows. Deterministic: repeated
/// calls are bit-identical, so cached features can stand in for recomputed
/// ones.
std::vector<std::vector<float>> compute_features(
    const model::ModelGraph<float>& stack,
    const std::vector<std::vector<double>>& windows);

/// Adam/BCE training of the classifier head h on fixed feature vectors.
/// Returns the snapshot of h at the epoch with minimum validation loss
/// (earliest on ties). Rejects an empty train or validation set.
HeadTrainResult train_head_on_features(const FeatureSet& train_set,
                                       const FeatureSet& val_set,
                                       const model::ModelGraph<float>& h,
                                       const HeadTrainConfig& cfg);

/// Convenience wrapper: featurizes both window sets through `frozen_stack`
/// once, then trains h on the cached features. The stack itself is never
/// updated.
HeadTrainResult train_head(const model::ModelGraph<float>& frozen_stack,
                           const model::ModelGraph<float>& h,
                           const std::vector<dataset::LabeledWindow>& train_set,
                           const std::vector<dataset::LabeledWindow>& val_set,
                           const HeadTrainConfig& cfg);

struct SupervisedResult {
  model::ModelGraph<float> hf;  // composed f+h, best-validation snapshot
  std::size_t selected_epoch = 0;
  std::vector<double> validation_loss;
};

/// Fully supervised baseline: h on f with every parameter trainable,
/// optimized end to end with Adam on BCE using the same recipe as the head
/// (batch size, epochs, argmin-validation snapshot).
SupervisedResult train_supervised(const std::vector<dataset::LabeledWindow>& train_set,
                                  const std::vector<dataset::LabeledWindow>& val_set,
                                  const HeadTrainConfig& cfg);

/// Sigmoid scores of a model over raw windows (the model must map one window
/// to a single output).
std::vector<float> predict_scores(const model::ModelGraph<float>& graph,
                                  const std::vector<std::vector<double>>& windows);

/// Windowing parameters shared by the evaluation drivers.
struct CorpusConfig {
  std::size_t window_len = 10000;
  std::size_t stride = 10000;
  double coverage_threshold = 0.5;
};

struct SweepConfig {
  CorpusConfig corpus;
  PretrainConfig pretrain;  // head_kind and tau are overridden per cell
  HeadTrainConfig head;
  std::size_t n_validation = 2;
  std::uint64_t seed = 0;
};

struct FoldResult {
  std::string fold_id;  // test subject
  std::size_t selected_epoch = 0;
  std::vector<double> validation_loss;
  metrics::Confusion confusion;  // test-subject windows
  metrics::MetricsReport test_metrics;
};

struct SweepRow {
  Variant variant;
  double tau = 0.0;
  metrics::Confusion pooled;  // summed over folds
  metrics::MetricsReport metrics;  // report of the pooled confusion
  std::vector<FoldResult> folds;
};

/// Leave-one-subject-out sweep over (variant, tau). Pretraining runs once
/// per (head kind, tau) on all development windows and is shared across
/// folds and variants; each fold trains h on the train subjects' cached
/// features, selects the epoch by validation loss, and classifies the test
/// subject's windows at threshold 0.5. Fold confusions are pooled per row
/// before computing metrics. Rows come back in (variant, tau) order.
std::vector<SweepRow> run_loso_sweep(const std::vector<dataset::Recording>& dev,
                                     const std::vector<double>& taus,
                                     const std::vector<Variant>& variants,
                                     const SweepConfig& cfg);

struct HoldoutConfig {
  CorpusConfig corpus;
  PretrainConfig pretrain;  // head_kind and tau are overridden per row
  HeadTrainConfig head;  // SSL heads
  HeadTrainConfig supervised;  // end-to-end baseline
  std::size_t n_validation = 2;  // development subjects used for selection
  std::uint64_t seed = 0;
};

struct HoldoutRow {
  std::string name;  // variant_name(...) or "supervised"
  double tau = 0.0;  // 0 for the supervised row
  metrics::Confusion confusion;
  metrics::MetricsReport metrics;
};

/// Trains each selected variant plus the supervised baseline on the
/// development subjects (validation subjects drawn per seed for snapshot
/// selection) and evaluates every model on the holdout subjects' windows.
/// Rejects overlapping subject sets. Returns |selections| + 1 rows.
std::vector<HoldoutRow> run_holdout(const std::vector<dataset::Recording>& dev,
                                    const std::vector<dataset::Recording>& holdout,
                                    const std::map<Variant, double>& selections,
                                    const HoldoutConfig& cfg);

}  // namespace chew::train
