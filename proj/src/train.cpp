#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

#include "chew/objective.hpp"
#include "chew/rng.hpp"
#include "chew/train.hpp"

namespace chew::train {
namespace {

constexpr std::uint64_t kSaltShuffle = 0x5348u;
constexpr std::uint64_t kSaltHeadShuffle = 0x4853u;
constexpr std::uint64_t kSaltFoldHead = 0x4648u;
constexpr std::uint64_t kSaltRowHead = 0x5248u;
constexpr std::uint64_t kSaltValSplit = 0x5653u;

std::size_t checked_window_len(const std::vector<std::vector<double>>& windows,
                               const char* who) {
  if (windows.empty())
    throw std::invalid_argument(std::string(who) + ": no windows");
  const std::size_t len = windows.front().size();
  if (len == 0) throw std::invalid_argument(std::string(who) + ": empty window");
  for (const auto& w : windows)
    if (w.size() != len)
      throw std::invalid_argument(std::string(who) + ": windows differ in length");
  return len;
}

Tensor<float> window_tensor(const std::vector<double>& w) {
  Tensor<float> x({1, w.size()});
  for (std::size_t i = 0; i < w.size(); ++i) x.data[i] = static_cast<float>(w[i]);
  return x;
}

/// Gradient buffers parallel to trainable_params(graph); checks the
/// name layout of backward's output once, then accumulates positionally.
struct GradAccum {
  std::vector<std::pair<std::string, Tensor<float>>> slots;

  explicit GradAccum(const optim::ParamRefs<float>& params) {
    slots.reserve(params.size());
    for (const auto& [name, tensor] : params)
      slots.emplace_back(name, Tensor<float>(tensor->shape));
  }

  void zero() {
    for (auto& [name, tensor] : slots) tensor.fill(0.0f);
  }

  void add(const std::vector<model::ParamSet<float>>& segment_grads) {
    std::size_t k = 0;
    for (const auto& set : segment_grads)
      for (const auto& [name, grad] : set.items) {
        if (k >= slots.size() || slots[k].first != name)
          throw std::logic_error("train: gradient layout mismatch at " + name);
        auto& acc = slots[k].second.data;
        for (std::size_t i = 0; i < acc.size(); ++i)
          acc[i] += grad.data[i];
        ++k;
      }
    if (k != slots.size())
      throw std::logic_error("train: gradient layout incomplete");
  }

  optim::GradRefs<float> refs() const {
    optim::GradRefs<float> out;
    out.reserve(slots.size());
    for (const auto& [name, tensor] : slots) out.emplace_back(name, &tensor);
    return out;
  }
};

double mean_val_loss(const model::ModelGraph<float>& net, const FeatureSet& set) {
  double sum = 0.0;
  for (std::size_t i = 0; i < set.x.size(); ++i) {
    Tensor<float> x({set.x[i].size()}, set.x[i]);
    const auto out = model::forward(net, x);
    sum += static_cast<double>(objective::bce(out.data.at(0), set.y[i]).loss);
  }
  return sum / static_cast<double>(set.x.size());
}

void check_feature_set(const FeatureSet& set, const char* name) {
  if (set.x.empty())
    throw std::invalid_argument(std::string("train_head: empty ") + name + " set");
  if (set.x.size() != set.y.size())
    throw std::invalid_argument(std::string("train_head: ") + name + " has " +
                                std::to_string(set.x.size()) + " feature rows but " +
                                std::to_string(set.y.size()) + " labels");
  for (int y : set.y)
    if (y != 0 && y != 1)
      throw std::invalid_argument(std::string("train_head: ") + name +
                                  " label outside {0, 1}");
}

FeatureSet featurize(const model::ModelGraph<float>& stack,
                     const std::vector<dataset::LabeledWindow>& set) {
  std::vector<std::vector<double>> raw;
  raw.reserve(set.size());
  FeatureSet out;
  out.y.reserve(set.size());
  for (const auto& w : set) {
    raw.push_back(w.window);
    out.y.push_back(w.label);
  }
  out.x = compute_features(stack, raw);
  return out;
}

std::vector<std::vector<double>> raw_windows(const std::vector<dataset::LabeledWindow>& set) {
  std::vector<std::vector<double>> out;
  out.reserve(set.size());
  for (const auto& w : set) out.push_back(w.window);
  return out;
}

std::vector<int> labels_of(const std::vector<dataset::LabeledWindow>& set) {
  std::vector<int> out;
  out.reserve(set.size());
  for (const auto& w : set) out.push_back(w.label);
  return out;
}

std::vector<int> classify(const std::vector<float>& scores) {
  std::vector<int> out;
  out.reserve(scores.size());
  for (float s : scores) out.push_back(s >= 0.5f ? 1 : 0);
  return out;
}

/// All development windows plus per-subject index lists, in recording order.
struct Corpus {
  std::vector<dataset::LabeledWindow> windows;
  std::vector<std::vector<double>> raw;
  std::map<std::string, std::vector<std::size_t>> by_subject;
  std::vector<std::string> subject_ids;  // unique, in first-seen order
};

Corpus build_corpus(const std::vector<dataset::Recording>& recs,
                    const CorpusConfig& cfg, const char* who) {
  Corpus corpus;
  for (const auto& rec : recs) {
    auto labeled =
        dataset::label_windows(rec, cfg.window_len, cfg.stride, cfg.coverage_threshold);
    if (labeled.empty())
      throw std::invalid_argument(std::string(who) + ": subject '" + rec.subject_id +
                                  "' yields no windows");
    if (!corpus.by_subject.contains(rec.subject_id))
      corpus.subject_ids.push_back(rec.subject_id);
    auto& indices = corpus.by_subject[rec.subject_id];
    for (auto& w : labeled) {
      indices.push_back(corpus.windows.size());
      corpus.raw.push_back(w.window);
      corpus.windows.push_back(std::move(w));
    }
  }
  return corpus;
}

FeatureSet gather(const std::vector<std::vector<float>>& features, const Corpus& corpus,
                  const std::vector<std::string>& subjects) {
  FeatureSet out;
  for (const auto& id : subjects)
    for (std::size_t i : corpus.by_subject.at(id)) {
      out.x.push_back(features[i]);
      out.y.push_back(corpus.windows[i].label);
    }
  return out;
}

/// Pretraining cache shared between sweep cells / holdout rows.
struct PretrainCache {
  std::map<std::pair<int, double>, PretrainResult> entries;

  const PretrainResult& get(HeadKind kind, double tau,
                            const std::vector<std::vector<double>>& windows,
                            const PretrainConfig& base) {
    const std::pair<int, double> key{static_cast<int>(kind), tau};
    auto it = entries.find(key);
    if (it == entries.end()) {
      PretrainConfig cfg = base;
      cfg.head_kind = kind;
      cfg.tau = tau;
      it = entries.emplace(key, pretrain(windows, cfg)).first;
    }
    return it->second;
  }
};

model::ModelGraph<float> variant_stack(Variant variant, const PretrainResult& pre) {
  if (variant == Variant::h_gNL1_fNL) {
    auto [g1, g2] = model::split_gNL(pre.g);
    return freeze_stack({pre.f, g1});
  }
  return freeze_stack({pre.f});
}

}  // namespace

std::string head_kind_name(HeadKind kind) {
  return kind == HeadKind::linear ? "linear" : "nonlinear";
}

std::string variant_name(Variant variant) {
  switch (variant) {
    case Variant::h_fL: return "h_fL";
    case Variant::h_fNL: return "h_fNL";
    case Variant::h_gNL1_fNL: return "h_gNL1_fNL";
  }
  throw std::invalid_argument("variant_name: unknown variant");
}

HeadKind variant_head_kind(Variant variant) {
  return variant == Variant::h_fL ? HeadKind::linear : HeadKind::nonlinear;
}

PretrainResult pretrain(const std::vector<std::vector<double>>& windows,
                        const PretrainConfig& cfg) {
  if (cfg.batch_size < 2)
    throw std::invalid_argument("pretrain: batch_size must be at least 2");
  if (cfg.epochs == 0) throw std::invalid_argument("pretrain: epochs must be positive");
  if (!(cfg.tau > 0.0))
    throw std::invalid_argument("pretrain: temperature must be positive");
  const std::size_t in_len = checked_window_len(windows, "pretrain");
  if (windows.size() < cfg.batch_size)
    throw std::invalid_argument(
        "pretrain: need at least batch_size (" + std::to_string(cfg.batch_size) +
        ") windows, got " + std::to_string(windows.size()));

  auto f = model::build_f<float>(cfg.seed, in_len);
  auto g = cfg.head_kind == HeadKind::linear ? model::build_gL<float>(cfg.seed)
                                             : model::build_gNL<float>(cfg.seed);
  const std::string g_name = g.segments.front().name;
  auto graph = model::compose<float>({f.segments.front(), g.segments.front()},
                                     {"f", g_name});

  std::vector<std::vector<float>> fwindows(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    fwindows[i].resize(in_len);
    for (std::size_t j = 0; j < in_len; ++j)
      fwindows[i][j] = static_cast<float>(windows[i][j]);
  }

  auto params = model::trainable_params(graph);
  GradAccum accum(params);
  optim::LarsState<float> state;
  const optim::ScheduleConfig sched{cfg.epochs, cfg.schedule.warmup_fraction,
                                    cfg.schedule.max_lr};
  const float tau = static_cast<float>(cfg.tau);
  const std::size_t n = cfg.batch_size;

  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<double> epoch_loss;
  epoch_loss.reserve(cfg.epochs);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    SeededRng shuffle_rng(mix_seed({cfg.seed, kSaltShuffle, epoch}));
    shuffle_rng.shuffle(order.begin(), order.end());
    const double lr = optim::lr_at_epoch(epoch, sched);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start + n <= order.size(); start += n) {
      std::vector<std::size_t> indices(order.begin() + static_cast<std::ptrdiff_t>(start),
                                       order.begin() + static_cast<std::ptrdiff_t>(start + n));
      std::vector<std::vector<float>> batch_windows;
      batch_windows.reserve(n);
      for (std::size_t idx : indices) batch_windows.push_back(fwindows[idx]);
      const auto views = augment::double_batch(batch_windows, cfg.augment, epoch, indices);

      objective::EmbeddingBatch<float> emb;
      emb.n = n;
      emb.vectors.resize(2 * n);
      std::vector<model::GraphTrace<float>> traces(2 * n);
      for (std::size_t i = 0; i < 2 * n; ++i) {
        Tensor<float> x({1, in_len}, views.samples[i]);
        emb.vectors[i] = model::forward(graph, x, &traces[i]).data;
      }

      std::vector<std::vector<float>> emb_grads;
      const double loss = static_cast<double>(objective::ntxent_batch(emb, tau, &emb_grads));

      accum.zero();
      for (std::size_t i = 0; i < 2 * n; ++i) {
        const std::size_t dim = emb_grads[i].size();
        Tensor<float> upstream({dim}, std::move(emb_grads[i]));
        accum.add(model::backward(graph, traces[i], upstream));
        traces[i] = model::GraphTrace<float>{};
      }
      optim::lars_step(params, accum.refs(), state, lr, cfg.lars);

      loss_sum += loss;
      ++batches;
    }
    epoch_loss.push_back(loss_sum / static_cast<double>(batches));
  }

  PretrainResult result;
  result.f.segments = {graph.segments[0]};
  result.g.segments = {graph.segments[1]};
  result.epoch_loss = std::move(epoch_loss);
  return result;
}

model::ModelGraph<float> freeze_stack(const std::vector<model::ModelGraph<float>>& parts) {
  if (parts.empty()) throw std::invalid_argument("freeze_stack: no parts");
  model::ModelGraph<float> stack;
  for (const auto& part : parts)
    for (const auto& seg : part.segments) {
      stack.segments.push_back(seg);
      stack.segments.back().trainable = false;
    }
  for (std::size_t i = 0; i + 1 < stack.segments.size(); ++i) {
    const auto out = model::output_shape(stack.segments[i].arch);
    const auto in = model::input_shape(stack.segments[i + 1].arch);
    if (out != in)
      throw std::invalid_argument("freeze_stack: segment '" + stack.segments[i].name +
                                  "' output does not feed '" +
                                  stack.segments[i + 1].name + "'");
  }
  return stack;
}

std::vector<std::vector<float>> compute_features(
    const model::ModelGraph<float>& stack,
    const std::vector<std::vector<double>>& windows) {
  checked_window_len(windows, "compute_features");
  std::vector<std::vector<float>> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(model::forward(stack, window_tensor(w)).data);
  return out;
}

HeadTrainResult train_head_on_features(const FeatureSet& train_set,
                                       const FeatureSet& val_set,
                                       const model::ModelGraph<float>& h,
                                       const HeadTrainConfig& cfg) {
  check_feature_set(train_set, "train");
  check_feature_set(val_set, "validation");
  if (cfg.batch_size == 0)
    throw std::invalid_argument("train_head: batch_size must be positive");
  if (cfg.epochs == 0) throw std::invalid_argument("train_head: epochs must be positive");

  model::ModelGraph<float> net = h;
  auto params = model::trainable_params(net);
  GradAccum accum(params);
  optim::AdamState<float> state;
  std::size_t t = 0;

  std::vector<std::size_t> order(train_set.x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  HeadTrainResult result;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    SeededRng shuffle_rng(mix_seed({cfg.seed, kSaltHeadShuffle, epoch}));
    shuffle_rng.shuffle(order.begin(), order.end());

    double train_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const double inv = 1.0 / static_cast<double>(stop - start);
      accum.zero();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t idx = order[k];
        Tensor<float> x({train_set.x[idx].size()}, train_set.x[idx]);
        model::GraphTrace<float> trace;
        const auto out = model::forward(net, x, &trace);
        const auto res = objective::bce(out.data.at(0), train_set.y[idx]);
        Tensor<float> upstream({1}, {static_cast<float>(res.grad * inv)});
        accum.add(model::backward(net, trace, upstream));
        train_sum += static_cast<double>(res.loss);
      }
      optim::adam_step(params, accum.refs(), state, cfg.adam, ++t);
    }
    result.train_loss.push_back(train_sum / static_cast<double>(order.size()));

    const double vloss = mean_val_loss(net, val_set);
    result.validation_loss.push_back(vloss);
    if (vloss < best) {
      best = vloss;
      result.selected_epoch = epoch;
      result.h = net;
    }
  }
  return result;
}

HeadTrainResult train_head(const model::ModelGraph<float>& frozen_stack,
                           const model::ModelGraph<float>& h,
                           const std::vector<dataset::LabeledWindow>& train_set,
                           const std::vector<dataset::LabeledWindow>& val_set,
                           const HeadTrainConfig& cfg) {
  if (train_set.empty()) throw std::invalid_argument("train_head: empty train set");
  if (val_set.empty()) throw std::invalid_argument("train_head: empty validation set");
  return train_head_on_features(featurize(frozen_stack, train_set),
                                featurize(frozen_stack, val_set), h, cfg);
}

SupervisedResult train_supervised(const std::vector<dataset::LabeledWindow>& train_set,
                                  const std::vector<dataset::LabeledWindow>& val_set,
                                  const HeadTrainConfig& cfg) {
  if (train_set.empty())
    throw std::invalid_argument("train_supervised: empty train set");
  if (val_set.empty())
    throw std::invalid_argument("train_supervised: empty validation set");
  if (cfg.batch_size == 0)
    throw std::invalid_argument("train_supervised: batch_size must be positive");
  if (cfg.epochs == 0)
    throw std::invalid_argument("train_supervised: epochs must be positive");
  const std::size_t in_len = checked_window_len(raw_windows(train_set), "train_supervised");

  auto f = model::build_f<float>(cfg.seed, in_len);
  auto h = model::build_h<float>(cfg.seed);
  auto graph =
      model::compose<float>({f.segments.front(), h.segments.front()}, {"f", "h"});
  auto params = model::trainable_params(graph);
  GradAccum accum(params);
  optim::AdamState<float> state;
  std::size_t t = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  SupervisedResult result;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    SeededRng shuffle_rng(mix_seed({cfg.seed, kSaltHeadShuffle, epoch}));
    shuffle_rng.shuffle(order.begin(), order.end());

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const double inv = 1.0 / static_cast<double>(stop - start);
      accum.zero();
      for (std::size_t k = start; k < stop; ++k) {
        const auto& sample = train_set[order[k]];
        model::GraphTrace<float> trace;
        const auto out = model::forward(graph, window_tensor(sample.window), &trace);
        const auto res = objective::bce(out.data.at(0), sample.label);
        Tensor<float> upstream({1}, {static_cast<float>(res.grad * inv)});
        accum.add(model::backward(graph, trace, upstream));
      }
      optim::adam_step(params, accum.refs(), state, cfg.adam, ++t);
    }

    double vsum = 0.0;
    for (const auto& sample : val_set) {
      const auto out = model::forward(graph, window_tensor(sample.window));
      vsum += static_cast<double>(objective::bce(out.data.at(0), sample.label).loss);
    }
    const double vloss = vsum / static_cast<double>(val_set.size());
    result.validation_loss.push_back(vloss);
    if (vloss < best) {
      best = vloss;
      result.selected_epoch = epoch;
      result.hf = graph;
    }
  }
  return result;
}

std::vector<float> predict_scores(const model::ModelGraph<float>& graph,
                                  const std::vector<std::vector<double>>& windows) {
  const bool vector_in = graph.segments.front().arch.vector_input;
  std::vector<float> out;
  out.reserve(windows.size());
  for (const auto& w : windows) {
    Tensor<float> x = window_tensor(w);
    if (vector_in) x.shape = {w.size()};
    const auto y = model::forward(graph, x);
    if (y.data.size() != 1)
      throw std::invalid_argument("predict_scores: model output is not a single score");
    out.push_back(y.data.front());
  }
  return out;
}

std::vector<SweepRow> run_loso_sweep(const std::vector<dataset::Recording>& dev,
                                     const std::vector<double>& taus,
                                     const std::vector<Variant>& variants,
                                     const SweepConfig& cfg) {
  if (taus.empty()) throw std::invalid_argument("run_loso_sweep: no temperatures");
  for (double tau : taus)
    if (!(tau > 0.0))
      throw std::invalid_argument("run_loso_sweep: temperature must be positive");
  if (std::set<double>(taus.begin(), taus.end()).size() != taus.size())
    throw std::invalid_argument("run_loso_sweep: duplicate temperature");
  if (variants.empty()) throw std::invalid_argument("run_loso_sweep: no variants");
  if (std::set<Variant>(variants.begin(), variants.end()).size() != variants.size())
    throw std::invalid_argument("run_loso_sweep: duplicate variant");

  const Corpus corpus = build_corpus(dev, cfg.corpus, "run_loso_sweep");
  const auto folds =
      dataset::make_loso_folds(corpus.subject_ids, cfg.n_validation, cfg.seed);

  PretrainCache cache;
  std::vector<SweepRow> rows;
  rows.reserve(variants.size() * taus.size());
  for (Variant variant : variants) {
    for (double tau : taus) {
      const auto& pre =
          cache.get(variant_head_kind(variant), tau, corpus.raw, cfg.pretrain);
      const auto stack = variant_stack(variant, pre);
      const auto features = compute_features(stack, corpus.raw);

      SweepRow row;
      row.variant = variant;
      row.tau = tau;
      for (std::size_t fi = 0; fi < folds.size(); ++fi) {
        const auto& fold = folds[fi];
        const FeatureSet train_set = gather(features, corpus, fold.train);
        const FeatureSet val_set = gather(features, corpus, fold.validation);
        const FeatureSet test_set = gather(features, corpus, fold.test);

        HeadTrainConfig head_cfg = cfg.head;
        head_cfg.seed = mix_seed({cfg.head.seed, kSaltFoldHead, fi});
        const auto h = model::build_h<float>(head_cfg.seed);
        auto trained = train_head_on_features(train_set, val_set, h, head_cfg);

        std::vector<int> preds;
        preds.reserve(test_set.x.size());
        for (const auto& feat : test_set.x) {
          Tensor<float> x({feat.size()}, feat);
          preds.push_back(model::forward(trained.h, x).data.at(0) >= 0.5f ? 1 : 0);
        }
        FoldResult fr;
        fr.fold_id = fold.test.front();
        fr.selected_epoch = trained.selected_epoch;
        fr.validation_loss = std::move(trained.validation_loss);
        fr.confusion = metrics::confusion(preds, test_set.y);
        fr.test_metrics = metrics::report(fr.confusion);
        row.pooled += fr.confusion;
        row.folds.push_back(std::move(fr));
      }
      row.metrics = metrics::report(row.pooled);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<HoldoutRow> run_holdout(const std::vector<dataset::Recording>& dev,
                                    const std::vector<dataset::Recording>& holdout,
                                    const std::map<Variant, double>& selections,
                                    const HoldoutConfig& cfg) {
  if (selections.empty()) throw std::invalid_argument("run_holdout: no selections");
  for (const auto& [variant, tau] : selections)
    if (!(tau > 0.0))
      throw std::invalid_argument("run_holdout: temperature must be positive for " +
                                  variant_name(variant));
  std::set<std::string> dev_ids, hold_ids;
  for (const auto& rec : dev) dev_ids.insert(rec.subject_id);
  for (const auto& rec : holdout) hold_ids.insert(rec.subject_id);
  for (const auto& id : dev_ids)
    if (hold_ids.contains(id))
      throw std::invalid_argument("run_holdout: subject '" + id +
                                  "' appears in both development and holdout sets");

  const Corpus corpus = build_corpus(dev, cfg.corpus, "run_holdout");
  const Corpus eval = build_corpus(holdout, cfg.corpus, "run_holdout");

  const auto split = dataset::make_holdout_split(
      corpus.subject_ids, cfg.n_validation, mix_seed({cfg.seed, kSaltValSplit}));
  const std::vector<std::string>& train_subjects = split.development;
  const std::vector<std::string>& val_subjects = split.holdout;

  std::vector<dataset::LabeledWindow> train_windows, val_windows;
  for (const auto& id : train_subjects)
    for (std::size_t i : corpus.by_subject.at(id))
      train_windows.push_back(corpus.windows[i]);
  for (const auto& id : val_subjects)
    for (std::size_t i : corpus.by_subject.at(id))
      val_windows.push_back(corpus.windows[i]);

  const std::vector<int> eval_labels = labels_of(eval.windows);

  PretrainCache cache;
  std::vector<HoldoutRow> rows;
  rows.reserve(selections.size() + 1);
  for (const auto& [variant, tau] : selections) {
    const auto& pre =
        cache.get(variant_head_kind(variant), tau, corpus.raw, cfg.pretrain);
    const auto stack = variant_stack(variant, pre);
    const auto train_set = featurize(stack, train_windows);
    const auto val_set = featurize(stack, val_windows);

    HeadTrainConfig head_cfg = cfg.head;
    head_cfg.seed =
        mix_seed({cfg.head.seed, kSaltRowHead, static_cast<std::uint64_t>(variant)});
    const auto h = model::build_h<float>(head_cfg.seed);
    const auto trained = train_head_on_features(train_set, val_set, h, head_cfg);

    const auto full = freeze_stack({stack, trained.h});
    HoldoutRow row;
    row.name = variant_name(variant);
    row.tau = tau;
    row.confusion = metrics::confusion(classify(predict_scores(full, eval.raw)), eval_labels);
    row.metrics = metrics::report(row.confusion);
    rows.push_back(std::move(row));
  }

  const auto baseline = train_supervised(train_windows, val_windows, cfg.supervised);
  HoldoutRow row;
  row.name = "supervised";
  row.confusion =
      metrics::confusion(classify(predict_scores(baseline.hf, eval.raw)), eval_labels);
  row.metrics = metrics::report(row.confusion);
  rows.push_back(std::move(row));
  return rows;
}

}  // namespace chew::train
