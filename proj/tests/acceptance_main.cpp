// Acceptance suite: one self-contained check per release criterion, printed
// as a single [PASS]/[FAIL] line each. Every check builds its own oracle
// (independent brute-force reference, finite differences, closed-form values,
// or an end-to-end run through the CLI binary) rather than trusting library
// internals. Exits nonzero if any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "chew/dataset.hpp"
#include "chew/model.hpp"
#include "chew/nn.hpp"
#include "chew/objective.hpp"
#include "chew/optim.hpp"
#include "chew/postprocess.hpp"
#include "chew/rng.hpp"
#include "chew/signal.hpp"
#include "chew/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using chew::mix_seed;
using chew::SeededRng;
using chew::Tensor;
using Td = Tensor<double>;

namespace {

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename... Parts>
void require(bool cond, const Parts&... parts) {
  if (cond) return;
  std::ostringstream ss;
  (ss << ... << parts);
  throw CheckFailure(ss.str());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Td rand_tensor(SeededRng& rng, std::vector<std::size_t> shape, double lo = -1.0,
               double hi = 1.0) {
  Td t(std::move(shape));
  for (auto& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// ---------------------------------------------------------------------------
// CLI process helpers (criteria 7 and 9 run the shipped binary).

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string("'") + CHEW_CLI_PATH + "' " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  require(pipe != nullptr, "popen failed for: ", cmd);
  std::string out;
  char buf[4096];
  while (true) {
    const std::size_t n = std::fread(buf, 1, sizeof buf, pipe);
    if (n == 0) break;
    out.append(buf, n);
  }
  const int status = pclose(pipe);
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = out;
  return r;
}

void run_cli_ok(const std::string& args) {
  const auto r = run_cli(args);
  require(r.exit_code == 0, "CLI exited ", r.exit_code, " for `", args,
          "`; output tail: ", r.output.size() > 400
                                  ? r.output.substr(r.output.size() - 400)
                                  : r.output);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot read ", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "chew-acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ===========================================================================
// Criterion 1 — gradient fidelity. Central finite differences in double
// precision: every layer's backward pass (relative error < 1e-5 per layer)
// and the full h(f(x)) network on 5 random inputs (< 1e-4), within 2 minutes.

// <proj, layer(x)> over coords [x | params...]; each layer problem evaluates
// the nn primitive directly and returns the analytic gradient from the
// primitive's backward.
struct LayerProblem : chew::nn::DiffProblem {
  std::string name;
  std::function<double(const std::vector<double>&)> eval_fn;
  std::function<std::vector<double>(const std::vector<double>&)> grad_fn;
  std::size_t dim_ = 0;

  std::size_t dim() const override { return dim_; }
  double eval(const std::vector<double>& c) override { return eval_fn(c); }
  std::vector<double> analytic_grad(const std::vector<double>& c) override {
    return grad_fn(c);
  }
};

Td slice_tensor(const std::vector<double>& c, std::size_t& off,
                std::vector<std::size_t> shape) {
  Td t(std::move(shape));
  std::copy_n(c.begin() + static_cast<std::ptrdiff_t>(off), t.size(), t.data.begin());
  off += t.size();
  return t;
}

std::string criterion_gradients() {
  namespace nn = chew::nn;
  const auto t0 = std::chrono::steady_clock::now();
  SeededRng rng(401);
  double worst_layer = 0.0;
  std::vector<std::pair<std::string, LayerProblem>> layers;

  // conv1d, linear and with ReLU
  for (const bool relu : {false, true}) {
    const std::size_t ci = 2, len = 24, co = 3, k = 5, lout = len - k + 1;
    std::vector<double> proj(co * lout);
    for (auto& v : proj) v = rng.uniform(-1.0, 1.0);
    LayerProblem p;
    p.name = relu ? "conv1d+relu" : "conv1d";
    p.dim_ = ci * len + co * ci * k + co;
    p.eval_fn = [=](const std::vector<double>& c) {
      std::size_t off = 0;
      const Td x = slice_tensor(c, off, {ci, len});
      const Td kernel = slice_tensor(c, off, {co, ci, k});
      const Td bias = slice_tensor(c, off, {co});
      Td y = nn::conv1d_forward(x, kernel, bias);
      if (relu) y = nn::relu_forward(y);
      return dot(y.data, proj);
    };
    p.grad_fn = [=](const std::vector<double>& c) {
      std::size_t off = 0;
      const Td x = slice_tensor(c, off, {ci, len});
      const Td kernel = slice_tensor(c, off, {co, ci, k});
      const Td bias = slice_tensor(c, off, {co});
      Td up({co, lout}, proj);
      if (relu) {
        const Td y = nn::relu_forward(nn::conv1d_forward(x, kernel, bias));
        up = nn::relu_backward(y, up);
      }
      const auto g = nn::conv1d_backward(x, kernel, up);
      std::vector<double> out = g.grad_x.data;
      out.insert(out.end(), g.grad_kernel.data.begin(), g.grad_kernel.data.end());
      out.insert(out.end(), g.grad_bias.data.begin(), g.grad_bias.data.end());
      return out;
    };
    layers.emplace_back(p.name, std::move(p));
  }

  // dense: linear, ReLU, sigmoid
  for (const int act : {0, 1, 2}) {
    const std::size_t in = 14, out_dim = act == 2 ? 1 : 9;
    std::vector<double> proj(out_dim);
    for (auto& v : proj) v = rng.uniform(-1.0, 1.0);
    LayerProblem p;
    p.name = act == 0 ? "dense" : act == 1 ? "dense+relu" : "dense+sigmoid";
    p.dim_ = in + out_dim * in + out_dim;
    p.eval_fn = [=](const std::vector<double>& c) {
      std::size_t off = 0;
      const Td x = slice_tensor(c, off, {in});
      const Td w = slice_tensor(c, off, {out_dim, in});
      const Td b = slice_tensor(c, off, {out_dim});
      Td y = nn::dense_forward(x, w, b);
      if (act == 1) y = nn::relu_forward(y);
      if (act == 2) y = nn::sigmoid_forward(y);
      return dot(y.data, proj);
    };
    p.grad_fn = [=](const std::vector<double>& c) {
      std::size_t off = 0;
      const Td x = slice_tensor(c, off, {in});
      const Td w = slice_tensor(c, off, {out_dim, in});
      const Td b = slice_tensor(c, off, {out_dim});
      const Td y0 = nn::dense_forward(x, w, b);
      Td up({out_dim}, proj);
      if (act == 1) up = nn::relu_backward(nn::relu_forward(y0), up);
      if (act == 2) up = nn::sigmoid_backward(nn::sigmoid_forward(y0), up);
      const auto g = nn::dense_backward(x, w, up);
      std::vector<double> out = g.grad_x.data;
      out.insert(out.end(), g.grad_w.data.begin(), g.grad_w.data.end());
      out.insert(out.end(), g.grad_b.data.begin(), g.grad_b.data.end());
      return out;
    };
    layers.emplace_back(p.name, std::move(p));
  }

  // max-pool 2:1 and adaptive max-pool (input-only coordinates)
  for (const bool adaptive : {false, true}) {
    const std::size_t ch = 3, len = adaptive ? 31 : 20;
    const std::size_t out_len = adaptive ? 8 : len / 2;
    std::vector<double> proj(ch * out_len);
    for (auto& v : proj) v = rng.uniform(-1.0, 1.0);
    LayerProblem p;
    p.name = adaptive ? "adaptive_maxpool" : "maxpool2";
    p.dim_ = ch * len;
    auto pool = [=](const Td& x) {
      return adaptive ? nn::adaptive_maxpool_forward(x, out_len)
                      : nn::maxpool2_forward(x);
    };
    p.eval_fn = [=](const std::vector<double>& c) {
      std::size_t off = 0;
      const Td x = slice_tensor(c, off, {ch, len});
      return dot(pool(x).y.data, proj);
    };
    p.grad_fn = [=](const std::vector<double>& c) {
      std::size_t off = 0;
      const Td x = slice_tensor(c, off, {ch, len});
      const Td up({ch, out_len}, proj);
      return nn::pool_backward(pool(x), up).data;
    };
    layers.emplace_back(p.name, std::move(p));
  }

  for (auto& [name, problem] : layers) {
    std::vector<double> point(problem.dim());
    for (auto& v : point) v = rng.uniform(-1.0, 1.0);
    const auto res = chew::nn::grad_check(problem, point, {.step = 1e-6});
    require(res.max_rel_error < 1e-5, "layer ", name, ": relative error ",
            res.max_rel_error, " >= 1e-5");
    worst_layer = std::max(worst_layer, res.max_rel_error);
  }

  // Full h(f(x)): stratified finite differences — eight sampled coordinates
  // from every trainable tensor — on 5 random inputs. Two numeric realities
  // shape this check. First, the network is only piecewise smooth: when a
  // max-pool argmax or ReLU boundary falls inside the difference bracket, the
  // central difference measures a blend of two branches and no step size
  // makes it match the (correct, one-sided) analytic gradient; such points
  // are detected by comparing estimates at step and step/2 — they agree to
  // O(step^2) on smooth stretches and diverge across a kink — and another
  // coordinate is probed instead. A wrong backward pass cannot hide behind
  // this gate: it would disagree at smooth points too, and every tensor must
  // still place its full probe count. Second, an O(1) output resolves a
  // gradient only to about eps/step = 2e-10 absolute, so near-zero gradients
  // cannot support a meaningful relative comparison; the denominator is
  // floored at 1e-5, which still demands absolute agreement within 1e-9 for
  // such coordinates while keeping the strict 1e-4 bound everywhere else.
  auto f = chew::model::build_f<double>(402);
  auto h = chew::model::build_h<double>(403);
  auto hf = chew::model::compose<double>({f.segments[0], h.segments[0]}, {"f", "h"});
  double worst_full = 0.0;
  std::size_t kinks_skipped = 0;
  const double step = 1e-6;
  for (int trial = 0; trial < 5; ++trial) {
    SeededRng in_rng(500 + trial);
    const Td x = rand_tensor(in_rng, {1, 10000});
    chew::model::GraphTrace<double> trace;
    const Td y = chew::model::forward(hf, x, &trace);
    require(y.size() == 1, "h(f(x)) must be scalar");
    const auto grads = chew::model::backward(hf, trace, Td({1}, {1.0}));

    auto params = chew::model::trainable_params(hf);
    std::size_t param_index = 0;
    for (std::size_t s = 0; s < hf.segments.size(); ++s) {
      for (const auto& [gname, gtensor] : grads[s].items) {
        auto& [pname, ptensor] = params[param_index++];
        require(pname == gname, "gradient order mismatch: ", pname, " vs ", gname);
        SeededRng pick(mix_seed({600u, static_cast<std::uint64_t>(trial),
                                 static_cast<std::uint64_t>(param_index)}));
        auto fd_at = [&](std::size_t idx, double h_step) {
          const double saved = ptensor->data[idx];
          ptensor->data[idx] = saved + h_step;
          const double plus = chew::model::forward(hf, x)[0];
          ptensor->data[idx] = saved - h_step;
          const double minus = chew::model::forward(hf, x)[0];
          ptensor->data[idx] = saved;
          return (plus - minus) / (2.0 * h_step);
        };
        int placed = 0;
        for (int attempt = 0; placed < 8 && attempt < 32; ++attempt) {
          const std::size_t idx = pick.below(ptensor->size());
          const double fd_full = fd_at(idx, step);
          const double fd_half = fd_at(idx, step / 2.0);
          const double gate = std::max(
              2e-9, 1e-3 * std::max(std::abs(fd_full), std::abs(fd_half)));
          if (std::abs(fd_full - fd_half) > gate) {
            ++kinks_skipped;  // non-smooth bracket; FD is meaningless here
            continue;
          }
          const double numeric = fd_half;
          const double analytic = gtensor.data[idx];
          const double rel = std::abs(numeric - analytic) /
                             std::max({std::abs(numeric), std::abs(analytic), 1e-5});
          require(rel < 1e-4, "h(f(x)) tensor ", pname, "[", idx,
                  "]: relative error ", rel, " >= 1e-4 (analytic ", analytic,
                  ", numeric ", numeric, ")");
          worst_full = std::max(worst_full, rel);
          ++placed;
        }
        require(placed == 8, "tensor ", pname,
                ": could not place 8 probes on smooth points (", kinks_skipped,
                " kinks hit)");
      }
    }
  }
  const double elapsed = seconds_since(t0);
  require(elapsed < 120.0, "runtime ", elapsed, " s exceeds 2 min");
  return "worst layer rel err " + fmt(worst_layer) + ", worst full-network rel err " +
         fmt(worst_full) + " (" + std::to_string(kinks_skipped) +
         " kink points re-probed), " + fmt(elapsed) + " s";
}

// ===========================================================================
// Criterion 2 — NT-Xent matches an independent brute-force implementation on
// 1000 random batches over the published sweep grid, plus closed-form edges.

double reference_ntxent(const chew::objective::EmbeddingBatch<double>& batch,
                        double tau) {
  const std::size_t m = batch.vectors.size();
  const std::size_t n = batch.n;
  auto cosine = [&](std::size_t i, std::size_t j) {
    double d = 0, ni = 0, nj = 0;
    for (std::size_t k = 0; k < batch.vectors[i].size(); ++k) {
      d += batch.vectors[i][k] * batch.vectors[j][k];
      ni += batch.vectors[i][k] * batch.vectors[i][k];
      nj += batch.vectors[j][k] * batch.vectors[j][k];
    }
    return d / (std::sqrt(ni) * std::sqrt(nj));
  };
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t partner = i < n ? i + n : i - n;
    double denom = 0.0;
    for (std::size_t k = 0; k < m; ++k)
      if (k != i) denom += std::exp(cosine(i, k) / tau);
    total += -std::log(std::exp(cosine(i, partner) / tau) / denom);
  }
  return total / static_cast<double>(m);
}

std::string criterion_ntxent() {
  const std::size_t ns[] = {2, 4, 8};
  const std::size_t ds[] = {4, 8, 128};
  const double taus[] = {0.1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0};
  double worst = 0.0;
  std::size_t count = 0, combo = 0;
  while (count < 1000) {
    const std::size_t n = ns[combo % 3];
    const std::size_t d = ds[(combo / 3) % 3];
    const double tau = taus[(combo / 9) % 7];
    ++combo;
    SeededRng rng(mix_seed({700u, count}));
    chew::objective::EmbeddingBatch<double> batch;
    batch.n = n;
    for (std::size_t i = 0; i < 2 * n; ++i) {
      std::vector<double> v(d);
      for (auto& x : v) x = rng.uniform(-1.0, 1.0);
      batch.vectors.push_back(std::move(v));
    }
    const double got = chew::objective::ntxent_batch(batch, tau);
    const double want = reference_ntxent(batch, tau);
    const double diff = std::abs(got - want);
    require(diff < 1e-10, "batch ", count, " (n=", n, ", d=", d, ", tau=", tau,
            "): |", got, " - ", want, "| = ", diff, " >= 1e-10");
    worst = std::max(worst, diff);
    ++count;
  }

  chew::objective::EmbeddingBatch<double> single;
  single.n = 1;
  single.vectors = {{0.3, -0.7, 0.2}, {-0.5, 0.1, 0.9}};
  const double zero = chew::objective::ntxent_batch(single, 0.5);
  require(zero == 0.0, "n=1 loss is ", zero, ", expected exactly 0");

  chew::objective::EmbeddingBatch<double> identical;
  identical.n = 2;
  identical.vectors.assign(4, {0.3, -0.7, 0.2});
  const double ln3 = chew::objective::ntxent_batch(identical, 0.5);
  require(std::abs(ln3 - std::log(3.0)) < 1e-12, "all-identical n=2 loss ", ln3,
          " differs from ln 3 by ", std::abs(ln3 - std::log(3.0)));

  return "1000 batches, worst |diff| " + fmt(worst) + "; n=1 loss exactly 0; ln 3 within " +
         fmt(std::abs(ln3 - std::log(3.0)));
}

// ===========================================================================
// Criterion 3 — architecture conformance: f maps 10000 -> 512, h in (0,1),
// projection heads map to 128, and frozen tensors stay bit-identical across
// 100 optimizer steps.

std::string criterion_architecture() {
  namespace model = chew::model;
  SeededRng rng(801);

  auto f = model::build_f<float>(101);
  Tensor<float> window({1, 10000});
  for (auto& v : window.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  const auto features = model::forward(f, window);
  require(features.size() == 512, "f produced ", features.size(),
          " features, expected 512");
  const auto f_shape = model::output_shape(f.segments[0].arch);
  require(f_shape.is_vector && f_shape.dim == 512, "f output shape is not a 512-vector");

  auto h = model::build_h<float>(102);
  for (int i = 0; i < 20; ++i) {
    Tensor<float> feat({512});
    for (auto& v : feat.data) v = static_cast<float>(rng.uniform(-3.0, 3.0));
    const float y = model::forward(h, feat)[0];
    require(y > 0.0f && y < 1.0f, "h output ", y, " outside (0,1)");
  }

  for (const bool nonlinear : {false, true}) {
    auto g = nonlinear ? model::build_gNL<float>(103) : model::build_gL<float>(104);
    const auto shape = model::output_shape(g.segments[0].arch);
    require(shape.is_vector && shape.dim == 128,
            nonlinear ? "gNL" : "gL", " output dim is ", shape.dim, ", expected 128");
    Tensor<float> feat({512});
    for (auto& v : feat.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    require(model::forward(g, feat).size() == 128, "projection output size != 128");
  }

  // Freezing: compose frozen f (short input for speed; same parameter set)
  // with trainable h, run 100 Adam steps, then compare every frozen tensor
  // byte for byte.
  auto f2k = model::build_f<float>(105, 2000);
  auto head = model::build_h<float>(106);
  auto graph = model::compose<float>({f2k.segments[0], head.segments[0]}, {"h"});
  std::vector<std::vector<float>> frozen_before;
  for (const auto& [name, tensor] : graph.segments[0].params.items)
    frozen_before.push_back(tensor.data);

  chew::optim::AdamState<float> state;
  const chew::optim::AdamConfig adam;
  auto params = model::trainable_params(graph);
  for (std::size_t step = 1; step <= 100; ++step) {
    Tensor<float> x({1, 2000});
    for (auto& v : x.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    model::GraphTrace<float> trace;
    const auto y = model::forward(graph, x, &trace);
    const auto bce = chew::objective::bce(static_cast<double>(y.data[0]),
                                          static_cast<int>(step % 2));
    const Tensor<float> upstream({1}, {static_cast<float>(bce.grad)});
    const auto grads = model::backward(graph, trace, upstream);
    chew::optim::GradRefs<float> grad_refs;
    for (const auto& [name, g] : grads[1].items) grad_refs.emplace_back(name, &g);
    chew::optim::adam_step(params, grad_refs, state, adam, step);
  }
  for (std::size_t i = 0; i < graph.segments[0].params.items.size(); ++i)
    require(graph.segments[0].params.items[i].second.data == frozen_before[i],
            "frozen tensor ", graph.segments[0].params.items[i].first,
            " changed during optimization");
  bool head_changed = false;
  for (const auto& [name, tensor] : graph.segments[1].params.items)
    if (tensor.data != head.segments[0].params.at(name).data) head_changed = true;
  require(head_changed, "trainable head never changed across 100 steps");

  return "f: 10000 -> 512; h in (0,1); g -> 128; frozen tensors bit-identical over "
         "100 Adam steps";
}

// ===========================================================================
// Criterion 4 — schedule and optimizer values.

std::string criterion_optimizers() {
  namespace optim = chew::optim;
  const optim::ScheduleConfig sched{100, 0.1, 0.3};
  require(optim::lr_at_epoch(10, sched) == 0.3, "lr(10) != 0.3 exactly");
  require(optim::lr_at_epoch(55, sched) == 0.15, "lr(55) != 0.15 exactly");
  require(optim::lr_at_epoch(100, sched) == 0.0, "lr(100) != 0 exactly");

  // LARS with unit trust ratio (adaptation-exempt) and zero momentum is SGD.
  SeededRng rng(901);
  Tensor<double> w1({7}), w2({3, 4});
  for (auto& v : w1.data) v = rng.uniform(-1.0, 1.0);
  for (auto& v : w2.data) v = rng.uniform(-1.0, 1.0);
  auto sgd1 = w1.data, sgd2 = w2.data;
  optim::LarsConfig lars;
  lars.momentum = 0.0;
  lars.weight_decay = 0.0;
  lars.adaptation_exempt = [](const std::string&) { return true; };
  optim::LarsState<double> lars_state;
  const double lr = 0.05;
  double lars_vs_sgd = 0.0;
  for (int step = 0; step < 10; ++step) {
    Tensor<double> g1({7}), g2({3, 4});
    for (auto& v : g1.data) v = rng.uniform(-1.0, 1.0);
    for (auto& v : g2.data) v = rng.uniform(-1.0, 1.0);
    optim::ParamRefs<double> params{{"a/weight", &w1}, {"b/weight", &w2}};
    const optim::GradRefs<double> grads{{"a/weight", &g1}, {"b/weight", &g2}};
    optim::lars_step(params, grads, lars_state, lr, lars);
    for (std::size_t i = 0; i < sgd1.size(); ++i) sgd1[i] -= lr * g1.data[i];
    for (std::size_t i = 0; i < sgd2.size(); ++i) sgd2[i] -= lr * g2.data[i];
    for (std::size_t i = 0; i < sgd1.size(); ++i)
      lars_vs_sgd = std::max(lars_vs_sgd, std::abs(w1.data[i] - sgd1[i]));
    for (std::size_t i = 0; i < sgd2.size(); ++i)
      lars_vs_sgd = std::max(lars_vs_sgd, std::abs(w2.data[i] - sgd2[i]));
  }
  require(lars_vs_sgd < 1e-12, "LARS vs SGD max deviation ", lars_vs_sgd, " >= 1e-12");

  // Adam's first step is at most lr in every coordinate.
  Tensor<double> w({64});
  for (auto& v : w.data) v = rng.uniform(-1.0, 1.0);
  const auto before = w.data;
  Tensor<double> g({64});
  for (auto& v : g.data) v = rng.uniform(-2.0, 2.0);
  optim::ParamRefs<double> params{{"w/weight", &w}};
  const optim::GradRefs<double> grads{{"w/weight", &g}};
  optim::AdamState<double> adam_state;
  const optim::AdamConfig adam;  // lr 1e-3
  optim::adam_step(params, grads, adam_state, adam, 1);
  double max_step = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    max_step = std::max(max_step, std::abs(w.data[i] - before[i]));
  require(max_step <= adam.lr + 1e-15, "Adam first step ", max_step, " exceeds lr ",
          adam.lr);

  return "lr triple exact; LARS==SGD within " + fmt(lars_vs_sgd) +
         "; Adam first step max " + fmt(max_step) + " <= lr";
}

// ===========================================================================
// Criterion 5 — post-processing rules match an independently written
// interpreter on 1000 randomized tracks, including the boundary cases.

struct RefSpan {
  double start, end;
};

std::vector<RefSpan> ref_merge(const std::vector<RefSpan>& spans, double max_gap) {
  std::vector<RefSpan> out;
  for (const auto& s : spans) {
    if (!out.empty() && s.start - out.back().end <= max_gap)
      out.back().end = std::max(out.back().end, s.end);
    else
      out.push_back(s);
  }
  return out;
}

struct RefMeal {
  double start, end, ratio;
};

struct RefPipeline {
  std::vector<RefSpan> chews;
  std::vector<RefSpan> bouts;
  std::vector<RefMeal> meals;
};

RefPipeline reference_rules(const chew::postprocess::PredictionTrack& track,
                            const chew::postprocess::PostprocessConfig& cfg) {
  RefPipeline out;
  const std::size_t n = track.scores.size();
  std::size_t i = 0;
  while (i < n) {
    if (track.scores[i] >= track.threshold) {
      std::size_t j = i;
      while (j + 1 < n && track.scores[j + 1] >= track.threshold) ++j;
      out.chews.push_back({track.start_s[i], track.start_s[j] + track.window_s});
      i = j + 1;
    } else {
      ++i;
    }
  }
  const auto merged = ref_merge(out.chews, cfg.chew_gap_s);
  for (const auto& b : merged)
    if (b.end - b.start >= cfg.min_bout_s) out.bouts.push_back(b);
  // meals: group bouts while the gap stays within bout_gap_s
  std::size_t k = 0;
  while (k < out.bouts.size()) {
    std::size_t j = k;
    double covered = out.bouts[k].end - out.bouts[k].start;
    while (j + 1 < out.bouts.size() &&
           out.bouts[j + 1].start - out.bouts[j].end <= cfg.bout_gap_s) {
      ++j;
      covered += out.bouts[j].end - out.bouts[j].start;
    }
    const double start = out.bouts[k].start, end = out.bouts[j].end;
    const double ratio = covered / (end - start);
    if (ratio >= cfg.min_meal_ratio) out.meals.push_back({start, end, ratio});
    k = j + 1;
  }
  return out;
}

std::string criterion_postprocess() {
  namespace pp = chew::postprocess;
  const auto t0 = std::chrono::steady_clock::now();

  for (std::size_t trial = 0; trial < 1000; ++trial) {
    SeededRng rng(mix_seed({1000u, trial}));
    pp::PredictionTrack track;
    track.window_s = rng.uniform(0.5, 6.0);
    track.threshold = 0.5;
    const std::size_t n = 1 + rng.below(200);
    double t = rng.uniform(0.0, 10.0);
    for (std::size_t i = 0; i < n; ++i) {
      track.start_s.push_back(t);
      track.scores.push_back(rng.uniform(0.0, 1.0));
      t += rng.uniform(0.2, 8.0);
    }
    pp::PostprocessConfig cfg;
    cfg.chew_gap_s = rng.uniform(0.5, 3.0);
    cfg.min_bout_s = rng.uniform(2.0, 8.0);
    cfg.bout_gap_s = rng.uniform(20.0, 90.0);
    cfg.min_meal_ratio = rng.uniform(0.1, 0.5);

    const auto got = pp::run_pipeline(track, cfg);
    const auto want = reference_rules(track, cfg);
    require(got.chews.size() == want.chews.size(), "trial ", trial, ": chew count ",
            got.chews.size(), " != ", want.chews.size());
    for (std::size_t i = 0; i < want.chews.size(); ++i)
      require(got.chews[i].start_s == want.chews[i].start &&
                  got.chews[i].end_s == want.chews[i].end,
              "trial ", trial, ": chew ", i, " differs");
    require(got.bouts.size() == want.bouts.size(), "trial ", trial, ": bout count ",
            got.bouts.size(), " != ", want.bouts.size());
    for (std::size_t i = 0; i < want.bouts.size(); ++i)
      require(got.bouts[i].interval.start_s == want.bouts[i].start &&
                  got.bouts[i].interval.end_s == want.bouts[i].end,
              "trial ", trial, ": bout ", i, " differs");
    require(got.meals.size() == want.meals.size(), "trial ", trial, ": meal count ",
            got.meals.size(), " != ", want.meals.size());
    for (std::size_t i = 0; i < want.meals.size(); ++i) {
      require(got.meals[i].interval.start_s == want.meals[i].start &&
                  got.meals[i].interval.end_s == want.meals[i].end,
              "trial ", trial, ": meal ", i, " interval differs");
      require(std::abs(got.meals[i].bout_ratio - want.meals[i].ratio) < 1e-12,
              "trial ", trial, ": meal ", i, " ratio ", got.meals[i].bout_ratio,
              " != ", want.meals[i].ratio);
    }
  }

  // Boundary cases: gap exactly 2.0 s merges; duration exactly 5.0 s is kept;
  // bout gap exactly 60 s merges; bout ratio exactly 25% is kept.
  using chew::dataset::Interval;
  const auto merged = pp::chews_to_bouts({{0.0, 1.0}, {3.0, 4.0}}, 2.0);
  require(merged.size() == 1 && merged[0].interval == Interval{0.0, 4.0},
          "chew gap exactly 2.0 s did not merge");
  const auto kept = pp::drop_short_bouts({{{0.0, 5.0}, {}}}, 5.0);
  require(kept.size() == 1, "bout of exactly 5.0 s was dropped");
  const auto meals = pp::bouts_to_meals({{{0.0, 10.0}, {}}, {{70.0, 80.0}, {}}}, 60.0);
  require(meals.size() == 1 && meals[0].interval == Interval{0.0, 80.0},
          "bout gap exactly 60 s did not merge");
  require(meals[0].bout_ratio == 0.25, "expected bout ratio exactly 0.25, got ",
          meals[0].bout_ratio);
  const auto filtered = pp::filter_meals(meals, 0.25);
  require(filtered.size() == 1, "meal with ratio exactly 25% was dropped");

  const double elapsed = seconds_since(t0);
  require(elapsed < 30.0, "runtime ", elapsed, " s exceeds 30 s");
  return "1000 randomized tracks match exactly; all four boundary cases hold; " +
         fmt(elapsed) + " s";
}

// ===========================================================================
// Criterion 6 — DSP conformance: high-pass response and decimation fidelity.

std::string criterion_dsp() {
  namespace sig = chew::signal;
  const auto hp = sig::design_highpass_butterworth(20.0, 2000.0, 4);
  const double at_cutoff = 20.0 * std::log10(std::abs(sig::frequency_response(hp, 20.0)));
  require(std::abs(at_cutoff - (-3.01)) <= 0.1, "cutoff response ", at_cutoff,
          " dB outside -3.01 +- 0.1 dB");
  const double at_2hz = 20.0 * std::log10(std::abs(sig::frequency_response(hp, 2.0)));
  require(at_2hz <= -40.0, "2 Hz response ", at_2hz, " dB, need <= -40 dB");
  const double at_dc = std::abs(sig::frequency_response(hp, 0.0));
  require(at_dc == 0.0, "DC response ", at_dc, ", expected exactly 0");

  // 100 Hz unit sine at 48 kHz, decimated by 24 to 2 kHz. The anti-alias FIR
  // is applied centered (zero net delay), so output k aligns with input time
  // k/2000 s exactly. Its half-width is 96 input samples = 4 output samples;
  // skipping 10 per edge leaves only fully covered samples.
  sig::TimeSeries x;
  x.sample_rate_hz = 48000.0;
  x.samples.resize(96000);
  for (std::size_t i = 0; i < x.samples.size(); ++i)
    x.samples[i] = std::sin(2.0 * M_PI * 100.0 * static_cast<double>(i) / 48000.0);
  const auto y = sig::decimate(x, 24);
  require(y.sample_rate_hz == 2000.0, "decimated rate ", y.sample_rate_hz);
  double worst = 0.0;
  for (std::size_t k = 10; k + 10 < y.samples.size(); ++k) {
    const double tk = static_cast<double>(k) / 2000.0;
    worst = std::max(worst, std::abs(y.samples[k] - std::sin(2.0 * M_PI * 100.0 * tk)));
  }
  require(worst <= 0.01, "decimated sine deviates by ", worst, " (> 1% of amplitude)");
  return "cutoff " + fmt(at_cutoff) + " dB, 2 Hz " + fmt(at_2hz) +
         " dB, exact DC null; decimation error " + fmt(worst);
}

// ===========================================================================
// Criterion 7 — end-to-end synthetic smoke run through the CLI: 6 subjects of
// 10 minutes, reduced pretraining (20 epochs, batch 64), all three variants
// plus the supervised baseline evaluated on 2 held-out subjects, F1 > 0.8
// everywhere, under 15 minutes.

std::string criterion_smoke() {
  const fs::path dir = scratch_dir("smoke");
  const std::string common =
      " --preset small --seed 1 --output-dir '" + (dir / "run").string() + "'";
  const auto t0 = std::chrono::steady_clock::now();
  run_cli_ok("synth" + common);
  run_cli_ok("preprocess" + common);
  run_cli_ok("holdout" + common);
  const double elapsed = seconds_since(t0);

  const json holdout = json::parse(read_file(dir / "run" / "reports" / "holdout.json"));
  require(holdout["rows"].size() == 4, "expected 4 holdout rows, got ",
          holdout["rows"].size());
  double min_f1 = 1.0;
  for (const auto& row : holdout["rows"]) {
    const double f1 = row["metrics"]["f1"].get<double>();
    require(f1 > 0.8, "row ", row["name"].get<std::string>(), " has F1 ", f1,
            " <= 0.8");
    min_f1 = std::min(min_f1, f1);
  }
  require(elapsed < 900.0, "runtime ", elapsed, " s exceeds 15 min");
  return "4 rows (3 variants + supervised), min F1 " + fmt(min_f1) + ", " +
         fmt(elapsed) + " s";
}

// ===========================================================================
// Criterion 8 — overfit sanity: h reaches BCE < 0.05 on 32 cached feature
// vectors within 500 Adam steps.

std::string criterion_overfit() {
  SeededRng rng(1201);
  chew::train::FeatureSet set;
  for (int i = 0; i < 32; ++i) {
    std::vector<float> row(512);
    for (auto& v : row) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    set.x.push_back(std::move(row));
    set.y.push_back(i % 2);
  }
  chew::train::HeadTrainConfig cfg;
  cfg.batch_size = 64;  // 32 samples -> one Adam step per epoch
  cfg.epochs = 500;
  cfg.seed = 7;
  const auto h = chew::model::build_h<float>(1202);
  const auto result = chew::train::train_head_on_features(set, set, h, cfg);
  std::size_t steps_to_target = 0;
  double best = 1e9;
  for (std::size_t e = 0; e < result.train_loss.size(); ++e) {
    best = std::min(best, result.train_loss[e]);
    if (result.train_loss[e] < 0.05) {
      steps_to_target = e + 1;
      break;
    }
  }
  require(steps_to_target > 0 && steps_to_target <= 500, "BCE stayed >= 0.05 (best ",
          best, ") across 500 Adam steps");
  return "BCE < 0.05 after " + std::to_string(steps_to_target) + " Adam steps";
}

// ===========================================================================
// Criterion 9 — determinism: every command re-run with the same seed under
// --deterministic reproduces weight files and metrics JSON byte for byte.

std::string criterion_determinism() {
  const fs::path dir = scratch_dir("determinism");
  const json cfg{
      {"seed", 17},
      {"output_dir", (dir / "run").string()},
      {"synth",
       {{"subjects", 4},
        {"duration_s", 80.0},
        {"first_meal_s", 8.0},
        {"meal_every_s", 40.0},
        {"meal_duration_s", 18.0}}},
      {"corpus", {{"window_len", 2000}, {"stride", 4000}}},
      {"split", {{"n_holdout", 1}, {"n_validation", 1}}},
      {"pretrain", {{"batch_size", 8}, {"epochs", 2}}},
      {"head", {{"epochs", 10}}},
      {"supervised", {{"epochs", 2}}},
  };
  std::ofstream(dir / "config.json") << cfg.dump(2);
  const std::string common =
      " --deterministic --config '" + (dir / "config.json").string() + "'";

  auto run_all = [&]() {
    for (const std::string cmd :
         {"synth", "preprocess", "pretrain", "train-head", "holdout"})
      run_cli_ok(cmd + common);
  };
  const std::vector<fs::path> artifacts = {
      dir / "run" / "synth" / "S0.wav",
      dir / "run" / "preprocessed" / "S0.wav",
      dir / "run" / "models" / "f_linear_tau0.5.wts",
      dir / "run" / "models" / "f_nonlinear_tau0.5.wts",
      dir / "run" / "models" / "g_linear_tau0.5.wts",
      dir / "run" / "models" / "g_nonlinear_tau0.5.wts",
      dir / "run" / "models" / "pretrain_linear_tau0.5.json",
      dir / "run" / "models" / "pretrain_nonlinear_tau0.5.json",
      dir / "run" / "models" / "h_fL_tau0.5.wts",
      dir / "run" / "models" / "h_fNL_tau0.5.wts",
      dir / "run" / "models" / "h_gNL1_fNL_tau0.5.wts",
      dir / "run" / "models" / "h_fL_tau0.5.json",
      dir / "run" / "models" / "h_fNL_tau0.5.json",
      dir / "run" / "models" / "h_gNL1_fNL_tau0.5.json",
      dir / "run" / "reports" / "holdout.json",
  };

  run_all();
  std::vector<std::string> first;
  for (const auto& p : artifacts) first.push_back(read_file(p));
  run_all();
  for (std::size_t i = 0; i < artifacts.size(); ++i)
    require(read_file(artifacts[i]) == first[i], artifacts[i].filename().string(),
            " differs between identical runs");
  return std::to_string(artifacts.size()) +
         " artifacts (audio, weights, loss curves, metrics) bit-identical across "
         "reruns";
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<std::string()>>> criteria = {
      {"gradient fidelity: finite differences per layer and for full h(f(x))",
       criterion_gradients},
      {"NT-Xent equals an independent brute-force oracle on 1000 batches",
       criterion_ntxent},
      {"architecture conformance: shapes, output ranges, parameter freezing",
       criterion_architecture},
      {"schedule and optimizer values: lr triple, LARS==SGD, Adam step bound",
       criterion_optimizers},
      {"post-processing matches an independent rule interpreter (1000 tracks)",
       criterion_postprocess},
      {"DSP conformance: 20 Hz high-pass response and decimation by 24",
       criterion_dsp},
      {"end-to-end synthetic smoke: 6 subjects, all variants F1 > 0.8, < 15 min",
       criterion_smoke},
      {"overfit sanity: BCE < 0.05 on 32 cached features within 500 Adam steps",
       criterion_overfit},
      {"determinism: rerun with same seed reproduces weights and metrics exactly",
       criterion_determinism},
  };

  // Optional arguments select a subset of criteria by 1-based number.
  std::vector<std::size_t> selected;
  for (int a = 1; a < argc; ++a) {
    const long v = std::strtol(argv[a], nullptr, 10);
    if (v < 1 || static_cast<std::size_t>(v) > criteria.size()) {
      std::cerr << "usage: acceptance [criterion-number...]" << std::endl;
      return 2;
    }
    selected.push_back(static_cast<std::size_t>(v) - 1);
  }

  bool all_passed = true;
  std::size_t executed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), i) == selected.end())
      continue;
    ++executed;
    const auto& [name, fn] = criteria[i];
    try {
      const std::string detail = fn();
      std::cout << "[PASS] criterion " << (i + 1) << ": " << name << " — " << detail
                << std::endl;
    } catch (const std::exception& e) {
      all_passed = false;
      std::cout << "[FAIL] criterion " << (i + 1) << ": " << name << " — " << e.what()
                << std::endl;
    }
  }
  std::cout << (all_passed ? "acceptance: all " + std::to_string(executed) +
                                 " criteria passed"
                           : "acceptance: FAILURES present")
            << std::endl;
  return all_passed ? 0 : 1;
}
