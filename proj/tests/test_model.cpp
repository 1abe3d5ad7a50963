#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "doctest.h"

#include "chew/model.hpp"
#include "chew/nn.hpp"
#include "chew/rng.hpp"

namespace fs = std::filesystem;
using namespace chew;
using model::ModelGraph;
using Td = Tensor<double>;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<unsigned> counter{0};
    path = fs::temp_directory_path() /
           ("chewmodel_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

Td rand_input(SeededRng& rng, std::vector<std::size_t> shape) {
  Td t(std::move(shape));
  for (auto& v : t.data) v = rng.uniform(-1.0, 1.0);
  return t;
}

/// Whole-graph scalar problem over [trainable params | input]; the loss is
/// the first output coordinate.
struct GraphProblem : nn::DiffProblem {
  ModelGraph<double>& graph;
  std::vector<std::size_t> input_shape_;

  GraphProblem(ModelGraph<double>& g, std::vector<std::size_t> in_shape)
      : graph(g), input_shape_(std::move(in_shape)) {}

  std::size_t param_dim() const {
    std::size_t n = 0;
    for (auto& [name, t] : model::trainable_params(graph)) n += t->size();
    return n;
  }

  std::size_t dim() const override {
    return param_dim() + Td::numel(input_shape_);
  }

  Td apply(const std::vector<double>& coords) {
    auto params = model::trainable_params(graph);
    std::size_t off = 0;
    for (auto& [name, t] : params) {
      std::copy_n(coords.begin() + static_cast<std::ptrdiff_t>(off), t->size(),
                  t->data.begin());
      off += t->size();
    }
    Td x(input_shape_);
    std::copy_n(coords.begin() + static_cast<std::ptrdiff_t>(off), x.size(),
                x.data.begin());
    return x;
  }

  double eval(const std::vector<double>& coords) override {
    const Td x = apply(coords);
    return model::forward(graph, x)[0];
  }

  std::vector<double> analytic_grad(const std::vector<double>& coords) override {
    const Td x = apply(coords);
    model::GraphTrace<double> trace;
    const Td y = model::forward(graph, x, &trace);
    Td upstream(y.shape);
    upstream.fill(0.0);
    upstream[0] = 1.0;
    Td input_grad;
    const auto grads = model::backward(graph, trace, upstream, &input_grad);

    std::vector<double> out;
    out.reserve(dim());
    for (std::size_t s = 0; s < graph.segments.size(); ++s)
      if (graph.segments[s].trainable)
        for (const auto& [name, g] : grads[s].items)
          out.insert(out.end(), g.data.begin(), g.data.end());
    out.insert(out.end(), input_grad.data.begin(), input_grad.data.end());
    return out;
  }

  std::vector<double> current_point() {
    std::vector<double> coords;
    coords.reserve(dim());
    for (auto& [name, t] : model::trainable_params(graph))
      coords.insert(coords.end(), t->data.begin(), t->data.end());
    return coords;  // caller appends the input
  }
};

}  // namespace

TEST_SUITE("model") {

TEST_CASE("f maps a 10000-sample window to 512 features") {
  const auto f = model::build_f<double>(1);
  SeededRng rng(2);
  const auto x = rand_input(rng, {1, 10000});
  model::GraphTrace<double> trace;
  const auto y = model::forward(f, x, &trace);
  CHECK(y.shape == std::vector<std::size_t>{512});
  CHECK(y.all_finite());

  // Temporal chain with valid padding: conv inputs at layers 2,4,6,8 are the
  // previous pool outputs; the adaptive pool sees [64, 286].
  const auto& L = trace.segments[0].layers;
  CHECK(L[2].input.shape == std::vector<std::size_t>{8, 4992});
  CHECK(L[4].input.shape == std::vector<std::size_t>{16, 2488});
  CHECK(L[6].input.shape == std::vector<std::size_t>{32, 1236});
  CHECK(L[8].input.shape == std::vector<std::size_t>{64, 610});
  CHECK(L[10].pool_in_ch == 64);
  CHECK(L[10].pool_in_len == 286);
}

TEST_CASE("f has 203064 parameters and He-bounded init") {
  const auto f = model::build_f<double>(5);
  CHECK(f.param_count() == 203064);

  // conv1 fan-in 16, conv5 fan-in 64*39; biases start at zero.
  const auto& w1 = f.segments[0].params.at("f/conv1/weight");
  const double bound1 = std::sqrt(6.0 / 16.0);
  for (double v : w1.data) {
    CHECK(v >= -bound1);
    CHECK(v <= bound1);
  }
  const auto& w5 = f.segments[0].params.at("f/conv5/weight");
  const double bound5 = std::sqrt(6.0 / (64.0 * 39.0));
  for (double v : w5.data) {
    CHECK(v >= -bound5);
    CHECK(v <= bound5);
  }
  for (double v : f.segments[0].params.at("f/conv3/bias").data) CHECK(v == 0.0);
}

TEST_CASE("builders are deterministic per seed") {
  const auto a = model::build_f<float>(42);
  const auto b = model::build_f<float>(42);
  const auto c = model::build_f<float>(43);
  for (std::size_t i = 0; i < a.segments[0].params.items.size(); ++i) {
    CHECK(a.segments[0].params.items[i].second.data ==
          b.segments[0].params.items[i].second.data);
  }
  CHECK(a.segments[0].params.at("f/conv1/weight").data !=
        c.segments[0].params.at("f/conv1/weight").data);
}

TEST_CASE("gL is a single linear projection to 128") {
  auto g = model::build_gL<double>(3);
  CHECK(g.param_count() == 512 * 128 + 128);
  SeededRng rng(4);
  const auto x = rand_input(rng, {512});
  CHECK(model::forward(g, x).shape == std::vector<std::size_t>{128});

  // Zero input passes the bias straight through.
  auto& bias = g.segments[0].params.at("gL/dense1/bias");
  for (std::size_t i = 0; i < bias.size(); ++i) bias[i] = 0.25 * (i % 7);
  Td zero({512});
  CHECK(model::forward(g, zero).data == bias.data);
}

TEST_CASE("gNL parameter count and output width") {
  const auto g = model::build_gNL<double>(6);
  // (512*512 + 512) + (512*512 + 512) + (512*128 + 128)
  CHECK(g.param_count() == 262656 + 262656 + 65664);
  CHECK(g.param_count() == 590976);
  SeededRng rng(7);
  const auto y = model::forward(g, rand_input(rng, {512}));
  CHECK(y.shape == std::vector<std::size_t>{128});
}

TEST_CASE("h chains 512 -> 200 -> 200 -> 1 with sigmoid output") {
  const auto h = model::build_h<double>(8);
  SeededRng rng(9);
  model::GraphTrace<double> trace;
  const auto y = model::forward(h, rand_input(rng, {512}), &trace);
  CHECK(y.shape == std::vector<std::size_t>{1});
  CHECK(y[0] > 0.0);
  CHECK(y[0] < 1.0);
  const auto& L = trace.segments[0].layers;
  CHECK(L[0].input.shape == std::vector<std::size_t>{512});
  CHECK(L[1].input.shape == std::vector<std::size_t>{200});
  CHECK(L[2].input.shape == std::vector<std::size_t>{200});
}

TEST_CASE("split_gNL reproduces the unsplit head bit-exactly") {
  const auto g = model::build_gNL<double>(10);
  const auto [g1, g2] = model::split_gNL(g);
  CHECK(model::output_shape(g1.segments[0].arch).dim == 512);
  CHECK(model::output_shape(g2.segments[0].arch).dim == 128);

  SeededRng rng(11);
  for (int i = 0; i < 10; ++i) {
    const auto x = rand_input(rng, {512});
    const auto direct = model::forward(g, x);
    const auto staged = model::forward(g2, model::forward(g1, x));
    CHECK(direct.data == staged.data);
  }

  CHECK_THROWS_AS(model::split_gNL(model::build_gL<double>(1)), std::invalid_argument);
  CHECK_THROWS_AS(model::split_gNL(model::build_h<double>(1)), std::invalid_argument);
}

TEST_CASE("compose validates the chain and trainable set") {
  auto f = model::build_f<double>(12);
  auto h = model::build_h<double>(13);
  auto hf = model::compose<double>({f.segments[0], h.segments[0]}, {"h"});
  CHECK(hf.segments[0].trainable == false);
  CHECK(hf.segments[1].trainable == true);

  SeededRng rng(14);
  const auto y = model::forward(hf, rand_input(rng, {1, 10000}));
  CHECK(y.shape == std::vector<std::size_t>{1});
  CHECK(y[0] > 0.0);
  CHECK(y[0] < 1.0);

  CHECK_THROWS_AS(model::compose<double>({f.segments[0], h.segments[0]}, {}),
                  std::invalid_argument);
  CHECK_THROWS_AS(model::compose<double>({f.segments[0], h.segments[0]}, {"nosuch"}),
                  std::invalid_argument);
  auto h200 = model::build_h<double>(13, 200);
  CHECK_THROWS_AS(model::compose<double>({f.segments[0], h200.segments[0]}, {"h"}),
                  std::invalid_argument);
  CHECK_THROWS_AS(model::compose<double>({}, {"h"}), std::invalid_argument);
}

TEST_CASE("frozen segments receive no gradients") {
  auto f = model::build_f<double>(15);
  auto h = model::build_h<double>(16);
  auto hf = model::compose<double>({f.segments[0], h.segments[0]}, {"h"});

  const auto frozen_before = hf.segments[0].params.items;

  SeededRng rng(17);
  model::GraphTrace<double> trace;
  const auto y = model::forward(hf, rand_input(rng, {1, 10000}), &trace);
  const auto grads = model::backward(hf, trace, Td({1}, {1.0}));
  CHECK(grads[0].items.empty());
  REQUIRE(grads[1].items.size() == 6);
  CHECK(grads[1].items[0].first == "h/dense1/weight");

  // Only h's parameters are exposed for updates.
  for (const auto& [name, t] : model::trainable_params(hf))
    CHECK(name.starts_with("h/"));

  // The frozen ParamSet is untouched bit for bit.
  for (std::size_t i = 0; i < frozen_before.size(); ++i)
    CHECK(hf.segments[0].params.items[i].second.data == frozen_before[i].second.data);

  auto none = hf;
  none.segments[0].trainable = false;
  none.segments[1].trainable = false;
  CHECK_THROWS_AS(model::backward(none, trace, Td({1}, {1.0})), std::invalid_argument);
}

TEST_CASE("full h-of-f gradient matches central differences") {
  auto f = model::build_f<double>(18);
  auto h = model::build_h<double>(19);
  auto hf = model::compose<double>({f.segments[0], h.segments[0]}, {"f", "h"});

  GraphProblem prob(hf, {1, 10000});
  SeededRng rng(20);
  auto point = prob.current_point();
  for (std::size_t i = 0; i < 10000; ++i) point.push_back(rng.uniform(-1.0, 1.0));
  REQUIRE(point.size() == prob.dim());

  const auto res = nn::grad_check(prob, point, {.step = 1e-6, .max_coords = 150, .seed = 3});
  CHECK(res.coords_checked == 150);
  CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("pretraining-style composition f+g is differentiable end to end") {
  auto f = model::build_f<double>(21);
  auto g = model::build_gNL<double>(22);
  auto fg = model::compose<double>({f.segments[0], g.segments[0]}, {"f", "gNL"});

  GraphProblem prob(fg, {1, 10000});
  SeededRng rng(23);
  auto point = prob.current_point();
  for (std::size_t i = 0; i < 10000; ++i) point.push_back(rng.uniform(-1.0, 1.0));
  const auto res = nn::grad_check(prob, point, {.step = 1e-6, .max_coords = 60, .seed = 4});
  CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("weights survive a save/load round trip bit-exactly") {
  TempDir td;
  auto f = model::build_f<float>(24);
  auto h = model::build_h<float>(25);
  auto hf = model::compose<float>({f.segments[0], h.segments[0]}, {"h"});
  const auto path = td.path / "hf.wts";
  model::save_weights(hf, path);
  const auto back = model::load_weights<float>(path);

  REQUIRE(back.segments.size() == 2);
  CHECK(back.segments[0].name == "f");
  CHECK(back.segments[0].trainable == false);
  CHECK(back.segments[1].trainable == true);
  CHECK(back.segments[0].arch == hf.segments[0].arch);

  SeededRng rng(26);
  for (int i = 0; i < 10; ++i) {
    Tensor<float> x({1, 10000});
    for (auto& v : x.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    CHECK(model::forward(hf, x).data == model::forward(back, x).data);
  }
}

TEST_CASE("weight file rejects corruption and version skew") {
  TempDir td;
  const auto g = model::build_gL<float>(27);
  const auto path = td.path / "g.wts";
  model::save_weights(g, path);

  auto corrupt = [&](std::size_t offset, char value, const fs::path& to) {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    bytes[offset] = value;
    std::ofstream out(to, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  };

  corrupt(0, 'X', td.path / "badmagic.wts");
  CHECK_THROWS_WITH_AS(model::load_weights<float>(td.path / "badmagic.wts"),
                       doctest::Contains("not a chewdetect weights file"),
                       std::runtime_error);

  corrupt(8, 9, td.path / "badver.wts");
  CHECK_THROWS_WITH_AS(model::load_weights<float>(td.path / "badver.wts"),
                       doctest::Contains("version"), std::runtime_error);

  // Truncation.
  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    std::ofstream out(td.path / "short.wts", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_WITH_AS(model::load_weights<float>(td.path / "short.wts"),
                       doctest::Contains("truncated"), std::runtime_error);

  // Precision mismatch: saved float32, loaded as double.
  CHECK_THROWS_WITH_AS(model::load_weights<double>(path), doctest::Contains("precision"),
                       std::runtime_error);

  CHECK_THROWS_AS(model::load_weights<float>(td.path / "missing.wts"),
                  std::runtime_error);
}

TEST_CASE("architecture validation refuses bad chains at build time") {
  model::ArchitectureSpec arch;
  arch.in_channels = 1;
  arch.in_len = 10;
  arch.layers.push_back({.kind = model::LayerKind::conv,
                         .activation = model::Activation::relu,
                         .out_channels = 4,
                         .kernel_len = 16});  // kernel longer than input
  CHECK_THROWS_AS(model::output_shape(arch), std::invalid_argument);

  arch.layers.clear();
  arch.layers.push_back({.kind = model::LayerKind::dense, .width = 5});  // dense on a map
  CHECK_THROWS_AS(model::output_shape(arch), std::invalid_argument);

  arch.layers.clear();
  arch.layers.push_back({.kind = model::LayerKind::flatten});
  arch.layers.push_back({.kind = model::LayerKind::flatten});  // double flatten
  CHECK_THROWS_AS(model::output_shape(arch), std::invalid_argument);
}

}  // TEST_SUITE
