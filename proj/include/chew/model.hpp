#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "chew/nn.hpp"
#include "chew/tensor.hpp"

namespace chew::model {

enum class Activation : std::uint8_t { linear = 0, relu = 1, sigmoid = 2 };

enum class LayerKind : std::uint8_t {
  conv = 1,
  pool2 = 2,
  adaptive_pool = 3,
  flatten = 4,
  dense = 5,
};

struct LayerSpec {
  LayerKind kind;
  Activation activation = Activation::linear;
  std::size_t out_channels = 0;  // conv
  std::size_t kernel_len = 0;    // conv
  std::size_t target_len = 0;    // adaptive_pool
  std::size_t width = 0;         // dense

  bool operator==(const LayerSpec&) const = default;
};

/// A segment's layer stack plus its declared input shape. Segments either
/// consume a [channels, length] map (conv stacks) or a flat vector (dense
/// stacks); flatten switches from the former to the latter.
struct ArchitectureSpec {
  bool vector_input = false;
  std::size_t in_channels = 0;
  std::size_t in_len = 0;
  std::size_t in_dim = 0;
  std::vector<LayerSpec> layers;

  bool operator==(const ArchitectureSpec&) const = default;
};

/// Shape of a value flowing between layers.
struct ShapeInfo {
  bool is_vector = false;
  std::size_t ch = 0;
  std::size_t len = 0;
  std::size_t dim = 0;

  bool operator==(const ShapeInfo&) const = default;
};

ShapeInfo input_shape(const ArchitectureSpec& arch);

/// Walks the layer stack, validating every transition; throws on an
/// inconsistent chain. Returns the segment's output shape.
ShapeInfo output_shape(const ArchitectureSpec& arch);

/// Ordered, uniquely named parameter tensors.
template <typename T>
struct ParamSet {
  std::vector<std::pair<std::string, Tensor<T>>> items;

  void add(std::string name, Tensor<T> tensor);
  bool contains(const std::string& name) const;
  Tensor<T>& at(const std::string& name);
  const Tensor<T>& at(const std::string& name) const;
  std::size_t count() const;  // total scalar parameters
};

template <typename T>
struct Segment {
  std::string name;
  ArchitectureSpec arch;
  ParamSet<T> params;
  bool trainable = true;
};

template <typename T>
struct ModelGraph {
  std::vector<Segment<T>> segments;

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& s : segments) n += s.params.count();
    return n;
  }
};

/// Everything backward needs, recorded layer by layer during forward.
template <typename T>
struct LayerTrace {
  Tensor<T> input;              // conv/dense input
  Tensor<T> output;             // post-activation output (relu/sigmoid mask)
  std::vector<std::size_t> argmax;  // pool routing
  std::size_t pool_in_ch = 0, pool_in_len = 0;
};

template <typename T>
struct SegmentTrace {
  std::vector<LayerTrace<T>> layers;
};

template <typename T>
struct GraphTrace {
  std::vector<SegmentTrace<T>> segments;
};

/// Feature extractor f: five conv(+ReLU)+pool pairs, adaptive max-pool to 8,
/// flatten. Maps [1, in_len] -> 512; the parameter count is independent of
/// in_len. He-uniform weights, zero biases, deterministic per seed.
template <typename T>
ModelGraph<T> build_f(std::uint64_t seed, std::size_t in_len = 10000);

/// Linear projection head g^L: dense 512 -> 128, no activation.
template <typename T>
ModelGraph<T> build_gL(std::uint64_t seed);

/// Nonlinear projection head g^NL: 512 -> 512 ReLU -> 512 ReLU -> 128 linear.
template <typename T>
ModelGraph<T> build_gNL(std::uint64_t seed);

/// Classifier head h: in_dim -> 200 ReLU -> 200 ReLU -> 1 sigmoid.
template <typename T>
ModelGraph<T> build_h(std::uint64_t seed, std::size_t in_dim = 512);

/// Splits g^NL after its first dense+ReLU: g1 maps 512 -> 512, g2 the rest.
/// Composing g2 after g1 reproduces the original outputs bit-exactly.
template <typename T>
std::pair<ModelGraph<T>, ModelGraph<T>> split_gNL(const ModelGraph<T>& g);

/// Chains segments into one graph and marks exactly `trainable_names`
/// trainable. Validates the dimension chain and that every requested name
/// exists; rejects an empty trainable set.
template <typename T>
ModelGraph<T> compose(std::vector<Segment<T>> segments,
                      const std::set<std::string>& trainable_names);

/// Forward pass; records a trace when `trace` is non-null.
template <typename T>
Tensor<T> forward(const ModelGraph<T>& graph, const Tensor<T>& x,
                  GraphTrace<T>* trace = nullptr);

/// Backward pass from an upstream gradient on the graph output. Returns one
/// GradSet per segment, ordered like segment params; frozen segments get an
/// empty set. Gradient propagation stops below the deepest trainable segment
/// (and skips grad_x at the very first layer) unless `input_grad` is given,
/// in which case it continues to the graph input.
template <typename T>
std::vector<ParamSet<T>> backward(const ModelGraph<T>& graph, const GraphTrace<T>& trace,
                                  const Tensor<T>& upstream,
                                  Tensor<T>* input_grad = nullptr);

/// Pointers to every trainable parameter as (name, tensor), in graph order.
template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> trainable_params(ModelGraph<T>& graph);

/// Binary weight file: magic, version, architecture block, then per-tensor
/// records (name, dtype tag, dims, raw little-endian data). Round-trips
/// bit-exactly.
template <typename T>
void save_weights(const ModelGraph<T>& graph, const std::filesystem::path& path);

template <typename T>
ModelGraph<T> load_weights(const std::filesystem::path& path);

}  // namespace chew::model
