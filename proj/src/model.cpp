#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "chew/model.hpp"
#include "chew/rng.hpp"

namespace chew::model {
namespace {

// Per-builder seed salts so the same user seed yields independent streams.
constexpr std::uint64_t kSaltF = 0xf00d0001;
constexpr std::uint64_t kSaltGL = 0xf00d0002;
constexpr std::uint64_t kSaltGNL = 0xf00d0003;
constexpr std::uint64_t kSaltH = 0xf00d0004;

ShapeInfo layer_transition(const ShapeInfo& cur, const LayerSpec& layer) {
  switch (layer.kind) {
    case LayerKind::conv:
      if (cur.is_vector)
        throw std::invalid_argument("architecture: conv layer after flatten");
      if (layer.out_channels == 0 || layer.kernel_len == 0)
        throw std::invalid_argument("architecture: conv needs channels and kernel length");
      if (cur.len < layer.kernel_len)
        throw std::invalid_argument("architecture: temporal length " +
                                    std::to_string(cur.len) + " shorter than kernel " +
                                    std::to_string(layer.kernel_len));
      return {false, layer.out_channels, cur.len - layer.kernel_len + 1, 0};
    case LayerKind::pool2:
      if (cur.is_vector || cur.len < 2)
        throw std::invalid_argument("architecture: pool2 needs a [ch, len>=2] input");
      return {false, cur.ch, cur.len / 2, 0};
    case LayerKind::adaptive_pool:
      if (cur.is_vector || layer.target_len == 0 || cur.len < layer.target_len)
        throw std::invalid_argument("architecture: adaptive pool target " +
                                    std::to_string(layer.target_len) +
                                    " incompatible with length " + std::to_string(cur.len));
      return {false, cur.ch, layer.target_len, 0};
    case LayerKind::flatten:
      if (cur.is_vector)
        throw std::invalid_argument("architecture: flatten of a flat vector");
      return {true, 0, 0, cur.ch * cur.len};
    case LayerKind::dense:
      if (!cur.is_vector)
        throw std::invalid_argument("architecture: dense layer needs a flat input");
      if (layer.width == 0)
        throw std::invalid_argument("architecture: dense needs a positive width");
      return {true, 0, 0, layer.width};
  }
  throw std::invalid_argument("architecture: unknown layer kind");
}

/// Walks the stack assigning conv/dense ordinals; callback gets
/// (layer index, prefix like "conv2", input shape, layer).
template <typename Fn>
ShapeInfo walk_layers(const ArchitectureSpec& arch, Fn&& fn) {
  ShapeInfo cur = input_shape(arch);
  std::size_t conv_ord = 0, dense_ord = 0;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerSpec& layer = arch.layers[i];
    std::string prefix;
    if (layer.kind == LayerKind::conv) prefix = "conv" + std::to_string(++conv_ord);
    if (layer.kind == LayerKind::dense) prefix = "dense" + std::to_string(++dense_ord);
    fn(i, prefix, cur, layer);
    cur = layer_transition(cur, layer);
  }
  return cur;
}

/// Parameter tensors for a segment, He-uniform when rng != nullptr, zeros
/// otherwise (serialization fills them afterwards).
template <typename T>
ParamSet<T> make_params(const std::string& seg_name, const ArchitectureSpec& arch,
                        SeededRng* rng) {
  ParamSet<T> params;
  walk_layers(arch, [&](std::size_t, const std::string& prefix, const ShapeInfo& in,
                        const LayerSpec& layer) {
    if (layer.kind != LayerKind::conv && layer.kind != LayerKind::dense) return;
    Tensor<T> weight;
    std::size_t fan_in = 0;
    if (layer.kind == LayerKind::conv) {
      weight = Tensor<T>({layer.out_channels, in.ch, layer.kernel_len});
      fan_in = in.ch * layer.kernel_len;
    } else {
      weight = Tensor<T>({layer.width, in.dim});
      fan_in = in.dim;
    }
    if (rng != nullptr) {
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      for (auto& v : weight.data) v = static_cast<T>(rng->uniform(-bound, bound));
    }
    const std::size_t out = layer.kind == LayerKind::conv ? layer.out_channels
                                                          : layer.width;
    params.add(seg_name + "/" + prefix + "/weight", std::move(weight));
    params.add(seg_name + "/" + prefix + "/bias", Tensor<T>({out}));
  });
  return params;
}

template <typename T>
Tensor<T> apply_activation(Tensor<T> y, Activation act) {
  switch (act) {
    case Activation::linear: return y;
    case Activation::relu: return nn::relu_forward(y);
    case Activation::sigmoid: return nn::sigmoid_forward(y);
  }
  throw std::invalid_argument("unknown activation");
}

template <typename T>
Tensor<T> activation_backward(const LayerTrace<T>& lt, Activation act, Tensor<T> u) {
  switch (act) {
    case Activation::linear: return u;
    case Activation::relu: return nn::relu_backward(lt.output, u);
    case Activation::sigmoid: return nn::sigmoid_backward(lt.output, u);
  }
  throw std::invalid_argument("unknown activation");
}

template <typename T>
void check_segment_input(const Segment<T>& seg, const Tensor<T>& x) {
  const ShapeInfo want = input_shape(seg.arch);
  const bool ok = want.is_vector
                      ? (x.rank() == 1 && x.shape[0] == want.dim)
                      : (x.rank() == 2 && x.shape[0] == want.ch && x.shape[1] == want.len);
  if (!ok)
    throw std::invalid_argument("segment " + seg.name + ": input shape " +
                                shape_to_string(x.shape) + " does not match spec");
}

template <typename T>
Tensor<T> segment_forward(const Segment<T>& seg, Tensor<T> x, SegmentTrace<T>* st) {
  check_segment_input(seg, x);
  if (st) st->layers.resize(seg.arch.layers.size());
  walk_layers(seg.arch, [&](std::size_t i, const std::string& prefix, const ShapeInfo& in,
                            const LayerSpec& layer) {
    LayerTrace<T>* lt = st ? &st->layers[i] : nullptr;
    switch (layer.kind) {
      case LayerKind::conv:
      case LayerKind::dense: {
        const auto& w = seg.params.at(seg.name + "/" + prefix + "/weight");
        const auto& b = seg.params.at(seg.name + "/" + prefix + "/bias");
        Tensor<T> y = layer.kind == LayerKind::conv ? nn::conv1d_forward(x, w, b)
                                                    : nn::dense_forward(x, w, b);
        y = apply_activation(std::move(y), layer.activation);
        if (lt) {
          lt->input = std::move(x);
          if (layer.activation != Activation::linear) lt->output = y;
        }
        x = std::move(y);
        break;
      }
      case LayerKind::pool2:
      case LayerKind::adaptive_pool: {
        auto r = layer.kind == LayerKind::pool2
                     ? nn::maxpool2_forward(x)
                     : nn::adaptive_maxpool_forward(x, layer.target_len);
        if (lt) {
          lt->argmax = std::move(r.argmax);
          lt->pool_in_ch = in.ch;
          lt->pool_in_len = in.len;
        }
        x = std::move(r.y);
        break;
      }
      case LayerKind::flatten: {
        if (lt) {
          lt->pool_in_ch = in.ch;
          lt->pool_in_len = in.len;
        }
        x.shape = {in.ch * in.len};
        break;
      }
    }
  });
  return x;
}

/// Reverse walk through one segment. Parameter gradients are appended to
/// `out` (forward order) when it is non-null. Returns the gradient on the
/// segment input, or an empty tensor when need_input_grad is false.
template <typename T>
Tensor<T> segment_backward(const Segment<T>& seg, const SegmentTrace<T>& st, Tensor<T> u,
                           ParamSet<T>* out, bool need_input_grad) {
  if (st.layers.size() != seg.arch.layers.size())
    throw std::invalid_argument("segment " + seg.name + ": trace does not match");

  // Collect (prefix, input shape) for each layer so the reverse walk has them.
  std::vector<std::string> prefixes(seg.arch.layers.size());
  std::vector<ShapeInfo> in_shapes(seg.arch.layers.size());
  walk_layers(seg.arch, [&](std::size_t i, const std::string& prefix, const ShapeInfo& in,
                            const LayerSpec&) {
    prefixes[i] = prefix;
    in_shapes[i] = in;
  });

  std::vector<std::pair<std::string, Tensor<T>>> collected;  // reverse order
  for (std::size_t ri = seg.arch.layers.size(); ri-- > 0;) {
    const LayerSpec& layer = seg.arch.layers[ri];
    const LayerTrace<T>& lt = st.layers[ri];
    const bool need_x = ri > 0 || need_input_grad;
    switch (layer.kind) {
      case LayerKind::conv: {
        u = activation_backward(lt, layer.activation, std::move(u));
        const auto& w = seg.params.at(seg.name + "/" + prefixes[ri] + "/weight");
        auto g = nn::conv1d_backward(lt.input, w, u, need_x);
        if (out) {
          collected.emplace_back(seg.name + "/" + prefixes[ri] + "/bias",
                                 std::move(g.grad_bias));
          collected.emplace_back(seg.name + "/" + prefixes[ri] + "/weight",
                                 std::move(g.grad_kernel));
        }
        u = std::move(g.grad_x);
        break;
      }
      case LayerKind::dense: {
        u = activation_backward(lt, layer.activation, std::move(u));
        const auto& w = seg.params.at(seg.name + "/" + prefixes[ri] + "/weight");
        auto g = nn::dense_backward(lt.input, w, u);
        if (out) {
          collected.emplace_back(seg.name + "/" + prefixes[ri] + "/bias",
                                 std::move(g.grad_b));
          collected.emplace_back(seg.name + "/" + prefixes[ri] + "/weight",
                                 std::move(g.grad_w));
        }
        u = need_x ? std::move(g.grad_x) : Tensor<T>{};
        break;
      }
      case LayerKind::pool2:
      case LayerKind::adaptive_pool: {
        if (!need_x) {
          u = Tensor<T>{};
          break;
        }
        u = nn::pool_backward(lt.argmax, lt.pool_in_ch, lt.pool_in_len, u);
        break;
      }
      case LayerKind::flatten: {
        if (!need_x) {
          u = Tensor<T>{};
          break;
        }
        if (u.size() != lt.pool_in_ch * lt.pool_in_len)
          throw std::invalid_argument("segment " + seg.name +
                                      ": upstream does not match flatten input");
        u.shape = {lt.pool_in_ch, lt.pool_in_len};
        break;
      }
    }
  }
  if (out)
    for (auto it = collected.rbegin(); it != collected.rend(); ++it)
      out->add(std::move(it->first), std::move(it->second));
  return u;
}

}  // namespace

ShapeInfo input_shape(const ArchitectureSpec& arch) {
  if (arch.vector_input) {
    if (arch.in_dim == 0)
      throw std::invalid_argument("architecture: vector input needs a positive dim");
    return {true, 0, 0, arch.in_dim};
  }
  if (arch.in_channels == 0 || arch.in_len == 0)
    throw std::invalid_argument("architecture: map input needs channels and length");
  return {false, arch.in_channels, arch.in_len, 0};
}

ShapeInfo output_shape(const ArchitectureSpec& arch) {
  return walk_layers(arch, [](std::size_t, const std::string&, const ShapeInfo&,
                              const LayerSpec&) {});
}

template <typename T>
void ParamSet<T>::add(std::string name, Tensor<T> tensor) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name " + name);
  items.emplace_back(std::move(name), std::move(tensor));
}

template <typename T>
bool ParamSet<T>::contains(const std::string& name) const {
  for (const auto& [n, t] : items)
    if (n == name) return true;
  return false;
}

template <typename T>
Tensor<T>& ParamSet<T>::at(const std::string& name) {
  for (auto& [n, t] : items)
    if (n == name) return t;
  throw std::out_of_range("no parameter named " + name);
}

template <typename T>
const Tensor<T>& ParamSet<T>::at(const std::string& name) const {
  for (const auto& [n, t] : items)
    if (n == name) return t;
  throw std::out_of_range("no parameter named " + name);
}

template <typename T>
std::size_t ParamSet<T>::count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : items) n += t.size();
  return n;
}

template <typename T>
ModelGraph<T> build_f(std::uint64_t seed, std::size_t in_len) {
  ArchitectureSpec arch;
  arch.in_channels = 1;
  arch.in_len = in_len;
  const std::size_t channels[5] = {8, 16, 32, 64, 64};
  const std::size_t kernels[5] = {16, 16, 16, 16, 39};
  for (int i = 0; i < 5; ++i) {
    arch.layers.push_back({.kind = LayerKind::conv,
                           .activation = Activation::relu,
                           .out_channels = channels[i],
                           .kernel_len = kernels[i]});
    arch.layers.push_back({.kind = LayerKind::pool2});
  }
  arch.layers.push_back({.kind = LayerKind::adaptive_pool, .target_len = 8});
  arch.layers.push_back({.kind = LayerKind::flatten});

  SeededRng rng(mix_seed({seed, kSaltF}));
  Segment<T> seg{"f", arch, make_params<T>("f", arch, &rng), true};
  return {{std::move(seg)}};
}

template <typename T>
ModelGraph<T> build_gL(std::uint64_t seed) {
  ArchitectureSpec arch;
  arch.vector_input = true;
  arch.in_dim = 512;
  arch.layers.push_back({.kind = LayerKind::dense, .width = 128});

  SeededRng rng(mix_seed({seed, kSaltGL}));
  Segment<T> seg{"gL", arch, make_params<T>("gL", arch, &rng), true};
  return {{std::move(seg)}};
}

template <typename T>
ModelGraph<T> build_gNL(std::uint64_t seed) {
  ArchitectureSpec arch;
  arch.vector_input = true;
  arch.in_dim = 512;
  arch.layers.push_back(
      {.kind = LayerKind::dense, .activation = Activation::relu, .width = 512});
  arch.layers.push_back(
      {.kind = LayerKind::dense, .activation = Activation::relu, .width = 512});
  arch.layers.push_back({.kind = LayerKind::dense, .width = 128});

  SeededRng rng(mix_seed({seed, kSaltGNL}));
  Segment<T> seg{"gNL", arch, make_params<T>("gNL", arch, &rng), true};
  return {{std::move(seg)}};
}

template <typename T>
ModelGraph<T> build_h(std::uint64_t seed, std::size_t in_dim) {
  if (in_dim == 0) throw std::invalid_argument("build_h: input dim must be positive");
  ArchitectureSpec arch;
  arch.vector_input = true;
  arch.in_dim = in_dim;
  arch.layers.push_back(
      {.kind = LayerKind::dense, .activation = Activation::relu, .width = 200});
  arch.layers.push_back(
      {.kind = LayerKind::dense, .activation = Activation::relu, .width = 200});
  arch.layers.push_back(
      {.kind = LayerKind::dense, .activation = Activation::sigmoid, .width = 1});

  SeededRng rng(mix_seed({seed, kSaltH}));
  Segment<T> seg{"h", arch, make_params<T>("h", arch, &rng), true};
  return {{std::move(seg)}};
}

template <typename T>
std::pair<ModelGraph<T>, ModelGraph<T>> split_gNL(const ModelGraph<T>& g) {
  const ArchitectureSpec want = build_gNL<T>(0).segments[0].arch;
  if (g.segments.size() != 1 || g.segments[0].arch != want)
    throw std::invalid_argument("split_gNL: model is not the nonlinear projection head");
  const Segment<T>& src = g.segments[0];

  ArchitectureSpec a1;
  a1.vector_input = true;
  a1.in_dim = 512;
  a1.layers.push_back(want.layers[0]);
  Segment<T> s1{"gNL1", a1, {}, true};
  s1.params.add("gNL1/dense1/weight", src.params.items[0].second);
  s1.params.add("gNL1/dense1/bias", src.params.items[1].second);

  ArchitectureSpec a2;
  a2.vector_input = true;
  a2.in_dim = 512;
  a2.layers.push_back(want.layers[1]);
  a2.layers.push_back(want.layers[2]);
  Segment<T> s2{"gNL2", a2, {}, true};
  s2.params.add("gNL2/dense1/weight", src.params.items[2].second);
  s2.params.add("gNL2/dense1/bias", src.params.items[3].second);
  s2.params.add("gNL2/dense2/weight", src.params.items[4].second);
  s2.params.add("gNL2/dense2/bias", src.params.items[5].second);

  return {ModelGraph<T>{{std::move(s1)}}, ModelGraph<T>{{std::move(s2)}}};
}

template <typename T>
ModelGraph<T> compose(std::vector<Segment<T>> segments,
                      const std::set<std::string>& trainable_names) {
  if (segments.empty()) throw std::invalid_argument("compose: no segments");
  if (trainable_names.empty())
    throw std::invalid_argument("compose: trainable set must not be empty");

  std::set<std::string> names;
  for (const auto& s : segments)
    if (!names.insert(s.name).second)
      throw std::invalid_argument("compose: duplicate segment name " + s.name);
  for (const auto& want : trainable_names)
    if (!names.contains(want))
      throw std::invalid_argument("compose: unknown trainable segment " + want);

  for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
    const ShapeInfo out = output_shape(segments[i].arch);
    const ShapeInfo in = input_shape(segments[i + 1].arch);
    if (out != in)
      throw std::invalid_argument("compose: segment " + segments[i].name +
                                  " output does not feed " + segments[i + 1].name);
  }

  for (auto& s : segments) s.trainable = trainable_names.contains(s.name);
  return {std::move(segments)};
}

template <typename T>
Tensor<T> forward(const ModelGraph<T>& graph, const Tensor<T>& x, GraphTrace<T>* trace) {
  if (graph.segments.empty()) throw std::invalid_argument("forward: empty graph");
  if (trace) trace->segments.assign(graph.segments.size(), {});
  Tensor<T> cur = x;
  for (std::size_t i = 0; i < graph.segments.size(); ++i)
    cur = segment_forward(graph.segments[i], std::move(cur),
                          trace ? &trace->segments[i] : nullptr);
  return cur;
}

template <typename T>
std::vector<ParamSet<T>> backward(const ModelGraph<T>& graph, const GraphTrace<T>& trace,
                                  const Tensor<T>& upstream, Tensor<T>* input_grad) {
  if (trace.segments.size() != graph.segments.size())
    throw std::invalid_argument("backward: trace does not match graph");
  std::size_t lowest = graph.segments.size();
  for (std::size_t i = 0; i < graph.segments.size(); ++i)
    if (graph.segments[i].trainable) {
      lowest = i;
      break;
    }
  if (lowest == graph.segments.size())
    throw std::invalid_argument("backward: no trainable segment");

  const std::size_t stop = input_grad ? 0 : lowest;
  std::vector<ParamSet<T>> grads(graph.segments.size());
  Tensor<T> u = upstream;
  for (std::size_t i = graph.segments.size(); i-- > stop;) {
    const bool collect = graph.segments[i].trainable;
    const bool need_input = i > stop || input_grad != nullptr;
    u = segment_backward(graph.segments[i], trace.segments[i], std::move(u),
                         collect ? &grads[i] : nullptr, need_input);
  }
  if (input_grad) *input_grad = std::move(u);
  return grads;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> trainable_params(ModelGraph<T>& graph) {
  std::vector<std::pair<std::string, Tensor<T>*>> out;
  for (auto& seg : graph.segments) {
    if (!seg.trainable) continue;
    for (auto& [name, tensor] : seg.params.items) out.emplace_back(name, &tensor);
  }
  return out;
}

namespace {

constexpr char kMagic[8] = {'C', 'H', 'E', 'W', 'D', 'E', 'T', 'W'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
constexpr std::uint8_t dtype_tag();
template <>
constexpr std::uint8_t dtype_tag<float>() {
  return 1;
}
template <>
constexpr std::uint8_t dtype_tag<double>() {
  return 2;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

void put_scalar(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
void put_scalar(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

struct Reader {
  const unsigned char* p;
  std::size_t left;
  std::string context;

  void need(std::size_t n) const {
    if (n > left) throw std::runtime_error("truncated weights file: " + context);
  }
  std::uint8_t u8() {
    need(1);
    const std::uint8_t v = p[0];
    p += 1;
    left -= 1;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    p += 4;
    left -= 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    p += 8;
    left -= 8;
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(p), n);
    p += n;
    left -= n;
    return s;
  }
  template <typename T>
  T scalar() {
    if constexpr (sizeof(T) == 4) return std::bit_cast<T>(u32());
    else return std::bit_cast<T>(u64());
  }
};

}  // namespace

template <typename T>
void save_weights(const ModelGraph<T>& graph, const std::filesystem::path& path) {
  if (graph.segments.empty()) throw std::invalid_argument("save_weights: empty graph");

  std::string out;
  out.append(kMagic, sizeof kMagic);
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(graph.segments.size()));
  std::size_t n_tensors = 0;
  for (const auto& seg : graph.segments) {
    put_str(out, seg.name);
    out.push_back(seg.trainable ? 1 : 0);
    out.push_back(seg.arch.vector_input ? 1 : 0);
    put_u64(out, seg.arch.in_channels);
    put_u64(out, seg.arch.in_len);
    put_u64(out, seg.arch.in_dim);
    put_u32(out, static_cast<std::uint32_t>(seg.arch.layers.size()));
    for (const auto& layer : seg.arch.layers) {
      out.push_back(static_cast<char>(layer.kind));
      out.push_back(static_cast<char>(layer.activation));
      put_u64(out, layer.out_channels);
      put_u64(out, layer.kernel_len);
      put_u64(out, layer.target_len);
      put_u64(out, layer.width);
    }
    n_tensors += seg.params.items.size();
  }

  put_u32(out, static_cast<std::uint32_t>(n_tensors));
  for (const auto& seg : graph.segments)
    for (const auto& [name, tensor] : seg.params.items) {
      put_str(out, name);
      out.push_back(static_cast<char>(dtype_tag<T>()));
      put_u32(out, static_cast<std::uint32_t>(tensor.rank()));
      for (std::size_t d : tensor.shape) put_u64(out, d);
      for (const T& v : tensor.data) put_scalar(out, v);
    }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write weights file: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("short write to weights file: " + path.string());
}

template <typename T>
ModelGraph<T> load_weights(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open weights file: " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                         std::istreambuf_iterator<char>());
  Reader r{bytes.data(), bytes.size(), path.string()};

  r.need(sizeof kMagic);
  if (std::memcmp(r.p, kMagic, sizeof kMagic) != 0)
    throw std::runtime_error("not a chewdetect weights file: " + path.string());
  r.p += sizeof kMagic;
  r.left -= sizeof kMagic;
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion)
    throw std::runtime_error("unsupported weights file version " +
                             std::to_string(version) + " (expected " +
                             std::to_string(kFormatVersion) + "): " + path.string());

  ModelGraph<T> graph;
  const std::uint32_t n_segments = r.u32();
  if (n_segments == 0)
    throw std::runtime_error("weights file has no segments: " + path.string());
  for (std::uint32_t si = 0; si < n_segments; ++si) {
    Segment<T> seg;
    seg.name = r.str();
    seg.trainable = r.u8() != 0;
    seg.arch.vector_input = r.u8() != 0;
    seg.arch.in_channels = r.u64();
    seg.arch.in_len = r.u64();
    seg.arch.in_dim = r.u64();
    const std::uint32_t n_layers = r.u32();
    for (std::uint32_t li = 0; li < n_layers; ++li) {
      LayerSpec layer;
      layer.kind = static_cast<LayerKind>(r.u8());
      layer.activation = static_cast<Activation>(r.u8());
      layer.out_channels = r.u64();
      layer.kernel_len = r.u64();
      layer.target_len = r.u64();
      layer.width = r.u64();
      seg.arch.layers.push_back(layer);
    }
    output_shape(seg.arch);  // validates the layer chain
    seg.params = make_params<T>(seg.name, seg.arch, nullptr);
    graph.segments.push_back(std::move(seg));
  }

  const std::uint32_t n_tensors = r.u32();
  std::size_t expected = 0;
  for (const auto& seg : graph.segments) expected += seg.params.items.size();
  if (n_tensors != expected)
    throw std::runtime_error("weights file tensor count " + std::to_string(n_tensors) +
                             " does not match architecture (" + std::to_string(expected) +
                             "): " + path.string());

  for (std::uint32_t ti = 0; ti < n_tensors; ++ti) {
    const std::string name = r.str();
    const std::uint8_t dtype = r.u8();
    if (dtype != dtype_tag<T>())
      throw std::runtime_error("weights file precision tag " + std::to_string(dtype) +
                               " does not match the requested type: " + path.string());
    const std::uint32_t rank = r.u32();
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) d = r.u64();

    Tensor<T>* target = nullptr;
    for (auto& seg : graph.segments)
      if (seg.params.contains(name)) target = &seg.params.at(name);
    if (target == nullptr)
      throw std::runtime_error("weights file has unexpected tensor " + name + ": " +
                               path.string());
    if (target->shape != dims)
      throw std::runtime_error("weights file tensor " + name + " has shape " +
                               shape_to_string(dims) + ", architecture expects " +
                               shape_to_string(target->shape) + ": " + path.string());
    for (T& v : target->data) v = r.template scalar<T>();
  }
  if (r.left != 0)
    throw std::runtime_error("trailing bytes in weights file: " + path.string());

  for (std::size_t i = 0; i + 1 < graph.segments.size(); ++i)
    if (output_shape(graph.segments[i].arch) != input_shape(graph.segments[i + 1].arch))
      throw std::runtime_error("weights file segments do not chain: " + path.string());
  return graph;
}

#define CHEW_MODEL_INSTANTIATE(T)                                                     \
  template struct ParamSet<T>;                                                        \
  template ModelGraph<T> build_f<T>(std::uint64_t, std::size_t);                                   \
  template ModelGraph<T> build_gL<T>(std::uint64_t);                                  \
  template ModelGraph<T> build_gNL<T>(std::uint64_t);                                 \
  template ModelGraph<T> build_h<T>(std::uint64_t, std::size_t);                      \
  template std::pair<ModelGraph<T>, ModelGraph<T>> split_gNL<T>(const ModelGraph<T>&); \
  template ModelGraph<T> compose<T>(std::vector<Segment<T>>,                          \
                                    const std::set<std::string>&);                    \
  template Tensor<T> forward<T>(const ModelGraph<T>&, const Tensor<T>&,               \
                                GraphTrace<T>*);                                      \
  template std::vector<ParamSet<T>> backward<T>(const ModelGraph<T>&,                 \
                                                const GraphTrace<T>&, const Tensor<T>&, \
                                                Tensor<T>*);                          \
  template std::vector<std::pair<std::string, Tensor<T>*>> trainable_params<T>(       \
      ModelGraph<T>&);                                                                \
  template void save_weights<T>(const ModelGraph<T>&, const std::filesystem::path&);  \
  template ModelGraph<T> load_weights<T>(const std::filesystem::path&);

CHEW_MODEL_INSTANTIATE(float)
CHEW_MODEL_INSTANTIATE(double)
#undef CHEW_MODEL_INSTANTIATE

}  // namespace chew::model
