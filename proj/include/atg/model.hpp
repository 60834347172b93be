#pragma once

#include <functional>
#include <string>
#include <vector>

#include "atg/nn.hpp"

namespace atg {

struct ModelConfig {
  int depth = 4;
  int base_channels = 16;
  int channel_multiplier = 2;
  int growth = 8;
  int in_channels = 124;
  int out_channels = 54;
  bool attention_enabled = true;

  void validate() const {
    if (depth < 1 || base_channels < 1 || channel_multiplier < 1 ||
        growth < 1 || in_channels < 1 || out_channels < 1)
      throw ValueError("invalid model config");
  }

  // channels produced by contraction stage i (0-based)
  int stage_channels(int i) const {
    int c = base_channels;
    for (int k = 0; k < i; ++k) c *= channel_multiplier;
    return c;
  }
  int bottleneck_channels() const { return stage_channels(depth); }
  int pad_multiple() const { return 1 << depth; }
};

template <typename T>
struct UNetModelT {
  struct UpBlock {
    Conv2dParamsT<T> conv1;
    GroupNormParamsT<T> norm1;
    Conv2dParamsT<T> conv2;
    GroupNormParamsT<T> norm2;
  };

  ModelConfig config;
  std::vector<DenseBlockParamsT<T>> down_blocks;  // stage 0 .. depth-1
  DenseBlockParamsT<T> bottleneck;
  std::vector<Conv2dParamsT<T>> up_convs;        // transposed, per stage
  std::vector<AttentionGateParamsT<T>> gates;    // empty if attention disabled
  std::vector<UpBlock> up_blocks;
  Conv2dParamsT<T> head;  // 1x1 -> out_channels

  // Enumerates every learnable tensor in a fixed, documented order. The
  // checkpoint format and the optimizer both rely on this order.
  void visit_params(
      const std::function<void(const std::string&, TensorT<T>&)>& fn) {
    auto conv = [&](const std::string& prefix, Conv2dParamsT<T>& c) {
      fn(prefix + ".weight", c.weights);
      fn(prefix + ".bias", c.bias);
    };
    auto norm = [&](const std::string& prefix, GroupNormParamsT<T>& n) {
      fn(prefix + ".gamma", n.gamma);
      fn(prefix + ".beta", n.beta);
    };
    auto block = [&](const std::string& prefix, DenseBlockParamsT<T>& b) {
      conv(prefix + ".conv1", b.conv1);
      norm(prefix + ".norm1", b.norm1);
      conv(prefix + ".conv2", b.conv2);
      norm(prefix + ".norm2", b.norm2);
      conv(prefix + ".conv3", b.conv3);
    };
    for (std::size_t i = 0; i < down_blocks.size(); ++i)
      block("down" + std::to_string(i), down_blocks[i]);
    block("bottleneck", bottleneck);
    for (std::size_t i = 0; i < up_convs.size(); ++i) {
      const std::string s = std::to_string(i);
      conv("up" + s + ".transpose", up_convs[i]);
      if (i < gates.size()) {
        conv("up" + s + ".gate.theta_x", gates[i].theta_x);
        conv("up" + s + ".gate.theta_g", gates[i].theta_g);
        conv("up" + s + ".gate.psi", gates[i].psi);
      }
      conv("up" + s + ".conv1", up_blocks[i].conv1);
      norm("up" + s + ".norm1", up_blocks[i].norm1);
      conv("up" + s + ".conv2", up_blocks[i].conv2);
      norm("up" + s + ".norm2", up_blocks[i].norm2);
    }
    conv("head", head);
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    visit_params([&](const std::string&, TensorT<T>& t) { n += t.size(); });
    return n;
  }

  void zero_grad() {
    visit_params([](const std::string&, TensorT<T>& t) { t.zero_grad(); });
  }
};

using UNetModel = UNetModelT<float>;

template <typename T>
UNetModelT<T> build_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  UNetModelT<T> m;
  m.config = cfg;
  Rng rng(seed);
  int c_prev = cfg.in_channels;
  for (int i = 0; i < cfg.depth; ++i) {
    const int c_out = cfg.stage_channels(i);
    m.down_blocks.push_back(
        make_dense_block<T>(c_prev, cfg.growth, c_out, rng));
    c_prev = c_out;
  }
  m.bottleneck = make_dense_block<T>(c_prev, cfg.growth,
                                     cfg.bottleneck_channels(), rng);
  for (int i = 0; i < cfg.depth; ++i) {
    const int c_skip = cfg.stage_channels(i);
    const int c_below =
        (i == cfg.depth - 1) ? cfg.bottleneck_channels()
                             : cfg.stage_channels(i + 1);
    m.up_convs.push_back(make_conv2d<T>(2, 2, c_below, c_skip, 2, 0, rng));
    // gate parameters are always drawn so that the shared weights are
    // identical with and without attention — the ablation then compares the
    // gates' contribution, not two different initializations
    auto gate = make_attention_gate<T>(c_skip, c_skip, rng);
    // psi weights start at zero: alpha begins as a flat sigmoid(bias) with
    // no random attenuation pattern; psi's own gradient is nonzero, so the
    // gate still trains
    for (T& v : gate.psi.weights.data()) v = T(0);
    if (cfg.attention_enabled) m.gates.push_back(std::move(gate));
    typename UNetModelT<T>::UpBlock ub;
    ub.conv1 = make_conv2d<T>(3, 3, 2 * c_skip, c_skip, 1, 1, rng);
    ub.norm1 = make_group_norm<T>(c_skip);
    ub.conv2 = make_conv2d<T>(3, 3, c_skip, c_skip, 1, 1, rng);
    ub.norm2 = make_group_norm<T>(c_skip);
    m.up_blocks.push_back(std::move(ub));
  }
  m.head = make_conv2d<T>(1, 1, cfg.stage_channels(0), cfg.out_channels, 1, 0,
                          rng);
  // zero-initialized head: the untrained model predicts all zeros, so the
  // step-0 loss is the mean of squared targets
  for (T& v : m.head.weights.data()) v = T(0);
  for (T& v : m.head.bias.data()) v = T(0);
  return m;
}

// Full forward pass. Input spatial extents may be arbitrary: the tensor is
// zero-padded right/bottom to the next multiple of 2^depth and the output is
// cropped back. When `alphas` is non-null it receives each gate's attention
// map, ordered from the highest-resolution skip downward.
template <typename T>
TensorT<T> forward(const UNetModelT<T>& model, const TensorT<T>& x,
                   std::vector<TensorT<T>>* alphas = nullptr) {
  const ModelConfig& cfg = model.config;
  if (x.ndim() != 3 || x.dim(2) != cfg.in_channels)
    throw ShapeError("forward: expected (H,W," +
                     std::to_string(cfg.in_channels) + ") input, got " +
                     shape_str(x.shape()));
  const int h = x.dim(0), w = x.dim(1);
  const int mult = cfg.pad_multiple();
  const int pad_h = (mult - h % mult) % mult;
  const int pad_w = (mult - w % mult) % mult;
  TensorT<T> cur = (pad_h || pad_w) ? pad2d(x, 0, pad_h, 0, pad_w) : x;

  std::vector<TensorT<T>> skips;
  for (int i = 0; i < cfg.depth; ++i) {
    TensorT<T> s = dense_block(cur, model.down_blocks[i]);
    skips.push_back(s);
    cur = avg_pool2d(s);
  }
  cur = dense_block(cur, model.bottleneck);

  if (alphas) alphas->assign(static_cast<std::size_t>(cfg.depth), TensorT<T>());
  for (int i = cfg.depth - 1; i >= 0; --i) {
    TensorT<T> g = conv_transpose2d(cur, model.up_convs[i]);
    TensorT<T> skip = skips[static_cast<std::size_t>(i)];
    if (cfg.attention_enabled) {
      auto [gated, alpha] =
          attention_gate(skip, g, model.gates[static_cast<std::size_t>(i)]);
      if (alphas) (*alphas)[static_cast<std::size_t>(i)] = alpha;
      skip = gated;
    }
    cur = concat_channels<T>({skip, g});
    const auto& ub = model.up_blocks[static_cast<std::size_t>(i)];
    cur = group_norm(relu(conv2d(cur, ub.conv1)), ub.norm1);
    cur = group_norm(relu(conv2d(cur, ub.conv2)), ub.norm2);
  }
  cur = conv2d(cur, model.head);
  if (pad_h || pad_w) cur = crop2d(cur, 0, pad_h, 0, pad_w);
  return cur;
}

// One forward pass, returning only the per-gate attention maps (highest
// resolution first, halving extents).
template <typename T>
std::vector<TensorT<T>> attention_maps(const UNetModelT<T>& model,
                                       const TensorT<T>& x) {
  if (!model.config.attention_enabled)
    throw ValueError("attention_maps: model has attention disabled");
  std::vector<TensorT<T>> maps;
  forward(model, x, &maps);
  return maps;
}

template <typename To, typename From>
UNetModelT<To> cast_model(const UNetModelT<From>& m) {
  UNetModelT<To> q;
  q.config = m.config;
  for (const auto& b : m.down_blocks)
    q.down_blocks.push_back(cast_params<To>(b));
  q.bottleneck = cast_params<To>(m.bottleneck);
  for (const auto& c : m.up_convs) q.up_convs.push_back(cast_params<To>(c));
  for (const auto& g : m.gates) q.gates.push_back(cast_params<To>(g));
  for (const auto& ub : m.up_blocks) {
    typename UNetModelT<To>::UpBlock o;
    o.conv1 = cast_params<To>(ub.conv1);
    o.norm1 = cast_params<To>(ub.norm1);
    o.conv2 = cast_params<To>(ub.conv2);
    o.norm2 = cast_params<To>(ub.norm2);
    q.up_blocks.push_back(std::move(o));
  }
  q.head = cast_params<To>(m.head);
  return q;
}

}  // namespace atg
