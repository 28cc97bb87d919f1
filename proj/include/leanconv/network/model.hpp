// Copyright 2026 The LeanConv Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "leanconv/kernels/backward.hpp"
#include "leanconv/kernels/kernels.hpp"
#include "leanconv/network/batch_norm.hpp"
#include "leanconv/network/classifier.hpp"
#include "leanconv/network/config.hpp"
#include "leanconv/ops/cost.hpp"
#include "leanconv/tensor/ops.hpp"
#include "leanconv/tensor/random.hpp"

namespace leanconv {

// ---------------------------------------------------------------------------
// Structure

/// Geometry of one residual step. A transition step takes c/2 channels at
/// resolution r to c channels at r/2:
///   skip = avg_pool2(concat(y, dw(y)))
///   F    = K2 relu(N2(avg_pool2(K1 relu(N1 y))))
/// A plain step keeps width and resolution and uses y as the skip.
struct BlockPlan {
  bool transition = false;
  std::size_t stage = 0;
  std::size_t step = 0;
  ConvGeometry k1;
  ConvGeometry k2;
  ConvGeometry dw;
};

struct NetworkPlan {
  ConvGeometry opening;
  std::vector<BlockPlan> blocks;
  std::size_t features = 0;
};

inline NetworkPlan plan_network(const NetworkConfig& cfg) {
  validate(cfg);
  NetworkPlan plan;
  plan.opening = ConvGeometry{cfg.in_channels, opening_width(cfg), 1, StencilKind::full9()};
  const bool three = cfg.stencil.is_three();
  const StencilKind s1 = three ? StencilKind::three(Direction::Horizontal) : cfg.stencil;
  const StencilKind s2 = three ? StencilKind::three(Direction::Vertical) : cfg.stencil;
  std::size_t width = opening_width(cfg);
  for (std::size_t s = 0; s < cfg.widths.size(); ++s) {
    for (std::size_t k = 0; k < cfg.steps[s]; ++k) {
      BlockPlan b;
      b.stage = s;
      b.step = k;
      b.transition = k == 0 && cfg.strides[s] == 2;
      const std::size_t c_in = width, c_out = cfg.widths[s];
      b.k1 = ConvGeometry{c_in, c_out, groups_for(cfg.groups, c_in, c_out, s1), s1};
      b.k2 = ConvGeometry{c_out, c_out, groups_for(cfg.groups, c_out, c_out, s2), s2};
      if (b.transition) b.dw = ConvGeometry{c_in, c_in, c_in, s1, Coupling::Grouped};
      plan.blocks.push_back(b);
      width = c_out;
    }
  }
  plan.features = width;
  return plan;
}

template <typename T>
struct Block {
  bool transition = false;
  BatchNorm<T> n1;
  BatchNorm<T> n2;
  LeanConvSpec<T> k1;
  LeanConvSpec<T> k2;
  LeanConvSpec<T> dw;

  std::size_t in_channels() const { return k1.c_in(); }
  std::size_t out_channels() const { return k2.c_out(); }
};

template <typename T>
struct Network {
  NetworkConfig config;
  std::size_t classes = 0;
  LeanConvSpec<T> opening;
  std::vector<Block<T>> blocks;
  Classifier<T> head;
  KernelOptions kernel;
};

namespace detail {

template <typename T>
void init_conv(LeanConvSpec<T>& s, Rng& rng, double extra_scale) {
  const double fan_in = double(param_count(s.geometry)) / double(s.c_out());
  const double sd = extra_scale * std::sqrt(2.0 / fan_in);
  fill_normal(s.pointwise, rng, sd);
  fill_normal(s.spatial, rng, sd);
}

}  // namespace detail

/// Builds and initializes a network. Conv weights are N(0, 2 / fan_in) with
/// fan_in = param_count / c_out, K2 of each step is further scaled by 0.1,
/// classifier weights are N(0, 1 / features) and all biases start at zero.
template <typename T>
Network<T> build_network(const NetworkConfig& cfg, std::size_t classes, std::uint64_t seed = 1) {
  if (classes < 2) throw ConfigError("build_network: need at least two classes");
  const NetworkPlan plan = plan_network(cfg);
  Rng rng(seed);
  Network<T> net;
  net.config = cfg;
  net.classes = classes;
  net.opening = LeanConvSpec<T>::zeros(plan.opening);
  detail::init_conv(net.opening, rng, 1.0);
  for (const BlockPlan& bp : plan.blocks) {
    Block<T> b;
    b.transition = bp.transition;
    b.n1 = BatchNorm<T>(bp.k1.c_in);
    b.n2 = BatchNorm<T>(bp.k1.c_out);
    b.k1 = LeanConvSpec<T>::zeros(bp.k1);
    b.k2 = LeanConvSpec<T>::zeros(bp.k2);
    detail::init_conv(b.k1, rng, 1.0);
    detail::init_conv(b.k2, rng, 0.1);
    if (b.transition) {
      b.dw = LeanConvSpec<T>::zeros(bp.dw);
      detail::init_conv(b.dw, rng, 1.0);
    }
    net.blocks.push_back(std::move(b));
  }
  net.head = Classifier<T>(classes, plan.features);
  fill_normal(net.head.weight, rng, std::sqrt(1.0 / double(plan.features)));
  return net;
}

// ---------------------------------------------------------------------------
// Parameter registry

enum class ParamKind { ConvWeight, NormScale, NormShift, ClassifierWeight, ClassifierBias };

inline bool decays(ParamKind k) { return k == ParamKind::ConvWeight || k == ParamKind::ClassifierWeight; }

/// Calls f(name, matrix, kind) for every trainable array in a fixed order.
/// Works on const and non-const networks.
template <typename Net, typename F>
void visit_params(Net& net, F&& f) {
  auto conv = [&](const std::string& prefix, auto& spec) {
    f(prefix + ".pointwise", spec.pointwise, ParamKind::ConvWeight);
    f(prefix + ".spatial", spec.spatial, ParamKind::ConvWeight);
  };
  auto norm = [&](const std::string& prefix, auto& bn) {
    f(prefix + ".gamma", bn.gamma, ParamKind::NormScale);
    f(prefix + ".beta", bn.beta, ParamKind::NormShift);
  };
  conv("opening", net.opening);
  for (std::size_t i = 0; i < net.blocks.size(); ++i) {
    auto& b = net.blocks[i];
    const std::string p = "block" + std::to_string(i);
    norm(p + ".n1", b.n1);
    conv(p + ".k1", b.k1);
    norm(p + ".n2", b.n2);
    conv(p + ".k2", b.k2);
    if (b.transition) conv(p + ".dw", b.dw);
  }
  f(std::string("head.weight"), net.head.weight, ParamKind::ClassifierWeight);
  f(std::string("head.bias"), net.head.bias, ParamKind::ClassifierBias);
}

template <typename T>
struct ParamRef {
  std::string name;
  Matrix<T>* value = nullptr;
  ParamKind kind = ParamKind::ConvWeight;
};

template <typename T>
std::vector<ParamRef<T>> parameters(Network<T>& net) {
  std::vector<ParamRef<T>> out;
  visit_params(net, [&](const std::string& n, Matrix<T>& m, ParamKind k) { out.push_back({n, &m, k}); });
  return out;
}

/// Same structure with every trainable array zeroed.
template <typename T>
Network<T> zeros_like(const Network<T>& net) {
  Network<T> z = net;
  visit_params(z, [](const std::string&, Matrix<T>& m, ParamKind) { std::fill(m.data.begin(), m.data.end(), T(0)); });
  return z;
}

struct ParamTotals {
  std::uint64_t conv = 0;
  std::uint64_t norm = 0;
  std::uint64_t classifier = 0;
  /// Conv plus classifier weights; normalization parameters are reported separately.
  std::uint64_t weights() const { return conv + classifier; }
  std::uint64_t all() const { return conv + norm + classifier; }
};

/// Counts by walking the registry (array sizes, not formulas).
template <typename T>
ParamTotals registry_totals(const Network<T>& net) {
  ParamTotals t;
  visit_params(net, [&](const std::string&, const Matrix<T>& m, ParamKind k) {
    switch (k) {
      case ParamKind::ConvWeight:
        t.conv += m.size();
        break;
      case ParamKind::NormScale:
      case ParamKind::NormShift:
        t.norm += m.size();
        break;
      default:
        t.classifier += m.size();
    }
  });
  return t;
}

// ---------------------------------------------------------------------------
// Cost accounting

struct LayerCost {
  std::string name;
  std::string kind;  // "conv", "norm", "classifier"
  std::size_t c_in = 0;
  std::size_t c_out = 0;
  std::size_t groups = 1;
  std::string stencil;
  std::string coupling;
  std::size_t height = 0;
  std::size_t width = 0;
  std::uint64_t params = 0;
  std::uint64_t mults = 0;
};

struct NetworkCost {
  std::vector<LayerCost> layers;
  ParamTotals params;
  std::uint64_t mults = 0;
};

/// Per-layer parameters and multiplications for one image of size
/// height x width. Multiplications count conv and classifier products;
/// normalization and pooling are not counted.
inline NetworkCost network_cost(const NetworkConfig& cfg, std::size_t classes, std::size_t height, std::size_t width) {
  const NetworkPlan plan = plan_network(cfg);
  NetworkCost nc;
  auto conv = [&](const std::string& name, const ConvGeometry& g, std::size_t h, std::size_t w) {
    LayerCost l{name, "conv", g.c_in, g.c_out, g.groups, to_string(g.stencil), to_string(g.coupling), h, w,
                param_count(g), mult_count(g, 1, h, w)};
    nc.params.conv += l.params;
    nc.mults += l.mults;
    nc.layers.push_back(l);
  };
  auto norm = [&](const std::string& name, std::size_t c, std::size_t h, std::size_t w) {
    LayerCost l{name, "norm", c, c, 1, "", "", h, w, 2 * c, 0};
    nc.params.norm += l.params;
    nc.layers.push_back(l);
  };
  std::size_t h = height, w = width;
  conv("opening", plan.opening, h, w);
  for (std::size_t i = 0; i < plan.blocks.size(); ++i) {
    const BlockPlan& b = plan.blocks[i];
    const std::string p = "block" + std::to_string(i);
    if (b.transition && (h % 2 || w % 2)) throw ConfigError("network_cost: odd size before a stride-2 stage");
    norm(p + ".n1", b.k1.c_in, h, w);
    conv(p + ".k1", b.k1, h, w);
    if (b.transition) {
      conv(p + ".dw", b.dw, h, w);
      h /= 2;
      w /= 2;
    }
    norm(p + ".n2", b.k1.c_out, h, w);
    conv(p + ".k2", b.k2, h, w);
  }
  LayerCost head{"head", "classifier", plan.features, classes, 1, "", "", 1, 1,
                 std::uint64_t(classes) * plan.features + classes, std::uint64_t(classes) * plan.features};
  nc.params.classifier = head.params;
  nc.mults += head.mults;
  nc.layers.push_back(head);
  return nc;
}

// ---------------------------------------------------------------------------
// Forward

template <typename T>
FeatureMap<T> relu_backward(const FeatureMap<T>& d_any, const FeatureMap<T>& activated) {
  const FeatureMap<T> d = d_any.with_layout(activated.layout());
  FeatureMap<T> out(activated.shape(), activated.layout());
  const auto a = activated.values();
  const auto g = d.values();
  auto o = out.values();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] = a[k] > T(0) ? g[k] : T(0);
  return out;
}

/// avg_pool2(concat(x, dw(x))): doubles channels, halves resolution.
template <typename T>
FeatureMap<T> downsample(const FeatureMap<T>& x, const LeanConvSpec<T>& dw, const KernelOptions& opt = {}) {
  const ConvGeometry& g = dw.geometry;
  if (g.c_in != x.channels() || g.c_out != g.c_in || g.groups != g.c_in || g.coupling != Coupling::Grouped) {
    throw SpecError("downsample: expected a depth-wise operator over " + std::to_string(x.channels()) + " channels");
  }
  if (x.height() % 2 || x.width() % 2) throw ShapeError("downsample: spatial size must be even");
  return avg_pool2(concat_channels(x, apply(dw, x, opt).with_layout(x.layout())));
}

template <typename T>
struct BlockCache {
  FeatureMap<T> input;
  NormCache<T> norm1;
  FeatureMap<T> act1;
  NormCache<T> norm2;
  FeatureMap<T> act2;
};

/// One residual step. In train mode the normalization uses batch statistics
/// and updates its running statistics. The output has the input's layout.
template <typename T>
FeatureMap<T> block_forward(Block<T>& p, const FeatureMap<T>& y, bool train, const KernelOptions& opt = {},
                            BlockCache<T>* cache = nullptr) {
  if (y.channels() != p.in_channels()) {
    throw ShapeError("block: input has " + std::to_string(y.channels()) + " channels, block expects " +
                     std::to_string(p.in_channels()));
  }
  NormCache<T> c1, c2;
  FeatureMap<T> a1 = relu(batch_norm(p.n1, y, train, cache ? &c1 : nullptr));
  FeatureMap<T> h = apply(p.k1, a1, opt);
  if (p.transition) h = avg_pool2(h);
  FeatureMap<T> a2 = relu(batch_norm(p.n2, h, train, cache ? &c2 : nullptr));
  const FeatureMap<T> f = apply(p.k2, a2, opt);
  FeatureMap<T> out = p.transition ? downsample(y, p.dw, opt) : y;
  accumulate(out, f.layout() == out.layout() ? f : f.with_layout(out.layout()));
  if (cache) {
    cache->input = y;
    cache->norm1 = std::move(c1);
    cache->act1 = std::move(a1);
    cache->norm2 = std::move(c2);
    cache->act2 = std::move(a2);
  }
  return out;
}

template <typename T>
struct ForwardCache {
  FeatureMap<T> images;
  std::vector<BlockCache<T>> blocks;
  Shape last_shape;
  Layout last_layout = Layout::WidthFastest;
  Matrix<T> features;
};

/// Pooled features (batch x last width) of a batch of images.
template <typename T>
Matrix<T> forward_features(Network<T>& net, const FeatureMap<T>& images, bool train,
                           ForwardCache<T>* cache = nullptr) {
  if (images.channels() != net.config.in_channels) {
    throw ShapeError("network: images have " + std::to_string(images.channels()) + " channels, expected " +
                     std::to_string(net.config.in_channels));
  }
  FeatureMap<T> y = apply(net.opening, images, net.kernel);
  if (y.layout() != images.layout()) y = y.with_layout(images.layout());
  if (cache) {
    cache->images = images;
    cache->blocks.assign(net.blocks.size(), {});
  }
  for (std::size_t i = 0; i < net.blocks.size(); ++i)
    y = block_forward(net.blocks[i], y, train, net.kernel, cache ? &cache->blocks[i] : nullptr);
  Matrix<T> feat = global_avg_pool(y);
  if (cache) {
    cache->last_shape = y.shape();
    cache->last_layout = y.layout();
    cache->features = feat;
  }
  return feat;
}

template <typename T>
Matrix<T> forward_logits(Network<T>& net, const FeatureMap<T>& images, bool train, ForwardCache<T>* cache = nullptr) {
  return classifier_logits(net.head, forward_features(net, images, train, cache));
}

// ---------------------------------------------------------------------------
// Backward

namespace detail {

template <typename T>
void add_into(Matrix<T>& acc, const Matrix<T>& g) {
  for (std::size_t k = 0; k < acc.size(); ++k) acc.data[k] += g.data[k];
}

template <typename T>
void add_map(FeatureMap<T>& acc, const FeatureMap<T>& g) {
  accumulate(acc, g.layout() == acc.layout() ? g : g.with_layout(acc.layout()));
}

template <typename T>
FeatureMap<T> conv_backward(const LeanConvSpec<T>& spec, const FeatureMap<T>& x, const FeatureMap<T>& d_out,
                            LeanConvSpec<T>& grad) {
  GradBundle<T> g = backward(spec, x, d_out);
  add_into(grad.pointwise, g.d_pointwise);
  add_into(grad.spatial, g.d_spatial);
  return std::move(g.d_input);
}

}  // namespace detail

/// Backward of block_forward from its cache. Adds weight gradients into
/// `grads` and returns the gradient with respect to the block input.
template <typename T>
FeatureMap<T> block_backward(const Block<T>& p, const BlockCache<T>& c, const FeatureMap<T>& d_out, Block<T>& grads) {
  FeatureMap<T> d_act2 = detail::conv_backward(p.k2, c.act2, d_out, grads.k2);
  FeatureMap<T> d_h = batch_norm_backward(p.n2, c.norm2, relu_backward(d_act2, c.act2), grads.n2.gamma, grads.n2.beta);
  if (p.transition) d_h = avg_pool2_backward(d_h);
  FeatureMap<T> d_act1 = detail::conv_backward(p.k1, c.act1, d_h, grads.k1);
  FeatureMap<T> d_y = batch_norm_backward(p.n1, c.norm1, relu_backward(d_act1, c.act1), grads.n1.gamma, grads.n1.beta);
  if (d_y.layout() != c.input.layout()) d_y = d_y.with_layout(c.input.layout());
  if (!p.transition) {
    detail::add_map(d_y, d_out);
  } else {
    const FeatureMap<T> d_cat = avg_pool2_backward(d_out.with_layout(c.input.layout()));
    const std::size_t ch = c.input.channels();
    detail::add_map(d_y, slice_channels(d_cat, 0, ch));
    detail::add_map(d_y, detail::conv_backward(p.dw, c.input, slice_channels(d_cat, ch, ch), grads.dw));
  }
  return d_y;
}

/// Backward from the gradient of the loss with respect to the logits.
template <typename T>
void network_backward(const Network<T>& net, const ForwardCache<T>& cache, const Matrix<T>& d_logits,
                      Network<T>& grads) {
  const Matrix<T> d_feat = classifier_backward(net.head, cache.features, d_logits, grads.head.weight, grads.head.bias);
  FeatureMap<T> d = global_avg_pool_backward(d_feat, cache.last_shape, cache.last_layout);
  for (std::size_t i = net.blocks.size(); i-- > 0;)
    d = block_backward(net.blocks[i], cache.blocks[i], d, grads.blocks[i]);
  GradBundle<T> g = backward(net.opening, cache.images, d);
  detail::add_into(grads.opening.pointwise, g.d_pointwise);
  detail::add_into(grads.opening.spatial, g.d_spatial);
}

struct StepStats {
  double loss = 0;
  std::size_t correct = 0;
};

/// Train-mode forward plus backward. `grads` is overwritten.
template <typename T>
StepStats loss_and_gradient(Network<T>& net, const FeatureMap<T>& images, const std::vector<int>& labels,
                            Network<T>& grads) {
  ForwardCache<T> cache;
  const Matrix<T> logits = forward_logits(net, images, true, &cache);
  const Matrix<T> probs = softmax(logits);
  StepStats st;
  st.loss = cross_entropy_from_logits(logits, labels);
  const auto pred = argmax_rows(logits);
  for (std::size_t b = 0; b < labels.size(); ++b) st.correct += pred[b] == labels[b];
  visit_params(grads, [](const std::string&, Matrix<T>& m, ParamKind) { std::fill(m.data.begin(), m.data.end(), T(0)); });
  network_backward(net, cache, cross_entropy_grad(probs, labels), grads);
  return st;
}

}  // namespace leanconv
