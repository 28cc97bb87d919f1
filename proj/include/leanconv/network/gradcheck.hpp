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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "leanconv/network/model.hpp"

namespace leanconv {

struct GradCheckResult {
  double max_rel_err = 0;
  std::string worst;
  std::size_t checked = 0;
};

/// Smallest |pre-activation| over every ReLU input of a train-mode forward.
/// Central differences are only meaningful when this exceeds the change a
/// step can cause.
template <typename T>
double relu_margin(Network<T>& net, const FeatureMap<T>& images) {
  ForwardCache<T> cache;
  forward_features(net, images, true, &cache);
  double margin = std::numeric_limits<double>::infinity();
  auto scan = [&](const BatchNorm<T>& bn, const NormCache<T>& c) {
    const auto& x = c.normalized;
    for (std::size_t b = 0; b < x.batch(); ++b)
      for (std::size_t ch = 0; ch < x.channels(); ++ch)
        for (T v : x.plane(b, ch))
          margin = std::min(margin, std::abs(double(bn.gamma.data[ch] * v + bn.beta.data[ch])));
  };
  for (std::size_t i = 0; i < net.blocks.size(); ++i) {
    scan(net.blocks[i].n1, cache.blocks[i].norm1);
    scan(net.blocks[i].n2, cache.blocks[i].norm2);
  }
  return margin;
}

/// Compares backprop gradients with central differences of the train-mode
/// loss for every parameter entry (every `stride`-th entry if stride > 1).
/// Relative error is |a - n| / max(|a|, |n|, floor).
inline GradCheckResult gradient_check(Network<double>& net, const FeatureMap<double>& images,
                                      const std::vector<int>& labels, double step = 1e-5, double floor = 1e-5,
                                      std::size_t stride = 1) {
  Network<double> grads = zeros_like(net);
  loss_and_gradient(net, images, labels, grads);
  auto loss = [&] { return cross_entropy_from_logits(forward_logits(net, images, true), labels); };
  auto w = parameters(net);
  auto g = parameters(grads);
  GradCheckResult r;
  for (std::size_t p = 0; p < w.size(); ++p) {
    auto& data = w[p].value->data;
    for (std::size_t k = 0; k < data.size(); k += std::max<std::size_t>(1, stride)) {
      const double keep = data[k];
      data[k] = keep + step;
      const double up = loss();
      data[k] = keep - step;
      const double down = loss();
      data[k] = keep;
      const double num = (up - down) / (2 * step);
      const double an = g[p].value->data[k];
      const double err = std::abs(an - num) / std::max({std::abs(an), std::abs(num), floor});
      ++r.checked;
      if (err >= r.max_rel_err) {
        r.max_rel_err = err;
        r.worst = w[p].name + "[" + std::to_string(k) + "]";
      }
    }
  }
  return r;
}

/// Draws normalization scales in [0.5, 1.5] and shifts in [-0.5, 0.5].
template <typename T>
void randomize_norms(Network<T>& net, Rng& rng) {
  std::uniform_real_distribution<double> scale(0.5, 1.5), shift(-0.5, 0.5);
  for (auto& b : net.blocks)
    for (BatchNorm<T>* bn : {&b.n1, &b.n2}) {
      for (T& v : bn->gamma.data) v = T(scale(rng));
      for (T& v : bn->beta.data) v = T(shift(rng));
    }
}

struct GradCheckPoint {
  Network<double> net;
  FeatureMap<double> images;
  std::vector<int> labels;
  std::uint64_t seed = 0;
};

/// First seed from `first` on whose network, normalization affine and input
/// keep every ReLU input at least `margin` away from zero.
inline GradCheckPoint gradcheck_point(const NetworkConfig& cfg, std::size_t classes, const Shape& input,
                                      std::uint64_t first = 1, double margin = 1e-4, std::uint64_t tries = 500) {
  for (std::uint64_t seed = first; seed < first + tries; ++seed) {
    Rng rng(seed);
    GradCheckPoint p{build_network<double>(cfg, classes, seed), {}, {}, seed};
    randomize_norms(p.net, rng);
    p.images = random_map<double>(input, Layout::WidthFastest, rng);
    for (std::size_t b = 0; b < input.batch; ++b) p.labels.push_back(int((b * 7 + seed) % classes));
    if (relu_margin(p.net, p.images) >= margin) return p;
  }
  throw std::runtime_error("gradcheck_point: no seed keeps the ReLU inputs clear of zero");
}

}  // namespace leanconv
