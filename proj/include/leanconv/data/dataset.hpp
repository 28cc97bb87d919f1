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
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "leanconv/tensor/feature_map.hpp"
#include "leanconv/tensor/random.hpp"

namespace leanconv {

/// Labeled images, one sample per batch entry.
template <typename T>
struct Dataset {
  FeatureMap<T> images;
  std::vector<int> labels;
  std::size_t classes = 0;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }

  template <typename U>
  Dataset<U> cast() const {
    return {images.template cast<U>(), labels, classes};
  }
};

template <typename T>
void validate(const Dataset<T>& d) {
  if (d.images.batch() != d.labels.size()) throw ShapeError("dataset: image and label counts differ");
  for (int y : d.labels)
    if (y < 0 || std::size_t(y) >= d.classes) throw std::out_of_range("dataset: label " + std::to_string(y) + " out of range");
}

/// Copies the listed samples into a new batch (same layout).
template <typename T>
FeatureMap<T> gather(const FeatureMap<T>& images, std::span<const std::size_t> idx) {
  FeatureMap<T> out(Shape{idx.size(), images.channels(), images.height(), images.width()}, images.layout());
  for (std::size_t k = 0; k < idx.size(); ++k)
    for (std::size_t c = 0; c < images.channels(); ++c) {
      const auto src = images.plane(idx[k], c);
      std::copy(src.begin(), src.end(), out.plane(k, c).begin());
    }
  return out;
}

template <typename T>
Dataset<T> subset(const Dataset<T>& d, std::span<const std::size_t> idx) {
  Dataset<T> s;
  s.images = gather(d.images, idx);
  s.classes = d.classes;
  for (std::size_t i : idx) s.labels.push_back(d.labels.at(i));
  return s;
}

/// First n samples (all of them if n is 0 or too large).
template <typename T>
Dataset<T> head(const Dataset<T>& d, std::size_t n) {
  if (n == 0 || n >= d.size()) return d;
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return subset(d, idx);
}

/// Random horizontal flip and random crop after zero padding by `pad`
/// pixels, drawn independently per sample.
template <typename T>
void augment_flip_crop(FeatureMap<T>& batch, Rng& rng, std::size_t pad = 4) {
  const long h = long(batch.height()), w = long(batch.width());
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<long> shift(-long(pad), long(pad));
  std::vector<T> tmp(batch.plane_size());
  for (std::size_t b = 0; b < batch.batch(); ++b) {
    const bool flip = coin(rng) == 1;
    const long dy = shift(rng), dx = shift(rng);
    for (std::size_t c = 0; c < batch.channels(); ++c) {
      for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x) {
          const long sy = y + dy;
          long sx = x + dx;
          T v = T(0);
          if (sy >= 0 && sy < h && sx >= 0 && sx < w) {
            if (flip) sx = w - 1 - sx;
            v = batch.at(b, c, std::size_t(sy), std::size_t(sx));
          }
          tmp[std::size_t(y * w + x)] = v;
        }
      for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x) batch.at(b, c, std::size_t(y), std::size_t(x)) = tmp[std::size_t(y * w + x)];
    }
  }
}

}  // namespace leanconv
