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
#include <string>

#include "leanconv/tensor/feature_map.hpp"
#include "leanconv/tensor/matrix.hpp"

namespace leanconv {

template <typename T>
FeatureMap<T> relu(const FeatureMap<T>& x) {
  FeatureMap<T> out(x.shape(), x.layout());
  auto src = x.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::max(src[i], T(0));
  return out;
}

template <typename T>
FeatureMap<T> residual_add(const FeatureMap<T>& x, const FeatureMap<T>& f) {
  if (x.shape() != f.shape()) {
    throw ShapeError("residual_add: shape " + to_string(x.shape()) + " vs " + to_string(f.shape()));
  }
  if (x.layout() != f.layout()) {
    throw ShapeError(std::string("residual_add: layout ") + to_string(x.layout()) + " vs " +
                     to_string(f.layout()));
  }
  FeatureMap<T> out(x.shape(), x.layout());
  auto a = x.values();
  auto b = f.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < a.size(); ++i) dst[i] = a[i] + b[i];
  return out;
}

/// Non-overlapping 2x2 mean. Odd spatial sizes are rejected.
template <typename T>
FeatureMap<T> avg_pool2(const FeatureMap<T>& x) {
  if (x.height() % 2 != 0 || x.width() % 2 != 0) {
    throw ShapeError("avg_pool2: spatial size " + std::to_string(x.height()) + "x" +
                     std::to_string(x.width()) + " is not even");
  }
  FeatureMap<T> out(x.batch(), x.channels(), x.height() / 2, x.width() / 2, x.layout());
  // Pooling is symmetric in the two axes, so work in (line, fast) coordinates.
  const std::size_t fast_in = x.fast_extent();
  const std::size_t lines_out = out.line_count();
  const std::size_t fast_out = out.fast_extent();
  for (std::size_t b = 0; b < x.batch(); ++b) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      const T* src = x.plane(b, c).data();
      T* dst = out.plane(b, c).data();
      for (std::size_t l = 0; l < lines_out; ++l) {
        const T* r0 = src + (2 * l) * fast_in;
        const T* r1 = r0 + fast_in;
        for (std::size_t f = 0; f < fast_out; ++f) {
          // diagonal pairs first: the same rounding in either layout
          dst[l * fast_out + f] =
              ((r0[2 * f] + r1[2 * f + 1]) + (r0[2 * f + 1] + r1[2 * f])) * T(0.25);
        }
      }
    }
  }
  return out;
}

/// Adjoint of avg_pool2: spreads each gradient entry over its 2x2 window.
template <typename T>
FeatureMap<T> avg_pool2_backward(const FeatureMap<T>& d_out) {
  FeatureMap<T> d_in(d_out.batch(), d_out.channels(), d_out.height() * 2, d_out.width() * 2,
                     d_out.layout());
  const std::size_t fast_in = d_in.fast_extent();
  const std::size_t lines_out = d_out.line_count();
  const std::size_t fast_out = d_out.fast_extent();
  for (std::size_t b = 0; b < d_out.batch(); ++b) {
    for (std::size_t c = 0; c < d_out.channels(); ++c) {
      const T* src = d_out.plane(b, c).data();
      T* dst = d_in.plane(b, c).data();
      for (std::size_t l = 0; l < lines_out; ++l) {
        T* r0 = dst + (2 * l) * fast_in;
        T* r1 = r0 + fast_in;
        for (std::size_t f = 0; f < fast_out; ++f) {
          const T g = src[l * fast_out + f] * T(0.25);
          r0[2 * f] = g;
          r0[2 * f + 1] = g;
          r1[2 * f] = g;
          r1[2 * f + 1] = g;
        }
      }
    }
  }
  return d_in;
}

/// Mean over all spatial positions; result is batch x channels.
template <typename T>
Matrix<T> global_avg_pool(const FeatureMap<T>& x) {
  Matrix<T> out(x.batch(), x.channels());
  const T inv = T(1) / static_cast<T>(x.plane_size());
  for (std::size_t b = 0; b < x.batch(); ++b) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      T s = 0;
      for (T v : x.plane(b, c)) s += v;
      out(b, c) = s * inv;
    }
  }
  return out;
}

template <typename T>
FeatureMap<T> global_avg_pool_backward(const Matrix<T>& d_features, const Shape& in_shape,
                                       Layout layout) {
  FeatureMap<T> d_in(in_shape, layout);
  const T inv = T(1) / static_cast<T>(in_shape.plane());
  for (std::size_t b = 0; b < in_shape.batch; ++b) {
    for (std::size_t c = 0; c < in_shape.channels; ++c) {
      const T g = d_features(b, c) * inv;
      for (T& v : d_in.plane(b, c)) v = g;
    }
  }
  return d_in;
}

/// Stacks the channels of a followed by the channels of b.
template <typename T>
FeatureMap<T> concat_channels(const FeatureMap<T>& a, const FeatureMap<T>& b) {
  if (a.batch() != b.batch() || a.height() != b.height() || a.width() != b.width()) {
    throw ShapeError("concat_channels: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  if (a.layout() != b.layout()) throw ShapeError("concat_channels: layout mismatch");
  FeatureMap<T> out(a.batch(), a.channels() + b.channels(), a.height(), a.width(), a.layout());
  for (std::size_t n = 0; n < a.batch(); ++n) {
    for (std::size_t c = 0; c < a.channels(); ++c)
      std::copy_n(a.plane(n, c).data(), a.plane_size(), out.plane(n, c).data());
    for (std::size_t c = 0; c < b.channels(); ++c)
      std::copy_n(b.plane(n, c).data(), b.plane_size(), out.plane(n, a.channels() + c).data());
  }
  return out;
}

/// Channels [first, first + count) of x.
template <typename T>
FeatureMap<T> slice_channels(const FeatureMap<T>& x, std::size_t first, std::size_t count) {
  if (first + count > x.channels()) throw ShapeError("slice_channels: range out of bounds");
  FeatureMap<T> out(x.batch(), count, x.height(), x.width(), x.layout());
  for (std::size_t n = 0; n < x.batch(); ++n)
    for (std::size_t c = 0; c < count; ++c)
      std::copy_n(x.plane(n, first + c).data(), x.plane_size(), out.plane(n, c).data());
  return out;
}

/// In-place accumulate: acc += x (geometry must match).
template <typename T>
void accumulate(FeatureMap<T>& acc, const FeatureMap<T>& x) {
  if (!acc.same_geometry(x)) throw ShapeError("accumulate: geometry mismatch");
  auto a = acc.values();
  auto b = x.values();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

}  // namespace leanconv
