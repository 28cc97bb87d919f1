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

#include <cstddef>
#include <cstdint>
#include <string>

#include "leanconv/ops/conv_spec.hpp"
#include "leanconv/tensor/feature_map.hpp"
#include "leanconv/tensor/matrix.hpp"

namespace leanconv {

/// Largest dense operator (rows * cols) the oracle will assemble.
inline constexpr std::uint64_t kMaxDenseEntries = std::uint64_t(1) << 25;

/// The exact linear map applied by the convolution under zero padding, as a
/// (c_out*H*W) x (c_in*H*W) matrix. Rows and columns use the logical
/// flattening c*H*W + y*W + x. Assembled block by block: alpha_{o,i} on the
/// diagonal of every coupled block, off-center taps inside group blocks.
template <typename T>
Matrix<T> materialize_dense(const LeanConvSpec<T>& spec, std::size_t height, std::size_t width) {
  validate(spec);
  const ConvGeometry& g = spec.geometry;
  const std::size_t hw = height * width;
  const std::uint64_t entries = std::uint64_t(g.c_out) * hw * g.c_in * hw;
  if (entries > kMaxDenseEntries) {
    throw SpecError("materialize_dense: " + std::to_string(entries) +
                    " entries exceed the oracle size guard");
  }
  Matrix<T> m(g.c_out * hw, g.c_in * hw);
  const auto offsets = off_center_offsets(g.stencil);
  for (std::size_t o = 0; o < g.c_out; ++o) {
    for (std::size_t i = 0; i < g.c_in; ++i) {
      const bool coupled = g.coupling == Coupling::Lean || g.in_group(o, i);
      const bool grouped = g.in_group(o, i);
      for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
          const std::size_t row = o * hw + y * width + x;
          if (coupled) m(row, i * hw + y * width + x) += spec.alpha(o, i);
          if (!grouped) continue;
          for (std::size_t q = 0; q < offsets.size(); ++q) {
            const long yy = long(y) + offsets[q].dy;
            const long xx = long(x) + offsets[q].dx;
            if (yy < 0 || xx < 0 || yy >= long(height) || xx >= long(width)) continue;
            m(row, i * hw + std::size_t(yy) * width + std::size_t(xx)) += spec.tap(o, i, q);
          }
        }
      }
    }
  }
  return m;
}

/// y = M * flatten(x) per sample, reshaped into a width-fastest map.
template <typename T>
FeatureMap<T> apply_dense(const Matrix<T>& m, const FeatureMap<T>& x, std::size_t out_channels) {
  const std::size_t hw = x.plane_size();
  if (m.cols != x.channels() * hw || m.rows != out_channels * hw) {
    throw ShapeError("apply_dense: operator does not match input shape");
  }
  FeatureMap<T> y(x.batch(), out_channels, x.height(), x.width(), Layout::WidthFastest);
  for (std::size_t b = 0; b < x.batch(); ++b) {
    const std::vector<T> v = x.flatten_sample(b);
    T* dst = y.plane(b, 0).data();
    for (std::size_t r = 0; r < m.rows; ++r) {
      const T* row = m.data.data() + r * m.cols;
      T s = 0;
      for (std::size_t k = 0; k < m.cols; ++k) s += row[k] * v[k];
      dst[r] = s;
    }
  }
  return y;
}

/// y = M^T * flatten(u) per sample.
template <typename T>
FeatureMap<T> apply_dense_transpose(const Matrix<T>& m, const FeatureMap<T>& u,
                                    std::size_t in_channels) {
  const std::size_t hw = u.plane_size();
  if (m.rows != u.channels() * hw || m.cols != in_channels * hw) {
    throw ShapeError("apply_dense_transpose: operator does not match input shape");
  }
  FeatureMap<T> y(u.batch(), in_channels, u.height(), u.width(), Layout::WidthFastest);
  for (std::size_t b = 0; b < u.batch(); ++b) {
    const std::vector<T> v = u.flatten_sample(b);
    T* dst = y.plane(b, 0).data();
    for (std::size_t r = 0; r < m.rows; ++r) {
      const T* row = m.data.data() + r * m.cols;
      const T vr = v[r];
      if (vr == T(0)) continue;
      for (std::size_t k = 0; k < m.cols; ++k) dst[k] += row[k] * vr;
    }
  }
  return y;
}

template <typename T>
std::uint64_t count_nonzeros(const Matrix<T>& m) {
  std::uint64_t n = 0;
  for (T v : m.data) n += v != T(0);
  return n;
}

}  // namespace leanconv
