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
#include <cstdint>
#include <cstdlib>
#include <stdexcept>

#include "leanconv/ops/conv_spec.hpp"

namespace leanconv {

/// Exact weight count and forward multiplication count.
struct CostReport {
  std::uint64_t params = 0;
  std::uint64_t mults = 0;

  CostReport& operator+=(const CostReport& o) {
    params += o.params;
    mults += o.mults;
    return *this;
  }
  friend bool operator==(const CostReport&, const CostReport&) = default;
};

// Pointwise part: c_in*c_out (lean) or c_in*c_out/g (grouped).
// Spatial part: s*c_in*c_out/g with s the off-center tap count.
inline std::uint64_t param_count(const ConvGeometry& g) {
  validate(g);
  const std::uint64_t pairs = std::uint64_t(g.c_in) * g.c_out;
  const std::uint64_t in_group_pairs = pairs / g.groups;
  const std::uint64_t pointwise = g.coupling == Coupling::Lean ? pairs : in_group_pairs;
  return pointwise + in_group_pairs * g.offsets();
}

template <typename T>
std::uint64_t param_count(const LeanConvSpec<T>& spec) {
  validate(spec);
  return param_count(spec.geometry);
}

/// Multiplications for one same-size zero-padded application. Padded
/// boundary taps are counted, so the cost is exactly batch*H*W*params.
inline std::uint64_t mult_count(const ConvGeometry& g, std::size_t batch, std::size_t height,
                                std::size_t width) {
  return std::uint64_t(batch) * height * width * param_count(g);
}

template <typename T>
std::uint64_t mult_count(const LeanConvSpec<T>& spec, std::size_t batch, std::size_t height,
                         std::size_t width) {
  validate(spec);
  return mult_count(spec.geometry, batch, height, width);
}

inline CostReport cost(const ConvGeometry& g, std::size_t batch, std::size_t height,
                       std::size_t width) {
  return {param_count(g), mult_count(g, batch, height, width)};
}

/// Group count keeping the grouped spatial part at roughly `ratio` of the
/// pointwise part: target (r-1)/ratio, rounded down to a divisor of channels.
inline std::size_t choose_groups(std::size_t channels, std::size_t stencil_r, double ratio) {
  if (channels == 0) throw std::invalid_argument("choose_groups: channels must be >= 1");
  if (!(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("choose_groups: ratio must be in (0, 1]");
  const double target = static_cast<double>(stencil_r > 0 ? stencil_r - 1 : 0) / ratio;
  // Guard against 63.9999 from inexact ratios such as 0.125 written as text.
  const auto limit = static_cast<std::size_t>(std::max(1.0, std::floor(target + 1e-9)));
  for (std::size_t g = std::min(limit, channels); g >= 1; --g) {
    if (channels % g == 0) return g;
  }
  return 1;
}

/// Structural nonzeros of the dense operator under zero padding, computed
/// without assembling it.
inline std::uint64_t nnz_count(const ConvGeometry& g, std::size_t height, std::size_t width) {
  validate(g);
  const std::uint64_t hw = std::uint64_t(height) * width;
  const std::uint64_t pairs = std::uint64_t(g.c_in) * g.c_out;
  const std::uint64_t in_group_pairs = pairs / g.groups;
  const std::uint64_t pointwise_blocks = g.coupling == Coupling::Lean ? pairs : in_group_pairs;
  std::uint64_t per_block_taps = 0;
  for (const Offset& q : off_center_offsets(g.stencil)) {
    const auto ady = static_cast<std::size_t>(std::abs(q.dy));
    const auto adx = static_cast<std::size_t>(std::abs(q.dx));
    if (ady >= height || adx >= width) continue;
    per_block_taps += std::uint64_t(height - ady) * (width - adx);
  }
  return pointwise_blocks * hw + in_group_pairs * per_block_taps;
}

template <typename T>
std::uint64_t nnz_count(const LeanConvSpec<T>& spec, std::size_t height, std::size_t width) {
  return nnz_count(spec.geometry, height, width);
}

}  // namespace leanconv
