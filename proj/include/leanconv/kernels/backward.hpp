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
#include <vector>

#include "leanconv/kernels/gemm.hpp"
#include "leanconv/kernels/kernels.hpp"
#include "leanconv/kernels/shift.hpp"

namespace leanconv {

/// Gradients of a scalar loss with respect to the input and both weight
/// stores of one operator. Shapes mirror the forward spec.
template <typename T>
struct GradBundle {
  FeatureMap<T> d_input;
  Matrix<T> d_pointwise;
  Matrix<T> d_spatial;
};

namespace detail {

template <typename T>
void check_grad_shapes(const LeanConvSpec<T>& spec, const Shape& in, const FeatureMap<T>& d_out) {
  validate(spec);
  if (in.channels != spec.c_in() || d_out.channels() != spec.c_out() || d_out.batch() != in.batch ||
      d_out.height() != in.height || d_out.width() != in.width) {
    throw ShapeError("backward: output gradient " + to_string(d_out.shape()) +
                     " does not match operator applied to " + to_string(in));
  }
}

}  // namespace detail

/// K^T u: transposed pointwise matrix plus adjoint stencils (negated
/// offsets). The result uses `layout`; u may be stored in either layout.
template <typename T>
FeatureMap<T> apply_transpose(const LeanConvSpec<T>& spec, const FeatureMap<T>& u, Layout layout) {
  const ConvGeometry& g = spec.geometry;
  const Shape in_shape{u.batch(), g.c_in, u.height(), u.width()};
  detail::check_grad_shapes(spec, in_shape, u);
  const FeatureMap<T> dy = u.with_layout(layout);
  FeatureMap<T> dx(in_shape, layout);
  const std::size_t n = dy.plane_size();
  const std::size_t cig = g.in_per_group();
  const std::size_t cog = g.out_per_group();
  const auto offsets = off_center_offsets(g.stencil);
  const auto taps = detail::taps_by_offset(spec);

  parallel_for(dy.batch(), [&](std::size_t b) {
    const T* dyb = dy.plane(b, 0).data();
    T* dxb = dx.plane(b, 0).data();
    if (g.coupling == Coupling::Lean) {
      gemm::tn(g.c_in, n, g.c_out, spec.pointwise.data.data(), g.c_in, dyb, n, dxb, n);
    } else {
      for (std::size_t k = 0; k < g.groups; ++k)
        gemm::tn(cig, n, cog, spec.pointwise.data.data() + k * cog * cig, cig, dyb + k * cog * n, n,
                 dxb + k * cig * n, n);
    }
    if (offsets.empty()) return;
    std::vector<T> tmp(g.c_in * n);
    for (std::size_t q = 0; q < offsets.size(); ++q) {
      std::fill(tmp.begin(), tmp.end(), T(0));
      for (std::size_t k = 0; k < g.groups; ++k)
        gemm::tn(cig, n, cog, taps[q].data.data() + k * cog * cig, cig, dyb + k * cog * n, n,
                 tmp.data() + k * cig * n, n);
      const auto d = detail::to_buffer(offsets[q], layout);
      for (std::size_t i = 0; i < g.c_in; ++i)
        detail::shift_plane_adjoint_add(tmp.data() + i * n, dxb + i * n, dy.line_count(),
                                        dy.fast_extent(), d);
    }
  });
  return dx;
}

/// Reverse-mode gradients of y = K x given dL/dy.
template <typename T>
GradBundle<T> backward(const LeanConvSpec<T>& spec, const FeatureMap<T>& x, const FeatureMap<T>& d_out) {
  detail::check_grad_shapes(spec, x.shape(), d_out);
  const ConvGeometry& g = spec.geometry;
  const FeatureMap<T> dy = d_out.with_layout(x.layout());
  const std::size_t n = x.plane_size();
  const std::size_t cig = g.in_per_group();
  const std::size_t cog = g.out_per_group();
  const auto offsets = off_center_offsets(g.stencil);

  GradBundle<T> grads;
  grads.d_input = apply_transpose(spec, dy, x.layout());

  // Per-sample partial weight gradients, reduced in batch order afterwards
  // so the result does not depend on the thread count.
  std::vector<Matrix<T>> part_pw(x.batch(), Matrix<T>(g.c_out, g.pointwise_cols()));
  std::vector<std::vector<Matrix<T>>> part_sp(
      x.batch(), std::vector<Matrix<T>>(offsets.size(), Matrix<T>(g.c_out, cig)));

  parallel_for(x.batch(), [&](std::size_t b) {
    const T* xb = x.plane(b, 0).data();
    const T* dyb = dy.plane(b, 0).data();
    Matrix<T>& pw = part_pw[b];
    if (g.coupling == Coupling::Lean) {
      gemm::nt(g.c_out, g.c_in, n, dyb, n, xb, n, pw.data.data(), g.c_in);
    } else {
      for (std::size_t k = 0; k < g.groups; ++k)
        gemm::nt(cog, cig, n, dyb + k * cog * n, n, xb + k * cig * n, n, pw.data.data() + k * cog * cig,
                 cig);
    }
    if (offsets.empty()) return;
    std::vector<T> shifted(g.c_in * n);
    for (std::size_t q = 0; q < offsets.size(); ++q) {
      const auto d = detail::to_buffer(offsets[q], x.layout());
      for (std::size_t i = 0; i < g.c_in; ++i)
        detail::shift_plane(xb + i * n, shifted.data() + i * n, x.line_count(), x.fast_extent(), d);
      for (std::size_t k = 0; k < g.groups; ++k)
        gemm::nt(cog, cig, n, dyb + k * cog * n, n, shifted.data() + k * cig * n, n,
                 part_sp[b][q].data.data() + k * cog * cig, cig);
    }
  });

  grads.d_pointwise = Matrix<T>(g.c_out, g.pointwise_cols());
  grads.d_spatial = Matrix<T>(g.spatial_rows(), g.offsets());
  for (std::size_t b = 0; b < x.batch(); ++b) {
    for (std::size_t k = 0; k < grads.d_pointwise.size(); ++k) grads.d_pointwise.data[k] += part_pw[b].data[k];
    for (std::size_t q = 0; q < offsets.size(); ++q)
      for (std::size_t r = 0; r < g.spatial_rows(); ++r) grads.d_spatial(r, q) += part_sp[b][q].data[r];
  }
  return grads;
}

}  // namespace leanconv
