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

#include "leanconv/ops/stencil.hpp"
#include "leanconv/tensor/feature_map.hpp"

namespace leanconv::detail {

/// A logical (dy, dx) offset expressed in buffer coordinates: d_line moves
/// across contiguous lines, d_fast moves along one.
struct BufferOffset {
  long d_line = 0;
  long d_fast = 0;
};

inline BufferOffset to_buffer(Offset q, Layout layout) {
  return layout == Layout::WidthFastest ? BufferOffset{q.dy, q.dx} : BufferOffset{q.dx, q.dy};
}

/// dst[l, f] = src[l + d_line, f + d_fast], zero outside the plane.
template <typename T>
void shift_plane(const T* src, T* dst, std::size_t lines, std::size_t fast, BufferOffset d) {
  for (std::size_t l = 0; l < lines; ++l) {
    T* out = dst + l * fast;
    const long sl = long(l) + d.d_line;
    if (sl < 0 || sl >= long(lines)) {
      std::fill_n(out, fast, T(0));
      continue;
    }
    const T* in = src + std::size_t(sl) * fast;
    // valid f: 0 <= f + d_fast < fast
    const long f_lo = std::max(0L, -d.d_fast);
    const long f_hi = std::min(long(fast), long(fast) - d.d_fast);
    if (f_lo >= f_hi) {
      std::fill_n(out, fast, T(0));
      continue;
    }
    std::fill(out, out + f_lo, T(0));
    std::copy(in + f_lo + d.d_fast, in + f_hi + d.d_fast, out + f_lo);
    std::fill(out + f_hi, out + fast, T(0));
  }
}

/// dst[l, f] += src[l - d_line, f - d_fast]: the adjoint of shift_plane.
template <typename T>
void shift_plane_adjoint_add(const T* src, T* dst, std::size_t lines, std::size_t fast,
                             BufferOffset d) {
  for (std::size_t l = 0; l < lines; ++l) {
    const long sl = long(l) - d.d_line;
    if (sl < 0 || sl >= long(lines)) continue;
    const T* in = src + std::size_t(sl) * fast;
    T* out = dst + l * fast;
    const long f_lo = std::max(0L, d.d_fast);
    const long f_hi = std::min(long(fast), long(fast) + d.d_fast);
    for (long f = f_lo; f < f_hi; ++f) out[f] += in[f - d.d_fast];
  }
}

}  // namespace leanconv::detail
