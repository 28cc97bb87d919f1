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
#include <stdexcept>
#include <string>
#include <vector>

#include "leanconv/kernels/gemm.hpp"
#include "leanconv/kernels/shift.hpp"
#include "leanconv/ops/conv_spec.hpp"
#include "leanconv/tensor/feature_map.hpp"
#include "leanconv/tensor/parallel.hpp"

namespace leanconv {

/// Cache tile sizes of the fused kernel: t_n spatial positions by t_o output
/// channels, accumulated over blocks of t_i input channels.
struct TileConfig {
  std::size_t t_n = 64;
  std::size_t t_o = 16;
  std::size_t t_i = 16;

  std::size_t working_set() const { return t_n * t_i + t_i * t_o + t_n * t_o; }
  friend bool operator==(const TileConfig&, const TileConfig&) = default;
};

inline void validate(const TileConfig& cfg) {
  if (cfg.t_n == 0 || cfg.t_o == 0 || cfg.t_i == 0) {
    throw std::invalid_argument("TileConfig: tile sizes must be >= 1");
  }
}

enum class KernelPath { Reference, ShiftIm2col, FusedTiled, Auto };

inline const char* to_string(KernelPath p) {
  switch (p) {
    case KernelPath::Reference:
      return "reference";
    case KernelPath::ShiftIm2col:
      return "shift-im2col";
    case KernelPath::FusedTiled:
      return "fused";
    case KernelPath::Auto:
      return "auto";
  }
  return "?";
}

inline KernelPath parse_kernel_path(const std::string& s) {
  if (s == "reference") return KernelPath::Reference;
  if (s == "shift-im2col" || s == "shift") return KernelPath::ShiftIm2col;
  if (s == "fused") return KernelPath::FusedTiled;
  if (s == "auto") return KernelPath::Auto;
  throw std::invalid_argument("unknown kernel path '" + s + "'");
}

namespace detail {

template <typename T>
void check_input(const LeanConvSpec<T>& spec, const FeatureMap<T>& x) {
  validate(spec);
  if (x.channels() != spec.c_in()) {
    throw ShapeError("input has " + std::to_string(x.channels()) + " channels, operator expects " +
                     std::to_string(spec.c_in()));
  }
}

/// Fastest axis a Three1D stencil needs to run along contiguous memory.
inline Layout aligned_layout(Direction d) {
  return d == Direction::Horizontal ? Layout::WidthFastest : Layout::HeightFastest;
}

/// Off-center taps regrouped per offset: result[q] is c_out x in_per_group.
template <typename T>
std::vector<Matrix<T>> taps_by_offset(const LeanConvSpec<T>& spec) {
  const ConvGeometry& g = spec.geometry;
  std::vector<Matrix<T>> out(g.offsets(), Matrix<T>(g.c_out, g.in_per_group()));
  for (std::size_t r = 0; r < g.spatial_rows(); ++r)
    for (std::size_t q = 0; q < g.offsets(); ++q) out[q].data[r] = spec.spatial(r, q);
  return out;
}

}  // namespace detail

/// Direct loop over logical coordinates. Slow; defines the semantics.
template <typename T>
FeatureMap<T> apply_reference(const LeanConvSpec<T>& spec, const FeatureMap<T>& x) {
  detail::check_input(spec, x);
  const ConvGeometry& g = spec.geometry;
  const auto offsets = off_center_offsets(g.stencil);
  const long h = long(x.height());
  const long w = long(x.width());
  FeatureMap<T> out(x.batch(), g.c_out, x.height(), x.width(), x.layout());
  for (std::size_t b = 0; b < x.batch(); ++b) {
    for (std::size_t o = 0; o < g.c_out; ++o) {
      const std::size_t grp = g.group_of_output(o);
      const std::size_t i_lo = grp * g.in_per_group();
      const std::size_t i_hi = i_lo + g.in_per_group();
      for (long y = 0; y < h; ++y) {
        for (long xx = 0; xx < w; ++xx) {
          T acc = 0;
          for (std::size_t i = 0; i < g.c_in; ++i) acc += spec.alpha(o, i) * x.at(b, i, y, xx);
          for (std::size_t i = i_lo; i < i_hi; ++i) {
            for (std::size_t q = 0; q < offsets.size(); ++q) {
              const long sy = y + offsets[q].dy;
              const long sx = xx + offsets[q].dx;
              if (sy < 0 || sx < 0 || sy >= h || sx >= w) continue;
              acc += spec.tap(o, i, q) * x.at(b, i, std::size_t(sy), std::size_t(sx));
            }
          }
          out.at(b, o, y, xx) = acc;
        }
      }
    }
  }
  return out;
}

/// One GEMM for the pointwise part, then one shifted-view GEMM per
/// off-center offset restricted to the group blocks. Layout is preserved.
template <typename T>
FeatureMap<T> apply_shift_im2col(const LeanConvSpec<T>& spec, const FeatureMap<T>& x) {
  detail::check_input(spec, x);
  const ConvGeometry& g = spec.geometry;
  const std::size_t n = x.plane_size();
  const std::size_t cig = g.in_per_group();
  const std::size_t cog = g.out_per_group();
  const auto offsets = off_center_offsets(g.stencil);
  const auto taps = detail::taps_by_offset(spec);
  FeatureMap<T> out(x.batch(), g.c_out, x.height(), x.width(), x.layout());

  parallel_for(x.batch(), [&](std::size_t b) {
    const T* xb = x.plane(b, 0).data();
    T* yb = out.plane(b, 0).data();
    if (g.coupling == Coupling::Lean) {
      gemm::nn(g.c_out, n, g.c_in, spec.pointwise.data.data(), g.c_in, xb, n, yb, n);
    } else {
      for (std::size_t k = 0; k < g.groups; ++k) {
        gemm::nn(cog, n, cig, spec.pointwise.data.data() + k * cog * cig, cig, xb + k * cig * n, n,
                 yb + k * cog * n, n);
      }
    }
    if (offsets.empty()) return;
    std::vector<T> shifted(g.c_in * n);
    for (std::size_t q = 0; q < offsets.size(); ++q) {
      const auto d = detail::to_buffer(offsets[q], x.layout());
      for (std::size_t i = 0; i < g.c_in; ++i)
        detail::shift_plane(xb + i * n, shifted.data() + i * n, x.line_count(), x.fast_extent(), d);
      for (std::size_t k = 0; k < g.groups; ++k) {
        gemm::nn(cog, n, cig, taps[q].data.data() + k * cog * cig, cig,
                 shifted.data() + k * cig * n, n, yb + k * cog * n, n);
      }
    }
  });
  return out;
}

/// Fused tiled kernel. Each task owns a (t_o output channels) x (t_n
/// positions) output tile. For every block of t_i input channels it fetches
/// the input block once (plus one boundary scalar on each side), runs the
/// pointwise GEMM on it, and applies the in-group stencil taps to the same
/// resident block. Taps that cross lines read the neighbouring line directly.
///
/// For Three1D stencils the tile is written transposed: the output layout is
/// the flip of the input layout, and the stencil direction must match the
/// contiguous axis of the input.
template <typename T>
FeatureMap<T> apply_fused_tiled(const LeanConvSpec<T>& spec, const FeatureMap<T>& x,
                                const TileConfig& cfg = {}) {
  detail::check_input(spec, x);
  validate(cfg);
  const ConvGeometry& g = spec.geometry;
  const bool transposed_write = g.stencil.is_three();
  if (transposed_write && x.layout() != detail::aligned_layout(g.stencil.direction)) {
    throw ShapeError(std::string("fused 3-point kernel: stencil direction ") +
                     (g.stencil.direction == Direction::Horizontal ? "horizontal" : "vertical") +
                     " requires " + to_string(detail::aligned_layout(g.stencil.direction)) +
                     " input, got " + to_string(x.layout()));
  }
  const Layout out_layout = transposed_write ? flipped(x.layout()) : x.layout();
  FeatureMap<T> out(x.batch(), g.c_out, x.height(), x.width(), out_layout);

  const std::size_t n = x.plane_size();
  const std::size_t lines = x.line_count();
  const std::size_t fast = x.fast_extent();
  const std::size_t cig = g.in_per_group();
  const std::size_t tn = std::min(cfg.t_n, n);
  const std::size_t to = std::min(cfg.t_o, g.c_out);
  const std::size_t ti = std::min(cfg.t_i, g.c_in);
  const std::size_t n_tiles = (n + tn - 1) / tn;
  const std::size_t o_tiles = (g.c_out + to - 1) / to;
  const auto offsets = off_center_offsets(g.stencil);
  std::vector<detail::BufferOffset> boffs;
  for (const Offset& q : offsets) boffs.push_back(detail::to_buffer(q, x.layout()));
  const std::size_t ldb = tn + 2;

  parallel_for(x.batch() * o_tiles * n_tiles, [&](std::size_t task) {
    const std::size_t b = task / (o_tiles * n_tiles);
    const std::size_t o0 = ((task / n_tiles) % o_tiles) * to;
    const std::size_t p0 = (task % n_tiles) * tn;
    const std::size_t ob = std::min(to, g.c_out - o0);
    const std::size_t len = std::min(tn, n - p0);
    const T* xb = x.plane(b, 0).data();

    // Split the position range into pieces lying on a single line.
    struct Segment {
      std::size_t begin, end, line, fast0;
    };
    std::vector<Segment> segments;
    for (std::size_t p = p0; p < p0 + len;) {
      const std::size_t l = p / fast;
      const std::size_t f = p % fast;
      const std::size_t e = std::min(p0 + len, (l + 1) * fast);
      segments.push_back({p - p0, e - p0, l, f});
      p = e;
    }

    std::vector<T> acc(ob * tn, T(0));
    std::vector<T> block(ti * ldb);
    // Input channels spatially coupled to this output tile.
    const std::size_t grp_lo = g.group_of_output(o0) * cig;
    const std::size_t grp_hi = (g.group_of_output(o0 + ob - 1) + 1) * cig;

    for (std::size_t i0 = 0; i0 < g.c_in; i0 += ti) {
      const std::size_t ib = std::min(ti, g.c_in - i0);
      const bool touches_groups = i0 < grp_hi && i0 + ib > grp_lo;
      if (g.coupling == Coupling::Grouped && !touches_groups) continue;

      // Fetch the t_i x t_n input block and its two boundary scalars per row.
      for (std::size_t ii = 0; ii < ib; ++ii) {
        const T* src = xb + (i0 + ii) * n;
        T* dst = block.data() + ii * ldb;
        dst[0] = p0 > 0 ? src[p0 - 1] : T(0);
        std::copy_n(src + p0, len, dst + 1);
        dst[len + 1] = p0 + len < n ? src[p0 + len] : T(0);
      }

      if (g.coupling == Coupling::Lean) {
        gemm::nn(ob, len, ib, spec.pointwise.data.data() + o0 * g.c_in + i0, g.c_in,
                 block.data() + 1, ldb, acc.data(), tn);
      } else {
        for (std::size_t oo = 0; oo < ob; ++oo) {
          const std::size_t glo = g.group_of_output(o0 + oo) * cig;
          const std::size_t lo = std::max(i0, glo);
          const std::size_t hi = std::min(i0 + ib, glo + cig);
          T* a = acc.data() + oo * tn;
          for (std::size_t i = lo; i < hi; ++i) {
            const T w = spec.pointwise(o0 + oo, i % cig);
            const T* bi = block.data() + (i - i0) * ldb + 1;
            for (std::size_t p = 0; p < len; ++p) a[p] += w * bi[p];
          }
        }
      }

      if (boffs.empty() || !touches_groups) continue;
      for (std::size_t oo = 0; oo < ob; ++oo) {
        const std::size_t o = o0 + oo;
        const std::size_t glo = g.group_of_output(o) * cig;
        const std::size_t lo = std::max(i0, glo);
        const std::size_t hi = std::min(i0 + ib, glo + cig);
        T* a = acc.data() + oo * tn;
        for (std::size_t i = lo; i < hi; ++i) {
          const T* bi = block.data() + (i - i0) * ldb + 1;  // bi[-1] and bi[len] are the boundary values
          const T* plane = xb + i * n;
          for (std::size_t q = 0; q < boffs.size(); ++q) {
            const T w = spec.tap(o, i, q);
            const auto d = boffs[q];
            for (const Segment& s : segments) {
              // Positions whose neighbour along the line stays inside the plane.
              std::size_t begin = s.begin;
              std::size_t end = s.end;
              if (d.d_fast < 0 && s.fast0 == 0) ++begin;
              if (d.d_fast > 0 && s.fast0 + (s.end - s.begin) == fast) --end;
              if (begin >= end) continue;
              if (d.d_line == 0) {
                const T* src = bi + d.d_fast;
                for (std::size_t p = begin; p < end; ++p) a[p] += w * src[p];
              } else {
                const long nl = long(s.line) + d.d_line;
                if (nl < 0 || nl >= long(lines)) continue;
                // Position p sits at fast index s.fast0 + (p - s.begin).
                const long base = nl * long(fast) + long(s.fast0) - long(s.begin) + d.d_fast;
                for (std::size_t p = begin; p < end; ++p) a[p] += w * plane[base + long(p)];
              }
            }
          }
        }
      }
    }

    for (std::size_t oo = 0; oo < ob; ++oo) {
      T* dst = out.plane(b, o0 + oo).data();
      const T* a = acc.data() + oo * tn;
      if (!transposed_write) {
        std::copy_n(a, len, dst + p0);
        continue;
      }
      // Input (line l, fast f) lands at output offset f * lines + l.
      for (const Segment& s : segments)
        for (std::size_t p = s.begin; p < s.end; ++p)
          dst[(s.fast0 + (p - s.begin)) * lines + s.line] = a[p];
    }
  });
  return out;
}

/// Pointwise GEMM followed by a separate grouped spatial pass that re-reads
/// the input and accumulates into the output. This is the unfused baseline
/// of applying the 1x1 and the (depth-wise) spatial operator one after the
/// other.
template <typename T>
FeatureMap<T> apply_split(const LeanConvSpec<T>& spec, const FeatureMap<T>& x) {
  detail::check_input(spec, x);
  const ConvGeometry& g = spec.geometry;
  const std::size_t n = x.plane_size();
  const std::size_t cig = g.in_per_group();
  const std::size_t cog = g.out_per_group();
  const std::size_t lines = x.line_count();
  const std::size_t fast = x.fast_extent();
  std::vector<detail::BufferOffset> boffs;
  for (const Offset& q : off_center_offsets(g.stencil)) boffs.push_back(detail::to_buffer(q, x.layout()));
  FeatureMap<T> out(x.batch(), g.c_out, x.height(), x.width(), x.layout());

  parallel_for(x.batch(), [&](std::size_t b) {
    const T* xb = x.plane(b, 0).data();
    T* yb = out.plane(b, 0).data();
    if (g.coupling == Coupling::Lean) {
      gemm::nn(g.c_out, n, g.c_in, spec.pointwise.data.data(), g.c_in, xb, n, yb, n);
    } else {
      for (std::size_t k = 0; k < g.groups; ++k)
        gemm::nn(cog, n, cig, spec.pointwise.data.data() + k * cog * cig, cig, xb + k * cig * n, n,
                 yb + k * cog * n, n);
    }
    // Direct grouped spatial pass.
    for (std::size_t o = 0; o < g.c_out; ++o) {
      T* dst = yb + o * n;
      const std::size_t glo = g.group_of_output(o) * cig;
      for (std::size_t i = glo; i < glo + cig; ++i) {
        const T* src = xb + i * n;
        for (std::size_t q = 0; q < boffs.size(); ++q) {
          const T w = spec.tap(o, i, q);
          const auto d = boffs[q];
          for (std::size_t l = 0; l < lines; ++l) {
            const long sl = long(l) + d.d_line;
            if (sl < 0 || sl >= long(lines)) continue;
            const std::size_t f_lo = d.d_fast < 0 ? 1 : 0;
            const std::size_t f_hi = d.d_fast > 0 ? fast - 1 : fast;
            const long base = sl * long(fast) + d.d_fast;
            T* r = dst + l * fast;
            for (std::size_t f = f_lo; f < f_hi; ++f) r[f] += w * src[base + long(f)];
          }
        }
      }
    }
  });
  return out;
}

struct KernelOptions {
  KernelPath path = KernelPath::Auto;
  TileConfig tile{};
  /// Auto mode: group blocks with at most this many input channels use the
  /// fused kernel, larger ones the shift/GEMM kernel.
  std::size_t fused_max_group = 8;
};

/// Path that Auto mode picks for this operator and input layout.
template <typename T>
KernelPath select_path(const LeanConvSpec<T>& spec, Layout layout, const KernelOptions& opt) {
  if (opt.path != KernelPath::Auto) return opt.path;
  const ConvGeometry& g = spec.geometry;
  if (g.stencil.is_three() && layout != detail::aligned_layout(g.stencil.direction)) {
    return KernelPath::ShiftIm2col;
  }
  if (g.stencil.is_three()) return KernelPath::FusedTiled;
  return g.in_per_group() <= opt.fused_max_group ? KernelPath::FusedTiled : KernelPath::ShiftIm2col;
}

template <typename T>
FeatureMap<T> apply(const LeanConvSpec<T>& spec, const FeatureMap<T>& x, const KernelOptions& opt = {}) {
  switch (select_path(spec, x.layout(), opt)) {
    case KernelPath::Reference:
      return apply_reference(spec, x);
    case KernelPath::ShiftIm2col:
      return apply_shift_im2col(spec, x);
    case KernelPath::FusedTiled:
      return apply_fused_tiled(spec, x, opt.tile);
    case KernelPath::Auto:
      break;
  }
  throw std::logic_error("unresolved kernel path");
}

}  // namespace leanconv
