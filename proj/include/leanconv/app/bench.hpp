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

#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "leanconv/kernels/benchmark.hpp"

namespace leanconv {

struct SweepPoint {
  std::size_t channels = 0;
  std::size_t size = 0;
};

/// Channels double and the map side halves from (c_min, size) up to c_max.
inline std::vector<SweepPoint> sweep_points(std::size_t c_min, std::size_t c_max, std::size_t size) {
  std::vector<SweepPoint> pts;
  for (std::size_t c = c_min, s = size; c <= c_max && s > 0; c *= 2, s /= 2) pts.push_back({c, s});
  return pts;
}

/// Median latencies at one sweep point, in seconds.
struct BenchRow {
  SweepPoint point;
  std::string stencil;
  TileConfig tile;
  double baseline = 0;  // fully-coupled 3x3, shift/GEMM path
  double fused = 0;     // lean operator with depth-wise spatial part, fused kernel
  double split = 0;     // same operator, pointwise GEMM then a separate depth-wise pass
  double chained = 0;   // 1x1 conv followed by a depth-wise 3x3 conv
  std::uint64_t baseline_mults = 0;
  std::uint64_t lean_mults = 0;

  bool fused_not_slower() const { return fused <= split; }
};

struct BenchOptions {
  std::size_t batch = 1;
  int repeats = 5;
  bool probe_tiles = true;
  std::uint64_t seed = 1;
  StencilKind stencil = StencilKind::five();
};

/// Times one sweep point in 32-bit. Every timing is one warm-up plus
/// `repeats` measured runs, median reported.
inline BenchRow bench_point(const SweepPoint& p, const BenchOptions& o) {
  using T = float;
  const std::size_t c = p.channels;
  const Shape shape{o.batch, c, p.size, p.size};
  BenchRow row;
  row.point = p;
  row.stencil = to_string(o.stencil);
  Rng rng(o.seed);

  const ConvGeometry lean_geom{c, c, c, o.stencil, Coupling::Lean};
  const ConvGeometry base_geom{c, c, 1, StencilKind::full9(), Coupling::Lean};
  const ConvGeometry pw_geom{c, c, 1, StencilKind::pointwise(), Coupling::Lean};
  const ConvGeometry dw_geom{c, c, c, StencilKind::full9(), Coupling::Grouped};
  row.baseline_mults = mult_count(base_geom, o.batch, p.size, p.size);
  row.lean_mults = mult_count(lean_geom, o.batch, p.size, p.size);

  Layout layout = Layout::WidthFastest;
  if (o.stencil.is_three()) layout = detail::aligned_layout(o.stencil.direction);
  const auto x = random_map<T>(shape, layout, rng);
  const auto lean = random_spec<T>(lean_geom, rng);
  const auto base = random_spec<T>(base_geom, rng);
  const auto pw = random_spec<T>(pw_geom, rng);
  const auto dw = random_spec<T>(dw_geom, rng);

  row.tile = o.probe_tiles ? probe_tile_config<T>(lean_geom, shape) : TileConfig{};
  KernelOptions fused_opt{KernelPath::FusedTiled, row.tile};
  KernelOptions shift_opt{KernelPath::ShiftIm2col, {}};
  KernelOptions auto_opt{};
  volatile T sink = 0;
  auto keep = [&](const FeatureMap<T>& y) { sink = sink + y.values()[0]; };

  row.baseline = median_latency([&] { keep(apply(base, x, shift_opt)); }, o.repeats);
  row.fused = median_latency([&] { keep(apply(lean, x, fused_opt)); }, o.repeats);
  row.split = median_latency([&] { keep(apply_split(lean, x)); }, o.repeats);
  row.chained = median_latency([&] { keep(apply(dw, apply(pw, x, auto_opt), auto_opt)); }, o.repeats);
  return row;
}

inline std::vector<BenchRow> run_bench(const std::vector<SweepPoint>& pts, const BenchOptions& o,
                                       const std::function<void(const BenchRow&)>& on_row = {}) {
  std::vector<BenchRow> rows;
  for (const auto& p : pts) {
    rows.push_back(bench_point(p, o));
    if (on_row) on_row(rows.back());
  }
  return rows;
}

inline std::size_t fused_wins(const std::vector<BenchRow>& rows) {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.fused_not_slower();
  return n;
}

/// Latencies relative to the fully-coupled baseline, which is therefore 1.
inline std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream s;
  s << "channels,size,stencil,tile_n,tile_o,tile_i,baseline_s,fused_s,split_s,chained_s,"
       "rel_baseline,rel_fused,rel_split,rel_chained,baseline_mults,lean_mults\n";
  s.precision(6);
  for (const auto& r : rows) {
    s << r.point.channels << ',' << r.point.size << ',' << r.stencil << ',' << r.tile.t_n << ',' << r.tile.t_o << ','
      << r.tile.t_i << ',' << r.baseline << ',' << r.fused << ',' << r.split << ',' << r.chained << ','
      << r.baseline / r.baseline << ',' << r.fused / r.baseline << ',' << r.split / r.baseline << ','
      << r.chained / r.baseline << ',' << r.baseline_mults << ',' << r.lean_mults << '\n';
  }
  return s.str();
}

}  // namespace leanconv
