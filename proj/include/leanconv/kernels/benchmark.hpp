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
#include <chrono>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "leanconv/kernels/kernels.hpp"
#include "leanconv/ops/cost.hpp"
#include "leanconv/ops/random_spec.hpp"

namespace leanconv {

/// Median wall-clock seconds of fn() over `repeats` runs after one warm-up.
template <typename Fn>
double median_latency(Fn&& fn, int repeats) {
  if (repeats < 1) throw std::invalid_argument("median_latency: repeats must be >= 1");
  fn();
  std::vector<double> t;
  t.reserve(repeats);
  for (int r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto stop = std::chrono::steady_clock::now();
    t.push_back(std::chrono::duration<double>(stop - start).count());
  }
  std::sort(t.begin(), t.end());
  const std::size_t m = t.size() / 2;
  return t.size() % 2 ? t[m] : 0.5 * (t[m - 1] + t[m]);
}

struct KernelTiming {
  double median_seconds = 0;
  std::uint64_t mults = 0;
  /// Multiplications per second.
  double throughput() const { return median_seconds > 0 ? double(mults) / median_seconds : 0.0; }
};

/// Times one kernel path on freshly randomized weights and input.
template <typename T>
KernelTiming benchmark_kernel(const ConvGeometry& geom, const Shape& shape, KernelPath path, int repeats,
                              std::uint64_t seed = 1, const TileConfig& tile = {}) {
  if (repeats < 3) throw std::invalid_argument("benchmark_kernel: repeats must be >= 3");
  if (path == KernelPath::Auto) throw std::invalid_argument("benchmark_kernel: pick a concrete path");
  Rng rng(seed);
  const auto spec = random_spec<T>(geom, rng);
  Layout layout = Layout::WidthFastest;
  if (geom.stencil.is_three() && geom.stencil.direction == Direction::Vertical) layout = Layout::HeightFastest;
  const auto x = random_map<T>(Shape{shape.batch, geom.c_in, shape.height, shape.width}, layout, rng);
  KernelOptions opt;
  opt.path = path;
  opt.tile = tile;
  volatile T sink = 0;
  const double t = median_latency(
      [&] {
        const auto y = apply(spec, x, opt);
        sink = sink + y.values()[0];
      },
      repeats);
  return {t, mult_count(geom, shape.batch, shape.height, shape.width)};
}

/// Picks the fastest tile configuration from a small grid for the given
/// operator and shape. Results are machine dependent; callers that need
/// bitwise reproducibility across runs should pin a TileConfig instead.
template <typename T>
TileConfig probe_tile_config(const ConvGeometry& geom, const Shape& shape, int repeats = 3) {
  TileConfig best{};
  double best_t = std::numeric_limits<double>::infinity();
  for (std::size_t tn : {64u, 128u, 256u, 512u}) {
    for (std::size_t to : {16u, 32u, 64u, 128u}) {
      for (std::size_t ti : {16u, 32u, 64u, 128u}) {
        const TileConfig cfg{tn, to, ti};
        const double t = benchmark_kernel<T>(geom, shape, KernelPath::FusedTiled, repeats, 7, cfg).median_seconds;
        if (t < best_t) {
          best_t = t;
          best = cfg;
        }
      }
    }
  }
  return best;
}

}  // namespace leanconv
