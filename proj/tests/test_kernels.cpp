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

#include <gtest/gtest.h>

#include "leanconv/kernels/backward.hpp"
#include "leanconv/kernels/benchmark.hpp"
#include "leanconv/ops/dense_operator.hpp"
#include "leanconv/ops/random_spec.hpp"
#include "test_util.hpp"

using namespace leanconv;
using leanconv::testutil::max_rel_err;

namespace {

std::vector<ConvGeometry> geometry_cases() {
  return {
      {4, 4, 1, StencilKind::full9()},
      {8, 8, 8, StencilKind::full9()},
      {6, 12, 3, StencilKind::five()},
      {12, 6, 2, StencilKind::five()},
      {8, 8, 4, StencilKind::three(Direction::Horizontal)},
      {8, 8, 8, StencilKind::three(Direction::Vertical)},
      {5, 7, 1, StencilKind::pointwise()},
      {20, 20, 1, StencilKind::five()},
      {8, 8, 8, StencilKind::full9(), Coupling::Grouped},
      {12, 24, 4, StencilKind::five(), Coupling::Grouped},
  };
}

Layout natural_layout(const ConvGeometry& g) {
  return g.stencil.is_three() ? detail::aligned_layout(g.stencil.direction) : Layout::WidthFastest;
}

// Textbook 3x3 cross-correlation with zero padding.
FeatureMap<double> conv3x3(const std::vector<double>& k, const FeatureMap<double>& x) {
  FeatureMap<double> y(x.batch(), 1, x.height(), x.width());
  for (long r = 0; r < long(x.height()); ++r)
    for (long c = 0; c < long(x.width()); ++c) {
      double s = 0;
      for (long a = -1; a <= 1; ++a)
        for (long b = -1; b <= 1; ++b) {
          const long rr = r + a, cc = c + b;
          if (rr < 0 || cc < 0 || rr >= long(x.height()) || cc >= long(x.width())) continue;
          s += k[std::size_t((a + 1) * 3 + b + 1)] * x.at(0, 0, std::size_t(rr), std::size_t(cc));
        }
      y.at(0, 0, std::size_t(r), std::size_t(c)) = s;
    }
  return y;
}

double inner(const FeatureMap<double>& a, const FeatureMap<double>& b) {
  double s = 0;
  for (std::size_t n = 0; n < a.batch(); ++n)
    for (std::size_t c = 0; c < a.channels(); ++c)
      for (std::size_t y = 0; y < a.height(); ++y)
        for (std::size_t x = 0; x < a.width(); ++x) s += a.at(n, c, y, x) * b.at(n, c, y, x);
  return s;
}

}  // namespace

TEST(Kernels, PathsAgreeWithReference64) {
  Rng rng(21);
  for (const auto& g : geometry_cases()) {
    const auto s = random_spec<double>(g, rng);
    for (auto [h, w] : {std::pair{1u, 1u}, {5u, 7u}, {9u, 4u}, {16u, 16u}}) {
      const auto x = random_map<double>({2, g.c_in, h, w}, natural_layout(g), rng);
      const auto ref = apply_reference(s, x);
      EXPECT_LT(max_rel_err(apply_shift_im2col(s, x), ref), 1e-10) << to_string(g.stencil);
      EXPECT_LT(max_rel_err(apply_fused_tiled(s, x), ref), 1e-10) << to_string(g.stencil);
      EXPECT_LT(max_rel_err(apply_split(s, x), ref), 1e-10) << to_string(g.stencil);
      EXPECT_LT(max_rel_err(apply(s, x), ref), 1e-10);
    }
  }
}

TEST(Kernels, PathsAgreeWithReference32) {
  Rng rng(22);
  for (const auto& g : geometry_cases()) {
    const auto s = random_spec<float>(g, rng);
    const auto x = random_map<float>({2, g.c_in, 12, 10}, natural_layout(g), rng);
    const auto ref = apply_reference(s, x);
    EXPECT_LT(max_rel_err(apply_shift_im2col(s, x), ref), 1e-4);
    EXPECT_LT(max_rel_err(apply_fused_tiled(s, x), ref), 1e-4);
    EXPECT_LT(max_rel_err(apply_split(s, x), ref), 1e-4);
  }
}

TEST(Kernels, ReferenceMatchesDenseOperator) {
  Rng rng(23);
  for (const auto& g : geometry_cases()) {
    const auto s = random_spec<double>(g, rng);
    const auto x = random_map<double>({1, g.c_in, 6, 5}, Layout::WidthFastest, rng);
    EXPECT_LT(max_rel_err(apply_reference(s, x), apply_dense(materialize_dense(s, 6, 5), x, g.c_out)), 1e-12);
  }
}

TEST(Kernels, AwkwardTileSizes) {
  Rng rng(24);
  for (const auto& g : geometry_cases()) {
    const auto s = random_spec<double>(g, rng);
    const auto x = random_map<double>({1, g.c_in, 7, 9}, natural_layout(g), rng);
    const auto ref = apply_reference(s, x);
    for (TileConfig t : {TileConfig{1, 1, 1}, TileConfig{3, 5, 2}, TileConfig{1000, 64, 64}, TileConfig{8, 3, 7}})
      EXPECT_LT(max_rel_err(apply_fused_tiled(s, x, t), ref), 1e-10);
  }
  EXPECT_THROW(validate(TileConfig{0, 1, 1}), std::invalid_argument);
}

TEST(Kernels, LayoutNeutral) {
  Rng rng(25);
  for (auto st : {StencilKind::full9(), StencilKind::five(), StencilKind::three(Direction::Horizontal),
                  StencilKind::three(Direction::Vertical)}) {
    const auto s = random_spec<double>({6, 6, 3, st}, rng);
    const auto x = random_map<double>({2, 6, 8, 5}, Layout::WidthFastest, rng);
    const auto xt = x.with_layout(Layout::HeightFastest);
    EXPECT_LT(max_rel_err(apply_shift_im2col(s, xt), apply_shift_im2col(s, x)), 1e-12);
    EXPECT_LT(max_rel_err(apply_reference(s, xt), apply_reference(s, x)), 1e-12);
    EXPECT_LT(max_rel_err(apply(s, xt), apply(s, x)), 1e-12);
  }
}

TEST(Kernels, PointwiseOnlyIdentity) {
  Rng rng(26);
  auto s = LeanConvSpec<double>::zeros(5, 5, 1, StencilKind::pointwise());
  for (std::size_t i = 0; i < 5; ++i) s.pointwise(i, i) = 1;
  const auto x = random_map<double>({2, 5, 6, 7}, Layout::WidthFastest, rng);
  for (KernelPath p : {KernelPath::Reference, KernelPath::ShiftIm2col, KernelPath::FusedTiled}) {
    const auto y = apply(s, x, KernelOptions{p});
    EXPECT_EQ(max_rel_err(y, x), 0.0) << to_string(p);
  }
}

TEST(Kernels, Full9SingleChannelMatchesTextbook) {
  Rng rng(27);
  auto s = LeanConvSpec<double>::zeros(1, 1, 1, StencilKind::full9());
  std::vector<double> k(9);
  std::uniform_real_distribution<double> u(-1, 1);
  for (double& v : k) v = u(rng);
  s.pointwise(0, 0) = k[4];
  const auto offs = off_center_offsets(s.geometry.stencil);
  for (std::size_t q = 0; q < offs.size(); ++q)
    s.spatial(0, q) = k[std::size_t((offs[q].dy + 1) * 3 + offs[q].dx + 1)];
  const auto x = random_map<double>({1, 1, 7, 6}, Layout::WidthFastest, rng);
  const auto want = conv3x3(k, x);
  EXPECT_LT(max_rel_err(apply_reference(s, x), want), 1e-14);
  EXPECT_LT(max_rel_err(apply_fused_tiled(s, x), want), 1e-12);
  EXPECT_LT(max_rel_err(apply_shift_im2col(s, x), want), 1e-12);
}

TEST(Kernels, ThreePointOneDimensional) {
  // out(x) = c2 f(x-1) + a f(x) + c3 f(x+1)
  auto s = LeanConvSpec<double>::zeros(1, 1, 1, StencilKind::three(Direction::Horizontal));
  s.pointwise(0, 0) = 2;
  s.spatial(0, 0) = 3;
  s.spatial(0, 1) = 5;
  FeatureMap<double> x(1, 1, 1, 4);
  for (std::size_t i = 0; i < 4; ++i) x.at(0, 0, 0, i) = double(i + 1);
  const auto y = apply(s, x);
  const double f[6] = {0, 1, 2, 3, 4, 0};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(y.at(0, 0, 0, i), 3 * f[i] + 2 * f[i + 1] + 5 * f[i + 2]);
}

TEST(Kernels, FusedThreePointFlipsLayout) {
  Rng rng(28);
  const auto sh = random_spec<double>({4, 4, 4, StencilKind::three(Direction::Horizontal)}, rng);
  const auto xw = random_map<double>({1, 4, 5, 6}, Layout::WidthFastest, rng);
  const auto yh = apply_fused_tiled(sh, xw);
  EXPECT_EQ(yh.layout(), Layout::HeightFastest);
  EXPECT_LT(max_rel_err(yh, apply_reference(sh, xw)), 1e-12);
  EXPECT_THROW(apply_fused_tiled(sh, xw.with_layout(Layout::HeightFastest)), ShapeError);

  const auto sv = random_spec<double>({4, 4, 4, StencilKind::three(Direction::Vertical)}, rng);
  const auto yw = apply_fused_tiled(sv, yh);
  EXPECT_EQ(yw.layout(), Layout::WidthFastest);
  EXPECT_LT(max_rel_err(yw, apply_reference(sv, apply_reference(sh, xw))), 1e-12);
}

TEST(Kernels, SeparablePairEqualsOuterProductStencil) {
  // Horizontal [a b c] then vertical [d e f] on one channel equals the 3x3
  // kernel whose entry (r, c) is v[r] * h[c].
  const double h[3] = {0.5, -1.0, 2.0}, v[3] = {1.5, 0.25, -0.75};
  auto sh = LeanConvSpec<double>::zeros(1, 1, 1, StencilKind::three(Direction::Horizontal));
  sh.spatial(0, 0) = h[0];
  sh.pointwise(0, 0) = h[1];
  sh.spatial(0, 1) = h[2];
  auto sv = LeanConvSpec<double>::zeros(1, 1, 1, StencilKind::three(Direction::Vertical));
  sv.spatial(0, 0) = v[0];
  sv.pointwise(0, 0) = v[1];
  sv.spatial(0, 1) = v[2];
  std::vector<double> k(9);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) k[std::size_t(r * 3 + c)] = v[r] * h[c];
  Rng rng(29);
  const auto x = random_map<double>({1, 1, 6, 8}, Layout::WidthFastest, rng);
  const auto y = apply_fused_tiled(sv, apply_fused_tiled(sh, x));
  EXPECT_LT(max_rel_err(y, conv3x3(k, x)), 1e-12);
}

TEST(Kernels, AutoSelection) {
  const auto three = LeanConvSpec<double>::zeros(8, 8, 8, StencilKind::three(Direction::Horizontal));
  EXPECT_EQ(select_path(three, Layout::WidthFastest, {}), KernelPath::FusedTiled);
  EXPECT_EQ(select_path(three, Layout::HeightFastest, {}), KernelPath::ShiftIm2col);
  const auto wide = LeanConvSpec<double>::zeros(64, 64, 1, StencilKind::five());
  EXPECT_EQ(select_path(wide, Layout::WidthFastest, {}), KernelPath::ShiftIm2col);
  const auto dw = LeanConvSpec<double>::zeros(64, 64, 64, StencilKind::five());
  EXPECT_EQ(select_path(dw, Layout::WidthFastest, {}), KernelPath::FusedTiled);
  EXPECT_EQ(select_path(dw, Layout::WidthFastest, KernelOptions{KernelPath::Reference}), KernelPath::Reference);
  EXPECT_EQ(parse_kernel_path("fused"), KernelPath::FusedTiled);
  EXPECT_THROW(parse_kernel_path("nope"), std::invalid_argument);
}

TEST(Kernels, RejectsChannelMismatch) {
  const auto s = LeanConvSpec<double>::zeros(4, 4, 1, StencilKind::five());
  FeatureMap<double> x(1, 3, 4, 4);
  EXPECT_THROW(apply_reference(s, x), ShapeError);
  EXPECT_THROW(apply_shift_im2col(s, x), ShapeError);
  EXPECT_THROW(apply_fused_tiled(s, x), ShapeError);
}

TEST(Kernels, DeterministicAcrossThreadCounts) {
  Rng rng(30);
  const auto s = random_spec<double>({16, 16, 4, StencilKind::full9()}, rng);
  const auto x = random_map<double>({3, 16, 9, 9}, Layout::WidthFastest, rng);
  const auto dy = random_map<double>({3, 16, 9, 9}, Layout::WidthFastest, rng);
  const std::size_t saved = num_threads();
  set_num_threads(1);
  const auto y1 = apply(s, x);
  const auto g1 = backward(s, x, dy);
  set_num_threads(3);
  const auto y3 = apply(s, x);
  const auto g3 = backward(s, x, dy);
  set_num_threads(saved);
  EXPECT_EQ(y1.values().size(), y3.values().size());
  EXPECT_TRUE(std::equal(y1.values().begin(), y1.values().end(), y3.values().begin()));
  EXPECT_EQ(g1.d_pointwise, g3.d_pointwise);
  EXPECT_EQ(g1.d_spatial, g3.d_spatial);
}

TEST(Backward, AdjointIdentity) {
  Rng rng(31);
  for (const auto& g : geometry_cases()) {
    const auto s = random_spec<double>(g, rng);
    for (Layout l : {Layout::WidthFastest, Layout::HeightFastest}) {
      const auto x = random_map<double>({2, g.c_in, 6, 7}, l, rng);
      const auto u = random_map<double>({2, g.c_out, 6, 7}, l, rng);
      const double lhs = inner(apply_reference(s, x), u);
      const double rhs = inner(x, apply_transpose(s, u, l));
      EXPECT_LT(std::abs(lhs - rhs) / std::max(std::abs(lhs), 1.0), 1e-8);
    }
  }
}

TEST(Backward, TransposeMatchesDenseTranspose) {
  Rng rng(32);
  const auto s = random_spec<double>({6, 4, 2, StencilKind::full9()}, rng);
  const auto u = random_map<double>({1, 4, 5, 6}, Layout::WidthFastest, rng);
  const auto want = apply_dense_transpose(materialize_dense(s, 5, 6), u, 6);
  EXPECT_LT(max_rel_err(apply_transpose(s, u, Layout::WidthFastest), want), 1e-12);
}

TEST(Backward, FiniteDifference) {
  Rng rng(33);
  for (const auto& g : geometry_cases()) {
    auto s = random_spec<double>(g, rng);
    const auto x = random_map<double>({2, g.c_in, 5, 4}, Layout::WidthFastest, rng);
    const auto dy = random_map<double>({2, g.c_out, 5, 4}, Layout::WidthFastest, rng);
    const auto grads = backward(s, x, dy);
    // L = <K x, dy> is linear in weights and input, so central differences
    // are exact up to rounding.
    const double eps = 1e-5;
    auto loss = [&](const LeanConvSpec<double>& sp, const FeatureMap<double>& in) {
      return inner(apply_reference(sp, in), dy);
    };
    auto fd_check = [&](double& slot, double analytic, const FeatureMap<double>& in) {
      const double keep = slot;
      slot = keep + eps;
      const double up = loss(s, in);
      slot = keep - eps;
      const double dn = loss(s, in);
      slot = keep;
      const double num = (up - dn) / (2 * eps);
      EXPECT_LT(std::abs(num - analytic) / std::max({std::abs(num), std::abs(analytic), 1e-3}), 1e-6);
    };
    for (std::size_t k = 0; k < s.pointwise.size(); k += 3) fd_check(s.pointwise.data[k], grads.d_pointwise.data[k], x);
    for (std::size_t k = 0; k < s.spatial.size(); k += 2) fd_check(s.spatial.data[k], grads.d_spatial.data[k], x);
    FeatureMap<double> xp = x;
    for (std::size_t k = 0; k < xp.size(); k += 7) {
      const double keep = xp.values()[k];
      xp.values()[k] = keep + eps;
      const double up = loss(s, xp);
      xp.values()[k] = keep - eps;
      const double dn = loss(s, xp);
      xp.values()[k] = keep;
      const double num = (up - dn) / (2 * eps);
      const double an = grads.d_input.values()[k];
      EXPECT_LT(std::abs(num - an) / std::max({std::abs(num), std::abs(an), 1e-3}), 1e-6);
    }
  }
}

TEST(Backward, PointwiseGradientIsSummedOuterProduct) {
  Rng rng(34);
  const auto s = random_spec<double>({3, 4, 1, StencilKind::pointwise()}, rng);
  const auto x = random_map<double>({2, 3, 4, 5}, Layout::HeightFastest, rng);
  const auto dy = random_map<double>({2, 4, 4, 5}, Layout::WidthFastest, rng);
  const auto g = backward(s, x, dy);
  for (std::size_t o = 0; o < 4; ++o)
    for (std::size_t i = 0; i < 3; ++i) {
      double want = 0;
      for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t y = 0; y < 4; ++y)
          for (std::size_t w = 0; w < 5; ++w) want += dy.at(b, o, y, w) * x.at(b, i, y, w);
      EXPECT_NEAR(g.d_pointwise(o, i), want, 1e-12);
    }
}

TEST(Backward, ZeroOutputGradient) {
  Rng rng(35);
  const auto s = random_spec<double>({4, 4, 2, StencilKind::five()}, rng);
  const auto x = random_map<double>({2, 4, 5, 5}, Layout::WidthFastest, rng);
  FeatureMap<double> dy(2, 4, 5, 5);
  const auto g = backward(s, x, dy);
  for (double v : g.d_input.values()) EXPECT_EQ(v, 0.0);
  for (double v : g.d_pointwise.data) EXPECT_EQ(v, 0.0);
  for (double v : g.d_spatial.data) EXPECT_EQ(v, 0.0);
}

TEST(Benchmark, MedianAndTiming) {
  int calls = 0;
  const double t = median_latency([&] { ++calls; }, 5);
  EXPECT_EQ(calls, 6);
  EXPECT_GE(t, 0.0);
  const ConvGeometry g{8, 8, 8, StencilKind::five()};
  const auto r = benchmark_kernel<float>(g, {1, 8, 16, 16}, KernelPath::FusedTiled, 3);
  EXPECT_EQ(r.mults, mult_count(g, 1, 16, 16));
  EXPECT_GT(r.median_seconds, 0.0);
  EXPECT_GT(r.throughput(), 0.0);
  EXPECT_THROW(benchmark_kernel<float>(g, {1, 8, 16, 16}, KernelPath::FusedTiled, 2), std::invalid_argument);
}
