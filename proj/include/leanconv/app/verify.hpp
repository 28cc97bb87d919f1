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
#include <cstdint>
#include <string>
#include <vector>

#include "leanconv/kernels/backward.hpp"
#include "leanconv/kernels/kernels.hpp"
#include "leanconv/network/gradcheck.hpp"
#include "leanconv/ops/dense_operator.hpp"
#include "leanconv/ops/random_spec.hpp"

namespace leanconv {

// Exit codes of the verify command, one per suite category.
inline constexpr int kExitOracle = 2;
inline constexpr int kExitAdjoint = 3;
inline constexpr int kExitGradient = 4;
inline constexpr int kExitFixture = 5;

/// Worst error of one check family against its tolerance.
struct SuiteResult {
  std::string name;
  int exit_code = 0;
  double tolerance = 0;
  double worst = 0;
  std::string worst_case;
  std::size_t cases = 0;

  bool passed() const { return std::isfinite(worst) && worst < tolerance; }
  void record(double err, const std::string& label) {
    ++cases;
    if (std::isnan(err)) err = INFINITY;
    if (err >= worst) {
      worst = err;
      worst_case = label;
    }
  }
};

struct VerifyReport {
  std::vector<SuiteResult> suites;

  /// Zero when all suites pass, else the code of the first failing one.
  int exit_code() const {
    for (const auto& s : suites)
      if (!s.passed()) return s.exit_code;
    return 0;
  }
};

/// max |a - b| / max |b| over logical elements.
template <typename A, typename B>
double max_rel_diff(const FeatureMap<A>& a, const FeatureMap<B>& b) {
  if (a.shape() != b.shape()) return INFINITY;
  double num = 0, den = 0;
  for (std::size_t n = 0; n < a.batch(); ++n)
    for (std::size_t c = 0; c < a.channels(); ++c)
      for (std::size_t y = 0; y < a.height(); ++y)
        for (std::size_t x = 0; x < a.width(); ++x) {
          const double bv = double(b.at(n, c, y, x));
          num = std::max(num, std::abs(double(a.at(n, c, y, x)) - bv));
          den = std::max(den, std::abs(bv));
        }
  return den > 0 ? num / den : num;
}

template <typename T>
double inner(const FeatureMap<T>& a, const FeatureMap<T>& b) {
  double s = 0;
  for (std::size_t n = 0; n < a.batch(); ++n)
    for (std::size_t c = 0; c < a.channels(); ++c)
      for (std::size_t y = 0; y < a.height(); ++y)
        for (std::size_t x = 0; x < a.width(); ++x) s += double(a.at(n, c, y, x)) * double(b.at(n, c, y, x));
  return s;
}

struct OracleCase {
  ConvGeometry geom;
  Shape shape;
  Layout layout = Layout::WidthFastest;
};

inline std::string describe(const OracleCase& c) {
  return to_string(c.geom.stencil) + " g=" + std::to_string(c.geom.groups) + " " + to_string(c.geom.coupling) +
         " " + std::to_string(c.geom.c_in) + "->" + std::to_string(c.geom.c_out) + " " + to_string(c.shape) + " " +
         to_string(c.layout);
}

/// Case k cycles through the stencil kinds and the group choices
/// {1, 4, 8, c_in}; channel counts, batch, size and layout are drawn from
/// rng. Shapes stay within (4, 16, 16, 16).
inline OracleCase oracle_case(std::size_t k, Rng& rng) {
  static const StencilKind stencils[] = {StencilKind::full9(), StencilKind::five(),
                                         StencilKind::three(Direction::Horizontal),
                                         StencilKind::three(Direction::Vertical), StencilKind::pointwise()};
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  OracleCase c;
  c.geom.stencil = stencils[k % 5];
  const std::size_t rule = (k / 5) % 4;
  if (rule == 0) {
    c.geom.groups = 1;
    c.geom.c_in = pick(1, 16);
    c.geom.c_out = pick(1, 16);
  } else if (rule == 3) {
    c.geom.c_in = pick(1, 16);
    c.geom.groups = c.geom.c_in;
    c.geom.c_out = c.geom.c_in * pick(1, 16 / c.geom.c_in);
  } else {
    const std::size_t g = rule == 1 ? 4 : 8;
    c.geom.groups = g;
    c.geom.c_in = g * pick(1, 16 / g);
    c.geom.c_out = g * pick(1, 16 / g);
  }
  c.geom.coupling = pick(0, 3) == 0 ? Coupling::Grouped : Coupling::Lean;
  c.shape = Shape{pick(1, 4), c.geom.c_in, pick(1, 16), pick(1, 16)};
  c.layout = pick(0, 1) ? Layout::HeightFastest : Layout::WidthFastest;
  return c;
}

/// Input layout a path accepts: the fused 3-point kernel needs the layout
/// whose contiguous axis matches the stencil direction.
inline Layout path_layout(KernelPath p, const ConvGeometry& g, Layout wanted) {
  if (p == KernelPath::FusedTiled && g.stencil.is_three()) return detail::aligned_layout(g.stencil.direction);
  return wanted;
}

/// Every kernel path and the split application against the dense operator,
/// in 64-bit and in 32-bit.
inline void run_oracle_suite(VerifyReport& rep, std::size_t cases, std::uint64_t seed, double tol64, double tol32) {
  SuiteResult r64{"oracle-f64", kExitOracle, tol64};
  SuiteResult r32{"oracle-f32", kExitOracle, tol32};
  Rng rng(seed);
  const KernelPath paths[] = {KernelPath::Reference, KernelPath::ShiftIm2col, KernelPath::FusedTiled};
  for (std::size_t k = 0; k < cases; ++k) {
    const OracleCase c = oracle_case(k, rng);
    const auto spec = random_spec<double>(c.geom, rng);
    const auto x = random_map<double>(c.shape, c.layout, rng);
    const auto dense = apply_dense(materialize_dense(spec, c.shape.height, c.shape.width), x, c.geom.c_out);
    const auto spec32 = spec.cast<float>();
    const auto x32 = x.cast<float>();
    const std::string label = describe(c);
    for (KernelPath p : paths) {
      KernelOptions opt;
      opt.path = p;
      const Layout l = path_layout(p, c.geom, c.layout);
      r64.record(max_rel_diff(apply(spec, x.with_layout(l), opt), dense), label + " " + to_string(p));
      r32.record(max_rel_diff(apply(spec32, x32.with_layout(l), opt), dense), label + " " + to_string(p));
    }
    r64.record(max_rel_diff(apply_split(spec, x), dense), label + " split");
    r32.record(max_rel_diff(apply_split(spec32, x32), dense), label + " split");
  }
  rep.suites.push_back(r64);
  rep.suites.push_back(r32);
}

/// Layout of the adjoint probe vector, alternating so both layouts are mixed.
inline Layout pick_layout(std::size_t k) { return k % 2 ? Layout::HeightFastest : Layout::WidthFastest; }

/// <K x, u> = <x, K^T u>, and K^T against the dense transpose.
inline void run_adjoint_suite(VerifyReport& rep, std::size_t cases, std::uint64_t seed, double tol) {
  SuiteResult dot{"adjoint-identity", kExitAdjoint, tol};
  SuiteResult dense{"adjoint-dense", kExitAdjoint, tol};
  Rng rng(seed + 1);
  for (std::size_t k = 0; k < cases; ++k) {
    const OracleCase c = oracle_case(k, rng);
    const auto spec = random_spec<double>(c.geom, rng);
    const auto x = random_map<double>(c.shape, c.layout, rng);
    const auto u = random_map<double>(Shape{c.shape.batch, c.geom.c_out, c.shape.height, c.shape.width},
                                      pick_layout(k), rng);
    const auto kx = apply(spec, x);
    const auto ktu = apply_transpose(spec, u, c.layout);
    const double lhs = inner(kx, u), rhs = inner(x, ktu);
    const double scale = std::sqrt(inner(kx, kx) * inner(u, u));
    dot.record(std::abs(lhs - rhs) / std::max(scale, 1e-300), describe(c));
    const auto m = materialize_dense(spec, c.shape.height, c.shape.width);
    dense.record(max_rel_diff(ktu, apply_dense_transpose(m, u, c.geom.c_in)), describe(c));
  }
  rep.suites.push_back(dot);
  rep.suites.push_back(dense);
}

/// Weight gradients of single operators (loss <K x, u>, which is linear in
/// the weights, so a coarse step `op_step` is exact up to roundoff) and
/// full-network gradients, both against central differences.
inline void run_gradient_suite(VerifyReport& rep, std::size_t cases, std::uint64_t seed, double tol,
                               double step = 1e-5, double floor = 1e-5, double op_step = 1e-3) {
  SuiteResult op{"gradient-operator", kExitGradient, tol};
  Rng rng(seed + 2);
  for (std::size_t k = 0; k < cases; ++k) {
    OracleCase c = oracle_case(k, rng);
    c.shape.height = std::min<std::size_t>(c.shape.height, 6);
    c.shape.width = std::min<std::size_t>(c.shape.width, 6);
    auto spec = random_spec<double>(c.geom, rng);
    const auto x = random_map<double>(c.shape, c.layout, rng);
    const auto u = random_map<double>(Shape{c.shape.batch, c.geom.c_out, c.shape.height, c.shape.width}, c.layout, rng);
    const GradBundle<double> g = backward(spec, x, u);
    auto loss = [&] { return inner(apply(spec, x), u); };
    double worst = 0;
    for (auto [w, dw] : {std::pair{&spec.pointwise, &g.d_pointwise}, std::pair{&spec.spatial, &g.d_spatial}}) {
      for (std::size_t e = 0; e < w->size(); ++e) {
        const double keep = w->data[e];
        w->data[e] = keep + op_step;
        const double up = loss();
        w->data[e] = keep - op_step;
        const double down = loss();
        w->data[e] = keep;
        const double num = (up - down) / (2 * op_step);
        const double an = dw->data[e];
        worst = std::max(worst, std::abs(an - num) / std::max({std::abs(an), std::abs(num), floor}));
      }
    }
    op.record(worst, describe(c));
  }
  rep.suites.push_back(op);

  SuiteResult net{"gradient-network", kExitGradient, tol};
  const StencilKind stencils[] = {StencilKind::full9(), StencilKind::five(), StencilKind::three(Direction::Horizontal),
                                  StencilKind::pointwise()};
  for (StencilKind s : stencils) {
    for (GroupRule gr : {GroupRule::fixed(1), GroupRule::fixed(8), GroupRule::depthwise()}) {
      NetworkConfig cfg;
      cfg.name = "gradcheck";
      cfg.widths = {8};
      cfg.steps = {2};
      cfg.strides = {1};
      cfg.stencil = s;
      cfg.groups = gr;
      auto p = gradcheck_point(cfg, 4, Shape{2, 3, 8, 8}, seed);
      const auto res = gradient_check(p.net, p.images, p.labels, step, floor);
      net.record(res.max_rel_err, to_string(s) + " groups=" + to_string(gr) + " " + res.worst);
    }
  }
  rep.suites.push_back(net);
}

/// Hand-built 5-point operator on two channels: output 0 is the central
/// first difference along x of input 0, output 1 the second difference of
/// input 1. On a ramp and a parabola both are exact at interior pixels.
/// `perturb` is added to one tap to check that the suite notices.
inline LeanConvSpec<double> derivative_fixture(double perturb = 0) {
  auto s = LeanConvSpec<double>::zeros(2, 2, 2, StencilKind::five());
  // five-point off-center order: up, left, right, down
  s.spatial(0, 1) = -0.5;
  s.spatial(0, 2) = 0.5 + perturb;
  s.pointwise(1, 1) = -2.0;
  s.spatial(1, 1) = 1.0;
  s.spatial(1, 2) = 1.0;
  return s;
}

inline void run_fixture_suite(VerifyReport& rep, double perturb, double tol = 1e-12) {
  SuiteResult r{"fixture-derivatives", kExitFixture, tol};
  const auto spec = derivative_fixture(perturb);
  constexpr std::size_t H = 9, W = 13;
  FeatureMap<double> x(1, 2, H, W);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t w = 0; w < W; ++w) {
      x.at(0, 0, y, w) = 3.0 * double(w) - 0.5 * double(y);
      x.at(0, 1, y, w) = 0.25 * double(w) * double(w) + double(y);
    }
  for (KernelPath p : {KernelPath::Reference, KernelPath::ShiftIm2col, KernelPath::FusedTiled}) {
    for (Layout l : {Layout::WidthFastest, Layout::HeightFastest}) {
      KernelOptions opt;
      opt.path = p;
      const auto out = apply(spec, x.with_layout(l), opt);
      double err = 0;
      for (std::size_t y = 1; y + 1 < H; ++y)
        for (std::size_t w = 1; w + 1 < W; ++w) {
          err = std::max(err, std::abs(out.at(0, 0, y, w) - 3.0));
          err = std::max(err, std::abs(out.at(0, 1, y, w) - 0.5));
        }
      r.record(err, std::string(to_string(p)) + " " + to_string(l));
    }
  }
  rep.suites.push_back(r);
}

struct VerifyOptions {
  std::size_t cases = 240;
  std::uint64_t seed = 1;
  double tol64 = 1e-10;
  double tol32 = 1e-4;
  double grad_tol = 1e-5;
  double perturb = 0;
};

inline VerifyReport run_verify(const VerifyOptions& o) {
  VerifyReport rep;
  run_oracle_suite(rep, o.cases, o.seed, o.tol64, o.tol32);
  run_adjoint_suite(rep, o.cases, o.seed, o.tol64);
  run_gradient_suite(rep, std::max<std::size_t>(1, o.cases / 4), o.seed, o.grad_tol);
  run_fixture_suite(rep, o.perturb);
  return rep;
}

}  // namespace leanconv
