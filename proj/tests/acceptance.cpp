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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances are fixed below.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "leanconv/app/bench.hpp"
#include "leanconv/app/run_config.hpp"
#include "leanconv/app/train_run.hpp"
#include "leanconv/app/verify.hpp"
#include "leanconv/network/probe.hpp"

using namespace leanconv;

namespace {

constexpr double kOracleTol64 = 1e-10;
constexpr double kOracleTol32 = 1e-4;
constexpr std::size_t kOracleCases = 240;
constexpr double kGradTol = 1e-5;
constexpr double kGradStep = 1e-5;
constexpr double kAccountingTarget = 2.7e6;
constexpr double kAccountingBand = 0.02;
constexpr double kSeparableTol = 1e-10;
constexpr double kDerivativeTol = 1e-12;
constexpr std::size_t kBenchMinWins = 4;
constexpr std::size_t kOverfitEpochs = 200;
constexpr double kSyntheticTarget = 0.95;
constexpr double kProbeCeiling = 0.60;
constexpr double kFixtureBand = 0.02;
constexpr double kCifarGap = 0.03;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int n, const Outcome& o, double seconds) {
  std::printf("CRITERION %d: %s  %s  [%.1f s]\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str(), seconds);
  std::fflush(stdout);
  failures += !o.pass;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1 -----------------------------------------------------------------------
Outcome oracle_equivalence() {
  VerifyReport rep;
  run_oracle_suite(rep, kOracleCases, 2024, kOracleTol64, kOracleTol32);
  Outcome o;
  for (const auto& s : rep.suites) {
    o.pass = o.pass && s.passed();
    o.detail += s.name + " worst " + fmt("%.2e", s.worst) + " over " + std::to_string(s.cases) + " checks; ";
  }
  o.detail += std::to_string(kOracleCases) + " random operators";
  return o;
}

// 2 -----------------------------------------------------------------------
Outcome gradient_correctness() {
  Outcome o;
  double worst = 0;
  std::string where;
  std::size_t checked = 0;
  for (StencilKind s : {StencilKind::full9(), StencilKind::five(), StencilKind::three(Direction::Horizontal),
                        StencilKind::pointwise()}) {
    for (GroupRule g : {GroupRule::fixed(1), GroupRule::fixed(4), GroupRule::depthwise()}) {
      NetworkConfig cfg;
      cfg.name = "gradcheck";
      cfg.widths = {8};
      cfg.steps = {2};
      cfg.strides = {1};
      cfg.stencil = s;
      cfg.groups = g;
      auto p = gradcheck_point(cfg, 4, Shape{2, 3, 8, 8});
      const auto r = gradient_check(p.net, p.images, p.labels, kGradStep);
      checked += r.checked;
      if (r.max_rel_err >= worst) {
        worst = r.max_rel_err;
        where = to_string(s) + "/" + to_string(g) + " " + r.worst;
      }
    }
  }
  o.pass = worst < kGradTol;
  o.detail = "max rel err " + fmt("%.2e", worst) + " (" + where + ") over " + std::to_string(checked) +
             " parameters, 12 networks";
  return o;
}

// 3 -----------------------------------------------------------------------
Outcome count_formulas() {
  Outcome o;
  std::size_t formula_checks = 0, dense_checks = 0;
  for (std::size_t c_in : {8u, 16u, 32u, 64u, 96u})
    for (std::size_t c_out : {8u, 16u, 32u, 64u, 96u})
      for (std::size_t g = 1; g <= std::min(c_in, c_out); ++g) {
        if (c_in % g || c_out % g) continue;
        const auto five = param_count(ConvGeometry{c_in, c_out, g, StencilKind::five(), Coupling::Lean});
        // (1 + 4/g) c_in c_out, compared without division
        if (five * g != c_in * c_out * (g + 4)) o.pass = false;
        ++formula_checks;
      }
  for (std::size_t c : {1u, 3u, 16u, 64u, 256u}) {
    if (param_count(ConvGeometry{c, c, 1, StencilKind::full9(), Coupling::Lean}) != 9 * c * c) o.pass = false;
    ++formula_checks;
  }
  // dense operator: nonzeros against nnz_count, distinct weights against param_count
  Rng rng(33);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (StencilKind s : {StencilKind::full9(), StencilKind::five(), StencilKind::three(Direction::Horizontal),
                        StencilKind::three(Direction::Vertical), StencilKind::pointwise()})
    for (auto [ci, co, g] : {std::tuple{4u, 4u, 1u}, std::tuple{4u, 8u, 2u}, std::tuple{8u, 8u, 8u},
                             std::tuple{6u, 3u, 3u}})
      for (Coupling cp : {Coupling::Lean, Coupling::Grouped})
        for (auto [h, w] : {std::pair{5u, 5u}, std::pair{3u, 7u}}) {
          const ConvGeometry geom{ci, co, g, s, cp};
          auto spec = LeanConvSpec<double>::zeros(geom);
          for (double& v : spec.pointwise.data) v = u(rng);
          for (double& v : spec.spatial.data) v = u(rng);
          const auto m = materialize_dense(spec, h, w);
          std::set<double> distinct;
          for (double v : m.data)
            if (v != 0) distinct.insert(v);
          if (count_nonzeros(m) != nnz_count(geom, h, w)) o.pass = false;
          if (distinct.size() != param_count(geom)) o.pass = false;
          ++dense_checks;
        }
  o.detail = std::to_string(formula_checks) + " formula checks, " + std::to_string(dense_checks) +
             " materialized operators (nnz and distinct weights), exact";
  return o;
}

// 4 -----------------------------------------------------------------------
Outcome accounting() {
  Outcome o;
  NetworkConfig cfg = preset("res18");
  std::uint64_t params[3], mults[3];
  const StencilKind kinds[3] = {StencilKind::full9(), StencilKind::five(), StencilKind::three(Direction::Horizontal)};
  for (int k = 0; k < 3; ++k) {
    cfg.stencil = kinds[k];
    const auto nc = network_cost(cfg, 10, 32, 32);
    params[k] = nc.params.weights();
    mults[k] = nc.mults;
    const auto reg = registry_totals(build_network<float>(cfg, 10));
    if (reg.weights() != nc.params.weights() || reg.all() != nc.params.all()) o.pass = false;
  }
  const double rel = std::abs(double(params[0]) - kAccountingTarget) / kAccountingTarget;
  o.pass = o.pass && rel <= kAccountingBand;
  o.pass = o.pass && params[0] > params[1] && params[1] > params[2] && mults[0] > mults[1] && mults[1] > mults[2];
  o.detail = "res18 weights 9pt " + std::to_string(params[0]) + " (" + fmt("%+.2f%%", 100 * (double(params[0]) / kAccountingTarget - 1)) +
             " vs 2.7M), 5pt " + std::to_string(params[1]) + ", 3pt " + std::to_string(params[2]) + "; mults " +
             fmt("%.1fM", mults[0] / 1e6) + " > " + fmt("%.1fM", mults[1] / 1e6) + " > " + fmt("%.1fM", mults[2] / 1e6);
  return o;
}

// 5 -----------------------------------------------------------------------
// Direct 3x3 correlation with the composed kernel W[o][i][dy][dx] =
// sum_m v(o, m, dy) h(m, i, dx).
FeatureMap<double> composed_oracle(const LeanConvSpec<double>& hs, const LeanConvSpec<double>& vs,
                                   const FeatureMap<double>& x) {
  const std::size_t ci = hs.c_in(), cm = hs.c_out(), co = vs.c_out();
  auto h = [&](std::size_t m, std::size_t i, int dx) {
    if (dx == 0) return hs.alpha(m, i);
    if (!hs.geometry.in_group(m, i)) return 0.0;
    return hs.tap(m, i, dx < 0 ? 0 : 1);
  };
  auto v = [&](std::size_t o, std::size_t m, int dy) {
    if (dy == 0) return vs.alpha(o, m);
    if (!vs.geometry.in_group(o, m)) return 0.0;
    return vs.tap(o, m, dy < 0 ? 0 : 1);
  };
  std::vector<double> w(co * ci * 9, 0.0);
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t i = 0; i < ci; ++i)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          double s = 0;
          for (std::size_t m = 0; m < cm; ++m) s += v(o, m, dy) * h(m, i, dx);
          w[((o * ci + i) * 3 + std::size_t(dy + 1)) * 3 + std::size_t(dx + 1)] = s;
        }
  const long H = long(x.height()), W = long(x.width());
  FeatureMap<double> y(x.batch(), co, x.height(), x.width());
  for (std::size_t b = 0; b < x.batch(); ++b)
    for (std::size_t o = 0; o < co; ++o)
      for (long r = 0; r < H; ++r)
        for (long c = 0; c < W; ++c) {
          double s = 0;
          for (std::size_t i = 0; i < ci; ++i)
            for (int dy = -1; dy <= 1; ++dy)
              for (int dx = -1; dx <= 1; ++dx) {
                const long rr = r + dy, cc = c + dx;
                if (rr < 0 || rr >= H || cc < 0 || cc >= W) continue;
                s += w[((o * ci + i) * 3 + std::size_t(dy + 1)) * 3 + std::size_t(dx + 1)] *
                     x.at(b, i, std::size_t(rr), std::size_t(cc));
              }
          y.at(b, o, std::size_t(r), std::size_t(c)) = s;
        }
  return y;
}

Outcome separable_composition() {
  Outcome o;
  Rng rng(55);
  double worst = 0;
  std::size_t cases = 0;
  for (auto [ci, cm, co, gh, gv] : {std::tuple{4u, 4u, 4u, 4u, 4u}, std::tuple{8u, 8u, 8u, 8u, 8u},
                                    std::tuple{4u, 8u, 4u, 1u, 1u}, std::tuple{6u, 6u, 12u, 3u, 2u},
                                    std::tuple{16u, 16u, 16u, 16u, 4u}, std::tuple{3u, 9u, 9u, 1u, 9u}}) {
    for (auto [hh, ww] : {std::pair{7u, 9u}, std::pair{1u, 5u}, std::pair{12u, 3u}}) {
      const auto hs = random_spec<double>(ConvGeometry{ci, cm, gh, StencilKind::three(Direction::Horizontal)}, rng);
      const auto vs = random_spec<double>(ConvGeometry{cm, co, gv, StencilKind::three(Direction::Vertical)}, rng);
      const auto x = random_map<double>(Shape{2, ci, hh, ww}, Layout::WidthFastest, rng);
      const auto oracle = composed_oracle(hs, vs, x);
      for (KernelPath p : {KernelPath::Auto, KernelPath::FusedTiled, KernelPath::Reference, KernelPath::ShiftIm2col}) {
        KernelOptions opt;
        opt.path = p;
        const auto mid = apply(hs, x, opt);
        const auto y = apply(vs, mid, opt);
        if (y.layout() != x.layout()) o.pass = false;
        worst = std::max(worst, max_rel_diff(y, oracle));
        ++cases;
      }
    }
  }
  o.pass = o.pass && worst < kSeparableTol;
  o.detail = "horizontal then vertical vs composed 3x3: worst " + fmt("%.2e", worst) + " over " + std::to_string(cases) +
             " runs, output layout equals input layout";
  return o;
}

// 6 -----------------------------------------------------------------------
Outcome derivative_span() {
  Outcome o;
  Rng rng(66);
  // dyadic coefficients keep every value exactly representable
  std::uniform_int_distribution<int> k(-16, 16);
  double worst = 0;
  for (int trial = 0; trial < 8; ++trial) {
    const double a = k(rng) / 8.0, b = k(rng) / 8.0, c0 = k(rng) / 4.0, d = k(rng) / 8.0, e = k(rng) / 8.0;
    // outputs: d/dx ramp, d/dy ramp, d2/dx2 parabola, d2/dy2 parabola
    auto s = LeanConvSpec<double>::zeros(2, 4, 1, StencilKind::five());
    auto set = [&](std::size_t out, std::size_t in, double up, double left, double centre, double right, double down) {
      const std::size_t row = out * 2 + in;
      s.spatial(row, 0) = up;
      s.spatial(row, 1) = left;
      s.spatial(row, 2) = right;
      s.spatial(row, 3) = down;
      s.pointwise(out, in) = centre;
    };
    set(0, 0, 0, -0.5, 0, 0.5, 0);
    set(1, 0, -0.5, 0, 0, 0, 0.5);
    set(2, 1, 0, 1, -2, 1, 0);
    set(3, 1, 1, 0, -2, 0, 1);
    const std::size_t H = 10 + std::size_t(trial), W = 15 - std::size_t(trial);
    FeatureMap<double> x(2, 2, H, W);
    for (std::size_t bb = 0; bb < 2; ++bb)
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t xx = 0; xx < W; ++xx) {
          const double fx = double(xx), fy = double(y);
          x.at(bb, 0, y, xx) = a * fx + b * fy + c0;
          x.at(bb, 1, y, xx) = d * fx * fx + e * fy * fy + a * fx + c0;
        }
    const double expect[4] = {a, b, 2 * d, 2 * e};
    for (KernelPath p : {KernelPath::Reference, KernelPath::ShiftIm2col, KernelPath::FusedTiled})
      for (Layout l : {Layout::WidthFastest, Layout::HeightFastest}) {
        KernelOptions opt;
        opt.path = p;
        const auto out = apply(s, x.with_layout(l), opt);
        for (std::size_t bb = 0; bb < 2; ++bb)
          for (std::size_t ch = 0; ch < 4; ++ch)
            for (std::size_t y = 1; y + 1 < H; ++y)
              for (std::size_t xx = 1; xx + 1 < W; ++xx)
                worst = std::max(worst, std::abs(out.at(bb, ch, y, xx) - expect[ch]));
      }
  }
  o.pass = worst < kDerivativeTol;
  o.detail = "five-point first and second differences on ramps and parabolas, interior max error " + fmt("%.2e", worst);
  return o;
}

// 7 -----------------------------------------------------------------------
Outcome fused_ordering() {
  Outcome o;
  BenchOptions bo;
  bo.repeats = 5;
  bo.probe_tiles = true;
  bo.stencil = StencilKind::five();
  std::string rows;
  const auto res = run_bench(sweep_points(16, 512, 512), bo, [&](const BenchRow& r) {
    rows += std::to_string(r.point.channels) + ":" + fmt("%.2f", r.fused / r.split) + " ";
  });
  const std::size_t wins = fused_wins(res);
  o.pass = wins >= kBenchMinWins;
  o.detail = "fused <= split at " + std::to_string(wins) + "/6 points (fused/split: " + rows + ")";
  return o;
}

// 8 -----------------------------------------------------------------------
double read_fixture_accuracy() {
  std::ifstream f(std::string(LEANCONV_FIXTURE_DIR) + "/synthetic_baseline.json");
  if (!f) return NAN;
  return json::parse(f).at("final_val_accuracy").get<double>();
}

Outcome desk_scale_learning() {
  Outcome o;
  // (a) overfit 16 samples for every stencil and group choice
  std::size_t overfit_ok = 0, overfit_total = 0, worst_epoch = 0;
  std::string missed;
  const auto small = make_synthetic(4, 16, 16, 5);
  for (StencilKind s : {StencilKind::full9(), StencilKind::five(), StencilKind::three(Direction::Horizontal),
                        StencilKind::pointwise()})
    for (GroupRule g : {GroupRule::fixed(1), GroupRule::fixed(4), GroupRule::depthwise()}) {
      NetworkConfig cfg = fixture_network();
      cfg.stencil = s;
      cfg.groups = g;
      auto net = build_network<double>(cfg, 4, 3);
      TrainOptions t;
      t.epochs = kOverfitEpochs;
      t.batch = 16;
      t.lr = 0.05;
      t.weight_decay = 0;
      std::size_t first = 0;
      for (const auto& e : train(net, small, nullptr, t))
        if (!first && e.train_acc == 1.0) first = e.epoch + 1;
      ++overfit_total;
      if (first) {
        ++overfit_ok;
        worst_epoch = std::max(worst_epoch, first);
      } else {
        missed += to_string(s) + "/" + to_string(g) + " ";
      }
    }
  const bool a = overfit_ok == overfit_total;

  // (b) synthetic task with the fixture network and seed, and the linear probe
  RunConfig rc = default_run_config("train");
  rc.threads = 1;
  const Splits data = load_splits(rc);
  const std::filesystem::path out_dir = std::filesystem::temp_directory_path() / "leanconv_acceptance";
  const auto r = run_training<double>(rc, data, out_dir);
  const double best = r.final_val.accuracy;
  const double probe = linear_probe(data.train, data.val).accuracy;
  const double fixture = read_fixture_accuracy();
  const bool b = best >= kSyntheticTarget && probe < kProbeCeiling && std::abs(best - fixture) <= kFixtureBand;

  // (c) optional CIFAR-10 subset comparison
  std::string c_detail = "SKIP (set LEANCONV_CIFAR_DIR to run)";
  bool c = true;
  if (const char* dir = std::getenv("LEANCONV_CIFAR_DIR")) {
    RunConfig cr = default_run_config("train");
    cr.data.source = "cifar10";
    cr.data.dir = dir;
    cr.data.train = 5000;
    cr.data.val = 2000;
    cr.precision = "f32";
    cr.train.epochs = 30;
    cr.train.batch = 64;
    cr.train.lr = 0.05;
    cr.train.weight_decay = 5e-4;
    cr.train.decay_epochs = {20, 25};
    cr.train.augment = true;
    const Splits cd = load_splits(cr);
    cr.network = preset("res18");
    cr.network.stencil = StencilKind::five();
    cr.network.groups = GroupRule::fixed(16);
    const double lean = run_training<float>(cr, cd, out_dir / "lean5").final_val.accuracy;
    cr.network.stencil = StencilKind::full9();
    cr.network.groups = GroupRule::fixed(1);
    const double full = run_training<float>(cr, cd, out_dir / "full9").final_val.accuracy;
    c = std::abs(full - lean) <= kCifarGap;
    c_detail = std::string(c ? "pass" : "fail") + " (5pt g=16 " + fmt("%.4f", lean) + " vs 9pt " + fmt("%.4f", full) + ")";
  }

  o.pass = a && b && c;
  o.detail = "(a) " + std::string(a ? "pass" : "fail") + " overfit " + std::to_string(overfit_ok) + "/" +
             std::to_string(overfit_total) + " configs, slowest at epoch " + std::to_string(worst_epoch) +
             (missed.empty() ? "" : " missed: " + missed) + "; (b) " + (b ? "pass" : "fail") + " val " +
             fmt("%.4f", best) + " (fixture " + fmt("%.4f", fixture) + "), probe " + fmt("%.4f", probe) + "; (c) " +
             c_detail;
  return o;
}

}  // namespace

int main() {
  std::printf("acceptance run, %u worker thread(s), cpu: %s\n", num_threads(), cpu_model().c_str());
  const std::pair<int, Outcome (*)()> criteria[] = {
      {1, oracle_equivalence}, {2, gradient_correctness}, {3, count_formulas},       {4, accounting},
      {5, separable_composition}, {6, derivative_span}, {7, fused_ordering}, {8, desk_scale_learning}};
  for (auto [n, fn] : criteria) {
    Stopwatch sw;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    report(n, o, sw.seconds());
  }
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
