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

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "leanconv/app/bench.hpp"
#include "leanconv/app/count.hpp"
#include "leanconv/app/record.hpp"
#include "leanconv/app/run_config.hpp"
#include "leanconv/app/train_run.hpp"
#include "leanconv/app/verify.hpp"

namespace fs = std::filesystem;
using namespace leanconv;

namespace {

struct CommonFlags {
  std::string config;
  FlagOverrides f;
};

void add_common(CLI::App* cmd, CommonFlags& c) {
  cmd->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.f.seed, "seed for data, init and order");
  cmd->add_option("--precision", c.f.precision, "f32 or f64")->check(CLI::IsMember({"f32", "f64"}));
  cmd->add_option("--threads", c.f.threads, "kernel worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--stencil", c.f.stencil, "9pt, 5pt, 3pt or 1x1");
  cmd->add_option("--groups", c.f.groups, "N, cin, cin/N or ratio:R");
  cmd->add_option("--out", c.f.out, "output directory");
  cmd->add_option("--subset", c.f.subset, "number of training samples");
  cmd->add_option("--epochs", c.f.epochs, "training epochs");
  cmd->add_option("--batch", c.f.batch, "mini-batch size")->check(CLI::PositiveNumber);
  cmd->add_option("--lr", c.f.lr, "base learning rate");
}

ResultRecord start_record(const RunConfig& rc) {
  ResultRecord r;
  r.command = rc.command;
  r.config = effective_config(rc);
  return r;
}

void finish(ResultRecord& r, const RunConfig& rc, const Stopwatch& sw) {
  r.wall_clock_seconds = sw.seconds();
  write_record(r, fs::path(rc.out) / "record.json");
  std::cout << "record: " << (fs::path(rc.out) / "record.json").string() << "  config hash "
            << hex64(config_hash(r.config)) << "\n";
}

int cmd_verify(const RunConfig& rc) {
  Stopwatch sw;
  ResultRecord rec = start_record(rc);
  VerifyOptions o;
  o.cases = rc.verify.cases;
  o.seed = rc.seed;
  o.tol64 = rc.verify.tol64;
  o.tol32 = rc.verify.tol32;
  o.grad_tol = rc.verify.grad_tol;
  o.perturb = rc.verify.perturb;
  const VerifyReport rep = run_verify(o);
  json suites = json::array();
  for (const auto& s : rep.suites) {
    std::printf("%-20s %-4s cases %5zu  worst %.3e  tol %.1e  (%s)\n", s.name.c_str(), s.passed() ? "ok" : "FAIL",
                s.cases, s.worst, s.tolerance, s.worst_case.c_str());
    suites.push_back({{"suite", s.name},
                      {"passed", s.passed()},
                      {"cases", s.cases},
                      {"worst", std::isfinite(s.worst) ? json(s.worst) : json("inf")},
                      {"tolerance", s.tolerance},
                      {"worst_case", s.worst_case},
                      {"exit_code", s.exit_code}});
  }
  rec.results = {{"suites", suites}, {"exit_code", rep.exit_code()}};
  finish(rec, rc, sw);
  std::cout << (rep.exit_code() == 0 ? "verify: all suites passed\n" : "verify: FAILED\n");
  return rep.exit_code();
}

int cmd_count(const RunConfig& rc) {
  Stopwatch sw;
  ResultRecord rec = start_record(rc);
  const std::size_t classes = rc.data.source == "cifar10" ? 10 : rc.data.classes;
  const NetworkCost nc = network_cost(rc.network, classes, rc.height, rc.width);
  std::cout << cost_table(nc, rc.network.name + " (" + to_string(rc.network.stencil) + ", groups " +
                                  to_string(rc.network.groups) + ", " + std::to_string(rc.height) + "x" +
                                  std::to_string(rc.width) + ", " + std::to_string(classes) + " classes)");
  write_text(fs::path(rc.out) / "count.csv", cost_csv(nc));
  rec.results = {{"weights", nc.params.weights()}, {"conv", nc.params.conv},
                 {"classifier", nc.params.classifier}, {"norm", nc.params.norm},
                 {"all", nc.params.all()},         {"mults", nc.mults},
                 {"layers", nc.layers.size()},      {"depth", conv_depth(rc.network)}};
  finish(rec, rc, sw);
  return 0;
}

int cmd_bench(const RunConfig& rc) {
  Stopwatch sw;
  ResultRecord rec = start_record(rc);
  BenchOptions o;
  o.batch = rc.bench.batch;
  o.repeats = rc.bench.repeats;
  o.probe_tiles = rc.bench.probe_tiles;
  o.seed = rc.seed;
  o.stencil = rc.network.stencil;
  if (rc.precision != "f32") std::cout << "note: benchmarks always run in 32-bit\n";
  std::printf("%8s %6s %12s %12s %12s %12s %8s\n", "channels", "size", "baseline_s", "fused_s", "split_s",
              "chained_s", "fused<=split");
  const auto rows = run_bench(sweep_points(rc.bench.c_min, rc.bench.c_max, rc.bench.size), o, [](const BenchRow& r) {
    std::printf("%8zu %6zu %12.5f %12.5f %12.5f %12.5f %8s\n", r.point.channels, r.point.size, r.baseline, r.fused,
                r.split, r.chained, r.fused_not_slower() ? "yes" : "no");
    std::fflush(stdout);
  });
  write_text(fs::path(rc.out) / "bench.csv", bench_csv(rows));
  json jr = json::array();
  for (const auto& r : rows) {
    jr.push_back({{"channels", r.point.channels}, {"size", r.point.size}, {"baseline_s", r.baseline},
                  {"fused_s", r.fused}, {"split_s", r.split}, {"chained_s", r.chained},
                  {"tile", {r.tile.t_n, r.tile.t_o, r.tile.t_i}}});
  }
  rec.results = {{"rows", jr}, {"fused_not_slower", fused_wins(rows)}, {"points", rows.size()}};
  std::cout << "fused <= split at " << fused_wins(rows) << " of " << rows.size() << " points\n";
  finish(rec, rc, sw);
  return 0;
}

int cmd_train(const RunConfig& rc) {
  Stopwatch sw;
  ResultRecord rec = start_record(rc);
  const Splits data = load_splits(rc);
  std::cout << "train " << data.train.size() << " samples, val " << data.val.size() << " samples, "
            << data.train.classes << " classes\n";
  const fs::path out(rc.out);
  const TrainOutcome r = rc.precision == "f32" ? run_training<float>(rc, data, out, &std::cout)
                                               : run_training<double>(rc, data, out, &std::cout);
  rec.results = {{"epochs", trace_json(r.trace)},
                 {"final_val_accuracy", r.final_val.accuracy},
                 {"final_val_loss", r.final_val.loss},
                 {"final_train_accuracy", r.final_train.accuracy},
                 {"params_all", r.params.all()},
                 {"checkpoint", (out / "checkpoint.json").string()},
                 {"trace", (out / "trace.csv").string()}};
  std::printf("final val accuracy %.4f\n", r.final_val.accuracy);
  finish(rec, rc, sw);
  return 0;
}

int cmd_synth(const RunConfig& rc) {
  Stopwatch sw;
  ResultRecord rec = start_record(rc);
  SyntheticOptions so;
  so.channels = rc.network.in_channels;
  so.noise = rc.data.noise;
  const auto d = make_synthetic(rc.data.classes, rc.data.train, rc.data.size, rc.seed, so);
  write_text(fs::path(rc.out) / "synth.csv", dataset_csv(d));
  std::map<int, std::size_t> hist;
  for (int y : d.labels) ++hist[y];
  json h = json::object();
  for (auto [k, n] : hist) h[std::to_string(k)] = n;
  std::cout << "wrote " << d.size() << " samples of " << so.channels << "x" << rc.data.size << "x" << rc.data.size
            << " to " << (fs::path(rc.out) / "synth.csv").string() << "\nclass counts " << h.dump() << "\n";
  rec.results = {{"samples", d.size()}, {"class_counts", h}, {"file", (fs::path(rc.out) / "synth.csv").string()}};
  finish(rec, rc, sw);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"leanconv: lean convolution operators, kernels and networks"};
  app.require_subcommand(1);
  std::map<std::string, CommonFlags> flags;
  std::map<std::string, CLI::App*> cmds;
  const std::pair<const char*, const char*> names[] = {
      {"verify", "oracle, adjoint, gradient and fixture suites"},
      {"count", "per-layer parameter and multiplication counts"},
      {"bench", "fused vs split kernel latency sweep"},
      {"train", "train a network and write trace, checkpoint and record"},
      {"synth", "generate the synthetic dataset as CSV"}};
  double perturb = 0;
  std::size_t cases = 0;
  for (auto [name, help] : names) {
    cmds[name] = app.add_subcommand(name, help);
    add_common(cmds[name], flags[name]);
  }
  cmds["verify"]->add_option("--perturb", perturb, "add this to one fixture weight (sensitivity check)");
  cmds["verify"]->add_option("--cases", cases, "random operator cases per suite");
  CLI11_PARSE(app, argc, argv);

  for (auto& [name, cmd] : cmds) {
    if (!cmd->parsed()) continue;
    try {
      RunConfig rc = load_run_config(name, flags[name].config, flags[name].f);
      if (name == "verify") {
        if (cmds["verify"]->count("--perturb")) rc.verify.perturb = perturb;
        if (cases > 0) rc.verify.cases = cases;
      }
      set_num_threads(rc.threads);
      if (name == "verify") return cmd_verify(rc);
      if (name == "count") return cmd_count(rc);
      if (name == "bench") return cmd_bench(rc);
      if (name == "train") return cmd_train(rc);
      if (name == "synth") return cmd_synth(rc);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 1;
}
