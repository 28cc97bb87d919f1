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
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "leanconv/network/config.hpp"
#include "leanconv/network/trainer.hpp"

namespace leanconv {

struct DataConfig {
  std::string source = "synthetic";  // "synthetic" or "cifar10"
  std::string dir;
  std::size_t classes = 4;
  std::size_t train = 512;
  std::size_t val = 256;
  std::size_t size = 16;
  double noise = 1.5;
};

struct BenchConfig {
  std::size_t c_min = 16;
  std::size_t c_max = 512;
  std::size_t size = 512;
  std::size_t batch = 1;
  int repeats = 5;
  bool probe_tiles = true;
};

struct VerifyConfig {
  std::size_t cases = 240;
  double tol64 = 1e-10;
  double tol32 = 1e-4;
  double grad_tol = 1e-5;
  double perturb = 0;
};

/// Everything a command needs. Values come from defaults, then the JSON
/// file, then explicit flags.
struct RunConfig {
  std::string command;
  NetworkConfig network;
  DataConfig data;
  TrainOptions train;
  BenchConfig bench;
  VerifyConfig verify;
  std::uint64_t seed = 1;
  std::string precision = "f64";
  unsigned threads = 1;
  std::size_t height = 32;
  std::size_t width = 32;
  std::string out = "out";
};

/// Narrow two-stage lean network used by the synthetic task.
inline NetworkConfig fixture_network() {
  NetworkConfig c;
  c.name = "fixture-lean";
  c.widths = {8, 16};
  c.steps = {1, 1};
  c.strides = {1, 2};
  c.stencil = StencilKind::five();
  c.groups = GroupRule::depthwise();
  return c;
}

inline RunConfig default_run_config(const std::string& command) {
  RunConfig rc;
  rc.command = command;
  rc.threads = std::max(1u, std::thread::hardware_concurrency());
  if (command == "count") {
    rc.network = preset("res18");
    rc.data.classes = 10;
  } else {
    rc.network = fixture_network();
  }
  if (command == "bench") rc.precision = "f32";
  rc.train.epochs = 30;
  rc.train.batch = 32;
  rc.train.lr = 0.05;
  rc.train.decay_epochs = {20, 25};
  return rc;
}

/// Flags given on the command line. Unset members leave the file value.
struct FlagOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> precision;
  std::optional<unsigned> threads;
  std::optional<std::string> stencil;
  std::optional<std::string> groups;
  std::optional<std::string> out;
  std::optional<std::size_t> subset;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch;
  std::optional<double> lr;
};

namespace detail {
template <typename V>
void read_if(const json& j, const char* key, V& v) {
  if (j.contains(key)) v = j.at(key).get<V>();
}
}  // namespace detail

inline void apply_json(RunConfig& rc, const json& j) {
  try {
    using detail::read_if;
    if (j.contains("network")) {
      const json& n = j.at("network");
      if (n.is_string()) {
        rc.network = preset(n.get<std::string>());
      } else {
        json merged = config_to_json(rc.network);
        if (n.contains("preset")) merged = json::object();
        merged.update(n);
        rc.network = config_from_json(merged);
      }
    }
    read_if(j, "seed", rc.seed);
    read_if(j, "precision", rc.precision);
    read_if(j, "threads", rc.threads);
    read_if(j, "height", rc.height);
    read_if(j, "width", rc.width);
    read_if(j, "out", rc.out);
    if (j.contains("data")) {
      const json& d = j.at("data");
      read_if(d, "source", rc.data.source);
      read_if(d, "dir", rc.data.dir);
      read_if(d, "classes", rc.data.classes);
      read_if(d, "train", rc.data.train);
      read_if(d, "val", rc.data.val);
      read_if(d, "size", rc.data.size);
      read_if(d, "noise", rc.data.noise);
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      read_if(t, "epochs", rc.train.epochs);
      read_if(t, "batch", rc.train.batch);
      read_if(t, "lr", rc.train.lr);
      read_if(t, "momentum", rc.train.momentum);
      read_if(t, "weight_decay", rc.train.weight_decay);
      read_if(t, "decay_epochs", rc.train.decay_epochs);
      read_if(t, "decay_factor", rc.train.decay_factor);
      read_if(t, "augment", rc.train.augment);
    }
    if (j.contains("bench")) {
      const json& b = j.at("bench");
      read_if(b, "c_min", rc.bench.c_min);
      read_if(b, "c_max", rc.bench.c_max);
      read_if(b, "size", rc.bench.size);
      read_if(b, "batch", rc.bench.batch);
      read_if(b, "repeats", rc.bench.repeats);
      read_if(b, "probe_tiles", rc.bench.probe_tiles);
    }
    if (j.contains("verify")) {
      const json& v = j.at("verify");
      read_if(v, "cases", rc.verify.cases);
      read_if(v, "tol64", rc.verify.tol64);
      read_if(v, "tol32", rc.verify.tol32);
      read_if(v, "grad_tol", rc.verify.grad_tol);
      read_if(v, "perturb", rc.verify.perturb);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config file: ") + e.what());
  }
}

inline void apply_flags(RunConfig& rc, const FlagOverrides& f) {
  if (f.seed) rc.seed = *f.seed;
  if (f.precision) rc.precision = *f.precision;
  if (f.threads) rc.threads = *f.threads;
  if (f.stencil) rc.network.stencil = parse_stencil(*f.stencil);
  if (f.groups) rc.network.groups = parse_group_rule(*f.groups);
  if (f.out) rc.out = *f.out;
  if (f.subset) rc.data.train = *f.subset;
  if (f.epochs) rc.train.epochs = *f.epochs;
  if (f.batch) rc.train.batch = *f.batch;
  if (f.lr) rc.train.lr = *f.lr;
}

inline void validate(const RunConfig& rc) {
  if (rc.precision != "f32" && rc.precision != "f64") {
    throw ConfigError("precision must be f32 or f64, got '" + rc.precision + "'");
  }
  if (rc.threads == 0) throw ConfigError("threads must be >= 1");
  if (rc.data.source != "synthetic" && rc.data.source != "cifar10") {
    throw ConfigError("data.source must be synthetic or cifar10");
  }
  if (rc.data.source == "cifar10" && rc.data.dir.empty()) throw ConfigError("data.dir is required for cifar10");
  if (rc.train.batch == 0) throw ConfigError("batch must be >= 1");
  if (rc.bench.c_min == 0 || rc.bench.c_min > rc.bench.c_max) throw ConfigError("bench channel range is empty");
  if (rc.bench.repeats < 1) throw ConfigError("bench.repeats must be >= 1");
  validate(rc.network);
}

inline RunConfig load_run_config(const std::string& command, const std::string& path, const FlagOverrides& f) {
  RunConfig rc = default_run_config(command);
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
    apply_json(rc, j);
  }
  apply_flags(rc, f);
  validate(rc);
  return rc;
}

/// Effective configuration as JSON. The output path is left out, so moving
/// the output does not change the hash.
inline json effective_config(const RunConfig& rc) {
  const auto& t = rc.train;
  const auto& b = rc.bench;
  const auto& v = rc.verify;
  const auto& d = rc.data;
  return json{
      {"command", rc.command},
      {"network", config_to_json(rc.network)},
      {"seed", rc.seed},
      {"precision", rc.precision},
      {"threads", rc.threads},
      {"height", rc.height},
      {"width", rc.width},
      {"data",
       {{"source", d.source}, {"dir", d.dir}, {"classes", d.classes}, {"train", d.train}, {"val", d.val},
        {"size", d.size}, {"noise", d.noise}}},
      {"train",
       {{"epochs", t.epochs}, {"batch", t.batch}, {"lr", t.lr}, {"momentum", t.momentum},
        {"weight_decay", t.weight_decay}, {"decay_epochs", t.decay_epochs}, {"decay_factor", t.decay_factor},
        {"augment", t.augment}}},
      {"bench",
       {{"c_min", b.c_min}, {"c_max", b.c_max}, {"size", b.size}, {"batch", b.batch}, {"repeats", b.repeats},
        {"probe_tiles", b.probe_tiles}}},
      {"verify",
       {{"cases", v.cases}, {"tol64", v.tol64}, {"tol32", v.tol32}, {"grad_tol", v.grad_tol}, {"perturb", v.perturb}}},
  };
}

/// FNV-1a 64 over the canonical (sorted-key, compact) dump.
inline std::uint64_t config_hash(const json& effective) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : effective.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int k = 15; k >= 0; --k, v >>= 4) s[std::size_t(k)] = digits[v & 15];
  return s;
}

}  // namespace leanconv
