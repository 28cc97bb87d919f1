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

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "leanconv/app/record.hpp"
#include "leanconv/app/run_config.hpp"
#include "leanconv/data/cifar.hpp"
#include "leanconv/data/synthetic.hpp"
#include "leanconv/network/checkpoint.hpp"
#include "leanconv/network/trainer.hpp"

namespace leanconv {

struct Splits {
  Dataset<double> train;
  Dataset<double> val;
};

/// Synthetic splits use the run seed for training data and seed + 1 for
/// validation data.
inline Splits load_splits(const RunConfig& rc) {
  const DataConfig& d = rc.data;
  if (d.source == "cifar10") {
    CifarSplits s = load_cifar10(d.dir, d.train, d.val);
    return {std::move(s.train), std::move(s.test)};
  }
  SyntheticOptions so;
  so.channels = rc.network.in_channels;
  so.noise = d.noise;
  return {make_synthetic(d.classes, d.train, d.size, rc.seed, so),
          make_synthetic(d.classes, d.val, d.size, rc.seed + 1, so)};
}

inline const char* kTraceHeader = "epoch,lr,train_loss,train_acc,val_loss,val_acc,seconds\n";

inline std::string trace_row(const EpochStats& e) {
  std::ostringstream s;
  s.precision(17);
  s << e.epoch << ',' << e.lr << ',' << e.train_loss << ',' << e.train_acc << ',' << e.val_loss << ',' << e.val_acc
    << ',' << e.seconds << '\n';
  return s.str();
}

struct TrainOutcome {
  std::vector<EpochStats> trace;
  EvalStats final_val;
  EvalStats final_train;
  ParamTotals params;
};

/// Builds, trains and evaluates the configured network, writing
/// trace.csv and checkpoint.json into `out`.
template <typename T>
TrainOutcome run_training(const RunConfig& rc, const Splits& data, const std::filesystem::path& out,
                          std::ostream* log = nullptr) {
  const Dataset<T> train_set = data.train.template cast<T>();
  const Dataset<T> val_set = data.val.template cast<T>();
  Network<T> net = build_network<T>(rc.network, train_set.classes, rc.seed);
  TrainOptions opt = rc.train;
  opt.seed = rc.seed;
  std::filesystem::create_directories(out);
  std::ofstream trace_file(out / "trace.csv");
  if (!trace_file) throw std::runtime_error("cannot write " + (out / "trace.csv").string());
  trace_file << kTraceHeader << std::flush;
  TrainOutcome r;
  r.trace = train(net, train_set, &val_set, opt, [&](const EpochStats& e) {
    trace_file << trace_row(e) << std::flush;
    if (log) {
      *log << "epoch " << e.epoch << "  lr " << e.lr << "  loss " << e.train_loss << "  train " << e.train_acc
           << "  val " << e.val_acc << "  (" << e.seconds << " s)\n"
           << std::flush;
    }
  });
  save_checkpoint(net, (out / "checkpoint.json").string());
  r.final_val = evaluate(net, val_set);
  r.final_train = evaluate(net, train_set);
  r.params = registry_totals(net);
  return r;
}

inline json trace_json(const std::vector<EpochStats>& trace) {
  json rows = json::array();
  for (const auto& e : trace) {
    rows.push_back({{"epoch", e.epoch}, {"lr", e.lr}, {"train_loss", e.train_loss}, {"train_acc", e.train_acc},
                    {"val_loss", std::isfinite(e.val_loss) ? json(e.val_loss) : json()},
                    {"val_acc", std::isfinite(e.val_acc) ? json(e.val_acc) : json()},
                    {"seconds", e.seconds}});
  }
  return rows;
}

/// One CSV row per sample: label, then the logical c*H*W values.
inline std::string dataset_csv(const Dataset<double>& d) {
  std::ostringstream s;
  s.precision(9);
  const Shape& sh = d.images.shape();
  s << "label";
  for (std::size_t c = 0; c < sh.channels; ++c)
    for (std::size_t y = 0; y < sh.height; ++y)
      for (std::size_t x = 0; x < sh.width; ++x) s << ",c" << c << "_y" << y << "_x" << x;
  s << '\n';
  for (std::size_t b = 0; b < d.size(); ++b) {
    s << d.labels[b];
    for (double v : d.images.flatten_sample(b)) s << ',' << v;
    s << '\n';
  }
  return s.str();
}

}  // namespace leanconv
