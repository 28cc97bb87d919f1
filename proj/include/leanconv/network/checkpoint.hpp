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

#include <fstream>
#include <string>
#include <type_traits>

#include <json.hpp>

#include "leanconv/network/model.hpp"
#include "leanconv/ops/spec_json.hpp"

namespace leanconv {

inline constexpr const char* kCheckpointFormat = "leanconv-checkpoint";
inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
constexpr const char* precision_name() {
  return std::is_same_v<T, float> ? "f32" : "f64";
}

/// Config, every trainable array and the running normalization statistics.
/// Numbers are written with round-trip precision, so loading restores the
/// parameters bit for bit.
template <typename T>
json checkpoint_to_json(const Network<T>& net) {
  json params = json::object();
  visit_params(net, [&](const std::string& name, const Matrix<T>& m, ParamKind) {
    params[name] = {{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
  });
  json running = json::object();
  for (std::size_t i = 0; i < net.blocks.size(); ++i) {
    const auto& b = net.blocks[i];
    const std::string p = "block" + std::to_string(i);
    running[p + ".n1"] = {{"mean", b.n1.running_mean}, {"var", b.n1.running_var}};
    running[p + ".n2"] = {{"mean", b.n2.running_mean}, {"var", b.n2.running_var}};
  }
  return json{{"format", kCheckpointFormat},
              {"version", kCheckpointVersion},
              {"precision", precision_name<T>()},
              {"classes", net.classes},
              {"config", config_to_json(net.config)},
              {"params", params},
              {"running", running}};
}

template <typename T>
Network<T> checkpoint_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) throw CheckpointError("not a leanconv checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version " + j.at("version").dump());
    }
    Network<T> net = build_network<T>(config_from_json(j.at("config")), j.at("classes").get<std::size_t>());
    const json& params = j.at("params");
    visit_params(net, [&](const std::string& name, Matrix<T>& m, ParamKind) {
      const json& e = params.at(name);
      if (e.at("rows").get<std::size_t>() != m.rows || e.at("cols").get<std::size_t>() != m.cols) {
        throw CheckpointError("checkpoint: shape mismatch for " + name);
      }
      m.data = e.at("data").get<std::vector<T>>();
      if (m.data.size() != m.rows * m.cols) throw CheckpointError("checkpoint: wrong length for " + name);
    });
    const json& running = j.at("running");
    for (std::size_t i = 0; i < net.blocks.size(); ++i) {
      auto& b = net.blocks[i];
      const std::string p = "block" + std::to_string(i);
      for (auto [key, bn] : {std::pair{".n1", &b.n1}, std::pair{".n2", &b.n2}}) {
        bn->running_mean = running.at(p + key).at("mean").template get<std::vector<T>>();
        bn->running_var = running.at(p + key).at("var").template get<std::vector<T>>();
        if (bn->running_mean.size() != bn->channels() || bn->running_var.size() != bn->channels()) {
          throw CheckpointError("checkpoint: running statistics length for " + p + key);
        }
      }
    }
    return net;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
}

template <typename T>
void save_checkpoint(const Network<T>& net, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw CheckpointError("cannot write " + path);
  f << checkpoint_to_json(net).dump() << '\n';
  if (!f) throw CheckpointError("write failed for " + path);
}

template <typename T>
Network<T> load_checkpoint(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw CheckpointError("cannot read " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw CheckpointError(path + ": " + e.what());
  }
  return checkpoint_from_json<T>(j);
}

}  // namespace leanconv
