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
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "leanconv/ops/conv_spec.hpp"
#include "leanconv/ops/cost.hpp"

namespace leanconv {

using json = nlohmann::json;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// How many groups each spatial operator gets.
///   Fixed   "N"       largest divisor of the channel count not above N
///   Depthwise "cin"   one channel per group
///   Divided "cin/N"   c_in / N groups
///   Ratio   "ratio:R" choose_groups(c_in, r, R)
struct GroupRule {
  enum class Kind { Fixed, Depthwise, Divided, Ratio };
  Kind kind = Kind::Fixed;
  std::size_t n = 1;
  double ratio = 1.0;

  static GroupRule fixed(std::size_t g) { return {Kind::Fixed, g, 1.0}; }
  static GroupRule depthwise() { return {Kind::Depthwise, 1, 1.0}; }
  static GroupRule divided(std::size_t n) { return {Kind::Divided, n, 1.0}; }
  static GroupRule with_ratio(double r) { return {Kind::Ratio, 1, r}; }

  friend bool operator==(const GroupRule&, const GroupRule&) = default;
};

namespace detail {

inline std::size_t largest_divisor_at_most(std::size_t c, std::size_t cap) {
  cap = std::max<std::size_t>(1, std::min(cap, c));
  for (std::size_t d = cap; d > 1; --d)
    if (c % d == 0) return d;
  return 1;
}

}  // namespace detail

/// Group count for an operator mapping c_in to c_out channels. The result
/// always divides both widths.
inline std::size_t groups_for(const GroupRule& rule, std::size_t c_in, std::size_t c_out, StencilKind stencil) {
  const std::size_t common = std::gcd(c_in, c_out);
  std::size_t g = 1;
  switch (rule.kind) {
    case GroupRule::Kind::Fixed:
      g = rule.n;
      break;
    case GroupRule::Kind::Depthwise:
      g = c_in;
      break;
    case GroupRule::Kind::Divided:
      g = std::max<std::size_t>(1, c_in / std::max<std::size_t>(1, rule.n));
      break;
    case GroupRule::Kind::Ratio:
      g = choose_groups(c_in, stencil_size(stencil), rule.ratio);
      break;
  }
  return detail::largest_divisor_at_most(common, g);
}

inline std::string to_string(const GroupRule& r) {
  switch (r.kind) {
    case GroupRule::Kind::Fixed:
      return std::to_string(r.n);
    case GroupRule::Kind::Depthwise:
      return "cin";
    case GroupRule::Kind::Divided:
      return "cin/" + std::to_string(r.n);
    case GroupRule::Kind::Ratio: {
      json j = r.ratio;
      return "ratio:" + j.dump();
    }
  }
  return "?";
}

inline GroupRule parse_group_rule(const std::string& s) {
  auto positive = [&](const std::string& digits) -> std::size_t {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(digits, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != digits.size() || digits.empty() || v < 1) throw ConfigError("bad group rule '" + s + "'");
    return std::size_t(v);
  };
  if (s == "cin") return GroupRule::depthwise();
  if (s.rfind("cin/", 0) == 0) return GroupRule::divided(positive(s.substr(4)));
  if (s.rfind("ratio:", 0) == 0) {
    std::size_t used = 0;
    double r = 0;
    try {
      r = std::stod(s.substr(6), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() - 6 || !(r > 0)) throw ConfigError("bad group rule '" + s + "'");
    return GroupRule::with_ratio(r);
  }
  return GroupRule::fixed(positive(s));
}

/// Stage layout of a residual network.
struct NetworkConfig {
  std::string name = "custom";
  std::vector<std::size_t> widths;
  std::vector<std::size_t> steps;
  std::vector<std::size_t> strides;
  StencilKind stencil = StencilKind::full9();
  GroupRule groups = GroupRule::fixed(1);
  std::size_t in_channels = 3;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Width produced by the opening layer.
inline std::size_t opening_width(const NetworkConfig& c) {
  return c.strides.at(0) == 2 ? c.widths.at(0) / 2 : c.widths.at(0);
}

inline void validate(const NetworkConfig& c) {
  if (c.widths.empty()) throw ConfigError("network config: no stages");
  if (c.widths.size() != c.steps.size() || c.widths.size() != c.strides.size()) {
    throw ConfigError("network config: widths, steps and strides differ in length");
  }
  if (c.in_channels == 0) throw ConfigError("network config: in_channels must be >= 1");
  std::size_t prev = 0;
  for (std::size_t s = 0; s < c.widths.size(); ++s) {
    const std::size_t w = c.widths[s];
    if (w == 0) throw ConfigError("network config: zero width in stage " + std::to_string(s));
    if (c.strides[s] != 1 && c.strides[s] != 2) throw ConfigError("network config: strides must be 1 or 2");
    if (c.steps[s] == 0) throw ConfigError("network config: stage " + std::to_string(s) + " has no steps");
    if (s == 0) {
      if (c.strides[0] == 2 && w % 2 != 0) throw ConfigError("network config: odd width before a stride-2 stage");
    } else if (c.strides[s] == 2 && w != 2 * prev) {
      throw ConfigError("network config: stride-2 stage " + std::to_string(s) + " must double the width");
    } else if (c.strides[s] == 1 && w != prev) {
      throw ConfigError("network config: stride-1 stage " + std::to_string(s) + " must keep the width");
    }
    prev = w;
  }
  if (c.groups.kind == GroupRule::Kind::Ratio && !(c.groups.ratio > 0)) {
    throw ConfigError("network config: group ratio must be positive");
  }
}

/// Number of stride-2 stages (one transition each).
inline std::size_t transition_count(const NetworkConfig& c) {
  return std::size_t(std::count(c.strides.begin(), c.strides.end(), std::size_t(2)));
}

/// Conv layers: opening + two per step + the depth-wise conv of each transition.
inline std::size_t conv_depth(const NetworkConfig& c) {
  return 1 + 2 * std::accumulate(c.steps.begin(), c.steps.end(), std::size_t(0)) + transition_count(c);
}

inline NetworkConfig preset(const std::string& name) {
  NetworkConfig c;
  c.name = name;
  if (name == "res18") {
    c.widths = {32, 64, 128, 256}, c.steps = {2, 2, 2, 2}, c.strides = {1, 2, 2, 2};
  } else if (name == "res24-narrow") {
    c.widths = {12, 24, 48, 96}, c.steps = {2, 3, 3, 3}, c.strides = {1, 2, 2, 2};
  } else if (name == "res24") {
    c.widths = {32, 64, 128, 256}, c.steps = {2, 3, 3, 3}, c.strides = {1, 2, 2, 2};
  } else if (name == "res34") {
    c.widths = {64, 128, 256, 512}, c.steps = {3, 4, 6, 3}, c.strides = {1, 2, 2, 2};
  } else if (name == "res38-narrow") {
    c.widths = {24, 48, 96, 192, 384}, c.steps = {4, 5, 5, 3, 1}, c.strides = {1, 2, 2, 2, 2};
  } else if (name == "res38") {
    c.widths = {64, 128, 256, 512, 1024}, c.steps = {4, 5, 5, 3, 1}, c.strides = {1, 2, 2, 2, 2};
  } else if (name == "res40-narrow") {
    c.widths = {24, 48, 96, 192}, c.steps = {3, 5, 7, 4}, c.strides = {1, 2, 2, 2};
  } else if (name == "res40") {
    c.widths = {64, 128, 256, 512}, c.steps = {3, 5, 7, 4}, c.strides = {1, 2, 2, 2};
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return c;
}

inline std::vector<std::string> preset_names() {
  return {"res18", "res24-narrow", "res24", "res34", "res38-narrow", "res38", "res40-narrow", "res40"};
}

inline json config_to_json(const NetworkConfig& c) {
  return json{{"name", c.name},         {"widths", c.widths},
              {"steps", c.steps},       {"strides", c.strides},
              {"stencil", to_string(c.stencil)}, {"groups", to_string(c.groups)},
              {"in_channels", c.in_channels}};
}

/// Reads a network config. A "preset" key supplies defaults that the other
/// keys then override.
inline NetworkConfig config_from_json(const json& j) {
  try {
    NetworkConfig c = j.contains("preset") ? preset(j.at("preset").get<std::string>()) : NetworkConfig{};
    if (j.contains("name")) c.name = j.at("name").get<std::string>();
    if (j.contains("widths")) c.widths = j.at("widths").get<std::vector<std::size_t>>();
    if (j.contains("steps")) c.steps = j.at("steps").get<std::vector<std::size_t>>();
    if (j.contains("strides")) c.strides = j.at("strides").get<std::vector<std::size_t>>();
    if (j.contains("stencil")) c.stencil = parse_stencil(j.at("stencil").get<std::string>());
    if (j.contains("groups")) {
      const auto& g = j.at("groups");
      c.groups = g.is_number_unsigned() ? GroupRule::fixed(g.get<std::size_t>()) : parse_group_rule(g.get<std::string>());
    }
    if (j.contains("in_channels")) c.in_channels = j.at("in_channels").get<std::size_t>();
    validate(c);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("network config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace leanconv
