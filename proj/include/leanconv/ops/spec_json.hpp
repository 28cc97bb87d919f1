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

#include <json.hpp>

#include "leanconv/ops/conv_spec.hpp"

namespace leanconv {

using json = nlohmann::json;

template <typename T>
json matrix_to_json(const Matrix<T>& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols; ++c) row.push_back(static_cast<double>(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename T>
Matrix<T> matrix_from_json(const json& j, std::size_t cols_if_empty) {
  if (!j.is_array()) throw SpecError("weight matrix must be a JSON array of rows");
  Matrix<T> m;
  m.rows = j.size();
  m.cols = m.rows ? j.front().size() : cols_if_empty;
  m.data.reserve(m.rows * m.cols);
  for (const json& row : j) {
    if (!row.is_array() || row.size() != m.cols) throw SpecError("ragged weight matrix");
    for (const json& v : row) m.data.push_back(static_cast<T>(v.get<double>()));
  }
  return m;
}

/// {c_in, c_out, groups, stencil, coupling, pointwise, spatial}
template <typename T>
json spec_to_json(const LeanConvSpec<T>& s) {
  return json{{"c_in", s.c_in()},
              {"c_out", s.c_out()},
              {"groups", s.groups()},
              {"stencil", to_string(s.stencil())},
              {"coupling", to_string(s.coupling())},
              {"pointwise", matrix_to_json(s.pointwise)},
              {"spatial", matrix_to_json(s.spatial)}};
}

template <typename T>
LeanConvSpec<T> spec_from_json(const json& j) {
  try {
    ConvGeometry g;
    g.c_in = j.at("c_in").get<std::size_t>();
    g.c_out = j.at("c_out").get<std::size_t>();
    g.groups = j.at("groups").get<std::size_t>();
    g.stencil = parse_stencil(j.at("stencil").get<std::string>());
    const std::string coupling = j.value("coupling", std::string("lean"));
    if (coupling == "lean") {
      g.coupling = Coupling::Lean;
    } else if (coupling == "grouped") {
      g.coupling = Coupling::Grouped;
    } else {
      throw SpecError("unknown coupling '" + coupling + "'");
    }
    validate(g);
    LeanConvSpec<T> s;
    s.geometry = g;
    s.pointwise = matrix_from_json<T>(j.at("pointwise"), g.pointwise_cols());
    s.spatial = matrix_from_json<T>(j.at("spatial"), g.offsets());
    validate(s);
    return s;
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed spec document: ") + e.what());
  }
}

template <typename T>
LeanConvSpec<T> load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open spec file " + path);
  return spec_from_json<T>(json::parse(in));
}

}  // namespace leanconv
