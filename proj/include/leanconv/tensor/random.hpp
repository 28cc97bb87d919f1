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
#include <random>

#include "leanconv/tensor/feature_map.hpp"
#include "leanconv/tensor/matrix.hpp"

namespace leanconv {

using Rng = std::mt19937_64;

template <typename T>
void fill_uniform(FeatureMap<T>& x, Rng& rng, T lo = T(-1), T hi = T(1)) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (T& v : x.values()) v = static_cast<T>(dist(rng));
}

template <typename T>
void fill_uniform(Matrix<T>& m, Rng& rng, T lo = T(-1), T hi = T(1)) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (T& v : m.data) v = static_cast<T>(dist(rng));
}

template <typename T>
void fill_normal(Matrix<T>& m, Rng& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (T& v : m.data) v = static_cast<T>(dist(rng));
}

template <typename T>
FeatureMap<T> random_map(const Shape& s, Layout layout, Rng& rng) {
  FeatureMap<T> x(s, layout);
  fill_uniform(x, rng);
  return x;
}

}  // namespace leanconv
