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
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include "leanconv/data/dataset.hpp"

namespace leanconv {

struct SyntheticOptions {
  std::size_t channels = 3;
  double noise = 1.5;
};

/// Class k is a sinusoidal grating with orientation pi k / n and a
/// class-dependent spatial frequency, drawn with a random phase, a random
/// amplitude and additive Gaussian noise. Every image has zero expected
/// mean in every channel, so pooled channel means carry no class signal.
/// Labels cycle through the classes and are then shuffled, so counts are
/// balanced within one sample.
inline Dataset<double> make_synthetic(std::size_t classes, std::size_t samples, std::size_t size,
                                      std::uint64_t seed, const SyntheticOptions& opt = {}) {
  if (classes < 2) throw std::invalid_argument("make_synthetic: need at least two classes");
  if (size == 0 || opt.channels == 0) throw std::invalid_argument("make_synthetic: empty images");
  Rng rng(seed);
  Dataset<double> d;
  d.classes = classes;
  d.labels.resize(samples);
  for (std::size_t i = 0; i < samples; ++i) d.labels[i] = int(i % classes);
  std::shuffle(d.labels.begin(), d.labels.end(), rng);
  d.images = FeatureMap<double>(Shape{samples, opt.channels, size, size});
  std::uniform_real_distribution<double> phase(0, 2 * std::numbers::pi);
  std::uniform_real_distribution<double> amp(0.75, 1.25);
  std::uniform_real_distribution<double> tint(0.5, 1.0);
  std::normal_distribution<double> noise(0, opt.noise);
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t k = std::size_t(d.labels[i]);
    const double theta = std::numbers::pi * double(k) / double(classes);
    const double freq = 2 * std::numbers::pi * (k % 2 == 0 ? 0.18 : 0.3);
    const double fy = freq * std::sin(theta), fx = freq * std::cos(theta);
    const double ph = phase(rng), a = amp(rng);
    for (std::size_t c = 0; c < opt.channels; ++c) {
      const double t = a * tint(rng);
      for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x)
          d.images.at(i, c, y, x) = t * std::sin(fy * double(y) + fx * double(x) + ph) + noise(rng);
    }
  }
  return d;
}

}  // namespace leanconv
