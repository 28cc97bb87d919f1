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

#include <cmath>
#include <cstddef>
#include <vector>

#include "leanconv/tensor/feature_map.hpp"
#include "leanconv/tensor/matrix.hpp"

namespace leanconv {

inline constexpr double kNormEpsilon = 1e-5;
inline constexpr double kNormMomentum = 0.9;

/// Per-channel affine normalization. gamma and beta are 1 x c so they can
/// sit in the parameter registry next to the conv weights.
template <typename T>
struct BatchNorm {
  Matrix<T> gamma;
  Matrix<T> beta;
  std::vector<T> running_mean;
  std::vector<T> running_var;

  BatchNorm() = default;
  explicit BatchNorm(std::size_t channels)
      : gamma(1, channels), beta(1, channels), running_mean(channels, T(0)), running_var(channels, T(1)) {
    for (T& g : gamma.data) g = T(1);
  }

  std::size_t channels() const { return gamma.cols; }
};

/// What the backward pass needs from a train-mode forward.
template <typename T>
struct NormCache {
  FeatureMap<T> normalized;
  std::vector<T> inv_std;
};

namespace detail {

template <typename T>
void check_norm(const BatchNorm<T>& bn, const FeatureMap<T>& x) {
  if (bn.channels() != x.channels()) {
    throw ShapeError("batch_norm: " + std::to_string(bn.channels()) + " channels, input has " +
                     std::to_string(x.channels()));
  }
}

}  // namespace detail

/// Train mode standardizes with the batch statistics (biased variance) and
/// moves the running statistics; eval mode uses the running statistics.
/// `cache` may be null.
template <typename T>
FeatureMap<T> batch_norm(BatchNorm<T>& bn, const FeatureMap<T>& x, bool train, NormCache<T>* cache = nullptr) {
  detail::check_norm(bn, x);
  const std::size_t c_count = x.channels();
  const std::size_t n = x.plane_size();
  std::vector<T> mean(c_count), inv_std(c_count);
  if (train) {
    const double count = double(x.batch() * n);
    if (count == 0) throw ShapeError("batch_norm: empty batch");
    for (std::size_t c = 0; c < c_count; ++c) {
      double s = 0;
      for (std::size_t b = 0; b < x.batch(); ++b)
        for (T v : x.plane(b, c)) s += double(v);
      const double mu = s / count;
      double q = 0;
      for (std::size_t b = 0; b < x.batch(); ++b)
        for (T v : x.plane(b, c)) q += (double(v) - mu) * (double(v) - mu);
      const double var = q / count;
      mean[c] = T(mu);
      inv_std[c] = T(1.0 / std::sqrt(var + kNormEpsilon));
      bn.running_mean[c] = T(kNormMomentum * double(bn.running_mean[c]) + (1 - kNormMomentum) * mu);
      bn.running_var[c] = T(kNormMomentum * double(bn.running_var[c]) + (1 - kNormMomentum) * var);
    }
  } else {
    for (std::size_t c = 0; c < c_count; ++c) {
      mean[c] = bn.running_mean[c];
      inv_std[c] = T(1.0 / std::sqrt(double(bn.running_var[c]) + kNormEpsilon));
    }
  }
  FeatureMap<T> y(x.shape(), x.layout());
  if (cache) cache->normalized = FeatureMap<T>(x.shape(), x.layout());
  for (std::size_t b = 0; b < x.batch(); ++b) {
    for (std::size_t c = 0; c < c_count; ++c) {
      const auto src = x.plane(b, c);
      auto dst = y.plane(b, c);
      const T g = bn.gamma.data[c], sh = bn.beta.data[c], m = mean[c], is = inv_std[c];
      if (cache) {
        auto nd = cache->normalized.plane(b, c);
        for (std::size_t k = 0; k < n; ++k) {
          nd[k] = (src[k] - m) * is;
          dst[k] = g * nd[k] + sh;
        }
      } else {
        for (std::size_t k = 0; k < n; ++k) dst[k] = g * ((src[k] - m) * is) + sh;
      }
    }
  }
  if (cache) cache->inv_std = std::move(inv_std);
  return y;
}

/// Backward of a train-mode batch_norm. Adds into d_gamma / d_beta.
template <typename T>
FeatureMap<T> batch_norm_backward(const BatchNorm<T>& bn, const NormCache<T>& cache, const FeatureMap<T>& d_out_any,
                                  Matrix<T>& d_gamma, Matrix<T>& d_beta) {
  const FeatureMap<T>& xh = cache.normalized;
  const FeatureMap<T> d_out = d_out_any.with_layout(xh.layout());
  const std::size_t n = xh.plane_size();
  const double count = double(xh.batch() * n);
  FeatureMap<T> dx(xh.shape(), xh.layout());
  for (std::size_t c = 0; c < xh.channels(); ++c) {
    double sum_dy = 0, sum_dy_xh = 0;
    for (std::size_t b = 0; b < xh.batch(); ++b) {
      const auto dy = d_out.plane(b, c);
      const auto h = xh.plane(b, c);
      for (std::size_t k = 0; k < n; ++k) {
        sum_dy += double(dy[k]);
        sum_dy_xh += double(dy[k]) * double(h[k]);
      }
    }
    d_gamma.data[c] += T(sum_dy_xh);
    d_beta.data[c] += T(sum_dy);
    const double scale = double(bn.gamma.data[c]) * double(cache.inv_std[c]) / count;
    for (std::size_t b = 0; b < xh.batch(); ++b) {
      const auto dy = d_out.plane(b, c);
      const auto h = xh.plane(b, c);
      auto d = dx.plane(b, c);
      for (std::size_t k = 0; k < n; ++k)
        d[k] = T(scale * (count * double(dy[k]) - sum_dy - double(h[k]) * sum_dy_xh));
    }
  }
  return dx;
}

}  // namespace leanconv
