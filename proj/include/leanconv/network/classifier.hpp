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
#include <stdexcept>
#include <string>
#include <vector>

#include "leanconv/tensor/feature_map.hpp"
#include "leanconv/tensor/matrix.hpp"

namespace leanconv {

/// Linear classifier: logits = W y + mu, W is classes x features, mu is 1 x classes.
template <typename T>
struct Classifier {
  Matrix<T> weight;
  Matrix<T> bias;

  Classifier() = default;
  Classifier(std::size_t classes, std::size_t features) : weight(classes, features), bias(1, classes) {}

  std::size_t classes() const { return weight.rows; }
  std::size_t features() const { return weight.cols; }
};

/// batch x classes matrix of W y + mu.
template <typename T>
Matrix<T> classifier_logits(const Classifier<T>& cls, const Matrix<T>& features) {
  if (features.cols != cls.features()) {
    throw ShapeError("classifier: " + std::to_string(features.cols) + " features, expected " +
                     std::to_string(cls.features()));
  }
  Matrix<T> z(features.rows, cls.classes());
  for (std::size_t b = 0; b < features.rows; ++b)
    for (std::size_t k = 0; k < cls.classes(); ++k) {
      T s = cls.bias.data[k];
      for (std::size_t f = 0; f < cls.features(); ++f) s += cls.weight(k, f) * features(b, f);
      z(b, k) = s;
    }
  return z;
}

/// Row-wise softmax with max subtraction.
template <typename T>
Matrix<T> softmax(const Matrix<T>& logits) {
  Matrix<T> p(logits.rows, logits.cols);
  for (std::size_t b = 0; b < logits.rows; ++b) {
    T m = logits(b, 0);
    for (std::size_t k = 1; k < logits.cols; ++k) m = std::max(m, logits(b, k));
    T s = 0;
    for (std::size_t k = 0; k < logits.cols; ++k) s += (p(b, k) = std::exp(logits(b, k) - m));
    for (std::size_t k = 0; k < logits.cols; ++k) p(b, k) /= s;
  }
  return p;
}

template <typename T>
Matrix<T> classify(const Matrix<T>& features, const Classifier<T>& cls) {
  return softmax(classifier_logits(cls, features));
}

namespace detail {

template <typename T>
void check_labels(const Matrix<T>& probs, const std::vector<int>& labels) {
  if (labels.size() != probs.rows) throw ShapeError("loss: label count does not match batch");
  for (int y : labels)
    if (y < 0 || std::size_t(y) >= probs.cols) {
      throw std::out_of_range("loss: label " + std::to_string(y) + " outside [0, " + std::to_string(probs.cols) + ")");
    }
}

}  // namespace detail

/// Mean over the batch of -log p[label].
template <typename T>
double cross_entropy(const Matrix<T>& probs, const std::vector<int>& labels) {
  detail::check_labels(probs, labels);
  double s = 0;
  for (std::size_t b = 0; b < probs.rows; ++b) s -= std::log(double(probs(b, std::size_t(labels[b]))));
  return probs.rows ? s / double(probs.rows) : 0.0;
}

/// Cross entropy from logits through a stable log-sum-exp.
template <typename T>
double cross_entropy_from_logits(const Matrix<T>& logits, const std::vector<int>& labels) {
  detail::check_labels(logits, labels);
  double s = 0;
  for (std::size_t b = 0; b < logits.rows; ++b) {
    double m = double(logits(b, 0));
    for (std::size_t k = 1; k < logits.cols; ++k) m = std::max(m, double(logits(b, k)));
    double z = 0;
    for (std::size_t k = 0; k < logits.cols; ++k) z += std::exp(double(logits(b, k)) - m);
    s += m + std::log(z) - double(logits(b, std::size_t(labels[b])));
  }
  return logits.rows ? s / double(logits.rows) : 0.0;
}

/// Gradient of the mean cross entropy with respect to the logits.
template <typename T>
Matrix<T> cross_entropy_grad(const Matrix<T>& probs, const std::vector<int>& labels) {
  detail::check_labels(probs, labels);
  Matrix<T> d = probs;
  const T inv = T(1) / T(probs.rows);
  for (std::size_t b = 0; b < probs.rows; ++b) {
    d(b, std::size_t(labels[b])) -= T(1);
    for (std::size_t k = 0; k < probs.cols; ++k) d(b, k) *= inv;
  }
  return d;
}

/// Backward of classifier_logits: adds into d_weight / d_bias and returns
/// the gradient with respect to the features.
template <typename T>
Matrix<T> classifier_backward(const Classifier<T>& cls, const Matrix<T>& features, const Matrix<T>& d_logits,
                              Matrix<T>& d_weight, Matrix<T>& d_bias) {
  Matrix<T> d_feat(features.rows, cls.features());
  for (std::size_t b = 0; b < features.rows; ++b)
    for (std::size_t k = 0; k < cls.classes(); ++k) {
      const T g = d_logits(b, k);
      d_bias.data[k] += g;
      for (std::size_t f = 0; f < cls.features(); ++f) {
        d_weight(k, f) += g * features(b, f);
        d_feat(b, f) += g * cls.weight(k, f);
      }
    }
  return d_feat;
}

template <typename T>
std::vector<int> argmax_rows(const Matrix<T>& m) {
  std::vector<int> out(m.rows);
  for (std::size_t b = 0; b < m.rows; ++b) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < m.cols; ++k)
      if (m(b, k) > m(b, best)) best = k;
    out[b] = int(best);
  }
  return out;
}

}  // namespace leanconv
