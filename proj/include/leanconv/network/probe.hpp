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

#include <cstddef>
#include <tuple>

#include "leanconv/data/dataset.hpp"
#include "leanconv/network/classifier.hpp"
#include "leanconv/network/trainer.hpp"
#include "leanconv/tensor/ops.hpp"

namespace leanconv {

/// Pointwise-only linear probe: softmax regression on globally pooled raw
/// channels, trained full batch with momentum. Returns eval stats on `val`.
template <typename T>
EvalStats linear_probe(const Dataset<T>& train_set, const Dataset<T>& val, std::size_t epochs = 300, double lr = 0.5,
                       double momentum = 0.9) {
  const Matrix<T> x = global_avg_pool(train_set.images);
  Classifier<T> cls(train_set.classes, x.cols);
  Classifier<T> vel(train_set.classes, x.cols);
  for (std::size_t e = 0; e < epochs; ++e) {
    Classifier<T> g(train_set.classes, x.cols);
    const Matrix<T> d = cross_entropy_grad(softmax(classifier_logits(cls, x)), train_set.labels);
    classifier_backward(cls, x, d, g.weight, g.bias);
    for (auto [w, v, gr] : {std::tuple{&cls.weight, &vel.weight, &g.weight}, std::tuple{&cls.bias, &vel.bias, &g.bias}})
      for (std::size_t k = 0; k < w->size(); ++k) {
        v->data[k] = T(momentum) * v->data[k] + gr->data[k];
        w->data[k] -= T(lr) * v->data[k];
      }
  }
  const Matrix<T> logits = classifier_logits(cls, global_avg_pool(val.images));
  const auto pred = argmax_rows(logits);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == val.labels[i];
  return {cross_entropy_from_logits(logits, val.labels), val.empty() ? 0.0 : double(correct) / double(val.size())};
}

}  // namespace leanconv
