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

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <type_traits>
#include <string>
#include <vector>

#include "leanconv/data/dataset.hpp"
#include "leanconv/network/model.hpp"

namespace leanconv {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainOptions {
  std::size_t epochs = 30;
  std::size_t batch = 64;
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  /// Epochs (0-based) at which the learning rate is multiplied by decay_factor.
  std::vector<std::size_t> decay_epochs;
  double decay_factor = 0.1;
  std::uint64_t seed = 1;
  bool augment = false;
};

inline double lr_at(const TrainOptions& o, std::size_t epoch) {
  double lr = o.lr;
  for (std::size_t e : o.decay_epochs)
    if (epoch >= e) lr *= o.decay_factor;
  return lr;
}

struct EpochStats {
  std::size_t epoch = 0;
  double lr = 0;
  double train_loss = 0;
  double train_acc = 0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();
  double val_acc = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0;
};

struct EvalStats {
  double loss = 0;
  double accuracy = 0;
};

/// Eval-mode loss and accuracy over a dataset.
template <typename T>
EvalStats evaluate(Network<T>& net, const Dataset<T>& data, std::size_t batch = 256) {
  if (data.empty()) return {};
  double loss = 0;
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch) {
    const std::size_t end = std::min(data.size(), start + batch);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Matrix<T> logits = forward_logits(net, gather(data.images, idx), false);
    std::vector<int> labels(data.labels.begin() + long(start), data.labels.begin() + long(end));
    loss += cross_entropy_from_logits(logits, labels) * double(end - start);
    const auto pred = argmax_rows(logits);
    for (std::size_t k = 0; k < labels.size(); ++k) correct += pred[k] == labels[k];
  }
  return {loss / double(data.size()), double(correct) / double(data.size())};
}

/// SGD with momentum: v = mu v + (g + wd w), w -= lr v. Weight decay touches
/// conv and classifier weights only.
template <typename T>
void sgd_step(Network<T>& net, const Network<T>& grads, Network<T>& velocity, double lr, double momentum,
              double weight_decay) {
  auto w = parameters(net);
  std::vector<const Matrix<T>*> g;
  visit_params(grads, [&](const std::string&, const Matrix<T>& m, ParamKind) { g.push_back(&m); });
  auto v = parameters(velocity);
  for (std::size_t p = 0; p < w.size(); ++p) {
    const T wd = decays(w[p].kind) ? T(weight_decay) : T(0);
    auto& wv = w[p].value->data;
    const auto& gv = g[p]->data;
    auto& vv = v[p].value->data;
    for (std::size_t k = 0; k < wv.size(); ++k) {
      vv[k] = T(momentum) * vv[k] + (gv[k] + wd * wv[k]);
      wv[k] -= T(lr) * vv[k];
    }
  }
}

/// Trains over shuffled mini-batches and returns one row per epoch. The
/// shuffle and augmentation draws come from opt.seed only.
template <typename T>
std::vector<EpochStats> train(Network<T>& net, const Dataset<T>& data, std::type_identity_t<const Dataset<T>*> val, const TrainOptions& opt,
                              const std::function<void(const EpochStats&)>& on_epoch = {}) {
  if (data.empty()) throw TrainingError("train: empty dataset");
  if (opt.batch == 0) throw TrainingError("train: batch size must be >= 1");
  validate(data);
  Rng rng(opt.seed);
  Network<T> grads = zeros_like(net);
  Network<T> velocity = zeros_like(net);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::vector<EpochStats> trace;
  for (std::size_t e = 0; e < opt.epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochStats st;
    st.epoch = e;
    st.lr = lr_at(opt, e);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    std::size_t correct = 0;
    for (std::size_t start = 0, step = 0; start < order.size(); start += opt.batch, ++step) {
      const std::size_t end = std::min(order.size(), start + opt.batch);
      // sorted within the batch: the result depends on batch membership only
      std::vector<std::size_t> idx(order.begin() + long(start), order.begin() + long(end));
      std::sort(idx.begin(), idx.end());
      FeatureMap<T> images = gather(data.images, idx);
      if (opt.augment) augment_flip_crop(images, rng);
      std::vector<int> labels;
      for (std::size_t i : idx) labels.push_back(data.labels[i]);
      const StepStats s = loss_and_gradient(net, images, labels, grads);
      if (!std::isfinite(s.loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(e) + ", step " + std::to_string(step) +
                            " (lr " + std::to_string(st.lr) + ")");
      }
      loss_sum += s.loss * double(idx.size());
      correct += s.correct;
      sgd_step(net, grads, velocity, st.lr, opt.momentum, opt.weight_decay);
    }
    st.train_loss = loss_sum / double(data.size());
    st.train_acc = double(correct) / double(data.size());
    if (val && !val->empty()) {
      const EvalStats ev = evaluate(net, *val);
      st.val_loss = ev.loss;
      st.val_acc = ev.accuracy;
    }
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    trace.push_back(st);
    if (on_epoch) on_epoch(st);
  }
  return trace;
}

}  // namespace leanconv
