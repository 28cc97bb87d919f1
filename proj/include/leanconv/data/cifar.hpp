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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "leanconv/data/dataset.hpp"

namespace leanconv {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kCifarSide = 32;
inline constexpr std::size_t kCifarRecord = 1 + 3 * kCifarSide * kCifarSide;

/// Reads one CIFAR-10 binary batch file: records of one label byte followed
/// by 1024 red, 1024 green and 1024 blue bytes. Pixels are scaled to [0, 1].
/// `limit` = 0 reads every record.
inline Dataset<double> read_cifar_batch(const std::string& path, std::size_t limit = 0) {
  std::error_code ec;
  const auto bytes = std::filesystem::file_size(path, ec);
  if (ec) throw DataError("cannot stat " + path + ": " + ec.message());
  if (bytes == 0 || bytes % kCifarRecord != 0) {
    throw DataError(path + ": size " + std::to_string(bytes) + " is not a multiple of the " +
                    std::to_string(kCifarRecord) + "-byte record");
  }
  std::size_t n = bytes / kCifarRecord;
  if (limit && limit < n) n = limit;
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path);
  Dataset<double> d;
  d.classes = 10;
  d.images = FeatureMap<double>(Shape{n, 3, kCifarSide, kCifarSide});
  d.labels.resize(n);
  std::vector<unsigned char> rec(kCifarRecord);
  for (std::size_t i = 0; i < n; ++i) {
    if (!f.read(reinterpret_cast<char*>(rec.data()), std::streamsize(kCifarRecord))) {
      throw DataError(path + ": truncated at record " + std::to_string(i));
    }
    if (rec[0] > 9) throw DataError(path + ": label " + std::to_string(rec[0]) + " at record " + std::to_string(i));
    d.labels[i] = rec[0];
    for (std::size_t c = 0; c < 3; ++c) {
      auto plane = d.images.plane(i, c);
      for (std::size_t p = 0; p < plane.size(); ++p) plane[p] = double(rec[1 + c * 1024 + p]) / 255.0;
    }
  }
  return d;
}

template <typename T>
Dataset<T> concat_datasets(const std::vector<Dataset<T>>& parts) {
  Dataset<T> out;
  if (parts.empty()) return out;
  std::size_t n = 0;
  for (const auto& p : parts) n += p.size();
  const FeatureMap<T>& first = parts.front().images;
  out.images = FeatureMap<T>(Shape{n, first.channels(), first.height(), first.width()}, first.layout());
  out.classes = parts.front().classes;
  std::size_t at = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < p.size(); ++i, ++at)
      for (std::size_t c = 0; c < first.channels(); ++c) {
        const auto src = p.images.plane(i, c);
        std::copy(src.begin(), src.end(), out.images.plane(at, c).begin());
      }
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
  }
  return out;
}

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

inline ChannelStats channel_stats(const Dataset<double>& d) {
  const std::size_t ch = d.images.channels();
  ChannelStats s{std::vector<double>(ch), std::vector<double>(ch)};
  const double count = double(d.size() * d.images.plane_size());
  for (std::size_t c = 0; c < ch; ++c) {
    double sum = 0;
    for (std::size_t i = 0; i < d.size(); ++i)
      for (double v : d.images.plane(i, c)) sum += v;
    const double mu = sum / count;
    double q = 0;
    for (std::size_t i = 0; i < d.size(); ++i)
      for (double v : d.images.plane(i, c)) q += (v - mu) * (v - mu);
    s.mean[c] = mu;
    s.stddev[c] = std::sqrt(q / count);
  }
  return s;
}

inline void normalize(Dataset<double>& d, const ChannelStats& s) {
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t c = 0; c < d.images.channels(); ++c) {
      const double inv = s.stddev[c] > 0 ? 1.0 / s.stddev[c] : 1.0;
      for (double& v : d.images.plane(i, c)) v = (v - s.mean[c]) * inv;
    }
}

struct CifarSplits {
  Dataset<double> train;
  Dataset<double> test;
  ChannelStats stats;
};

/// Loads data_batch_1..5.bin and test_batch.bin from `dir`, keeps the first
/// `train_subset` / `test_subset` records (0 = all) and normalizes both
/// splits with per-channel statistics of the kept training records.
inline CifarSplits load_cifar10(const std::string& dir, std::size_t train_subset = 0, std::size_t test_subset = 0) {
  namespace fs = std::filesystem;
  std::vector<Dataset<double>> parts;
  std::size_t have = 0;
  for (int k = 1; k <= 5; ++k) {
    if (train_subset && have >= train_subset) break;
    const fs::path p = fs::path(dir) / ("data_batch_" + std::to_string(k) + ".bin");
    if (!fs::exists(p)) throw DataError("missing " + p.string());
    parts.push_back(read_cifar_batch(p.string(), train_subset ? train_subset - have : 0));
    have += parts.back().size();
  }
  CifarSplits s;
  s.train = concat_datasets(parts);
  const fs::path tp = fs::path(dir) / "test_batch.bin";
  if (!fs::exists(tp)) throw DataError("missing " + tp.string());
  s.test = read_cifar_batch(tp.string(), test_subset);
  s.stats = channel_stats(s.train);
  normalize(s.train, s.stats);
  normalize(s.test, s.stats);
  return s;
}

}  // namespace leanconv
