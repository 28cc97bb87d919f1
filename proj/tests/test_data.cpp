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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include <unistd.h>

#include "leanconv/data/cifar.hpp"
#include "leanconv/data/synthetic.hpp"
#include "leanconv/network/probe.hpp"

using namespace leanconv;
namespace fs = std::filesystem;

namespace {

// Writes n records with label (i % 10) and pixel value (i + c + p) mod 256.
void write_batch(const fs::path& path, std::size_t n, std::size_t extra_bytes = 0) {
  std::ofstream f(path, std::ios::binary);
  for (std::size_t i = 0; i < n; ++i) {
    f.put(char(i % 10));
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t p = 0; p < 1024; ++p) f.put(char((i + 7 * c + p) % 256));
  }
  for (std::size_t k = 0; k < extra_bytes; ++k) f.put(0);
}

class CifarFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("leanconv_cifar_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    for (int k = 1; k <= 5; ++k) write_batch(dir / ("data_batch_" + std::to_string(k) + ".bin"), 6);
    write_batch(dir / "test_batch.bin", 4);
  }
  void TearDown() override { fs::remove_all(dir); }
  fs::path dir;
};

}  // namespace

TEST_F(CifarFiles, RecordDecoding) {
  const auto d = read_cifar_batch((dir / "data_batch_1.bin").string());
  ASSERT_EQ(d.size(), 6u);
  EXPECT_EQ(d.images.shape(), (Shape{6, 3, 32, 32}));
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(d.labels[i], int(i % 10));
    // channel-planar: byte 1 + c * 1024 + y * 32 + x
    EXPECT_DOUBLE_EQ(d.images.at(i, 2, 3, 5), double((i + 14 + 3 * 32 + 5) % 256) / 255.0);
  }
}

TEST_F(CifarFiles, FullLoadSubsetAndNormalization) {
  const auto s = load_cifar10(dir.string());
  EXPECT_EQ(s.train.size(), 30u);
  EXPECT_EQ(s.test.size(), 4u);
  for (int y : s.train.labels) EXPECT_TRUE(y >= 0 && y <= 9);
  const auto st = channel_stats(s.train);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(st.mean[c], 0.0, 1e-6);
    EXPECT_NEAR(st.stddev[c], 1.0, 1e-9);
  }
  const auto sub = load_cifar10(dir.string(), 8, 2);
  EXPECT_EQ(sub.train.size(), 8u);
  EXPECT_EQ(sub.test.size(), 2u);
  EXPECT_EQ(sub.train.labels[7], 1);  // record 1 of the second file
}

TEST_F(CifarFiles, FormatErrors) {
  write_batch(dir / "bad.bin", 2, 5);
  EXPECT_THROW(read_cifar_batch((dir / "bad.bin").string()), DataError);
  std::ofstream(dir / "empty.bin").close();
  EXPECT_THROW(read_cifar_batch((dir / "empty.bin").string()), DataError);
  EXPECT_THROW(read_cifar_batch((dir / "missing.bin").string()), DataError);
  {
    std::ofstream f(dir / "label.bin", std::ios::binary);
    f.put(char(12));
    for (std::size_t k = 0; k < 3072; ++k) f.put(0);
  }
  EXPECT_THROW(read_cifar_batch((dir / "label.bin").string()), DataError);
  fs::remove(dir / "data_batch_3.bin");
  EXPECT_THROW(load_cifar10(dir.string()), DataError);
  EXPECT_NO_THROW(load_cifar10(dir.string(), 12));
}

TEST(Synthetic, DeterministicAndBalanced) {
  const auto a = make_synthetic(4, 103, 12, 9);
  const auto b = make_synthetic(4, 103, 12, 9);
  const auto c = make_synthetic(4, 103, 12, 10);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_TRUE(std::equal(a.images.values().begin(), a.images.values().end(), b.images.values().begin()));
  EXPECT_FALSE(std::equal(a.images.values().begin(), a.images.values().end(), c.images.values().begin()));
  std::map<int, std::size_t> hist;
  for (int y : a.labels) ++hist[y];
  ASSERT_EQ(hist.size(), 4u);
  std::size_t lo = SIZE_MAX, hi = 0;
  for (auto [k, n] : hist) {
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  EXPECT_LE(hi - lo, 1u);
  EXPECT_THROW(make_synthetic(1, 10, 8, 1), std::invalid_argument);
}

TEST(Synthetic, PooledMeansCarryNoClassSignal) {
  const auto tr = make_synthetic(4, 512, 16, 1);
  const auto va = make_synthetic(4, 256, 16, 2);
  const auto probe = linear_probe(tr, va);
  EXPECT_LT(probe.accuracy, 0.6);
}

TEST(Dataset, GatherSubsetHead) {
  const auto d = make_synthetic(3, 9, 4, 5);
  const std::vector<std::size_t> idx{4, 0, 8};
  const auto s = subset(d, idx);
  ASSERT_EQ(s.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(s.labels[k], d.labels[idx[k]]);
    EXPECT_EQ(s.images.at(k, 2, 1, 3), d.images.at(idx[k], 2, 1, 3));
  }
  EXPECT_EQ(head(d, 4).size(), 4u);
  EXPECT_EQ(head(d, 0).size(), 9u);
  Dataset<double> bad = d;
  bad.labels[0] = 7;
  EXPECT_THROW(validate(bad), std::out_of_range);
}

TEST(Augment, FlipOnlyAndCropBounds) {
  const auto d = make_synthetic(2, 6, 8, 3);
  FeatureMap<double> x = d.images;
  Rng rng(4);
  augment_flip_crop(x, rng, 0);
  for (std::size_t b = 0; b < 6; ++b) {
    bool same = true, mirrored = true;
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t w = 0; w < 8; ++w) {
          same &= x.at(b, c, y, w) == d.images.at(b, c, y, w);
          mirrored &= x.at(b, c, y, w) == d.images.at(b, c, y, 7 - w);
        }
    EXPECT_TRUE(same || mirrored);
  }
  // with padding every output pixel is zero or some input pixel of the same plane
  FeatureMap<double> z = d.images;
  augment_flip_crop(z, rng, 4);
  for (std::size_t b = 0; b < 6; ++b)
    for (std::size_t c = 0; c < 3; ++c)
      for (double v : z.plane(b, c)) {
        const auto p = d.images.plane(b, c);
        EXPECT_TRUE(v == 0.0 || std::find(p.begin(), p.end(), v) != p.end());
      }
}
