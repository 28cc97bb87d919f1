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
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace leanconv {

/// Which spatial axis is contiguous inside one (batch, channel) plane.
enum class Layout { WidthFastest, HeightFastest };

inline Layout flipped(Layout l) {
  return l == Layout::WidthFastest ? Layout::HeightFastest : Layout::WidthFastest;
}

inline const char* to_string(Layout l) {
  return l == Layout::WidthFastest ? "width-fastest" : "height-fastest";
}

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Shape {
  std::size_t batch = 0;
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t plane() const { return height * width; }
  std::size_t size() const { return batch * channels * height * width; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

inline std::string to_string(const Shape& s) {
  return "(" + std::to_string(s.batch) + "," + std::to_string(s.channels) + "," +
         std::to_string(s.height) + "," + std::to_string(s.width) + ")";
}

/// Batched multi-channel 2D map. Every (b, c) plane is a contiguous block of
/// height*width scalars; the layout flag decides which spatial axis varies
/// fastest inside the plane. Logical access through at() never depends on
/// the layout.
template <typename T>
class FeatureMap {
  static_assert(std::is_floating_point_v<T>, "FeatureMap holds float or double");

 public:
  using value_type = T;

  FeatureMap() = default;

  FeatureMap(Shape shape, Layout layout = Layout::WidthFastest)
      : shape_(shape), layout_(layout), data_(shape.size(), T(0)) {}

  FeatureMap(std::size_t batch, std::size_t channels, std::size_t height, std::size_t width,
             Layout layout = Layout::WidthFastest)
      : FeatureMap(Shape{batch, channels, height, width}, layout) {}

  FeatureMap(Shape shape, Layout layout, std::vector<T> data)
      : shape_(shape), layout_(layout), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
      throw ShapeError("FeatureMap: buffer length " + std::to_string(data_.size()) +
                       " does not match shape " + leanconv::to_string(shape_));
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t batch() const { return shape_.batch; }
  std::size_t channels() const { return shape_.channels; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t plane_size() const { return shape_.plane(); }
  std::size_t size() const { return data_.size(); }
  Layout layout() const { return layout_; }

  /// Extent of the contiguous axis and the number of such lines per plane.
  std::size_t fast_extent() const {
    return layout_ == Layout::WidthFastest ? shape_.width : shape_.height;
  }
  std::size_t line_count() const {
    return layout_ == Layout::WidthFastest ? shape_.height : shape_.width;
  }

  std::size_t plane_offset(std::size_t b, std::size_t c) const {
    return (b * shape_.channels + c) * shape_.plane();
  }

  /// Offset of a spatial position inside its plane.
  std::size_t spatial_offset(std::size_t y, std::size_t x) const {
    return layout_ == Layout::WidthFastest ? y * shape_.width + x : x * shape_.height + y;
  }

  std::size_t index(std::size_t b, std::size_t c, std::size_t y, std::size_t x) const {
    return plane_offset(b, c) + spatial_offset(y, x);
  }

  T& at(std::size_t b, std::size_t c, std::size_t y, std::size_t x) {
    return data_[index(b, c, y, x)];
  }
  T at(std::size_t b, std::size_t c, std::size_t y, std::size_t x) const {
    return data_[index(b, c, y, x)];
  }

  std::span<T> plane(std::size_t b, std::size_t c) {
    return {data_.data() + plane_offset(b, c), shape_.plane()};
  }
  std::span<const T> plane(std::size_t b, std::size_t c) const {
    return {data_.data() + plane_offset(b, c), shape_.plane()};
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  bool same_geometry(const FeatureMap& o) const {
    return shape_ == o.shape_ && layout_ == o.layout_;
  }

  /// Copy of this map stored with the requested layout.
  FeatureMap with_layout(Layout target) const;

  /// Flattens sample b logically as c*H*W + y*W + x (layout independent).
  std::vector<T> flatten_sample(std::size_t b) const {
    std::vector<T> out(shape_.channels * shape_.plane());
    std::size_t k = 0;
    for (std::size_t c = 0; c < shape_.channels; ++c)
      for (std::size_t y = 0; y < shape_.height; ++y)
        for (std::size_t x = 0; x < shape_.width; ++x) out[k++] = at(b, c, y, x);
    return out;
  }

  template <typename U>
  FeatureMap<U> cast() const {
    std::vector<U> d(data_.begin(), data_.end());
    return FeatureMap<U>(shape_, layout_, std::move(d));
  }

 private:
  Shape shape_{};
  Layout layout_ = Layout::WidthFastest;
  std::vector<T> data_;
};

/// Physically reorders the buffer so the other spatial axis becomes the
/// contiguous one. Logical values are unchanged.
template <typename T>
FeatureMap<T> transpose_spatial(const FeatureMap<T>& x) {
  FeatureMap<T> out(x.shape(), flipped(x.layout()));
  const std::size_t lines = x.line_count();
  const std::size_t fast = x.fast_extent();
  for (std::size_t b = 0; b < x.batch(); ++b) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      const T* src = x.plane(b, c).data();
      T* dst = out.plane(b, c).data();
      // src is lines x fast row-major; dst is fast x lines.
      constexpr std::size_t kBlock = 32;
      for (std::size_t l0 = 0; l0 < lines; l0 += kBlock) {
        const std::size_t l1 = std::min(lines, l0 + kBlock);
        for (std::size_t f0 = 0; f0 < fast; f0 += kBlock) {
          const std::size_t f1 = std::min(fast, f0 + kBlock);
          for (std::size_t l = l0; l < l1; ++l)
            for (std::size_t f = f0; f < f1; ++f) dst[f * lines + l] = src[l * fast + f];
        }
      }
    }
  }
  return out;
}

template <typename T>
FeatureMap<T> FeatureMap<T>::with_layout(Layout target) const {
  if (target == layout_) return *this;
  return transpose_spatial(*this);
}

}  // namespace leanconv
