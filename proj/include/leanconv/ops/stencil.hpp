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

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace leanconv {

enum class Direction { Horizontal, Vertical };

/// Spatial offset (dy, dx) of one stencil tap relative to the output pixel.
struct Offset {
  int dy = 0;
  int dx = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

/// Spatial pattern of an operator. The center tap is never part of the
/// spatial store: it belongs to the pointwise (1x1) weights.
struct StencilKind {
  enum class Type { Full9, Five, Three1D, PointwiseOnly };

  Type type = Type::PointwiseOnly;
  Direction direction = Direction::Horizontal;  // only meaningful for Three1D

  static constexpr StencilKind full9() { return {Type::Full9, Direction::Horizontal}; }
  static constexpr StencilKind five() { return {Type::Five, Direction::Horizontal}; }
  static constexpr StencilKind three(Direction d) { return {Type::Three1D, d}; }
  static constexpr StencilKind pointwise() { return {Type::PointwiseOnly, Direction::Horizontal}; }

  bool is_three() const { return type == Type::Three1D; }

  friend bool operator==(const StencilKind& a, const StencilKind& b) {
    if (a.type != b.type) return false;
    return a.type != Type::Three1D || a.direction == b.direction;
  }
};

namespace detail {
inline constexpr std::array<Offset, 8> kFull9Offsets{
    {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}}};
// Order matches the cross [0 c1 0; c2 a c3; 0 c4 0]: up, left, right, down.
inline constexpr std::array<Offset, 4> kFiveOffsets{{{-1, 0}, {0, -1}, {0, 1}, {1, 0}}};
inline constexpr std::array<Offset, 2> kHorizontalOffsets{{{0, -1}, {0, 1}}};
inline constexpr std::array<Offset, 2> kVerticalOffsets{{{-1, 0}, {1, 0}}};
}  // namespace detail

/// Off-center taps in storage order.
inline std::span<const Offset> off_center_offsets(StencilKind s) {
  switch (s.type) {
    case StencilKind::Type::Full9:
      return detail::kFull9Offsets;
    case StencilKind::Type::Five:
      return detail::kFiveOffsets;
    case StencilKind::Type::Three1D:
      return s.direction == Direction::Horizontal ? std::span<const Offset>(detail::kHorizontalOffsets)
                                                  : std::span<const Offset>(detail::kVerticalOffsets);
    case StencilKind::Type::PointwiseOnly:
      break;
  }
  return {};
}

inline std::size_t off_center_size(StencilKind s) { return off_center_offsets(s).size(); }

/// Full stencil size r including the center tap.
inline std::size_t stencil_size(StencilKind s) { return off_center_size(s) + 1; }

/// Names used by the CLI and JSON documents: 9pt, 5pt, 3pt-h, 3pt-v, 1x1.
inline std::string to_string(StencilKind s) {
  switch (s.type) {
    case StencilKind::Type::Full9:
      return "9pt";
    case StencilKind::Type::Five:
      return "5pt";
    case StencilKind::Type::Three1D:
      return s.direction == Direction::Horizontal ? "3pt-h" : "3pt-v";
    case StencilKind::Type::PointwiseOnly:
      return "1x1";
  }
  return "?";
}

inline StencilKind parse_stencil(std::string_view name) {
  if (name == "9pt" || name == "full9") return StencilKind::full9();
  if (name == "5pt" || name == "five") return StencilKind::five();
  if (name == "3pt" || name == "3pt-h") return StencilKind::three(Direction::Horizontal);
  if (name == "3pt-v") return StencilKind::three(Direction::Vertical);
  if (name == "1x1" || name == "pointwise") return StencilKind::pointwise();
  throw std::invalid_argument("unknown stencil '" + std::string(name) + "'");
}

}  // namespace leanconv
