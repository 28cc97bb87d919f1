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

namespace leanconv::gemm {

// Register tile: kMr rows of C by kNr<T> columns, kept in a local array the
// compiler maps onto vector registers.
inline constexpr std::size_t kMr = 4;
template <typename T>
inline constexpr std::size_t kNr = 128 / sizeof(T);
inline constexpr std::size_t kKc = 256;

namespace detail {

// C[0:kMr, 0:kNr] += A(m, k) * B[k, 0:kNr] with A addressed as
// a[m * a_rs + k * a_cs].
template <typename T>
inline void micro_full(std::size_t kc, const T* __restrict a, std::size_t a_rs, std::size_t a_cs,
                       const T* __restrict b, std::size_t ldb, T* __restrict c, std::size_t ldc) {
  constexpr std::size_t nr = kNr<T>;
  T acc[kMr][nr];
  for (std::size_t r = 0; r < kMr; ++r)
    for (std::size_t j = 0; j < nr; ++j) acc[r][j] = c[r * ldc + j];
  for (std::size_t k = 0; k < kc; ++k) {
    const T* bk = b + k * ldb;
    const T a0 = a[0 * a_rs + k * a_cs];
    const T a1 = a[1 * a_rs + k * a_cs];
    const T a2 = a[2 * a_rs + k * a_cs];
    const T a3 = a[3 * a_rs + k * a_cs];
    for (std::size_t j = 0; j < nr; ++j) {
      const T bv = bk[j];
      acc[0][j] += a0 * bv;
      acc[1][j] += a1 * bv;
      acc[2][j] += a2 * bv;
      acc[3][j] += a3 * bv;
    }
  }
  for (std::size_t r = 0; r < kMr; ++r)
    for (std::size_t j = 0; j < nr; ++j) c[r * ldc + j] = acc[r][j];
}

// Edge tile of mr x nr (mr <= kMr, nr <= kNr).
template <typename T>
inline void micro_edge(std::size_t mr, std::size_t nr, std::size_t kc, const T* a, std::size_t a_rs,
                       std::size_t a_cs, const T* b, std::size_t ldb, T* c, std::size_t ldc) {
  for (std::size_t r = 0; r < mr; ++r) {
    T* cr = c + r * ldc;
    for (std::size_t k = 0; k < kc; ++k) {
      const T av = a[r * a_rs + k * a_cs];
      const T* bk = b + k * ldb;
      for (std::size_t j = 0; j < nr; ++j) cr[j] += av * bk[j];
    }
  }
}

template <typename T>
void strided(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t a_rs,
             std::size_t a_cs, const T* b, std::size_t ldb, T* c, std::size_t ldc) {
  constexpr std::size_t nr = kNr<T>;
  for (std::size_t k0 = 0; k0 < k; k0 += kKc) {
    const std::size_t kc = std::min(kKc, k - k0);
    const T* ak = a + k0 * a_cs;
    const T* bk = b + k0 * ldb;
    for (std::size_t j0 = 0; j0 < n; j0 += nr) {
      const std::size_t nb = std::min(nr, n - j0);
      for (std::size_t i0 = 0; i0 < m; i0 += kMr) {
        const std::size_t mb = std::min(kMr, m - i0);
        const T* ai = ak + i0 * a_rs;
        T* cij = c + i0 * ldc + j0;
        if (mb == kMr && nb == nr) {
          micro_full(kc, ai, a_rs, a_cs, bk + j0, ldb, cij, ldc);
        } else {
          micro_edge(mb, nb, kc, ai, a_rs, a_cs, bk + j0, ldb, cij, ldc);
        }
      }
    }
  }
}

}  // namespace detail

/// C (m x n) += A (m x k) * B (k x n); all row-major.
template <typename T>
void nn(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
        std::size_t ldb, T* c, std::size_t ldc) {
  detail::strided(m, n, k, a, lda, std::size_t{1}, b, ldb, c, ldc);
}

/// C (m x n) += A^T * B with A stored k x m.
template <typename T>
void tn(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
        std::size_t ldb, T* c, std::size_t ldc) {
  detail::strided(m, n, k, a, std::size_t{1}, lda, b, ldb, c, ldc);
}

/// Dot product with a fixed 8-lane partial-sum order (vectorizes without
/// reassociation flags, deterministic).
template <typename T>
T dot(const T* __restrict a, const T* __restrict b, std::size_t n) {
  constexpr std::size_t kLanes = 8;
  T part[kLanes] = {};
  std::size_t k = 0;
  for (; k + kLanes <= n; k += kLanes)
    for (std::size_t j = 0; j < kLanes; ++j) part[j] += a[k + j] * b[k + j];
  T s = 0;
  for (std::size_t j = 0; j < kLanes; ++j) s += part[j];
  for (; k < n; ++k) s += a[k] * b[k];
  return s;
}

/// C (m x n) += A * B^T with A stored m x k and B stored n x k.
template <typename T>
void nt(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
        std::size_t ldb, T* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * ldc + j] += dot(a + i * lda, b + j * ldb, k);
}

}  // namespace leanconv::gemm
