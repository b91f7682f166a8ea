/* Copyright 2026 The rgpnet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef RGP_SRC_GEMM_HPP_
#define RGP_SRC_GEMM_HPP_

#include <cstddef>
#include <cstdint>

namespace rgp {
namespace detail {

// C[M,N] += A[M,K] * B[K,N], all row-major. The j loop vectorizes.
inline void gemm_acc(const float* A, const float* B, float* C, int64_t M,
                     int64_t K, int64_t N) {
  for (int64_t i = 0; i < M; ++i) {
    const float* a = A + i * K;
    float* c = C + i * N;
    for (int64_t k = 0; k < K; ++k) {
      const float av = a[k];
      const float* b = B + k * N;
      for (int64_t j = 0; j < N; ++j) c[j] += av * b[j];
    }
  }
}

// C[M,N] += A[M,K] * B[N,K]^T (dot products over K).
inline void gemm_nt_acc(const float* A, const float* B, float* C, int64_t M,
                        int64_t K, int64_t N) {
  for (int64_t i = 0; i < M; ++i) {
    const float* a = A + i * K;
    float* c = C + i * N;
    for (int64_t j = 0; j < N; ++j) {
      const float* b = B + j * K;
      float acc = 0.0f;
      for (int64_t k = 0; k < K; ++k) acc += a[k] * b[k];
      c[j] += acc;
    }
  }
}

// C[K,N] += A[M,K]^T * B[M,N].
inline void gemm_tn_acc(const float* A, const float* B, float* C, int64_t M,
                        int64_t K, int64_t N) {
  for (int64_t i = 0; i < M; ++i) {
    const float* a = A + i * K;
    const float* b = B + i * N;
    for (int64_t k = 0; k < K; ++k) {
      const float av = a[k];
      float* c = C + k * N;
      for (int64_t j = 0; j < N; ++j) c[j] += av * b[j];
    }
  }
}

}  // namespace detail
}  // namespace rgp

#endif  // RGP_SRC_GEMM_HPP_
