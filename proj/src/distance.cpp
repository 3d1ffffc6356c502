// Copyright 2026-present the flashhnsw authors
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

#include "flashhnsw/distance.hpp"

#if defined(__AVX512F__) || defined(__AVX2__)
#include <immintrin.h>
#endif

namespace flashhnsw {

#if defined(__AVX512F__)

float l2_sqr(const float* a, const float* b, std::size_t dim) {
  __m512 acc0 = _mm512_setzero_ps();
  __m512 acc1 = _mm512_setzero_ps();
  std::size_t j = 0;
  for (; j + 32 <= dim; j += 32) {
    __m512 d0 = _mm512_sub_ps(_mm512_loadu_ps(a + j), _mm512_loadu_ps(b + j));
    __m512 d1 = _mm512_sub_ps(_mm512_loadu_ps(a + j + 16),
                              _mm512_loadu_ps(b + j + 16));
    acc0 = _mm512_fmadd_ps(d0, d0, acc0);
    acc1 = _mm512_fmadd_ps(d1, d1, acc1);
  }
  if (j + 16 <= dim) {
    __m512 d0 = _mm512_sub_ps(_mm512_loadu_ps(a + j), _mm512_loadu_ps(b + j));
    acc0 = _mm512_fmadd_ps(d0, d0, acc0);
    j += 16;
  }
  if (j < dim) {
    __mmask16 mask = static_cast<__mmask16>((1U << (dim - j)) - 1U);
    __m512 d0 = _mm512_sub_ps(_mm512_maskz_loadu_ps(mask, a + j),
                              _mm512_maskz_loadu_ps(mask, b + j));
    acc1 = _mm512_fmadd_ps(d0, d0, acc1);
  }
  return _mm512_reduce_add_ps(_mm512_add_ps(acc0, acc1));
}

float inner_product(const float* a, const float* b, std::size_t dim) {
  __m512 acc = _mm512_setzero_ps();
  std::size_t j = 0;
  for (; j + 16 <= dim; j += 16) {
    acc = _mm512_fmadd_ps(_mm512_loadu_ps(a + j), _mm512_loadu_ps(b + j), acc);
  }
  if (j < dim) {
    __mmask16 mask = static_cast<__mmask16>((1U << (dim - j)) - 1U);
    acc = _mm512_fmadd_ps(_mm512_maskz_loadu_ps(mask, a + j),
                          _mm512_maskz_loadu_ps(mask, b + j), acc);
  }
  return _mm512_reduce_add_ps(acc);
}

float l2_sqr_u8_weighted(const std::uint8_t* a, const std::uint8_t* b,
                         const float* weights, std::size_t dim) {
  __m512 acc = _mm512_setzero_ps();
  std::size_t j = 0;
  for (; j + 16 <= dim; j += 16) {
    __m512i ia = _mm512_cvtepu8_epi32(
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(a + j)));
    __m512i ib = _mm512_cvtepu8_epi32(
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(b + j)));
    __m512 d = _mm512_cvtepi32_ps(_mm512_sub_epi32(ia, ib));
    acc = _mm512_fmadd_ps(_mm512_mul_ps(d, d), _mm512_loadu_ps(weights + j),
                          acc);
  }
  float sum = _mm512_reduce_add_ps(acc);
  for (; j < dim; ++j) {
    float d = static_cast<float>(a[j]) - static_cast<float>(b[j]);
    sum += weights[j] * d * d;
  }
  return sum;
}

#elif defined(__AVX2__)

namespace {
inline float hsum256(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_hadd_ps(lo, lo);
  lo = _mm_hadd_ps(lo, lo);
  return _mm_cvtss_f32(lo);
}
}  // namespace

float l2_sqr(const float* a, const float* b, std::size_t dim) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t j = 0;
  for (; j + 8 <= dim; j += 8) {
    __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + j), _mm256_loadu_ps(b + j));
    acc = _mm256_fmadd_ps(d, d, acc);
  }
  float sum = hsum256(acc);
  for (; j < dim; ++j) {
    float d = a[j] - b[j];
    sum += d * d;
  }
  return sum;
}

float inner_product(const float* a, const float* b, std::size_t dim) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t j = 0;
  for (; j + 8 <= dim; j += 8) {
    acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + j), _mm256_loadu_ps(b + j), acc);
  }
  float sum = hsum256(acc);
  for (; j < dim; ++j) sum += a[j] * b[j];
  return sum;
}

float l2_sqr_u8_weighted(const std::uint8_t* a, const std::uint8_t* b,
                         const float* weights, std::size_t dim) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t j = 0;
  for (; j + 8 <= dim; j += 8) {
    __m256i ia = _mm256_cvtepu8_epi32(
        _mm_loadl_epi64(reinterpret_cast<const __m128i*>(a + j)));
    __m256i ib = _mm256_cvtepu8_epi32(
        _mm_loadl_epi64(reinterpret_cast<const __m128i*>(b + j)));
    __m256 d = _mm256_cvtepi32_ps(_mm256_sub_epi32(ia, ib));
    acc = _mm256_fmadd_ps(_mm256_mul_ps(d, d), _mm256_loadu_ps(weights + j),
                          acc);
  }
  float sum = hsum256(acc);
  for (; j < dim; ++j) {
    float d = static_cast<float>(a[j]) - static_cast<float>(b[j]);
    sum += weights[j] * d * d;
  }
  return sum;
}

#else

float l2_sqr(const float* a, const float* b, std::size_t dim) {
  float sum = 0.0F;
  for (std::size_t j = 0; j < dim; ++j) {
    float d = a[j] - b[j];
    sum += d * d;
  }
  return sum;
}

float inner_product(const float* a, const float* b, std::size_t dim) {
  float sum = 0.0F;
  for (std::size_t j = 0; j < dim; ++j) sum += a[j] * b[j];
  return sum;
}

float l2_sqr_u8_weighted(const std::uint8_t* a, const std::uint8_t* b,
                         const float* weights, std::size_t dim) {
  float sum = 0.0F;
  for (std::size_t j = 0; j < dim; ++j) {
    float d = static_cast<float>(a[j]) - static_cast<float>(b[j]);
    sum += weights[j] * d * d;
  }
  return sum;
}

#endif

double l2_sqr_f64(const double* a, const double* b, std::size_t dim) {
  double sum = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    double d = a[j] - b[j];
    sum += d * d;
  }
  return sum;
}

}  // namespace flashhnsw
