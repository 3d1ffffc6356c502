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

#include "flashhnsw/flash_kernel.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cstdlib>
#include <limits>

#include "flashhnsw/common.hpp"

namespace flashhnsw {

namespace {

template <class Lane>
void scalar_kernel(const std::uint8_t* adt, const std::uint8_t* codes,
                   std::size_t m, Lane* out) {
  constexpr unsigned kMax = std::numeric_limits<Lane>::max();
  for (std::size_t j = 0; j < 16; ++j) {
    unsigned sum = 0;
    for (std::size_t i = 0; i < m; ++i) {
      sum += adt[16 * i + (codes[16 * i + j] & 0x0f)];
      sum = std::min(sum, kMax);
    }
    out[j] = static_cast<Lane>(sum);
  }
}

__attribute__((target("ssse3"))) void v128_u8(const std::uint8_t* adt,
                                              const std::uint8_t* codes,
                                              std::size_t m,
                                              std::uint8_t* out) {
  __m128i acc = _mm_setzero_si128();
  for (std::size_t i = 0; i < m; ++i) {
    __m128i t = _mm_loadu_si128(reinterpret_cast<const __m128i*>(adt + 16 * i));
    __m128i c =
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(codes + 16 * i));
    acc = _mm_adds_epu8(acc, _mm_shuffle_epi8(t, c));
  }
  _mm_storeu_si128(reinterpret_cast<__m128i*>(out), acc);
}

__attribute__((target("avx2"))) void v256_u8(const std::uint8_t* adt,
                                             const std::uint8_t* codes,
                                             std::size_t m,
                                             std::uint8_t* out) {
  // Each 256-bit load covers two subspaces; vpshufb works per 128-bit half.
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 2 <= m; i += 2) {
    __m256i t =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(adt + 16 * i));
    __m256i c =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(codes + 16 * i));
    acc = _mm256_adds_epu8(acc, _mm256_shuffle_epi8(t, c));
  }
  __m128i sum = _mm_adds_epu8(_mm256_castsi256_si128(acc),
                              _mm256_extracti128_si256(acc, 1));
  if (i < m) {
    __m128i t = _mm_loadu_si128(reinterpret_cast<const __m128i*>(adt + 16 * i));
    __m128i c =
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(codes + 16 * i));
    sum = _mm_adds_epu8(sum, _mm_shuffle_epi8(t, c));
  }
  _mm_storeu_si128(reinterpret_cast<__m128i*>(out), sum);
}

__attribute__((target("avx512bw"))) void v512_u8(const std::uint8_t* adt,
                                                 const std::uint8_t* codes,
                                                 std::size_t m,
                                                 std::uint8_t* out) {
  __m512i acc = _mm512_setzero_si512();
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    __m512i t = _mm512_loadu_si512(adt + 16 * i);
    __m512i c = _mm512_loadu_si512(codes + 16 * i);
    acc = _mm512_adds_epu8(acc, _mm512_shuffle_epi8(t, c));
  }
  __m256i half = _mm256_adds_epu8(_mm512_castsi512_si256(acc),
                                  _mm512_extracti64x4_epi64(acc, 1));
  __m128i sum = _mm_adds_epu8(_mm256_castsi256_si128(half),
                              _mm256_extracti128_si256(half, 1));
  for (; i < m; ++i) {
    __m128i t = _mm_loadu_si128(reinterpret_cast<const __m128i*>(adt + 16 * i));
    __m128i c =
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(codes + 16 * i));
    sum = _mm_adds_epu8(sum, _mm_shuffle_epi8(t, c));
  }
  _mm_storeu_si128(reinterpret_cast<__m128i*>(out), sum);
}

__attribute__((target("sse4.1"))) void v128_u16(const std::uint8_t* adt,
                                                const std::uint8_t* codes,
                                                std::size_t m,
                                                std::uint16_t* out) {
  __m128i lo = _mm_setzero_si128();
  __m128i hi = _mm_setzero_si128();
  for (std::size_t i = 0; i < m; ++i) {
    __m128i t = _mm_loadu_si128(reinterpret_cast<const __m128i*>(adt + 16 * i));
    __m128i c =
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(codes + 16 * i));
    __m128i s = _mm_shuffle_epi8(t, c);
    lo = _mm_adds_epu16(lo, _mm_cvtepu8_epi16(s));
    hi = _mm_adds_epu16(hi, _mm_cvtepu8_epi16(_mm_srli_si128(s, 8)));
  }
  _mm_storeu_si128(reinterpret_cast<__m128i*>(out), lo);
  _mm_storeu_si128(reinterpret_cast<__m128i*>(out + 8), hi);
}

__attribute__((target("avx2"))) void v256_u16(const std::uint8_t* adt,
                                              const std::uint8_t* codes,
                                              std::size_t m,
                                              std::uint16_t* out) {
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 2 <= m; i += 2) {
    __m256i t =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(adt + 16 * i));
    __m256i c =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(codes + 16 * i));
    __m256i s = _mm256_shuffle_epi8(t, c);
    acc = _mm256_adds_epu16(
        acc, _mm256_cvtepu8_epi16(_mm256_castsi256_si128(s)));
    acc = _mm256_adds_epu16(
        acc, _mm256_cvtepu8_epi16(_mm256_extracti128_si256(s, 1)));
  }
  if (i < m) {
    __m128i t = _mm_loadu_si128(reinterpret_cast<const __m128i*>(adt + 16 * i));
    __m128i c =
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(codes + 16 * i));
    acc = _mm256_adds_epu16(acc,
                            _mm256_cvtepu8_epi16(_mm_shuffle_epi8(t, c)));
  }
  _mm256_storeu_si256(reinterpret_cast<__m256i*>(out), acc);
}

__attribute__((target("avx512bw"))) void v512_u16(const std::uint8_t* adt,
                                                  const std::uint8_t* codes,
                                                  std::size_t m,
                                                  std::uint16_t* out) {
  // Lanes 0-15 and 16-31 of acc hold partial sums of different subspaces.
  __m512i acc = _mm512_setzero_si512();
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    __m512i t = _mm512_loadu_si512(adt + 16 * i);
    __m512i c = _mm512_loadu_si512(codes + 16 * i);
    __m512i s = _mm512_shuffle_epi8(t, c);
    acc = _mm512_adds_epu16(
        acc, _mm512_cvtepu8_epi16(_mm512_castsi512_si256(s)));
    acc = _mm512_adds_epu16(
        acc, _mm512_cvtepu8_epi16(_mm512_extracti64x4_epi64(s, 1)));
  }
  __m256i sum = _mm256_adds_epu16(_mm512_castsi512_si256(acc),
                                  _mm512_extracti64x4_epi64(acc, 1));
  for (; i < m; ++i) {
    __m128i t = _mm_loadu_si128(reinterpret_cast<const __m128i*>(adt + 16 * i));
    __m128i c =
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(codes + 16 * i));
    sum = _mm256_adds_epu16(sum,
                            _mm256_cvtepu8_epi16(_mm_shuffle_epi8(t, c)));
  }
  _mm256_storeu_si256(reinterpret_cast<__m256i*>(out), sum);
}

}  // namespace

void batch_distance_scalar(const std::uint8_t* adt, const std::uint8_t* codes,
                           std::size_t m, std::uint8_t* out) {
  scalar_kernel(adt, codes, m, out);
}

void batch_distance_scalar(const std::uint8_t* adt, const std::uint8_t* codes,
                           std::size_t m, std::uint16_t* out) {
  scalar_kernel(adt, codes, m, out);
}

KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "auto") return KernelKind::kAuto;
  if (name == "scalar") return KernelKind::kScalar;
  if (name == "vector128") return KernelKind::kVector128;
  if (name == "vector256") return KernelKind::kVector256;
  if (name == "vector512") return KernelKind::kVector512;
  throw ConfigError("unknown kernel '" + std::string(name) +
                    "' (auto|scalar|vector128|vector256|vector512)");
}

const char* kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::kAuto:
      return "auto";
    case KernelKind::kScalar:
      return "scalar";
    case KernelKind::kVector128:
      return "vector128";
    case KernelKind::kVector256:
      return "vector256";
    case KernelKind::kVector512:
      return "vector512";
  }
  return "unknown";
}

bool kernel_supported(KernelKind kind) {
  __builtin_cpu_init();
  switch (kind) {
    case KernelKind::kAuto:
    case KernelKind::kScalar:
      return true;
    case KernelKind::kVector128:
      return __builtin_cpu_supports("ssse3") &&
             __builtin_cpu_supports("sse4.1");
    case KernelKind::kVector256:
      return __builtin_cpu_supports("avx2");
    case KernelKind::kVector512:
      return __builtin_cpu_supports("avx512bw");
  }
  return false;
}

KernelKind resolve_kernel(KernelKind requested) {
  if (requested == KernelKind::kAuto) {
    for (KernelKind k : {KernelKind::kVector512, KernelKind::kVector256,
                         KernelKind::kVector128}) {
      if (kernel_supported(k)) return k;
    }
    return KernelKind::kScalar;
  }
  if (!kernel_supported(requested)) {
    throw ConfigError(std::string("kernel ") + kernel_name(requested) +
                      " is not supported by this CPU");
  }
  return requested;
}

KernelKind kernel_from_environment(KernelKind requested) {
  const char* env = std::getenv("FLASH_ANN_KERNEL");
  if (env == nullptr || *env == '\0') return requested;
  return parse_kernel_kind(env);
}

BatchKernelU8 batch_kernel_u8(KernelKind kind) {
  switch (resolve_kernel(kind)) {
    case KernelKind::kVector128:
      return &v128_u8;
    case KernelKind::kVector256:
      return &v256_u8;
    case KernelKind::kVector512:
      return &v512_u8;
    default:
      return &scalar_kernel<std::uint8_t>;
  }
}

BatchKernelU16 batch_kernel_u16(KernelKind kind) {
  switch (resolve_kernel(kind)) {
    case KernelKind::kVector128:
      return &v128_u16;
    case KernelKind::kVector256:
      return &v256_u16;
    case KernelKind::kVector512:
      return &v512_u16;
    default:
      return &scalar_kernel<std::uint16_t>;
  }
}

}  // namespace flashhnsw
