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

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace flashhnsw {

/// Shuffle-lookup kernels for one 16-lane batch. `adt` holds m rows of 16
/// quantized distances; `codes` holds m groups of 16 codewords (group i is
/// subspace i, byte j is lane j). Codewords must be < 16.
/// out[j] = saturating sum over i of adt[16 i + codes[16 i + j]].
enum class KernelKind { kAuto, kScalar, kVector128, kVector256, kVector512 };

KernelKind parse_kernel_kind(std::string_view name);
const char* kernel_name(KernelKind kind);
bool kernel_supported(KernelKind kind);
/// kAuto becomes the widest supported kernel; an unsupported explicit
/// choice throws ConfigError.
KernelKind resolve_kernel(KernelKind requested);
/// FLASH_ANN_KERNEL, when set and non-empty, replaces `requested`.
KernelKind kernel_from_environment(KernelKind requested);

using BatchKernelU8 = void (*)(const std::uint8_t* adt,
                               const std::uint8_t* codes, std::size_t m,
                               std::uint8_t* out);
using BatchKernelU16 = void (*)(const std::uint8_t* adt,
                                const std::uint8_t* codes, std::size_t m,
                                std::uint16_t* out);

/// Reference definition of the batch distance.
void batch_distance_scalar(const std::uint8_t* adt, const std::uint8_t* codes,
                           std::size_t m, std::uint8_t* out);
void batch_distance_scalar(const std::uint8_t* adt, const std::uint8_t* codes,
                           std::size_t m, std::uint16_t* out);

/// Kernel for a resolved kind (kAuto is resolved first).
BatchKernelU8 batch_kernel_u8(KernelKind kind);
BatchKernelU16 batch_kernel_u16(KernelKind kind);

template <class Lane>
auto batch_kernel(KernelKind kind) {
  if constexpr (sizeof(Lane) == 1) {
    return batch_kernel_u8(kind);
  } else {
    return batch_kernel_u16(kind);
  }
}

}  // namespace flashhnsw
