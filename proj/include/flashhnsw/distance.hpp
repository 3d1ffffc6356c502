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

namespace flashhnsw {

/// Squared Euclidean distance over `dim` floats (SIMD where available).
float l2_sqr(const float* a, const float* b, std::size_t dim);

/// Squared Euclidean distance over `dim` uint8 codes with per-dimension
/// weights: sum_j w[j] * (a[j] - b[j])^2.
float l2_sqr_u8_weighted(const std::uint8_t* a, const std::uint8_t* b,
                         const float* weights, std::size_t dim);

double l2_sqr_f64(const double* a, const double* b, std::size_t dim);

float inner_product(const float* a, const float* b, std::size_t dim);

}  // namespace flashhnsw
