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
#include <span>
#include <vector>

namespace flashhnsw {

struct KMeansParams {
  std::size_t k = 16;
  std::size_t iterations = 25;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<float> centroids;          // k x dim
  std::vector<std::uint32_t> assignment;  // per training point
  std::vector<double> inertia;            // after each assignment step
};

/// Lloyd's k-means with k-means++ seeding over n row-major points. Empty
/// clusters are reseeded to the point farthest from its centroid.
/// Requires n >= k.
KMeansResult kmeans(std::span<const float> points, std::size_t n,
                    std::size_t dim, const KMeansParams& params);

/// Index of the nearest centroid (lowest index on ties).
std::uint32_t nearest_centroid(const float* x, const float* centroids,
                               std::size_t k, std::size_t dim);

/// Split of `dim` into `parts` contiguous ranges: the first dim % parts
/// ranges get one extra dimension. Returns parts + 1 offsets.
std::vector<std::size_t> subspace_offsets(std::size_t dim, std::size_t parts);

}  // namespace flashhnsw
