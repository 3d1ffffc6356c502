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
#include <filesystem>
#include <span>
#include <vector>

#include "flashhnsw/common.hpp"

namespace flashhnsw {

/// Dense row-major matrix of n vectors of dimension dim. Row i has id i.
class VectorDataset {
 public:
  VectorDataset() = default;
  VectorDataset(std::size_t n, std::size_t dim);
  VectorDataset(std::size_t n, std::size_t dim, std::vector<float> data);

  std::size_t size() const { return n_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return n_ == 0; }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<float> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  const float* data() const { return data_.data(); }
  float* data() { return data_.data(); }
  const std::vector<float>& values() const { return data_; }

  /// Rows [begin, end) as a new dataset.
  VectorDataset slice(std::size_t begin, std::size_t end) const;
  VectorDataset gather(std::span<const std::size_t> rows) const;

  /// Throws FormatError when any value is NaN or infinite.
  void check_finite() const;

  friend bool operator==(const VectorDataset& a, const VectorDataset& b) {
    return a.n_ == b.n_ && a.dim_ == b.dim_ && a.data_ == b.data_;
  }

 private:
  std::size_t n_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

struct Neighbor {
  vertex_id_t id = kInvalidVertex;
  float distance = 0.0F;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Ascending by distance, ties by ascending id.
inline bool neighbor_less(const Neighbor& a, const Neighbor& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
}

/// Exact k nearest neighbors per query; distances are squared Euclidean.
struct GroundTruth {
  std::size_t k = 0;
  std::vector<std::vector<Neighbor>> entries;
};

// fvecs: per record [int32 dim][dim x float32], little-endian.
VectorDataset load_fvecs(const std::filesystem::path& path);
void save_fvecs(const VectorDataset& dataset, const std::filesystem::path& path);

// ivecs: same layout with int32 payload.
std::vector<std::vector<std::int32_t>> load_ivecs(
    const std::filesystem::path& path);
void save_ivecs(const std::vector<std::vector<std::int32_t>>& rows,
                const std::filesystem::path& path);

/// Ground truth ids as ivecs rows (distances are recomputed on load).
void save_groundtruth(const GroundTruth& gt, const std::filesystem::path& path);
GroundTruth load_groundtruth(const std::filesystem::path& path,
                             const VectorDataset& base,
                             const VectorDataset& queries);

/// Shape of the synthetic mixture. Vectors live near a low-dimensional
/// latent subspace (decaying spectrum) plus isotropic noise, which gives
/// the uneven per-direction variance typical of embedding data.
struct SyntheticShape {
  std::size_t latent_dim = 128;  // clamped to the ambient dimension
  double spectrum_decay = 0.3;   // latent stddev of axis l is (1 + l)^-decay
  double center_scale = 1.0;     // cluster centers relative to latent spread
  double noise_stddev = 0.03;    // isotropic noise per ambient dimension
};

/// Gaussian mixture with `clusters` random centers. Every cluster shares the
/// same covariance, so the mean and per-dimension stddev are known exactly.
class SyntheticMixture {
 public:
  SyntheticMixture(std::size_t dim, std::size_t clusters, std::uint64_t seed,
                   SyntheticShape shape = {});

  std::size_t dim() const { return dim_; }
  std::size_t clusters() const { return centers_.size() / dim_; }
  std::span<const float> center(std::size_t c) const {
    return {centers_.data() + c * dim_, dim_};
  }
  /// Stddev of a sample around its center along ambient dimension j.
  double stddev(std::size_t j) const { return stddev_[j]; }

  /// Draws n vectors; the stream is fully determined by `stream_seed`.
  VectorDataset sample(std::size_t n, std::uint64_t stream_seed) const;

 private:
  std::size_t dim_;
  SyntheticShape shape_;
  std::vector<float> basis_;    // dim x latent, column l scaled by its stddev
  std::vector<float> centers_;  // clusters x dim
  std::vector<double> stddev_;
};

/// Deterministic for a fixed seed. Requires n, dim, clusters >= 1.
VectorDataset gen_synthetic(std::size_t n, std::size_t dim,
                            std::size_t clusters, std::uint64_t seed);

/// Held-out queries from the same mixture as gen_synthetic(.., seed), drawn
/// from a separate stream.
VectorDataset gen_synthetic_queries(std::size_t count, std::size_t dim,
                                    std::size_t clusters, std::uint64_t seed);

/// Uniform sample of `count` distinct rows (all rows when count >= n).
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count,
                                        std::uint64_t seed);

/// Exact top-k by squared Euclidean distance, ties by ascending id. Result is
/// independent of `threads` (0 = hardware concurrency).
GroundTruth brute_force_knn(const VectorDataset& base,
                            const VectorDataset& queries, std::size_t k,
                            std::size_t threads = 0);

}  // namespace flashhnsw
