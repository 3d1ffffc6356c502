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

#include "flashhnsw/binary_io.hpp"
#include "flashhnsw/vectorio.hpp"

namespace flashhnsw {

/// Product quantizer: M subspaces, 2^nbits centroids each, one byte per
/// codeword. Subspaces may differ in size by one dimension.
class PQModel {
 public:
  PQModel() = default;

  std::size_t dim() const { return dim_; }
  std::size_t subspaces() const { return m_; }
  std::size_t nbits() const { return nbits_; }
  std::size_t ksub() const { return ksub_; }
  std::size_t sub_begin(std::size_t i) const { return offsets_[i]; }
  std::size_t sub_dim(std::size_t i) const {
    return offsets_[i + 1] - offsets_[i];
  }
  const float* centroid(std::size_t i, std::size_t j) const {
    return centroids_.data() + ksub_ * offsets_[i] + j * sub_dim(i);
  }

  void encode(const float* x, std::uint8_t* code) const;
  void decode(const std::uint8_t* code, float* out) const;
  /// table[i * ksub + j] = |x_i - c_ij|^2.
  void adc_table(const float* query, float* table) const;
  std::vector<float> adc_table(std::span<const float> query) const;
  /// Sum of precomputed centroid-pair distances. Throws on codewords >= ksub.
  float sdc_distance(std::span<const std::uint8_t> a,
                     std::span<const std::uint8_t> b) const;
  float sdc_distance_unchecked(const std::uint8_t* a,
                               const std::uint8_t* b) const {
    float sum = 0.0F;
    const float* t = sdc_.data();
    for (std::size_t i = 0; i < m_; ++i, t += ksub_ * ksub_) {
      sum += t[a[i] * ksub_ + b[i]];
    }
    return sum;
  }

  void save(BinaryWriter& out) const;
  static PQModel load(BinaryReader& in);

  friend PQModel pq_train(const VectorDataset&, std::size_t, std::size_t,
                          std::size_t, std::uint64_t);

 private:
  void build_sdc();

  std::size_t dim_ = 0;
  std::size_t m_ = 0;
  std::size_t nbits_ = 0;
  std::size_t ksub_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<float> centroids_;  // subspace i: ksub x sub_dim(i), in order
  std::vector<float> sdc_;        // m x ksub x ksub
};

/// Per-subspace k-means with k = 2^nbits (nbits in [1, 8]).
/// Requires sample.size() >= 2^nbits.
PQModel pq_train(const VectorDataset& sample, std::size_t subspaces,
                 std::size_t nbits, std::size_t kmeans_iters = 25,
                 std::uint64_t seed = 0);

/// Per-dimension affine scalar quantizer onto [0, 2^nbits - 1].
class SQModel {
 public:
  SQModel() = default;

  std::size_t dim() const { return dim_; }
  std::size_t nbits() const { return nbits_; }
  std::uint32_t levels() const { return (1U << nbits_) - 1U; }
  std::span<const float> vmin() const { return vmin_; }
  std::span<const float> vmax() const { return vmax_; }
  /// Squared step per dimension; weights of the integer-domain distance.
  std::span<const float> weights() const { return weights_; }

  /// Round-half-even with clamping; constant dimensions encode to 0.
  void encode(const float* x, std::uint8_t* code) const;
  void decode(const std::uint8_t* code, float* out) const;
  /// Squared distance between the decoded vectors, computed on the codes.
  float distance(const std::uint8_t* a, const std::uint8_t* b) const;

  void save(BinaryWriter& out) const;
  static SQModel load(BinaryReader& in);

  friend SQModel sq_train(const VectorDataset&, std::size_t);

 private:
  std::size_t dim_ = 0;
  std::size_t nbits_ = 8;
  std::vector<float> vmin_;
  std::vector<float> vmax_;
  std::vector<float> step_;
  std::vector<float> weights_;
};

SQModel sq_train(const VectorDataset& data, std::size_t nbits = 8);

}  // namespace flashhnsw
