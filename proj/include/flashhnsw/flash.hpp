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
#include <limits>
#include <span>
#include <vector>

#include "flashhnsw/binary_io.hpp"
#include "flashhnsw/pca.hpp"
#include "flashhnsw/vectorio.hpp"

namespace flashhnsw {

inline constexpr std::size_t kFlashK = 16;      // centroids per subspace
inline constexpr std::size_t kFlashBits = 4;    // codeword length
inline constexpr std::size_t kFlashH = 8;       // bits per quantized distance
inline constexpr unsigned kFlashLevels = 255;   // 2^H - 1

struct FlashParams {
  std::size_t d_F = 64;
  std::size_t M_F = 16;
  std::size_t kmeans_iters = 25;
  std::uint64_t seed = 0;
};

/// Codeword and quantized ADT of one vector. The ADT has M_F rows of 16
/// entries; row i entry j is eta(|u_i - c_ij|^2).
struct FlashQuery {
  std::vector<std::uint8_t> code;
  std::vector<std::uint8_t> adt;
};

/// PCA rotation, M_F codebooks of 16 centroids over the leading d_F
/// components, and the global distance quantizer shared by ADT and SDT.
class FlashModel {
 public:
  FlashModel() = default;

  std::size_t dim() const { return pca_.dim(); }
  std::size_t reduced_dim() const { return d_F_; }
  std::size_t subspaces() const { return m_; }
  std::size_t sub_begin(std::size_t i) const { return offsets_[i]; }
  std::size_t sub_dim(std::size_t i) const {
    return offsets_[i + 1] - offsets_[i];
  }
  /// Full-rank rotation; the first d_F components define the code space.
  const PCAModel& pca() const { return pca_; }
  const float* centroid(std::size_t i, std::size_t j) const {
    return centroids_.data() + kFlashK * offsets_[i] + j * sub_dim(i);
  }

  float dist_min() const { return dist_min_; }
  float dist_max() const { return dist_max_; }
  float delta() const { return delta_; }
  std::span<const float> sub_dist_min() const { return sub_min_; }
  std::span<const float> sub_dist_max() const { return sub_max_; }

  /// floor((clamp(d) - dist_min) / delta * 255); dist_max maps to 255.
  std::uint8_t quantize(float dist) const;
  /// Lower edge of the quantization bucket.
  double dequantize(std::uint8_t q) const {
    return static_cast<double>(dist_min_) +
           static_cast<double>(q) * static_cast<double>(delta_) / kFlashLevels;
  }

  /// SDT of subspace i: 16 x 16 row-major.
  const std::uint8_t* sdt(std::size_t i) const {
    return sdt_.data() + i * kFlashK * kFlashK;
  }
  /// Saturating sum of SDT entries in Lane-wide arithmetic.
  template <class Lane>
  Lane sdt_sum(const std::uint8_t* a, const std::uint8_t* b) const {
    constexpr unsigned kMax = std::numeric_limits<Lane>::max();
    unsigned sum = 0;
    for (std::size_t i = 0; i < m_; ++i) {
      sum += sdt_[(i * kFlashK + a[i]) * kFlashK + b[i]];
    }
    return static_cast<Lane>(sum < kMax ? sum : kMax);
  }
  /// Checked form; throws on length mismatch or codeword >= 16.
  unsigned sdt_distance(std::span<const std::uint8_t> a,
                        std::span<const std::uint8_t> b) const;

  /// Projection of a raw vector onto the d_F code space.
  void project(const float* x, float* out) const;
  VectorDataset project_all(const VectorDataset& data) const;

  /// One pass over the 16 centroids per subspace: argmin (lowest index on
  /// ties) and the quantized row from the same distances.
  void encode_and_adt_projected(const float* projected, std::uint8_t* code,
                                std::uint8_t* adt) const;
  FlashQuery encode_and_adt(std::span<const float> x) const;

  /// Separate paths, used to cross-check the fused one.
  void encode_projected(const float* projected, std::uint8_t* code) const;
  void adt_projected(const float* projected, std::uint8_t* adt) const;

  /// Concatenated centroids of a code (d_F floats).
  std::vector<float> decode(std::span<const std::uint8_t> code) const;

  void save(BinaryWriter& out) const;
  static FlashModel load(BinaryReader& in);

  friend FlashModel flash_train(const VectorDataset&, const FlashParams&);

 private:
  void finalize();

  PCAModel pca_;
  std::size_t d_F_ = 0;
  std::size_t m_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<float> centroids_;  // subspace i: 16 x sub_dim(i)
  std::vector<float> sub_min_;
  std::vector<float> sub_max_;
  float dist_min_ = 0.0F;
  float dist_max_ = 0.0F;
  float delta_ = 0.0F;
  std::vector<std::uint8_t> sdt_;  // m x 16 x 16
};

/// Requires sample.size() >= 160, 1 <= M_F <= d_F <= D.
FlashModel flash_train(const VectorDataset& sample, const FlashParams& params);

}  // namespace flashhnsw
