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

/// Mean-centered principal component basis, components in descending
/// eigenvalue order.
class PCAModel {
 public:
  PCAModel() = default;

  std::size_t dim() const { return dim_; }
  /// Number of components selected by the variance fraction at train time.
  std::size_t retained() const { return retained_; }
  /// Number of stored components (rows of the basis).
  std::size_t components() const { return components_; }
  std::span<const float> mean() const { return mean_; }
  std::span<const double> eigenvalues() const { return eigenvalues_; }
  /// Row i is the unit eigenvector a_i.
  std::span<const float> component(std::size_t i) const {
    return {basis_.data() + i * dim_, dim_};
  }

  /// Smallest d with cumulative variance ratio >= alpha.
  std::size_t dim_for_variance(double alpha) const;

  /// out[0..d) = A_{1:d}^T (u - mean).
  void project(const float* u, std::size_t d, float* out) const;
  std::vector<float> project(std::span<const float> u, std::size_t d) const;
  /// Projects every row (n x d result).
  VectorDataset project_all(const VectorDataset& data, std::size_t d) const;

  /// Keeps only the first d components.
  PCAModel truncated(std::size_t d) const;

  void save(BinaryWriter& out) const;
  static PCAModel load(BinaryReader& in);

  friend PCAModel pca_train(const VectorDataset& sample, double alpha);

 private:
  std::size_t dim_ = 0;
  std::size_t retained_ = 0;
  std::size_t components_ = 0;
  std::vector<float> mean_;
  std::vector<float> basis_;  // components_ x dim_
  std::vector<double> eigenvalues_;  // all dim_ eigenvalues, non-increasing
};

/// Eigendecomposition of the (1/n) covariance; alpha in (0, 1].
PCAModel pca_train(const VectorDataset& sample, double alpha);

}  // namespace flashhnsw
