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

#include "flashhnsw/pca.hpp"

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "flashhnsw/common.hpp"

namespace flashhnsw {

namespace {
using RowMatrixF =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixD =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
constexpr std::uint32_t kPcaTag = 0x50434131;  // "PCA1"
}  // namespace

PCAModel pca_train(const VectorDataset& sample, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ConfigError("pca alpha must be in (0, 1]");
  }
  if (sample.size() < 2) throw ConfigError("pca needs at least 2 samples");
  const std::size_t n = sample.size();
  const std::size_t dim = sample.dim();
  const auto d = static_cast<Eigen::Index>(dim);

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (std::size_t i = 0; i < n; ++i) {
    mean += Eigen::Map<const Eigen::VectorXf>(sample.row(i).data(), d)
                .cast<double>();
  }
  mean /= static_cast<double>(n);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  constexpr std::size_t kChunk = 2048;
  Eigen::MatrixXd centered;
  for (std::size_t begin = 0; begin < n; begin += kChunk) {
    std::size_t rows = std::min(kChunk, n - begin);
    Eigen::Map<const RowMatrixF> x(sample.row(begin).data(),
                                   static_cast<Eigen::Index>(rows), d);
    centered = x.cast<double>().transpose();
    centered.colwise() -= mean;
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centered);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("pca eigendecomposition failed");
  }
  PCAModel model;
  model.dim_ = dim;
  model.components_ = dim;
  model.mean_.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    model.mean_[j] = static_cast<float>(mean[static_cast<Eigen::Index>(j)]);
  }
  model.eigenvalues_.resize(dim);
  model.basis_.resize(dim * dim);
  for (std::size_t i = 0; i < dim; ++i) {
    // Eigen returns ascending order.
    auto src = static_cast<Eigen::Index>(dim - 1 - i);
    model.eigenvalues_[i] = std::max(0.0, solver.eigenvalues()[src]);
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    for (std::size_t j = 0; j < dim; ++j) {
      model.basis_[i * dim + j] =
          static_cast<float>(v[static_cast<Eigen::Index>(j)]);
    }
  }
  model.retained_ = model.dim_for_variance(alpha);
  return model;
}

std::size_t PCAModel::dim_for_variance(double alpha) const {
  double total = 0.0;
  for (double v : eigenvalues_) total += v;
  if (total <= 0.0) return 1;
  double acc = 0.0;
  for (std::size_t i = 0; i < eigenvalues_.size(); ++i) {
    acc += eigenvalues_[i];
    // Tolerate rounding when alpha = 1.
    if (acc / total >= alpha - 1e-12) return i + 1;
  }
  return eigenvalues_.size();
}

void PCAModel::project(const float* u, std::size_t d, float* out) const {
  if (d > components_) throw std::invalid_argument("pca: d exceeds basis");
  const auto D = static_cast<Eigen::Index>(dim_);
  Eigen::Map<const RowMatrixF> basis(basis_.data(),
                                     static_cast<Eigen::Index>(d), D);
  Eigen::VectorXf centered = Eigen::Map<const Eigen::VectorXf>(u, D) -
                             Eigen::Map<const Eigen::VectorXf>(mean_.data(), D);
  Eigen::Map<Eigen::VectorXf>(out, static_cast<Eigen::Index>(d)).noalias() =
      basis * centered;
}

std::vector<float> PCAModel::project(std::span<const float> u,
                                     std::size_t d) const {
  if (u.size() != dim_) throw std::invalid_argument("pca: dim mismatch");
  std::vector<float> out(d);
  project(u.data(), d, out.data());
  return out;
}

VectorDataset PCAModel::project_all(const VectorDataset& data,
                                    std::size_t d) const {
  if (data.dim() != dim_) throw std::invalid_argument("pca: dim mismatch");
  if (d > components_) throw std::invalid_argument("pca: d exceeds basis");
  VectorDataset out(data.size(), d);
  const auto D = static_cast<Eigen::Index>(dim_);
  const auto dd = static_cast<Eigen::Index>(d);
  Eigen::Map<const RowMatrixF> basis(basis_.data(), dd, D);
  Eigen::Map<const Eigen::RowVectorXf> mean(mean_.data(), D);
  constexpr std::size_t kChunk = 4096;
  RowMatrixF centered;
  for (std::size_t begin = 0; begin < data.size(); begin += kChunk) {
    std::size_t rows = std::min(kChunk, data.size() - begin);
    auto r = static_cast<Eigen::Index>(rows);
    Eigen::Map<const RowMatrixF> x(data.row(begin).data(), r, D);
    centered = x.rowwise() - mean;
    Eigen::Map<RowMatrixF>(out.row(begin).data(), r, dd).noalias() =
        centered * basis.transpose();
  }
  return out;
}

PCAModel PCAModel::truncated(std::size_t d) const {
  if (d == 0 || d > components_) {
    throw ConfigError("pca: truncation dimension out of range");
  }
  PCAModel out = *this;
  out.components_ = d;
  out.retained_ = std::min(retained_, d);
  out.basis_.resize(d * dim_);
  return out;
}

void PCAModel::save(BinaryWriter& out) const {
  out.put<std::uint32_t>(kPcaTag);
  out.put<std::uint64_t>(dim_);
  out.put<std::uint64_t>(retained_);
  out.put<std::uint64_t>(components_);
  out.put_array<float>(mean_);
  out.put_array<float>(basis_);
  out.put_array<double>(eigenvalues_);
}

PCAModel PCAModel::load(BinaryReader& in) {
  if (in.get<std::uint32_t>() != kPcaTag) throw FormatError("bad PCA section");
  PCAModel m;
  m.dim_ = in.get<std::uint64_t>();
  m.retained_ = in.get<std::uint64_t>();
  m.components_ = in.get<std::uint64_t>();
  m.mean_ = in.get_array<float>();
  m.basis_ = in.get_array<float>();
  m.eigenvalues_ = in.get_array<double>();
  if (m.mean_.size() != m.dim_ || m.basis_.size() != m.components_ * m.dim_ ||
      m.eigenvalues_.size() != m.dim_ || m.components_ > m.dim_) {
    throw FormatError("inconsistent PCA section");
  }
  return m;
}

}  // namespace flashhnsw
