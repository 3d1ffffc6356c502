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

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <limits>

#include "flashhnsw/distance.hpp"
#include "flashhnsw/kmeans.hpp"
#include "flashhnsw/quantizers.hpp"

namespace flashhnsw {

namespace {
constexpr std::uint32_t kPqTag = 0x50513031;  // "PQ01"
constexpr std::uint32_t kSqTag = 0x53513031;  // "SQ01"
}  // namespace

PQModel pq_train(const VectorDataset& sample, std::size_t subspaces,
                 std::size_t nbits, std::size_t kmeans_iters,
                 std::uint64_t seed) {
  if (nbits == 0 || nbits > 8) throw ConfigError("pq nbits must be in [1, 8]");
  PQModel model;
  model.dim_ = sample.dim();
  model.m_ = subspaces;
  model.nbits_ = nbits;
  model.ksub_ = std::size_t{1} << nbits;
  model.offsets_ = subspace_offsets(sample.dim(), subspaces);
  if (sample.size() < model.ksub_) {
    throw ConfigError("pq training sample smaller than 2^nbits");
  }
  model.centroids_.resize(model.ksub_ * model.dim_);
  const std::size_t n = sample.size();
  std::vector<float> sub;
  for (std::size_t i = 0; i < subspaces; ++i) {
    const std::size_t ds = model.sub_dim(i);
    const std::size_t begin = model.sub_begin(i);
    sub.resize(n * ds);
    for (std::size_t r = 0; r < n; ++r) {
      std::copy_n(sample.row(r).data() + begin, ds, sub.data() + r * ds);
    }
    KMeansParams params{model.ksub_, kmeans_iters, mix64(seed + i)};
    auto result = kmeans(sub, n, ds, params);
    std::copy(result.centroids.begin(), result.centroids.end(),
              model.centroids_.begin() +
                  static_cast<std::ptrdiff_t>(model.ksub_ * begin));
  }
  model.build_sdc();
  return model;
}

void PQModel::build_sdc() {
  sdc_.assign(m_ * ksub_ * ksub_, 0.0F);
  for (std::size_t i = 0; i < m_; ++i) {
    float* t = sdc_.data() + i * ksub_ * ksub_;
    for (std::size_t a = 0; a < ksub_; ++a) {
      for (std::size_t b = a + 1; b < ksub_; ++b) {
        float d = l2_sqr(centroid(i, a), centroid(i, b), sub_dim(i));
        t[a * ksub_ + b] = d;
        t[b * ksub_ + a] = d;
      }
    }
  }
}

void PQModel::encode(const float* x, std::uint8_t* code) const {
  for (std::size_t i = 0; i < m_; ++i) {
    code[i] = static_cast<std::uint8_t>(
        nearest_centroid(x + offsets_[i], centroid(i, 0), ksub_, sub_dim(i)));
  }
}

void PQModel::decode(const std::uint8_t* code, float* out) const {
  for (std::size_t i = 0; i < m_; ++i) {
    std::copy_n(centroid(i, code[i]), sub_dim(i), out + offsets_[i]);
  }
}

void PQModel::adc_table(const float* query, float* table) const {
  for (std::size_t i = 0; i < m_; ++i) {
    const float* q = query + offsets_[i];
    for (std::size_t j = 0; j < ksub_; ++j) {
      table[i * ksub_ + j] = l2_sqr(q, centroid(i, j), sub_dim(i));
    }
  }
}

std::vector<float> PQModel::adc_table(std::span<const float> query) const {
  if (query.size() != dim_) throw std::invalid_argument("pq: dim mismatch");
  std::vector<float> table(m_ * ksub_);
  adc_table(query.data(), table.data());
  return table;
}

float PQModel::sdc_distance(std::span<const std::uint8_t> a,
                            std::span<const std::uint8_t> b) const {
  if (a.size() != m_ || b.size() != m_) {
    throw std::invalid_argument("pq: code length mismatch");
  }
  for (std::size_t i = 0; i < m_; ++i) {
    if (a[i] >= ksub_ || b[i] >= ksub_) {
      throw std::invalid_argument("pq: invalid codeword");
    }
  }
  return sdc_distance_unchecked(a.data(), b.data());
}

void PQModel::save(BinaryWriter& out) const {
  out.put<std::uint32_t>(kPqTag);
  out.put<std::uint64_t>(dim_);
  out.put<std::uint64_t>(m_);
  out.put<std::uint64_t>(nbits_);
  out.put_array<float>(centroids_);
}

PQModel PQModel::load(BinaryReader& in) {
  if (in.get<std::uint32_t>() != kPqTag) throw FormatError("bad PQ section");
  PQModel m;
  m.dim_ = in.get<std::uint64_t>();
  m.m_ = in.get<std::uint64_t>();
  m.nbits_ = in.get<std::uint64_t>();
  if (m.nbits_ == 0 || m.nbits_ > 8 || m.m_ == 0 || m.m_ > m.dim_) {
    throw FormatError("bad PQ parameters");
  }
  m.ksub_ = std::size_t{1} << m.nbits_;
  m.offsets_ = subspace_offsets(m.dim_, m.m_);
  m.centroids_ = in.get_array<float>();
  if (m.centroids_.size() != m.ksub_ * m.dim_) {
    throw FormatError("inconsistent PQ centroids");
  }
  m.build_sdc();
  return m;
}

SQModel sq_train(const VectorDataset& data, std::size_t nbits) {
  if (nbits == 0 || nbits > 8) throw ConfigError("sq nbits must be in [1, 8]");
  if (data.empty()) throw ConfigError("sq training set is empty");
  SQModel m;
  m.dim_ = data.dim();
  m.nbits_ = nbits;
  m.vmin_.assign(m.dim_, std::numeric_limits<float>::max());
  m.vmax_.assign(m.dim_, std::numeric_limits<float>::lowest());
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto r = data.row(i);
    for (std::size_t j = 0; j < m.dim_; ++j) {
      m.vmin_[j] = std::min(m.vmin_[j], r[j]);
      m.vmax_[j] = std::max(m.vmax_[j], r[j]);
    }
  }
  bool degenerate = true;
  m.step_.resize(m.dim_);
  m.weights_.resize(m.dim_);
  for (std::size_t j = 0; j < m.dim_; ++j) {
    float range = m.vmax_[j] - m.vmin_[j];
    if (range > 0.0F) degenerate = false;
    m.step_[j] = range / static_cast<float>(m.levels());
    m.weights_[j] = m.step_[j] * m.step_[j];
  }
  if (degenerate) throw ConfigError("sq: every dimension is constant");
  return m;
}

void SQModel::encode(const float* x, std::uint8_t* code) const {
  const auto top = static_cast<float>(levels());
  for (std::size_t j = 0; j < dim_; ++j) {
    if (step_[j] <= 0.0F) {
      code[j] = 0;
      continue;
    }
    float t = (x[j] - vmin_[j]) / step_[j];
    // nearbyint honors the default round-to-nearest-even mode.
    t = std::nearbyint(std::clamp(t, 0.0F, top));
    code[j] = static_cast<std::uint8_t>(t);
  }
}

void SQModel::decode(const std::uint8_t* code, float* out) const {
  for (std::size_t j = 0; j < dim_; ++j) {
    out[j] = vmin_[j] + static_cast<float>(code[j]) * step_[j];
  }
}

float SQModel::distance(const std::uint8_t* a, const std::uint8_t* b) const {
  return l2_sqr_u8_weighted(a, b, weights_.data(), dim_);
}

void SQModel::save(BinaryWriter& out) const {
  out.put<std::uint32_t>(kSqTag);
  out.put<std::uint64_t>(dim_);
  out.put<std::uint64_t>(nbits_);
  out.put_array<float>(vmin_);
  out.put_array<float>(vmax_);
}

SQModel SQModel::load(BinaryReader& in) {
  if (in.get<std::uint32_t>() != kSqTag) throw FormatError("bad SQ section");
  SQModel m;
  m.dim_ = in.get<std::uint64_t>();
  m.nbits_ = in.get<std::uint64_t>();
  if (m.nbits_ == 0 || m.nbits_ > 8) throw FormatError("bad SQ nbits");
  m.vmin_ = in.get_array<float>();
  m.vmax_ = in.get_array<float>();
  if (m.vmin_.size() != m.dim_ || m.vmax_.size() != m.dim_) {
    throw FormatError("inconsistent SQ section");
  }
  m.step_.resize(m.dim_);
  m.weights_.resize(m.dim_);
  for (std::size_t j = 0; j < m.dim_; ++j) {
    m.step_[j] = (m.vmax_[j] - m.vmin_[j]) / static_cast<float>(m.levels());
    m.weights_[j] = m.step_[j] * m.step_[j];
  }
  return m;
}

}  // namespace flashhnsw
