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

#include "flashhnsw/flash.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "flashhnsw/distance.hpp"
#include "flashhnsw/kmeans.hpp"

namespace flashhnsw {

namespace {
constexpr std::uint32_t kFlashTag = 0x464c5331;  // "FLS1"
constexpr std::size_t kMinSample = 10 * kFlashK;
}  // namespace

FlashModel flash_train(const VectorDataset& sample, const FlashParams& params) {
  if (sample.size() < kMinSample) {
    throw ConfigError("flash training needs at least 160 vectors");
  }
  if (params.d_F == 0 || params.d_F > sample.dim()) {
    throw ConfigError("d_F must be in [1, D]");
  }
  if (params.M_F == 0 || params.M_F > params.d_F) {
    throw ConfigError("M_F must be in [1, d_F]");
  }
  FlashModel model;
  model.pca_ = pca_train(sample, 1.0);
  model.d_F_ = params.d_F;
  model.m_ = params.M_F;
  model.offsets_ = subspace_offsets(params.d_F, params.M_F);

  VectorDataset projected = model.pca_.project_all(sample, params.d_F);
  const std::size_t n = projected.size();
  model.centroids_.resize(kFlashK * params.d_F);
  model.sub_min_.assign(params.M_F, std::numeric_limits<float>::max());
  model.sub_max_.assign(params.M_F, 0.0F);
  std::vector<float> sub;
  for (std::size_t i = 0; i < params.M_F; ++i) {
    const std::size_t ds = model.sub_dim(i);
    const std::size_t begin = model.sub_begin(i);
    sub.resize(n * ds);
    for (std::size_t r = 0; r < n; ++r) {
      std::copy_n(projected.row(r).data() + begin, ds, sub.data() + r * ds);
    }
    KMeansParams kp{kFlashK, params.kmeans_iters, mix64(params.seed + 7 * i)};
    auto result = kmeans(sub, n, ds, kp);
    std::copy(result.centroids.begin(), result.centroids.end(),
              model.centroids_.begin() +
                  static_cast<std::ptrdiff_t>(kFlashK * begin));
    // Range over centroid pairs (SDT entries) and sample-to-centroid
    // distances (ADT entries).
    float lo = std::numeric_limits<float>::max();
    float hi = 0.0F;
    for (std::size_t a = 0; a < kFlashK; ++a) {
      for (std::size_t b = 0; b < kFlashK; ++b) {
        float d = l2_sqr(model.centroid(i, a), model.centroid(i, b), ds);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
    }
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < kFlashK; ++j) {
        float d = l2_sqr(sub.data() + r * ds, model.centroid(i, j), ds);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
    }
    model.sub_min_[i] = lo;
    model.sub_max_[i] = hi;
  }
  model.finalize();
  return model;
}

void FlashModel::finalize() {
  offsets_ = subspace_offsets(d_F_, m_);
  dist_min_ = *std::min_element(sub_min_.begin(), sub_min_.end());
  double total = 0.0;
  for (float v : sub_max_) total += v;
  dist_max_ = static_cast<float>(total);
  delta_ = dist_max_ - dist_min_;
  if (!(delta_ > 0.0F)) {
    throw ConfigError("flash: degenerate distance range (all points equal)");
  }
  sdt_.resize(m_ * kFlashK * kFlashK);
  for (std::size_t i = 0; i < m_; ++i) {
    for (std::size_t a = 0; a < kFlashK; ++a) {
      for (std::size_t b = 0; b < kFlashK; ++b) {
        sdt_[(i * kFlashK + a) * kFlashK + b] =
            quantize(l2_sqr(centroid(i, a), centroid(i, b), sub_dim(i)));
      }
    }
  }
}

std::uint8_t FlashModel::quantize(float dist) const {
  if (!(dist > dist_min_)) return 0;
  if (dist >= dist_max_) return static_cast<std::uint8_t>(kFlashLevels);
  double t = (static_cast<double>(dist) - dist_min_) /
             static_cast<double>(delta_) * kFlashLevels;
  return static_cast<std::uint8_t>(
      std::min(std::floor(t), static_cast<double>(kFlashLevels)));
}

unsigned FlashModel::sdt_distance(std::span<const std::uint8_t> a,
                                  std::span<const std::uint8_t> b) const {
  if (a.size() != m_ || b.size() != m_) {
    throw std::invalid_argument("flash: code length mismatch");
  }
  for (std::size_t i = 0; i < m_; ++i) {
    if (a[i] >= kFlashK || b[i] >= kFlashK) {
      throw std::invalid_argument("flash: invalid codeword");
    }
  }
#ifdef FLASHHNSW_WIDE_ACCUM
  return sdt_sum<std::uint16_t>(a.data(), b.data());
#else
  return sdt_sum<std::uint8_t>(a.data(), b.data());
#endif
}

void FlashModel::project(const float* x, float* out) const {
  pca_.project(x, d_F_, out);
}

VectorDataset FlashModel::project_all(const VectorDataset& data) const {
  return pca_.project_all(data, d_F_);
}

void FlashModel::encode_and_adt_projected(const float* projected,
                                          std::uint8_t* code,
                                          std::uint8_t* adt) const {
  float dist[kFlashK];
  for (std::size_t i = 0; i < m_; ++i) {
    const float* x = projected + offsets_[i];
    const std::size_t ds = sub_dim(i);
    std::size_t best = 0;
    for (std::size_t j = 0; j < kFlashK; ++j) {
      dist[j] = l2_sqr(x, centroid(i, j), ds);
      if (dist[j] < dist[best]) best = j;
      adt[i * kFlashK + j] = quantize(dist[j]);
    }
    code[i] = static_cast<std::uint8_t>(best);
  }
}

FlashQuery FlashModel::encode_and_adt(std::span<const float> x) const {
  if (x.size() != dim()) throw std::invalid_argument("flash: dim mismatch");
  std::vector<float> p(d_F_);
  project(x.data(), p.data());
  FlashQuery q;
  q.code.resize(m_);
  q.adt.resize(m_ * kFlashK);
  encode_and_adt_projected(p.data(), q.code.data(), q.adt.data());
  return q;
}

void FlashModel::encode_projected(const float* projected,
                                  std::uint8_t* code) const {
  for (std::size_t i = 0; i < m_; ++i) {
    code[i] = static_cast<std::uint8_t>(nearest_centroid(
        projected + offsets_[i], centroid(i, 0), kFlashK, sub_dim(i)));
  }
}

void FlashModel::adt_projected(const float* projected, std::uint8_t* adt) const {
  for (std::size_t i = 0; i < m_; ++i) {
    for (std::size_t j = 0; j < kFlashK; ++j) {
      adt[i * kFlashK + j] =
          quantize(l2_sqr(projected + offsets_[i], centroid(i, j), sub_dim(i)));
    }
  }
}

std::vector<float> FlashModel::decode(std::span<const std::uint8_t> code) const {
  if (code.size() != m_) throw std::invalid_argument("flash: code length");
  std::vector<float> out(d_F_);
  for (std::size_t i = 0; i < m_; ++i) {
    if (code[i] >= kFlashK) throw std::invalid_argument("flash: codeword");
    std::copy_n(centroid(i, code[i]), sub_dim(i), out.data() + offsets_[i]);
  }
  return out;
}

void FlashModel::save(BinaryWriter& out) const {
  out.put<std::uint32_t>(kFlashTag);
  out.put<std::uint64_t>(d_F_);
  out.put<std::uint64_t>(m_);
  pca_.save(out);
  out.put_array<float>(centroids_);
  out.put_array<float>(sub_min_);
  out.put_array<float>(sub_max_);
}

FlashModel FlashModel::load(BinaryReader& in) {
  if (in.get<std::uint32_t>() != kFlashTag) throw FormatError("bad Flash tag");
  FlashModel m;
  m.d_F_ = in.get<std::uint64_t>();
  m.m_ = in.get<std::uint64_t>();
  m.pca_ = PCAModel::load(in);
  if (m.d_F_ == 0 || m.d_F_ > m.pca_.components() || m.m_ == 0 ||
      m.m_ > m.d_F_) {
    throw FormatError("bad Flash parameters");
  }
  m.centroids_ = in.get_array<float>();
  m.sub_min_ = in.get_array<float>();
  m.sub_max_ = in.get_array<float>();
  if (m.centroids_.size() != kFlashK * m.d_F_ || m.sub_min_.size() != m.m_ ||
      m.sub_max_.size() != m.m_) {
    throw FormatError("inconsistent Flash section");
  }
  try {
    m.finalize();
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  }
  return m;
}

}  // namespace flashhnsw
