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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "flashhnsw/distance.hpp"
#include "flashhnsw/pca.hpp"
#include "flashhnsw/quantizers.hpp"
#include "flashhnsw/vectorio.hpp"

namespace flashhnsw {

inline void prefetch_bytes(const void* p, std::size_t bytes) {
  const char* c = static_cast<const char*>(p);
  for (std::size_t off = 0; off < bytes; off += 64) {
    __builtin_prefetch(c + off, 0, 3);
  }
}

// Every provider keeps a pointer to the full-precision base set for
// reranking; the base must outlive the provider.

/// Full-precision squared Euclidean distances.
class ExactProvider {
 public:
  using distance_type = float;
  static constexpr bool kBatched = false;

  struct QueryContext {
    std::vector<float> owned;
    const float* query = nullptr;
  };

  explicit ExactProvider(const VectorDataset* base) : base_(base) {}

  std::size_t size() const { return base_->size(); }
  std::size_t dim() const { return base_->dim(); }
  std::size_t block_code_bytes() const { return 0; }
  const std::uint8_t* code(vertex_id_t) const { return nullptr; }
  const VectorDataset& base() const { return *base_; }

  QueryContext make_query_context(std::span<const float> q) const;
  QueryContext context_for(vertex_id_t id) const {
    return {{}, base_->row(id).data()};
  }
  float asym_distance(const QueryContext& ctx, vertex_id_t id) const {
    return l2_sqr(ctx.query, base_->row(id).data(), base_->dim());
  }
  float sym_distance(vertex_id_t a, vertex_id_t b) const {
    return l2_sqr(base_->row(a).data(), base_->row(b).data(), base_->dim());
  }
  float exact_distance(const float* q, vertex_id_t id) const {
    return l2_sqr(q, base_->row(id).data(), base_->dim());
  }
  void prefetch(vertex_id_t id) const {
    prefetch_bytes(base_->row(id).data(), std::min<std::size_t>(
                                              base_->dim() * 4, 256));
  }

 private:
  const VectorDataset* base_;
};

/// PQ codes; ADC tables for queries and inserted vectors, SDC between
/// stored codes.
class PQProvider {
 public:
  using distance_type = float;
  static constexpr bool kBatched = false;

  struct QueryContext {
    std::vector<float> table;  // M x ksub
  };

  PQProvider(const VectorDataset* base, PQModel model,
             std::size_t threads = 1);
  PQProvider(const VectorDataset* base, PQModel model,
             std::vector<std::uint8_t> codes);

  std::size_t size() const { return base_->size(); }
  std::size_t dim() const { return base_->dim(); }
  std::size_t block_code_bytes() const { return 0; }
  const std::uint8_t* code(vertex_id_t id) const {
    return codes_.data() + static_cast<std::size_t>(id) * model_.subspaces();
  }
  const PQModel& model() const { return model_; }
  const VectorDataset& base() const { return *base_; }
  const std::vector<std::uint8_t>& codes() const { return codes_; }

  QueryContext make_query_context(std::span<const float> q) const;
  QueryContext context_for(vertex_id_t id) const {
    return make_query_context(base_->row(id));
  }
  float asym_distance(const QueryContext& ctx, vertex_id_t id) const {
    const std::uint8_t* c = code(id);
    const float* t = ctx.table.data();
    const std::size_t ksub = model_.ksub();
    float sum = 0.0F;
    for (std::size_t i = 0; i < model_.subspaces(); ++i, t += ksub) {
      sum += t[c[i]];
    }
    return sum;
  }
  float sym_distance(vertex_id_t a, vertex_id_t b) const {
    return model_.sdc_distance_unchecked(code(a), code(b));
  }
  float exact_distance(const float* q, vertex_id_t id) const {
    return l2_sqr(q, base_->row(id).data(), base_->dim());
  }
  void prefetch(vertex_id_t id) const { __builtin_prefetch(code(id), 0, 3); }

 private:
  const VectorDataset* base_;
  PQModel model_;
  std::vector<std::uint8_t> codes_;
};

/// SQ codes; distances on integer codes with per-dimension step weights.
class SQProvider {
 public:
  using distance_type = float;
  static constexpr bool kBatched = false;

  struct QueryContext {
    std::vector<std::uint8_t> owned;
    const std::uint8_t* code = nullptr;
  };

  SQProvider(const VectorDataset* base, SQModel model, std::size_t threads = 1);
  SQProvider(const VectorDataset* base, SQModel model,
             std::vector<std::uint8_t> codes);

  std::size_t size() const { return base_->size(); }
  std::size_t dim() const { return base_->dim(); }
  std::size_t block_code_bytes() const { return 0; }
  const std::uint8_t* code(vertex_id_t id) const {
    return codes_.data() + static_cast<std::size_t>(id) * model_.dim();
  }
  const SQModel& model() const { return model_; }
  const VectorDataset& base() const { return *base_; }
  const std::vector<std::uint8_t>& codes() const { return codes_; }

  QueryContext make_query_context(std::span<const float> q) const;
  QueryContext context_for(vertex_id_t id) const { return {{}, code(id)}; }
  float asym_distance(const QueryContext& ctx, vertex_id_t id) const {
    return model_.distance(ctx.code, code(id));
  }
  float sym_distance(vertex_id_t a, vertex_id_t b) const {
    return model_.distance(code(a), code(b));
  }
  float exact_distance(const float* q, vertex_id_t id) const {
    return l2_sqr(q, base_->row(id).data(), base_->dim());
  }
  void prefetch(vertex_id_t id) const {
    prefetch_bytes(code(id), std::min<std::size_t>(model_.dim(), 256));
  }

 private:
  const VectorDataset* base_;
  SQModel model_;
  std::vector<std::uint8_t> codes_;
};

/// Full-precision distances in the leading d principal components.
class PCAProvider {
 public:
  using distance_type = float;
  static constexpr bool kBatched = false;

  struct QueryContext {
    std::vector<float> owned;
    const float* query = nullptr;
  };

  /// `model` must already be truncated to the working dimension.
  PCAProvider(const VectorDataset* base, PCAModel model);
  PCAProvider(const VectorDataset* base, PCAModel model,
              VectorDataset projected);

  std::size_t size() const { return base_->size(); }
  std::size_t dim() const { return base_->dim(); }
  std::size_t reduced_dim() const { return projected_.dim(); }
  std::size_t block_code_bytes() const { return 0; }
  const std::uint8_t* code(vertex_id_t) const { return nullptr; }
  const PCAModel& model() const { return model_; }
  const VectorDataset& base() const { return *base_; }
  const VectorDataset& projected() const { return projected_; }

  QueryContext make_query_context(std::span<const float> q) const;
  QueryContext context_for(vertex_id_t id) const {
    return {{}, projected_.row(id).data()};
  }
  float asym_distance(const QueryContext& ctx, vertex_id_t id) const {
    return l2_sqr(ctx.query, projected_.row(id).data(), projected_.dim());
  }
  float sym_distance(vertex_id_t a, vertex_id_t b) const {
    return l2_sqr(projected_.row(a).data(), projected_.row(b).data(),
                  projected_.dim());
  }
  float exact_distance(const float* q, vertex_id_t id) const {
    return l2_sqr(q, base_->row(id).data(), base_->dim());
  }
  void prefetch(vertex_id_t id) const {
    prefetch_bytes(projected_.row(id).data(),
                   std::min<std::size_t>(projected_.dim() * 4, 256));
  }

 private:
  const VectorDataset* base_;
  PCAModel model_;
  VectorDataset projected_;
};

}  // namespace flashhnsw
