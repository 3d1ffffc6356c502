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

#include "flashhnsw/distance.hpp"
#include "flashhnsw/flash.hpp"
#include "flashhnsw/flash_kernel.hpp"
#include "flashhnsw/graph.hpp"
#include "flashhnsw/parallel.hpp"
#include "flashhnsw/vectorio.hpp"

namespace flashhnsw {

#ifdef FLASHHNSW_WIDE_ACCUM
using FlashLane = std::uint16_t;
#else
using FlashLane = std::uint8_t;
#endif

/// Flash codes as a distance provider. Asymmetric distances come from the
/// insertion's quantized ADT (batched over vertex blocks during search);
/// symmetric distances from the SDT.
template <class Lane>
class FlashProviderT {
 public:
  using distance_type = Lane;
  static constexpr bool kBatched = true;

  struct QueryContext {
    std::vector<std::uint8_t> code;
    std::vector<std::uint8_t> adt;
  };

  FlashProviderT(const VectorDataset* base, FlashModel model,
                 std::size_t threads = 1,
                 KernelKind kernel = KernelKind::kAuto)
      : base_(base), model_(std::move(model)) {
    check_base();
    projected_ = model_.project_all(*base_);
    const std::size_t m = model_.subspaces();
    codes_.resize(base_->size() * m);
    constexpr std::size_t kChunk = 1024;
    std::size_t chunks = (base_->size() + kChunk - 1) / kChunk;
    parallel_for(0, chunks, threads, [&](std::size_t c, std::size_t) {
      std::size_t end = std::min(base_->size(), (c + 1) * kChunk);
      for (std::size_t i = c * kChunk; i < end; ++i) {
        model_.encode_projected(projected_.row(i).data(),
                                codes_.data() + i * m);
      }
    });
    set_kernel(kernel);
  }

  FlashProviderT(const VectorDataset* base, FlashModel model,
                 VectorDataset projected, std::vector<std::uint8_t> codes,
                 KernelKind kernel = KernelKind::kAuto)
      : base_(base),
        model_(std::move(model)),
        projected_(std::move(projected)),
        codes_(std::move(codes)) {
    check_base();
    if (projected_.size() != base_->size() ||
        projected_.dim() != model_.reduced_dim() ||
        codes_.size() != base_->size() * model_.subspaces()) {
      throw FormatError("Flash codes do not match the dataset");
    }
    for (std::uint8_t c : codes_) {
      if (c >= kFlashK) throw FormatError("Flash codeword out of range");
    }
    set_kernel(kernel);
  }

  void set_kernel(KernelKind kind) {
    kernel_kind_ = resolve_kernel(kind);
    kernel_ = batch_kernel<Lane>(kernel_kind_);
  }
  KernelKind kernel() const { return kernel_kind_; }

  std::size_t size() const { return base_->size(); }
  std::size_t dim() const { return base_->dim(); }
  std::size_t block_code_bytes() const { return model_.subspaces(); }
  const std::uint8_t* code(vertex_id_t id) const {
    return codes_.data() + static_cast<std::size_t>(id) * model_.subspaces();
  }
  const FlashModel& model() const { return model_; }
  const VectorDataset& base() const { return *base_; }
  const VectorDataset& projected() const { return projected_; }
  const std::vector<std::uint8_t>& codes() const { return codes_; }

  QueryContext make_query_context(std::span<const float> q) const {
    FlashQuery fq = model_.encode_and_adt(q);
    return {std::move(fq.code), std::move(fq.adt)};
  }
  /// ADT for an inserted vector, built from its stored projection.
  QueryContext context_for(vertex_id_t id) const {
    QueryContext ctx;
    ctx.code.resize(model_.subspaces());
    ctx.adt.resize(model_.subspaces() * kFlashK);
    model_.encode_and_adt_projected(projected_.row(id).data(),
                                    ctx.code.data(), ctx.adt.data());
    return ctx;
  }

  Lane asym_distance(const QueryContext& ctx, vertex_id_t id) const {
    constexpr unsigned kMax = std::numeric_limits<Lane>::max();
    const std::uint8_t* c = code(id);
    unsigned sum = 0;
    for (std::size_t i = 0; i < model_.subspaces(); ++i) {
      sum += ctx.adt[i * kFlashK + c[i]];
    }
    return static_cast<Lane>(sum < kMax ? sum : kMax);
  }
  Lane sym_distance(vertex_id_t a, vertex_id_t b) const {
    return model_.template sdt_sum<Lane>(code(a), code(b));
  }
  void batch_distance(const QueryContext& ctx, const NeighborBatch& batch,
                      Lane* out) const {
    kernel_(ctx.adt.data(), batch.codes, model_.subspaces(), out);
  }
  float exact_distance(const float* q, vertex_id_t id) const {
    return l2_sqr(q, base_->row(id).data(), base_->dim());
  }
  void prefetch(vertex_id_t id) const { __builtin_prefetch(code(id), 0, 3); }

 private:
  void check_base() const {
    if (base_->dim() != model_.dim()) {
      throw std::invalid_argument("flash: dataset dim differs from model");
    }
  }

  const VectorDataset* base_;
  FlashModel model_;
  VectorDataset projected_;
  std::vector<std::uint8_t> codes_;
  KernelKind kernel_kind_ = KernelKind::kScalar;
  decltype(batch_kernel<Lane>(KernelKind::kScalar)) kernel_ = nullptr;
};

using FlashProvider = FlashProviderT<FlashLane>;

}  // namespace flashhnsw
