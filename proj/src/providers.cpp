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

#include "flashhnsw/providers.hpp"

#include <stdexcept>

#include "flashhnsw/parallel.hpp"

namespace flashhnsw {

namespace {

void check_dim(std::size_t got, std::size_t want) {
  if (got != want) throw std::invalid_argument("query dimension mismatch");
}

constexpr std::size_t kEncodeChunk = 1024;

template <class EncodeFn>
void encode_rows(std::size_t n, std::size_t threads, EncodeFn&& fn) {
  std::size_t chunks = (n + kEncodeChunk - 1) / kEncodeChunk;
  parallel_for(0, chunks, threads, [&](std::size_t c, std::size_t) {
    std::size_t end = std::min(n, (c + 1) * kEncodeChunk);
    for (std::size_t i = c * kEncodeChunk; i < end; ++i) fn(i);
  });
}

}  // namespace

ExactProvider::QueryContext ExactProvider::make_query_context(
    std::span<const float> q) const {
  check_dim(q.size(), base_->dim());
  QueryContext ctx;
  ctx.owned.assign(q.begin(), q.end());
  ctx.query = ctx.owned.data();
  return ctx;
}

PQProvider::PQProvider(const VectorDataset* base, PQModel model,
                       std::size_t threads)
    : base_(base), model_(std::move(model)) {
  check_dim(base_->dim(), model_.dim());
  const std::size_t m = model_.subspaces();
  codes_.resize(base_->size() * m);
  encode_rows(base_->size(), threads, [&](std::size_t i) {
    model_.encode(base_->row(i).data(), codes_.data() + i * m);
  });
}

PQProvider::PQProvider(const VectorDataset* base, PQModel model,
                       std::vector<std::uint8_t> codes)
    : base_(base), model_(std::move(model)), codes_(std::move(codes)) {
  check_dim(base_->dim(), model_.dim());
  if (codes_.size() != base_->size() * model_.subspaces()) {
    throw FormatError("PQ code array does not match the dataset");
  }
}

PQProvider::QueryContext PQProvider::make_query_context(
    std::span<const float> q) const {
  check_dim(q.size(), model_.dim());
  QueryContext ctx;
  ctx.table.resize(model_.subspaces() * model_.ksub());
  model_.adc_table(q.data(), ctx.table.data());
  return ctx;
}

SQProvider::SQProvider(const VectorDataset* base, SQModel model,
                       std::size_t threads)
    : base_(base), model_(std::move(model)) {
  check_dim(base_->dim(), model_.dim());
  const std::size_t d = model_.dim();
  codes_.resize(base_->size() * d);
  encode_rows(base_->size(), threads, [&](std::size_t i) {
    model_.encode(base_->row(i).data(), codes_.data() + i * d);
  });
}

SQProvider::SQProvider(const VectorDataset* base, SQModel model,
                       std::vector<std::uint8_t> codes)
    : base_(base), model_(std::move(model)), codes_(std::move(codes)) {
  check_dim(base_->dim(), model_.dim());
  if (codes_.size() != base_->size() * model_.dim()) {
    throw FormatError("SQ code array does not match the dataset");
  }
}

SQProvider::QueryContext SQProvider::make_query_context(
    std::span<const float> q) const {
  check_dim(q.size(), model_.dim());
  QueryContext ctx;
  ctx.owned.resize(model_.dim());
  model_.encode(q.data(), ctx.owned.data());
  ctx.code = ctx.owned.data();
  return ctx;
}

PCAProvider::PCAProvider(const VectorDataset* base, PCAModel model)
    : base_(base), model_(std::move(model)) {
  check_dim(base_->dim(), model_.dim());
  projected_ = model_.project_all(*base_, model_.components());
}

PCAProvider::PCAProvider(const VectorDataset* base, PCAModel model,
                         VectorDataset projected)
    : base_(base), model_(std::move(model)), projected_(std::move(projected)) {
  check_dim(base_->dim(), model_.dim());
  if (projected_.size() != base_->size() ||
      projected_.dim() != model_.components()) {
    throw FormatError("PCA projection does not match the dataset");
  }
}

PCAProvider::QueryContext PCAProvider::make_query_context(
    std::span<const float> q) const {
  check_dim(q.size(), model_.dim());
  QueryContext ctx;
  ctx.owned = model_.project(q, model_.components());
  ctx.query = ctx.owned.data();
  return ctx;
}

}  // namespace flashhnsw
