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

#include "flashhnsw/vectorio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <queue>
#include <random>
#include <string>

#include "flashhnsw/distance.hpp"
#include "flashhnsw/parallel.hpp"

namespace flashhnsw {

VectorDataset::VectorDataset(std::size_t n, std::size_t dim)
    : n_(n), dim_(dim), data_(n * dim, 0.0F) {}

VectorDataset::VectorDataset(std::size_t n, std::size_t dim,
                             std::vector<float> data)
    : n_(n), dim_(dim), data_(std::move(data)) {
  if (data_.size() != n_ * dim_) {
    throw std::invalid_argument("dataset size does not match n x dim");
  }
}

VectorDataset VectorDataset::slice(std::size_t begin, std::size_t end) const {
  end = std::min(end, n_);
  begin = std::min(begin, end);
  std::vector<float> out(data_.begin() + begin * dim_,
                         data_.begin() + end * dim_);
  return {end - begin, dim_, std::move(out)};
}

VectorDataset VectorDataset::gather(std::span<const std::size_t> rows) const {
  VectorDataset out(rows.size(), dim_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void VectorDataset::check_finite() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw FormatError("non-finite value in row " + std::to_string(i / dim_));
    }
  }
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "vector file formats assume a little-endian host");

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path.string());
  auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<char> bytes(size);
  if (size > 0 && !in.read(bytes.data(), static_cast<std::streamsize>(size))) {
    throw IoError("cannot read " + path.string());
  }
  return bytes;
}

// Parses the shared [int32 dim][dim x 4 bytes] record layout.
template <class T>
std::pair<std::size_t, std::vector<T>> parse_vecs(
    const std::vector<char>& bytes, const std::filesystem::path& path) {
  if (bytes.empty()) return {0, {}};
  if (bytes.size() < 4) throw FormatError(path.string() + ": truncated header");
  std::int32_t dim = 0;
  std::memcpy(&dim, bytes.data(), 4);
  if (dim <= 0) throw FormatError(path.string() + ": non-positive dimension");
  std::size_t record = 4 + 4 * static_cast<std::size_t>(dim);
  if (bytes.size() % record != 0) {
    throw FormatError(path.string() + ": truncated record");
  }
  std::size_t n = bytes.size() / record;
  std::vector<T> values(n * static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    std::int32_t d = 0;
    std::memcpy(&d, bytes.data() + i * record, 4);
    if (d != dim) {
      throw FormatError(path.string() + ": inconsistent dimension at record " +
                        std::to_string(i));
    }
    std::memcpy(values.data() + i * static_cast<std::size_t>(dim),
                bytes.data() + i * record + 4, record - 4);
  }
  return {static_cast<std::size_t>(dim), std::move(values)};
}

template <class T>
void write_vecs(const std::filesystem::path& path, std::size_t n,
                std::size_t dim, const T* values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  auto d = static_cast<std::int32_t>(dim);
  for (std::size_t i = 0; i < n; ++i) {
    out.write(reinterpret_cast<const char*>(&d), 4);
    out.write(reinterpret_cast<const char*>(values + i * dim),
              static_cast<std::streamsize>(dim * sizeof(T)));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

VectorDataset load_fvecs(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  auto [dim, values] = parse_vecs<float>(bytes, path);
  if (dim == 0) return {};
  std::size_t n = values.size() / dim;
  VectorDataset out(n, dim, std::move(values));
  out.check_finite();
  return out;
}

void save_fvecs(const VectorDataset& dataset,
                const std::filesystem::path& path) {
  write_vecs(path, dataset.size(), dataset.dim(), dataset.data());
}

std::vector<std::vector<std::int32_t>> load_ivecs(
    const std::filesystem::path& path) {
  auto bytes = read_file(path);
  auto [dim, values] = parse_vecs<std::int32_t>(bytes, path);
  std::vector<std::vector<std::int32_t>> rows;
  if (dim == 0) return rows;
  for (std::size_t i = 0; i < values.size(); i += dim) {
    rows.emplace_back(values.begin() + i, values.begin() + i + dim);
  }
  return rows;
}

void save_ivecs(const std::vector<std::vector<std::int32_t>>& rows,
                const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& r : rows) {
    auto d = static_cast<std::int32_t>(r.size());
    out.write(reinterpret_cast<const char*>(&d), 4);
    out.write(reinterpret_cast<const char*>(r.data()),
              static_cast<std::streamsize>(r.size() * 4));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void save_groundtruth(const GroundTruth& gt,
                      const std::filesystem::path& path) {
  std::vector<std::vector<std::int32_t>> rows;
  rows.reserve(gt.entries.size());
  for (const auto& list : gt.entries) {
    auto& r = rows.emplace_back();
    for (const auto& nb : list) r.push_back(static_cast<std::int32_t>(nb.id));
  }
  save_ivecs(rows, path);
}

GroundTruth load_groundtruth(const std::filesystem::path& path,
                             const VectorDataset& base,
                             const VectorDataset& queries) {
  auto rows = load_ivecs(path);
  if (rows.size() != queries.size()) {
    throw FormatError(path.string() + ": ground truth has " +
                      std::to_string(rows.size()) + " rows for " +
                      std::to_string(queries.size()) + " queries");
  }
  GroundTruth gt;
  gt.k = rows.empty() ? 0 : rows.front().size();
  gt.entries.resize(rows.size());
  for (std::size_t q = 0; q < rows.size(); ++q) {
    for (auto id : rows[q]) {
      if (id < 0 || static_cast<std::size_t>(id) >= base.size()) {
        throw FormatError(path.string() + ": id out of range");
      }
      auto vid = static_cast<vertex_id_t>(id);
      gt.entries[q].push_back(
          {vid, l2_sqr(queries.row(q).data(), base.row(vid).data(),
                       base.dim())});
    }
  }
  return gt;
}

SyntheticMixture::SyntheticMixture(std::size_t dim, std::size_t clusters,
                                   std::uint64_t seed, SyntheticShape shape)
    : dim_(dim), shape_(shape) {
  if (dim == 0 || clusters == 0) {
    throw std::invalid_argument("synthetic dim and clusters must be >= 1");
  }
  shape_.latent_dim = std::clamp<std::size_t>(shape_.latent_dim, 1, dim);
  const std::size_t m = shape_.latent_dim;
  std::mt19937_64 rng(mix64(seed));
  std::normal_distribution<double> normal(0.0, 1.0);

  basis_.resize(m * dim);
  const double inv_sqrt_dim = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::size_t l = 0; l < m; ++l) {
    double scale = std::pow(1.0 + static_cast<double>(l), -shape_.spectrum_decay);
    for (std::size_t j = 0; j < dim; ++j) {
      basis_[l * dim + j] =
          static_cast<float>(normal(rng) * inv_sqrt_dim * scale);
    }
  }
  centers_.assign(clusters * dim, 0.0F);
  for (std::size_t c = 0; c < clusters; ++c) {
    float* center = centers_.data() + c * dim;
    for (std::size_t l = 0; l < m; ++l) {
      auto y = static_cast<float>(normal(rng) * shape_.center_scale);
      const float* b = basis_.data() + l * dim;
      for (std::size_t j = 0; j < dim; ++j) center[j] += y * b[j];
    }
  }
  stddev_.assign(dim, 0.0);
  for (std::size_t j = 0; j < dim; ++j) {
    double var = shape_.noise_stddev * shape_.noise_stddev;
    for (std::size_t l = 0; l < m; ++l) {
      double b = basis_[l * dim + j];
      var += b * b;
    }
    stddev_[j] = std::sqrt(var);
  }
}

VectorDataset SyntheticMixture::sample(std::size_t n,
                                       std::uint64_t stream_seed) const {
  VectorDataset out(n, dim_);
  std::mt19937_64 rng(mix64(stream_seed ^ 0x5eed5eed5eedULL));
  std::normal_distribution<float> normal(0.0F, 1.0F);
  std::uniform_int_distribution<std::size_t> pick(0, clusters() - 1);
  const auto noise = static_cast<float>(shape_.noise_stddev);
  const std::size_t m = shape_.latent_dim;
  for (std::size_t i = 0; i < n; ++i) {
    float* x = out.row(i).data();
    auto c = center(pick(rng));
    std::copy(c.begin(), c.end(), x);
    for (std::size_t l = 0; l < m; ++l) {
      float z = normal(rng);
      const float* b = basis_.data() + l * dim_;
      for (std::size_t j = 0; j < dim_; ++j) x[j] += z * b[j];
    }
    for (std::size_t j = 0; j < dim_; ++j) x[j] += noise * normal(rng);
  }
  return out;
}

VectorDataset gen_synthetic(std::size_t n, std::size_t dim,
                            std::size_t clusters, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("synthetic n must be >= 1");
  return SyntheticMixture(dim, clusters, seed).sample(n, seed);
}

VectorDataset gen_synthetic_queries(std::size_t count, std::size_t dim,
                                    std::size_t clusters, std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("query count must be >= 1");
  return SyntheticMixture(dim, clusters, seed)
      .sample(count, mix64(seed ^ 0x7175657279ULL));
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count,
                                        std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (count >= n) return idx;
  std::mt19937_64 rng(mix64(seed));
  // Partial Fisher-Yates; the chosen prefix is sorted for locality.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

GroundTruth brute_force_knn(const VectorDataset& base,
                            const VectorDataset& queries, std::size_t k,
                            std::size_t threads) {
  if (base.dim() != queries.dim() && !queries.empty()) {
    throw std::invalid_argument("brute_force_knn: dimension mismatch");
  }
  if (k > base.size()) {
    throw std::invalid_argument("brute_force_knn: k exceeds base size");
  }
  GroundTruth gt;
  gt.k = k;
  gt.entries.resize(queries.size());
  if (k == 0) return gt;

  constexpr std::size_t kQueryBlock = 32;
  const std::size_t blocks = (queries.size() + kQueryBlock - 1) / kQueryBlock;
  const std::size_t dim = base.dim();
  parallel_for(0, blocks, threads, [&](std::size_t b, std::size_t) {
    const std::size_t q0 = b * kQueryBlock;
    const std::size_t q1 = std::min(queries.size(), q0 + kQueryBlock);
    // Max-heaps on (distance, id): the top is the current worst survivor.
    std::vector<std::vector<Neighbor>> heaps(q1 - q0);
    auto worse = [](const Neighbor& a, const Neighbor& c) {
      return neighbor_less(a, c);
    };
    for (std::size_t i = 0; i < base.size(); ++i) {
      const float* x = base.row(i).data();
      for (std::size_t q = q0; q < q1; ++q) {
        Neighbor cand{static_cast<vertex_id_t>(i),
                      l2_sqr(queries.row(q).data(), x, dim)};
        auto& heap = heaps[q - q0];
        if (heap.size() < k) {
          heap.push_back(cand);
          std::push_heap(heap.begin(), heap.end(), worse);
        } else if (neighbor_less(cand, heap.front())) {
          std::pop_heap(heap.begin(), heap.end(), worse);
          heap.back() = cand;
          std::push_heap(heap.begin(), heap.end(), worse);
        }
      }
    }
    for (std::size_t q = q0; q < q1; ++q) {
      auto& heap = heaps[q - q0];
      std::sort_heap(heap.begin(), heap.end(), worse);
      gt.entries[q] = std::move(heap);
    }
  });
  return gt;
}

}  // namespace flashhnsw
