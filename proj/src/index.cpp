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

#include "flashhnsw/index.hpp"

#include <chrono>
#include <cstring>
#include <fstream>

#include "flashhnsw/binary_io.hpp"

namespace flashhnsw {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr double kLoadBits = 128.0;

}  // namespace

Strategy parse_strategy(std::string_view name) {
  if (name == "exact") return Strategy::kExact;
  if (name == "pq") return Strategy::kPQ;
  if (name == "sq") return Strategy::kSQ;
  if (name == "pca") return Strategy::kPCA;
  if (name == "flash") return Strategy::kFlash;
  throw ConfigError("unknown strategy '" + std::string(name) +
                    "' (exact|pq|sq|pca|flash)");
}

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kExact:
      return "exact";
    case Strategy::kPQ:
      return "pq";
    case Strategy::kSQ:
      return "sq";
    case Strategy::kPCA:
      return "pca";
    case Strategy::kFlash:
      return "flash";
  }
  return "unknown";
}

VectorDataset training_sample(const VectorDataset& base, std::size_t limit,
                              std::uint64_t seed) {
  std::size_t count = std::min(base.size(), limit);
  auto rows = sample_indices(base.size(), count, mix64(seed ^ 0x747261696eULL));
  return base.gather(rows);
}

std::uint64_t dataset_checksum(const VectorDataset& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t word) {
    h ^= word;
    h *= 0x100000001b3ULL;
  };
  mix(data.size());
  mix(data.dim());
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  std::size_t total = data.size() * data.dim() * sizeof(float);
  std::size_t i = 0;
  for (; i + 8 <= total; i += 8) {
    std::uint64_t word;
    std::memcpy(&word, bytes + i, 8);
    mix(word);
  }
  for (; i < total; ++i) mix(bytes[i]);
  return h;
}

Index Index::build(std::shared_ptr<const VectorDataset> base,
                   Strategy strategy, const StrategyParams& sp,
                   const BuildParams& bp, BuildReport* report) {
  if (!base) throw std::invalid_argument("null dataset");
  if (base->empty()) throw ConfigError("cannot build an index on 0 vectors");
  bp.validate();
  Index index;
  index.base_ = std::move(base);
  index.strategy_ = strategy;
  index.sp_ = sp;
  index.bp_ = bp;
  const VectorDataset* data = index.base_.get();
  const std::size_t threads = resolve_threads(bp.threads);

  auto start = Clock::now();
  switch (strategy) {
    case Strategy::kExact:
      index.provider_ = std::make_unique<ProviderVariant>(
          std::in_place_type<ExactProvider>, data);
      break;
    case Strategy::kPQ: {
      auto sample = training_sample(*data, sp.train_sample, bp.seed);
      index.provider_ = std::make_unique<ProviderVariant>(
          std::in_place_type<PQProvider>, data,
          pq_train(sample, sp.M_PQ, sp.L_PQ, sp.kmeans_iters, bp.seed),
          threads);
      break;
    }
    case Strategy::kSQ: {
      auto sample = training_sample(*data, sp.train_sample, bp.seed);
      index.provider_ = std::make_unique<ProviderVariant>(
          std::in_place_type<SQProvider>, data, sq_train(sample, sp.L_SQ),
          threads);
      break;
    }
    case Strategy::kPCA: {
      auto sample = training_sample(*data, sp.train_sample, bp.seed);
      PCAModel full = pca_train(sample, sp.alpha);
      index.provider_ = std::make_unique<ProviderVariant>(
          std::in_place_type<PCAProvider>, data,
          full.truncated(full.retained()));
      break;
    }
    case Strategy::kFlash: {
      auto sample = training_sample(*data, sp.train_sample, bp.seed);
      FlashParams fp{sp.d_F, sp.M_F, sp.kmeans_iters, bp.seed};
      index.provider_ = std::make_unique<ProviderVariant>(
          std::in_place_type<FlashProvider>, data, flash_train(sample, fp),
          threads, kernel_from_environment(sp.kernel));
      break;
    }
  }
  index.coding_seconds_ = seconds_since(start);

  BuildStats stats;
  index.graph_ = index.visit([&](const auto& p) {
    return flashhnsw::build(p, bp, &stats);
  });
  index.graph_seconds_ = stats.seconds;
  if (report != nullptr) {
    report->strategy = strategy;
    report->n = data->size();
    report->dim = data->dim();
    report->threads = threads;
    report->coding_seconds = index.coding_seconds_;
    report->graph_seconds = index.graph_seconds_;
    report->counters = stats.counters;
  }
  return index;
}

std::vector<Neighbor> Index::search(std::span<const float> query,
                                    const SearchParams& params) const {
  return visit([&](const auto& p) {
    return flashhnsw::search(graph_, p, query, params);
  });
}

EvalReport Index::evaluate(const VectorDataset& queries, const GroundTruth& gt,
                           const std::vector<std::size_t>& ef_grid,
                           std::size_t k, std::size_t rerank_depth,
                           std::size_t threads) const {
  EvalReport r;
  r.strategy = strategy_name(strategy_);
  r.n = base_->size();
  r.dim = base_->dim();
  r.queries = queries.size();
  r.k = k;
  r.rerank_depth = rerank_depth;
  r.threads = resolve_threads(threads);
  r.coding_seconds = coding_seconds_;
  r.graph_seconds = graph_seconds_;
  r.build_seconds = coding_seconds_ + graph_seconds_;
  r.loads_by_batch = loads_by_batch();
  r.loads_by_distance = loads_by_distance();
  r.rows = visit([&](const auto& p) {
    return flashhnsw::evaluate(graph_, p, queries, gt, ef_grid, k,
                               rerank_depth, threads);
  });
  return r;
}

InvariantReport Index::check_invariants(std::size_t heuristic_samples,
                                        std::uint64_t seed) const {
  return visit([&](const auto& p) {
    return check_graph_invariants(graph_, p, heuristic_samples, seed);
  });
}

RegisterLoadModel Index::loads_by_batch() const {
  RegisterLoadModel m;
  const double dim = static_cast<double>(base_->dim());
  switch (strategy_) {
    case Strategy::kExact:
      m.per_distance = 32.0 * dim / kLoadBits;
      break;
    case Strategy::kPQ:
      m.per_distance = static_cast<double>(sp_.M_PQ * sp_.L_PQ) / kLoadBits;
      break;
    case Strategy::kSQ:
      m.per_distance = static_cast<double>(sp_.L_SQ) * dim / kLoadBits;
      break;
    case Strategy::kPCA:
      m.per_distance = 32.0 *
                       static_cast<double>(std::get<PCAProvider>(*provider_)
                                               .reduced_dim()) /
                       kLoadBits;
      break;
    case Strategy::kFlash:
      // One codeword group per subspace per 16-lane batch.
      m.per_kernel_call = static_cast<double>(sp_.M_F);
      break;
  }
  return m;
}

RegisterLoadModel Index::loads_by_distance() const {
  if (strategy_ != Strategy::kFlash) return loads_by_batch();
  RegisterLoadModel m;
  m.per_distance =
      static_cast<double>(sp_.M_F * kFlashH) / kLoadBits;
  return m;
}

void Index::set_kernel(KernelKind kind) {
  if (auto* f = std::get_if<FlashProvider>(provider_.get())) f->set_kernel(kind);
}

void Index::save(const std::filesystem::path& path) const {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write " + path.string());
  BinaryWriter out(file);
  out.put_raw(kIndexMagic, sizeof(kIndexMagic));
  out.put<std::uint32_t>(kIndexVersion);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(strategy_));
  out.put<std::uint64_t>(base_->size());
  out.put<std::uint64_t>(base_->dim());
  out.put<std::uint64_t>(dataset_checksum(*base_));
  out.put<std::uint64_t>(bp_.C);
  out.put<std::uint64_t>(bp_.R);
  out.put<std::uint64_t>(bp_.seed);
  out.put<std::uint64_t>(sp_.M_PQ);
  out.put<std::uint64_t>(sp_.L_PQ);
  out.put<std::uint64_t>(sp_.L_SQ);
  out.put<double>(sp_.alpha);
  out.put<std::uint64_t>(sp_.d_F);
  out.put<std::uint64_t>(sp_.M_F);
  out.put<std::uint64_t>(sp_.train_sample);
  out.put<std::uint64_t>(sp_.kmeans_iters);
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, PQProvider> ||
                      std::is_same_v<P, SQProvider>) {
          p.model().save(out);
          out.put_array<std::uint8_t>(p.codes());
        } else if constexpr (std::is_same_v<P, PCAProvider>) {
          p.model().save(out);
          out.put<std::uint64_t>(p.projected().dim());
          out.put_array<float>(p.projected().values());
        } else if constexpr (std::is_same_v<P, FlashProvider>) {
          p.model().save(out);
          out.put<std::uint64_t>(p.projected().dim());
          out.put_array<float>(p.projected().values());
          out.put_array<std::uint8_t>(p.codes());
        }
      },
      *provider_);
  graph_.save(out);
  file.flush();
  out.check();
}

Index Index::load(const std::filesystem::path& path,
                  std::shared_ptr<const VectorDataset> base,
                  KernelKind kernel) {
  if (!base) throw std::invalid_argument("null dataset");
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open " + path.string());
  BinaryReader in(file);
  char magic[sizeof(kIndexMagic)];
  in.get_raw(magic, sizeof(magic));
  if (std::memcmp(magic, kIndexMagic, sizeof(magic)) != 0) {
    throw FormatError(path.string() + " is not an index file");
  }
  auto version = in.get<std::uint32_t>();
  if (version != kIndexVersion) {
    throw FormatError("unsupported index version " + std::to_string(version) +
                      " (expected " + std::to_string(kIndexVersion) + ")");
  }
  auto strategy = in.get<std::uint32_t>();
  if (strategy > static_cast<std::uint32_t>(Strategy::kFlash)) {
    throw FormatError("unknown strategy in index file");
  }
  Index index;
  index.strategy_ = static_cast<Strategy>(strategy);
  auto n = in.get<std::uint64_t>();
  auto dim = in.get<std::uint64_t>();
  auto checksum = in.get<std::uint64_t>();
  if (n != base->size() || dim != base->dim() ||
      checksum != dataset_checksum(*base)) {
    throw FormatError("index was built on a different dataset");
  }
  index.base_ = std::move(base);
  index.bp_.C = in.get<std::uint64_t>();
  index.bp_.R = in.get<std::uint64_t>();
  index.bp_.seed = in.get<std::uint64_t>();
  index.sp_.M_PQ = in.get<std::uint64_t>();
  index.sp_.L_PQ = in.get<std::uint64_t>();
  index.sp_.L_SQ = in.get<std::uint64_t>();
  index.sp_.alpha = in.get<double>();
  index.sp_.d_F = in.get<std::uint64_t>();
  index.sp_.M_F = in.get<std::uint64_t>();
  index.sp_.train_sample = in.get<std::uint64_t>();
  index.sp_.kmeans_iters = in.get<std::uint64_t>();
  index.sp_.kernel = kernel;
  const VectorDataset* data = index.base_.get();
  auto read_projected = [&](std::size_t max_dim) {
    auto d = in.get<std::uint64_t>();
    if (d == 0 || d > max_dim) throw FormatError("bad projected dimension");
    auto values = in.get_array<float>(n * d);
    if (values.size() != n * d) throw FormatError("bad projected array");
    return VectorDataset(n, d, std::move(values));
  };
  switch (index.strategy_) {
    case Strategy::kExact:
      index.provider_ = std::make_unique<ProviderVariant>(
          std::in_place_type<ExactProvider>, data);
      break;
    case Strategy::kPQ: {
      PQModel m = PQModel::load(in);
      auto codes = in.get_array<std::uint8_t>(n * m.subspaces());
      index.provider_ = std::make_unique<ProviderVariant>(
          std::in_place_type<PQProvider>, data, std::move(m),
          std::move(codes));
      break;
    }
    case Strategy::kSQ: {
      SQModel m = SQModel::load(in);
      auto codes = in.get_array<std::uint8_t>(n * m.dim());
      index.provider_ = std::make_unique<ProviderVariant>(
          std::in_place_type<SQProvider>, data, std::move(m),
          std::move(codes));
      break;
    }
    case Strategy::kPCA: {
      PCAModel m = PCAModel::load(in);
      auto projected = read_projected(dim);
      index.provider_ = std::make_unique<ProviderVariant>(
          std::in_place_type<PCAProvider>, data, std::move(m),
          std::move(projected));
      break;
    }
    case Strategy::kFlash: {
      FlashModel m = FlashModel::load(in);
      auto projected = read_projected(dim);
      auto codes = in.get_array<std::uint8_t>(n * m.subspaces());
      index.provider_ = std::make_unique<ProviderVariant>(
          std::in_place_type<FlashProvider>, data, std::move(m),
          std::move(projected), std::move(codes),
          kernel_from_environment(kernel));
      break;
    }
  }
  index.graph_ = GraphIndex::load(in);
  std::size_t want_code = index.visit(
      [](const auto& p) { return p.block_code_bytes(); });
  if (index.graph_.capacity() != n || index.graph_.R() != index.bp_.R ||
      index.graph_.code_bytes() != want_code) {
    throw FormatError("graph section does not match the index header");
  }
  return index;
}

}  // namespace flashhnsw
