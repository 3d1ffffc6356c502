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
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "flashhnsw/eval.hpp"
#include "flashhnsw/flash_provider.hpp"
#include "flashhnsw/graph.hpp"
#include "flashhnsw/hnsw.hpp"
#include "flashhnsw/providers.hpp"
#include "flashhnsw/search.hpp"
#include "flashhnsw/vectorio.hpp"

namespace flashhnsw {

enum class Strategy { kExact, kPQ, kSQ, kPCA, kFlash };

Strategy parse_strategy(std::string_view name);
const char* strategy_name(Strategy s);

/// Coder parameters. L_F = 4, H = 8 and B = 16 are fixed by the kernel.
struct StrategyParams {
  std::size_t M_PQ = 16;
  std::size_t L_PQ = 8;
  std::size_t L_SQ = 8;
  double alpha = 0.9;  // PCA variance fraction
  std::size_t d_F = 64;
  std::size_t M_F = 16;
  std::size_t train_sample = 100000;
  std::size_t kmeans_iters = 25;
  KernelKind kernel = KernelKind::kAuto;
};

struct BuildReport {
  Strategy strategy = Strategy::kExact;
  std::size_t n = 0;
  std::size_t dim = 0;
  std::size_t threads = 1;
  double coding_seconds = 0.0;  // training + encoding the base set
  double graph_seconds = 0.0;
  double total_seconds() const { return coding_seconds + graph_seconds; }
  SearchCounters counters;
};

/// A built HNSW graph together with its coder. The base set is shared and
/// must not change while the index exists.
class Index {
 public:
  using ProviderVariant = std::variant<ExactProvider, PQProvider, SQProvider,
                                       PCAProvider, FlashProvider>;

  static Index build(std::shared_ptr<const VectorDataset> base,
                     Strategy strategy, const StrategyParams& sp,
                     const BuildParams& bp, BuildReport* report = nullptr);

  Strategy strategy() const { return strategy_; }
  const StrategyParams& strategy_params() const { return sp_; }
  const BuildParams& build_params() const { return bp_; }
  const GraphIndex& graph() const { return graph_; }
  const VectorDataset& base() const { return *base_; }

  template <class Fn>
  decltype(auto) visit(Fn&& fn) const {
    return std::visit(std::forward<Fn>(fn), *provider_);
  }

  std::vector<Neighbor> search(std::span<const float> query,
                               const SearchParams& params) const;

  EvalReport evaluate(const VectorDataset& queries, const GroundTruth& gt,
                      const std::vector<std::size_t>& ef_grid, std::size_t k,
                      std::size_t rerank_depth, std::size_t threads) const;

  InvariantReport check_invariants(std::size_t heuristic_samples = 100,
                                   std::uint64_t seed = 7) const;

  /// Register-load models for reporting (see EvalReport).
  RegisterLoadModel loads_by_batch() const;
  RegisterLoadModel loads_by_distance() const;

  void set_kernel(KernelKind kind);

  /// Index file: header, coder section, graph section. The raw base set is
  /// not stored; load() checks the supplied base against a checksum.
  void save(const std::filesystem::path& path) const;
  static Index load(const std::filesystem::path& path,
                    std::shared_ptr<const VectorDataset> base,
                    KernelKind kernel = KernelKind::kAuto);

 private:
  Index() = default;

  std::shared_ptr<const VectorDataset> base_;
  Strategy strategy_ = Strategy::kExact;
  StrategyParams sp_;
  BuildParams bp_;
  std::unique_ptr<ProviderVariant> provider_;
  GraphIndex graph_;
  double coding_seconds_ = 0.0;
  double graph_seconds_ = 0.0;
};

/// The rows a coder is trained on: min(n, limit) distinct rows chosen by
/// `seed`.
VectorDataset training_sample(const VectorDataset& base, std::size_t limit,
                              std::uint64_t seed);

/// FNV-1a over the dimensions and raw float bytes.
std::uint64_t dataset_checksum(const VectorDataset& data);

inline constexpr char kIndexMagic[8] = {'F', 'L', 'A', 'S', 'H', 'H', 'N', 'S'};
inline constexpr std::uint32_t kIndexVersion = 1;

}  // namespace flashhnsw
