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

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "flashhnsw/parallel.hpp"
#include "flashhnsw/search.hpp"
#include "flashhnsw/vectorio.hpp"

namespace flashhnsw {

/// Printed by the CLI next to every recall figure.
inline constexpr const char* kRecallFormula = "recall@k = |G ∩ S| / k";

/// Mean over queries of |G ∩ S| / k, using the first k ids of each side.
double recall_at_k(const std::vector<std::vector<Neighbor>>& results,
                   const GroundTruth& gt, std::size_t k);

/// Mean over queries of (1/k') sum_j dist(q, s_j) / dist(q, g_j) with true
/// (square-rooted) distances recomputed from the vectors. Terms whose
/// ground-truth distance is zero are skipped (k' counts the rest); queries
/// with no remaining terms are skipped.
double average_distance_ratio(const std::vector<std::vector<Neighbor>>& results,
                              const GroundTruth& gt, const VectorDataset& base,
                              const VectorDataset& queries, std::size_t k);

/// Register loads under a 128-bit load model.
struct RegisterLoadModel {
  // Loads charged per kernel call (Flash: one per subspace group).
  double per_kernel_call = 0.0;
  // Loads charged per distance computation.
  double per_distance = 0.0;
};

struct EvalRow {
  std::size_t ef = 0;
  double recall = 0.0;
  double adr = 0.0;
  double qps = 0.0;
  double seconds = 0.0;
  SearchCounters counters;
};

struct EvalReport {
  std::string strategy;
  std::size_t n = 0;
  std::size_t dim = 0;
  std::size_t queries = 0;
  std::size_t k = 1;
  std::size_t rerank_depth = 0;
  std::size_t threads = 1;
  double coding_seconds = 0.0;
  double graph_seconds = 0.0;
  double build_seconds = 0.0;
  // Two readings of the Flash register-load count; equal for other
  // strategies.
  RegisterLoadModel loads_by_batch;
  RegisterLoadModel loads_by_distance;
  std::vector<EvalRow> rows;
};

inline constexpr const char* kEvalCsvSchema = "flashhnsw-eval/1";

/// Columns: strategy,ef,k,rerank_depth,threads,queries,recall,adr,qps,
/// distance_computations,kernel_calls,visited,expansions,
/// register_loads_batch,register_loads_distance,build_seconds,
/// coding_seconds,graph_seconds. Counters are per-run totals.
void write_eval_csv(const std::vector<EvalReport>& reports,
                    const std::filesystem::path& path);
std::string eval_csv(const std::vector<EvalReport>& reports);
std::string eval_json(const std::vector<EvalReport>& reports);

double register_loads(const RegisterLoadModel& model,
                      const SearchCounters& counters);

/// Runs every query at each ef in `ef_grid`, queries split over `threads`.
template <DistanceProvider P>
std::vector<EvalRow> evaluate(const GraphIndex& g, const P& p,
                              const VectorDataset& queries,
                              const GroundTruth& gt,
                              const std::vector<std::size_t>& ef_grid,
                              std::size_t k, std::size_t rerank_depth,
                              std::size_t threads,
                              std::vector<std::vector<std::vector<Neighbor>>>*
                                  results_out = nullptr) {
  using D = typename P::distance_type;
  if (gt.entries.size() != queries.size()) {
    throw std::invalid_argument("ground truth does not match the queries");
  }
  if (gt.k < k) throw std::invalid_argument("ground truth k is smaller than k");
  if (queries.dim() != p.dim()) {
    throw std::invalid_argument("query dimension differs from the index");
  }
  threads = resolve_threads(threads);
  std::vector<EvalRow> rows;
  std::vector<SearchScratch<D>> scratch;
  for (std::size_t w = 0; w < threads; ++w) scratch.emplace_back(g.capacity());
  for (std::size_t ef : ef_grid) {
    SearchParams sp{ef, k, rerank_depth};
    sp.validate();
    std::vector<std::vector<Neighbor>> results(queries.size());
    std::vector<SearchCounters> counters(threads);
    auto start = std::chrono::steady_clock::now();
    parallel_for(0, queries.size(), threads,
                 [&](std::size_t q, std::size_t w) {
                   results[q] = search(g, p, queries.row(q), sp, scratch[w],
                                       counters[w]);
                 });
    double secs = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    EvalRow row;
    row.ef = ef;
    row.seconds = secs;
    row.qps = secs > 0.0 ? static_cast<double>(queries.size()) / secs : 0.0;
    for (const auto& c : counters) row.counters += c;
    row.recall = recall_at_k(results, gt, k);
    row.adr = average_distance_ratio(results, gt, p.base(), queries, k);
    rows.push_back(row);
    if (results_out != nullptr) results_out->push_back(std::move(results));
  }
  return rows;
}

}  // namespace flashhnsw
