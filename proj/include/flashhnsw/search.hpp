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
#include <span>
#include <stdexcept>
#include <vector>

#include "flashhnsw/hnsw.hpp"
#include "flashhnsw/vectorio.hpp"

namespace flashhnsw {

struct SearchParams {
  std::size_t ef = 64;
  std::size_t k = 1;
  std::size_t rerank_depth = 0;  // 0 disables reranking

  /// Throws ConfigError unless 1 <= k <= ef and, when reranking,
  /// rerank_depth >= k.
  void validate() const;
};

/// Top-k for one query on a frozen graph. Distances are exact squared
/// distances when reranking, provider distances otherwise.
template <DistanceProvider P>
std::vector<Neighbor> search(const GraphIndex& g, const P& p,
                             std::span<const float> query,
                             const SearchParams& params,
                             SearchScratch<typename P::distance_type>& s,
                             SearchCounters& counters) {
  using D = typename P::distance_type;
  params.validate();
  if (g.entry_point() == kInvalidVertex) {
    throw std::invalid_argument("search on an empty graph");
  }
  if (s.visited.size() != g.capacity()) s.visited.resize(g.capacity());
  auto ctx = p.make_query_context(query);
  vertex_id_t ep = g.entry_point();
  Scored<D> cur{p.asym_distance(ctx, ep), ep};
  ++counters.distance_computations;
  for (int l = g.max_layer(); l > 0; --l) {
    cur = greedy_descend<false>(g, p, ctx, cur, l, s, counters);
  }
  greedy_search_layer<false>(g, p, ctx, std::span<const Scored<D>>(&cur, 1),
                             params.ef, 0, s, counters);
  auto found = s.result.sorted();
  std::vector<Neighbor> out;
  if (params.rerank_depth > 0) {
    std::size_t depth = std::min(params.rerank_depth, found.size());
    out.reserve(depth);
    for (std::size_t i = 0; i < depth; ++i) {
      out.push_back({found[i].second,
                     p.exact_distance(query.data(), found[i].second)});
    }
    std::sort(out.begin(), out.end(), neighbor_less);
  } else {
    out.reserve(found.size());
    for (const auto& [d, id] : found) {
      out.push_back({id, static_cast<float>(d)});
    }
  }
  if (out.size() > params.k) out.resize(params.k);
  return out;
}

template <DistanceProvider P>
std::vector<Neighbor> search(const GraphIndex& g, const P& p,
                             std::span<const float> query,
                             const SearchParams& params) {
  SearchScratch<typename P::distance_type> s(g.capacity());
  SearchCounters counters;
  return search(g, p, query, params, s, counters);
}

}  // namespace flashhnsw
