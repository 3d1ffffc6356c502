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

// Template definitions for hnsw.hpp.

#include <chrono>
#include <optional>
#include <string>

#include "flashhnsw/parallel.hpp"
#include "flashhnsw/vectorio.hpp"

namespace flashhnsw {

template <DistanceProvider P>
BuildStats build_graph(GraphIndex& g, const P& p, const BuildParams& params) {
  using D = typename P::distance_type;
  params.validate();
  const std::size_t n = p.size();
  if (g.capacity() != n) throw ConfigError("graph capacity differs from n");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t threads = resolve_threads(params.threads);
  HnswBuilder<P> builder(g, p, params);
  std::vector<SearchScratch<D>> scratch;
  scratch.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) scratch.emplace_back(n);
  std::vector<SearchCounters> counters(threads);
  if (n > 0) builder.insert(0, scratch[0], counters[0]);
  parallel_for(1, n, threads, [&](std::size_t i, std::size_t w) {
    builder.insert(static_cast<vertex_id_t>(i), scratch[w], counters[w]);
  });
  BuildStats stats;
  for (const auto& c : counters) stats.counters += c;
  stats.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  return stats;
}

template <DistanceProvider P>
GraphIndex build(const P& p, const BuildParams& params, BuildStats* stats) {
  params.validate();
  GraphIndex g(p.size(), params.R, p.block_code_bytes());
  BuildStats s = build_graph(g, p, params);
  if (stats != nullptr) *stats = s;
  return g;
}

template <DistanceProvider P>
InvariantReport check_graph_invariants(const GraphIndex& g, const P& p,
                                       std::size_t heuristic_samples,
                                       std::uint64_t seed) {
  constexpr std::size_t kMaxMessages = 50;
  InvariantReport report;
  auto fail = [&report](std::string msg) {
    if (report.violations.size() < kMaxMessages) {
      report.violations.push_back(std::move(msg));
    }
  };
  const std::size_t n = g.capacity();
  int top = -1;
  std::vector<vertex_id_t> present;
  std::vector<vertex_id_t> ids;
  for (vertex_id_t v = 0; v < n; ++v) {
    int lv = g.level(v);
    if (lv < 0) continue;
    present.push_back(v);
    top = std::max(top, lv);
    ++report.vertices_checked;
    for (int l = 0; l <= lv; ++l) {
      auto nb = g.neighbors(l, v);
      std::string where =
          "vertex " + std::to_string(v) + " layer " + std::to_string(l);
      if (nb.size() > g.cap(l)) fail(where + ": degree over cap");
      ids.assign(nb.begin(), nb.end());
      for (vertex_id_t u : ids) {
        if (u == v) fail(where + ": self loop");
        if (u >= n || g.level(u) < l) {
          fail(where + ": neighbor " + std::to_string(u) +
               " absent at this layer");
        }
      }
      std::sort(ids.begin(), ids.end());
      if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        fail(where + ": duplicate neighbor");
      }
      if (block_selection(g.block(l, v)).length > nb.size()) {
        fail(where + ": selection run longer than list");
      }
    }
  }
  if (top != g.max_layer()) fail("max layer does not match vertex levels");
  if (!present.empty() &&
      (g.entry_point() >= n || g.level(g.entry_point()) != top)) {
    fail("entry point is not at the top layer");
  }

  std::vector<vertex_id_t> sample;
  if (!present.empty()) {
    for (std::size_t i : sample_indices(present.size(),
                                        std::min(heuristic_samples,
                                                 present.size()),
                                        seed)) {
      sample.push_back(present[i]);
    }
  }
  for (vertex_id_t x : sample) {
    std::optional<typename P::QueryContext> ctx;
    for (int l = 0; l <= g.level(x); ++l) {
      const std::uint8_t* b = g.block(l, x);
      SelectionRun run = block_selection(b);
      if (run.kind == SelectionKind::kNone) continue;
      const vertex_id_t* list = block_ids(b);
      if (run.kind == SelectionKind::kAsymmetric && !ctx) {
        ctx.emplace(p.context_for(x));
      }
      auto to_x = [&](vertex_id_t v) {
        return run.kind == SelectionKind::kAsymmetric
                   ? p.asym_distance(*ctx, v)
                   : p.sym_distance(x, v);
      };
      for (std::size_t j = 1; j < run.length; ++j) {
        auto dj = to_x(list[j]);
        for (std::size_t i = 0; i < j; ++i) {
          ++report.heuristic_pairs_checked;
          if (p.sym_distance(list[i], list[j]) < dj) {
            fail("vertex " + std::to_string(x) + " layer " +
                 std::to_string(l) + ": kept neighbor " +
                 std::to_string(list[j]) + " is closer to earlier neighbor " +
                 std::to_string(list[i]));
          }
        }
      }
    }
  }
  return report;
}

}  // namespace flashhnsw
