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
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "flashhnsw/common.hpp"
#include "flashhnsw/graph.hpp"
#include "flashhnsw/vectorio.hpp"

namespace flashhnsw {

struct BuildParams {
  std::size_t C = 1024;
  std::size_t R = 32;
  std::uint64_t seed = 42;
  std::size_t threads = 1;

  /// Throws ConfigError unless 1 <= R <= C.
  void validate() const;
};

/// Software counters; one instance per worker, merged with +=.
struct SearchCounters {
  std::uint64_t distance_computations = 0;
  std::uint64_t kernel_calls = 0;
  std::uint64_t visited = 0;
  std::uint64_t expansions = 0;
  std::uint64_t saturated_lanes = 0;

  SearchCounters& operator+=(const SearchCounters& o);
};

/// floor(-ln(u) * mL), u in (0, 1]. Values of u at or above 1 give layer 0.
int assign_layer(double uniform, double mL);
/// Deterministic per-vertex draw from (seed, id).
double layer_uniform(std::uint64_t seed, vertex_id_t id);
inline double layer_normalizer(std::size_t R) {
  return 1.0 / std::log(static_cast<double>(R));
}
int assign_layer(std::uint64_t seed, vertex_id_t id, std::size_t R);

template <class D>
using Scored = std::pair<D, vertex_id_t>;

/// Bounded set of the `capacity` smallest (distance, id) pairs seen so far.
template <class D>
class CandidateSet {
 public:
  explicit CandidateSet(std::size_t capacity = 1) : capacity_(capacity) {
    heap_.reserve(capacity + 1);
  }

  std::size_t size() const { return heap_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool full() const { return heap_.size() >= capacity_; }
  bool empty() const { return heap_.empty(); }
  /// Largest stored distance.
  D threshold() const { return heap_.front().first; }

  void reset(std::size_t capacity) {
    capacity_ = capacity;
    heap_.clear();
  }

  /// Inserts when not full or when d beats the current threshold.
  bool try_insert(D d, vertex_id_t id) {
    if (!full()) {
      heap_.emplace_back(d, id);
      std::push_heap(heap_.begin(), heap_.end());
      return true;
    }
    if (!(d < heap_.front().first)) return false;
    std::pop_heap(heap_.begin(), heap_.end());
    heap_.back() = {d, id};
    std::push_heap(heap_.begin(), heap_.end());
    return true;
  }

  /// Entries ascending by (distance, id).
  std::vector<Scored<D>> sorted() const {
    std::vector<Scored<D>> out(heap_);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::size_t capacity_;
  std::vector<Scored<D>> heap_;  // max-heap on (distance, id)
};

/// Epoch-tagged visited marks; reset is O(1) amortized.
class VisitedTable {
 public:
  explicit VisitedTable(std::size_t n = 0) : tags_(n, 0) {}
  void resize(std::size_t n) { tags_.assign(n, 0), epoch_ = 0; }
  std::size_t size() const { return tags_.size(); }
  void reset() {
    if (++epoch_ == 0) {
      std::fill(tags_.begin(), tags_.end(), 0);
      epoch_ = 1;
    }
  }
  /// Returns true if `id` was already marked; marks it either way.
  bool test_and_set(vertex_id_t id) {
    if (tags_[id] == epoch_) return true;
    tags_[id] = epoch_;
    return false;
  }

 private:
  std::vector<std::uint16_t> tags_;
  std::uint16_t epoch_ = 0;
};

template <class P>
concept DistanceProvider = requires(const P& p, vertex_id_t id,
                                    std::span<const float> v,
                                    const typename P::QueryContext& ctx) {
  typename P::distance_type;
  requires std::totally_ordered<typename P::distance_type>;
  { P::kBatched } -> std::convertible_to<bool>;
  { p.size() } -> std::convertible_to<std::size_t>;
  { p.dim() } -> std::convertible_to<std::size_t>;
  { p.block_code_bytes() } -> std::convertible_to<std::size_t>;
  { p.code(id) } -> std::same_as<const std::uint8_t*>;
  { p.make_query_context(v) } -> std::same_as<typename P::QueryContext>;
  { p.context_for(id) } -> std::same_as<typename P::QueryContext>;
  { p.asym_distance(ctx, id) } -> std::same_as<typename P::distance_type>;
  { p.sym_distance(id, id) } -> std::same_as<typename P::distance_type>;
  { p.exact_distance(v.data(), id) } -> std::same_as<float>;
  { p.base() } -> std::same_as<const VectorDataset&>;
  p.prefetch(id);
};

/// Providers with kBatched also serve whole 16-lane batches from blocks.
template <class P>
concept BatchedProvider =
    DistanceProvider<P> && P::kBatched &&
    requires(const P& p, const typename P::QueryContext& ctx,
             const NeighborBatch& b, typename P::distance_type* out) {
      p.batch_distance(ctx, b, out);
    };

/// Keeps candidate v (in ascending order) iff every kept u has
/// sym(u, v) >= d(v, x); stops after `cap` kept.
template <class D, class SymFn>
void select_neighbors_heuristic(std::span<const Scored<D>> sorted,
                                std::size_t cap, SymFn&& sym,
                                std::vector<vertex_id_t>& out) {
  out.clear();
  for (const auto& [dv, v] : sorted) {
    if (out.size() >= cap) break;
    bool keep = true;
    for (vertex_id_t u : out) {
      if (sym(u, v) < dv) {
        keep = false;
        break;
      }
    }
    if (keep) out.push_back(v);
  }
}

template <class D>
struct SearchScratch {
  VisitedTable visited;
  std::vector<Scored<D>> frontier;  // min-heap via std::greater
  CandidateSet<D> result;
  std::vector<vertex_id_t> ids;
  std::vector<D> dists;
  std::vector<vertex_id_t> selected;
  std::vector<Scored<D>> prune;
  std::vector<D> lanes;
  std::vector<vertex_id_t> lane_ids;

  explicit SearchScratch(std::size_t n = 0) : visited(n) {}
};

namespace detail {

/// Gathers (id, distance) for the neighbors of `c` at `layer`. Unvisited
/// filtering happens here when `visited` is non-null. Batched providers
/// score every lane of every live batch, then filter.
template <bool kLocked, class P>
void score_neighbors(const GraphIndex& g, const P& p,
                     const typename P::QueryContext& ctx, vertex_id_t c,
                     int layer, VisitedTable* visited,
                     SearchScratch<typename P::distance_type>& s,
                     SearchCounters& counters) {
  using D = typename P::distance_type;
  s.ids.clear();
  s.dists.clear();
  const std::uint8_t* block = g.block(layer, c);
  const BlockLayout& layout = g.layout(layer);
  if constexpr (BatchedProvider<P>) {
    s.lanes.resize(layout.batches * kBatchLanes);
    s.lane_ids.resize(layout.batches * kBatchLanes);
    D* lanes = s.lanes.data();
    vertex_id_t* ids = s.lane_ids.data();
    std::size_t count;
    {
      std::unique_lock<std::mutex> lock;
      if constexpr (kLocked) lock = std::unique_lock(g.vertex_mutex(c));
      count = block_count(block);
      std::copy_n(block_ids(block), count, ids);
      std::size_t nb = (count + kBatchLanes - 1) / kBatchLanes;
      for (std::size_t b = 0; b < nb; ++b) {
        p.batch_distance(ctx, read_neighbor_batch(block, layout, b),
                         lanes + b * kBatchLanes);
      }
      counters.kernel_calls += nb;
    }
    for (std::size_t j = 0; j < count; ++j) {
      if (visited != nullptr && visited->test_and_set(ids[j])) continue;
      s.ids.push_back(ids[j]);
      s.dists.push_back(lanes[j]);
    }
    counters.distance_computations += s.ids.size();
  } else {
    {
      std::unique_lock<std::mutex> lock;
      if constexpr (kLocked) lock = std::unique_lock(g.vertex_mutex(c));
      std::size_t count = block_count(block);
      const vertex_id_t* src = block_ids(block);
      for (std::size_t j = 0; j < count; ++j) {
        if (visited != nullptr && visited->test_and_set(src[j])) continue;
        s.ids.push_back(src[j]);
      }
    }
    if (!s.ids.empty()) p.prefetch(s.ids[0]);
    for (std::size_t j = 0; j < s.ids.size(); ++j) {
      if (j + 1 < s.ids.size()) p.prefetch(s.ids[j + 1]);
      s.dists.push_back(p.asym_distance(ctx, s.ids[j]));
    }
    counters.distance_computations += s.ids.size();
  }
}

}  // namespace detail

/// Width-1 greedy descent at one layer: moves to any closer neighbor until
/// none improves. Returns the final (distance, vertex).
template <bool kLocked, DistanceProvider P>
Scored<typename P::distance_type> greedy_descend(
    const GraphIndex& g, const P& p, const typename P::QueryContext& ctx,
    Scored<typename P::distance_type> cur, int layer,
    SearchScratch<typename P::distance_type>& s, SearchCounters& counters) {
  bool changed = true;
  while (changed) {
    changed = false;
    ++counters.expansions;
    detail::score_neighbors<kLocked>(g, p, ctx, cur.second, layer, nullptr, s,
                                     counters);
    for (std::size_t j = 0; j < s.ids.size(); ++j) {
      if (s.dists[j] < cur.first) {
        cur = {s.dists[j], s.ids[j]};
        changed = true;
      }
    }
  }
  return cur;
}

/// Candidate acquisition at one layer starting from scored entry points.
/// Leaves the result in s.result (capacity `width`).
template <bool kLocked, DistanceProvider P>
void greedy_search_layer(const GraphIndex& g, const P& p,
                         const typename P::QueryContext& ctx,
                         std::span<const Scored<typename P::distance_type>>
                             entries,
                         std::size_t width, int layer,
                         SearchScratch<typename P::distance_type>& s,
                         SearchCounters& counters) {
  using D = typename P::distance_type;
  if (width == 0) throw std::invalid_argument("search width must be >= 1");
  auto cmp = std::greater<Scored<D>>();
  s.visited.reset();
  s.result.reset(width);
  s.frontier.clear();
  for (const auto& e : entries) {
    if (s.visited.test_and_set(e.second)) continue;
    ++counters.visited;
    s.frontier.push_back(e);
    std::push_heap(s.frontier.begin(), s.frontier.end(), cmp);
    s.result.try_insert(e.first, e.second);
  }
  while (!s.frontier.empty()) {
    std::pop_heap(s.frontier.begin(), s.frontier.end(), cmp);
    Scored<D> c = s.frontier.back();
    s.frontier.pop_back();
    if (s.result.full() && s.result.threshold() < c.first) break;
    ++counters.expansions;
    detail::score_neighbors<kLocked>(g, p, ctx, c.second, layer, &s.visited,
                                     s, counters);
    counters.visited += s.ids.size();
    for (std::size_t j = 0; j < s.ids.size(); ++j) {
      D d = s.dists[j];
      if (!s.result.full() || d < s.result.threshold()) {
        s.frontier.emplace_back(d, s.ids[j]);
        std::push_heap(s.frontier.begin(), s.frontier.end(), cmp);
        s.result.try_insert(d, s.ids[j]);
      }
    }
  }
}

/// Convenience form: single entry, fresh scratch; checks the entry exists.
template <DistanceProvider P>
std::vector<Scored<typename P::distance_type>> greedy_search_layer(
    const GraphIndex& g, const P& p, const typename P::QueryContext& ctx,
    vertex_id_t entry, std::size_t width, int layer,
    SearchCounters* counters = nullptr) {
  if (entry >= g.capacity() || g.level(entry) < layer) {
    throw std::invalid_argument("entry vertex not present at layer");
  }
  SearchScratch<typename P::distance_type> s(g.capacity());
  SearchCounters local;
  SearchCounters& c = counters != nullptr ? *counters : local;
  Scored<typename P::distance_type> e{p.asym_distance(ctx, entry), entry};
  ++c.distance_computations;
  greedy_search_layer<false>(g, p, ctx, std::span(&e, 1), width, layer, s, c);
  return s.result.sorted();
}

/// Incremental insertion over a shared graph and provider.
template <DistanceProvider P>
class HnswBuilder {
 public:
  using D = typename P::distance_type;

  HnswBuilder(GraphIndex& graph, const P& provider, const BuildParams& params)
      : g_(graph), p_(provider), params_(params) {
    params_.validate();
    if (g_.R() != params_.R) throw ConfigError("graph R differs from params");
    if (g_.code_bytes() != p_.block_code_bytes()) {
      throw ConfigError("graph code width differs from provider");
    }
  }

  void insert(vertex_id_t id, SearchScratch<D>& s, SearchCounters& counters) {
    insert(id, assign_layer(params_.seed, id, params_.R), s, counters);
  }

  void insert(vertex_id_t id, int level, SearchScratch<D>& s,
              SearchCounters& counters) {
    g_.add_vertex(id, level);
    std::unique_lock global(g_.global_mutex());
    vertex_id_t ep = g_.entry_point();
    int top = g_.max_layer();
    if (level <= top) global.unlock();
    if (ep == kInvalidVertex) {
      g_.set_entry(id, level);
      return;
    }
    auto ctx = p_.context_for(id);
    Scored<D> cur{p_.asym_distance(ctx, ep), ep};
    ++counters.distance_computations;
    for (int l = top; l > level; --l) {
      cur = greedy_descend<true>(g_, p_, ctx, cur, l, s, counters);
    }
    std::vector<Scored<D>> entries{cur};
    for (int l = std::min(level, top); l >= 0; --l) {
      greedy_search_layer<true>(g_, p_, ctx, std::span<const Scored<D>>(entries),
                                params_.C, l, s, counters);
      entries = s.result.sorted();
      // A concurrent insert may already link back to id.
      std::erase_if(entries, [id](const Scored<D>& e) { return e.second == id; });
      if (entries.empty()) entries.push_back(cur);
      // Forward edges hold at most R neighbors at every layer; the extra
      // base-layer room is filled by reverse edges.
      select_neighbors_heuristic<D>(entries, params_.R, sym_fn(), s.selected);
      link(id, l, s);
    }
    if (level > top) g_.set_entry(id, level);
  }

 private:
  auto sym_fn() const {
    return [this](vertex_id_t a, vertex_id_t b) { return p_.sym_distance(a, b); };
  }
  auto code_fn() const {
    return [this](vertex_id_t v) { return p_.code(v); };
  }

  void link(vertex_id_t id, int l, SearchScratch<D>& s) {
    const BlockLayout& layout = g_.layout(l);
    {
      std::lock_guard lock(g_.vertex_mutex(id));
      write_vertex_block(g_.block(l, id), layout,
                         std::span<const vertex_id_t>(s.selected), code_fn(),
                         SelectionKind::kAsymmetric);
    }
    const std::size_t cap = g_.cap(l);
    std::vector<vertex_id_t> kept;
    for (vertex_id_t n : s.selected) {
      std::lock_guard lock(g_.vertex_mutex(n));
      std::uint8_t* block = g_.block(l, n);
      std::size_t count = block_count(block);
      const vertex_id_t* cur = block_ids(block);
      if (std::find(cur, cur + count, id) != cur + count) continue;
      if (count < cap) {
        append_block_neighbor(block, layout, id, code_fn());
        continue;
      }
      s.prune.clear();
      for (std::size_t j = 0; j < count; ++j) {
        s.prune.emplace_back(p_.sym_distance(n, cur[j]), cur[j]);
      }
      s.prune.emplace_back(p_.sym_distance(n, id), id);
      std::sort(s.prune.begin(), s.prune.end());
      select_neighbors_heuristic<D>(s.prune, cap, sym_fn(), kept);
      write_vertex_block(block, layout, std::span<const vertex_id_t>(kept),
                         code_fn(), SelectionKind::kSymmetric);
    }
  }

  GraphIndex& g_;
  const P& p_;
  BuildParams params_;
};

struct BuildStats {
  double seconds = 0.0;
  SearchCounters counters;
};

/// Inserts ids 0..n-1: vertex 0 first, then the rest on params.threads
/// workers. The graph must be freshly constructed for the provider.
template <DistanceProvider P>
BuildStats build_graph(GraphIndex& g, const P& p, const BuildParams& params);

/// Allocates a graph sized for the provider and builds it.
template <DistanceProvider P>
GraphIndex build(const P& p, const BuildParams& params,
                 BuildStats* stats = nullptr);

struct InvariantReport {
  std::size_t vertices_checked = 0;
  std::size_t heuristic_pairs_checked = 0;
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Degree caps, self loops, dangling ids, duplicates, layer containment,
/// entry point consistency on all vertices; the pairwise heuristic property
/// of stored selection runs on `heuristic_samples` random vertices.
template <DistanceProvider P>
InvariantReport check_graph_invariants(const GraphIndex& g, const P& p,
                                       std::size_t heuristic_samples = 100,
                                       std::uint64_t seed = 7);

}  // namespace flashhnsw

#include "flashhnsw/hnsw_impl.hpp"
