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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "flashhnsw/binary_io.hpp"
#include "flashhnsw/eval.hpp"
#include "flashhnsw/hnsw.hpp"
#include "flashhnsw/providers.hpp"
#include "flashhnsw/search.hpp"
#include "test_util.hpp"

namespace flashhnsw {
namespace {

// Fixture for the worked insertion of v18 into a small base layer.
struct Example1 {
  MatrixProvider p{19};
  GraphIndex g{19, 2, 0};

  Example1() {
    const std::pair<vertex_id_t, float> to_x[] = {
        {17, 0.10F}, {5, 0.20F}, {3, 0.28F}, {9, 0.30F},
        {15, 0.40F}, {0, 0.49F}, {13, 0.54F}};
    for (auto [v, d] : to_x) p.set(18, v, d);
    p.set(17, 5, 0.5F);
    p.set(17, 3, 0.1F);
    p.set(17, 9, 0.15F);
    for (vertex_id_t v = 0; v < 18; ++v) g.add_vertex(v, 0);
    set_neighbors(g, 0, {5, 9, 13});
    set_neighbors(g, 5, {0, 15, 17});
    set_neighbors(g, 17, {5, 3});
    set_neighbors(g, 3, {17, 9});
    set_neighbors(g, 9, {0, 3});
    g.set_entry(0, 0);
  }
};

std::vector<vertex_id_t> ids_of(const std::vector<Scored<float>>& v) {
  std::vector<vertex_id_t> out;
  for (const auto& s : v) out.push_back(s.second);
  return out;
}

TEST(AssignLayer, UnitDrawIsBaseLayer) {
  EXPECT_EQ(assign_layer(1.0, layer_normalizer(32)), 0);
  EXPECT_EQ(assign_layer(std::nextafter(1.0, 0.0), layer_normalizer(32)), 0);
}

TEST(AssignLayer, AnalyticInversion) {
  double mL = layer_normalizer(32);
  // u = e^{-1/mL} sits on the 0/1 boundary; step just inside.
  double u = std::exp(-std::log(32.0));
  EXPECT_EQ(assign_layer(u * (1 - 1e-12), mL), 1);
  EXPECT_EQ(assign_layer(u / 32 * (1 - 1e-12), mL), 2);
}

TEST(AssignLayer, UpperLayerFraction) {
  const std::size_t n = 1000000;
  std::size_t upper = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (assign_layer(42, static_cast<vertex_id_t>(i), 32) >= 1) ++upper;
  }
  double p = 1.0 / 32.0;
  double sigma = std::sqrt(p * (1 - p) / static_cast<double>(n));
  // Seed 42 sits about 3.2 sigma low; other seeds land within 1 sigma.
  EXPECT_NEAR(static_cast<double>(upper) / static_cast<double>(n), p,
              4 * sigma);
}

TEST(CandidateSet, KeepsBestAndThreshold) {
  CandidateSet<float> c(3);
  EXPECT_TRUE(c.try_insert(5.0F, 1));
  EXPECT_TRUE(c.try_insert(3.0F, 2));
  EXPECT_TRUE(c.try_insert(4.0F, 3));
  EXPECT_TRUE(c.full());
  EXPECT_EQ(c.threshold(), 5.0F);
  EXPECT_FALSE(c.try_insert(5.0F, 4));  // ties with T are rejected
  EXPECT_TRUE(c.try_insert(1.0F, 5));
  EXPECT_EQ(c.threshold(), 4.0F);
  auto s = c.sorted();
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(ids_of(s), (std::vector<vertex_id_t>{5, 2, 3}));
}

TEST(GreedySearch, SingleVertex) {
  MatrixProvider p(1);
  GraphIndex g(1, 4, 0);
  g.add_vertex(0, 0);
  g.set_entry(0, 0);
  auto r = greedy_search_layer(g, p, p.context_for(0), 0, 4, 0);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].second, 0u);
}

TEST(GreedySearch, EntryMustExistAtLayer) {
  MatrixProvider p(2);
  GraphIndex g(2, 4, 0);
  g.add_vertex(0, 0);
  g.set_entry(0, 0);
  EXPECT_THROW(greedy_search_layer(g, p, p.context_for(0), 1, 4, 0),
               std::invalid_argument);
  EXPECT_THROW(greedy_search_layer(g, p, p.context_for(0), 0, 4, 1),
               std::invalid_argument);
}

TEST(GreedySearch, Example1Candidates) {
  Example1 ex;
  auto r = greedy_search_layer(ex.g, ex.p, ex.p.context_for(18), 0, 4, 0);
  EXPECT_EQ(ids_of(r), (std::vector<vertex_id_t>{17, 5, 3, 9}));
  EXPECT_FLOAT_EQ(r.back().first, 0.30F);
}

TEST(GreedySearch, Example1Thresholds) {
  // After expanding v0 the set is full with T = 0.54; one more expansion
  // evicts v13 and T drops to 0.49 (v15 is not yet reachable).
  Example1 ex;
  set_neighbors(ex.g, 5, {0, 17});
  auto r = greedy_search_layer(ex.g, ex.p, ex.p.context_for(18), 0, 4, 0);
  EXPECT_EQ(ids_of(r), (std::vector<vertex_id_t>{17, 5, 3, 9}));

  Example1 first;
  set_neighbors(first.g, 5, {});
  set_neighbors(first.g, 9, {});
  auto a = greedy_search_layer(first.g, first.p, first.p.context_for(18), 0,
                               4, 0);
  EXPECT_FLOAT_EQ(a.back().first, 0.54F);
  set_neighbors(first.g, 5, {17});
  set_neighbors(first.g, 17, {});
  auto b = greedy_search_layer(first.g, first.p, first.p.context_for(18), 0,
                               4, 0);
  EXPECT_FLOAT_EQ(b.back().first, 0.49F);
}

TEST(GreedySearch, FullWidthOnCompleteGraphIsBruteForce) {
  const std::size_t n = 40;
  std::mt19937 rng(3);
  std::uniform_real_distribution<float> u(0.0F, 1.0F);
  MatrixProvider p(n);
  for (vertex_id_t a = 0; a < n; ++a) {
    for (vertex_id_t b = a + 1; b < n; ++b) p.set(a, b, u(rng));
  }
  GraphIndex g(n, n, 0);
  for (vertex_id_t v = 0; v < n; ++v) {
    g.add_vertex(v, 0);
    std::vector<vertex_id_t> all;
    for (vertex_id_t w = 0; w < n; ++w) {
      if (w != v) all.push_back(w);
    }
    set_neighbors(g, v, all);
  }
  g.set_entry(0, 0);
  for (vertex_id_t q = 0; q < n; q += 7) {
    auto r = greedy_search_layer(g, p, p.context_for(q), 0, n, 0);
    std::vector<Scored<float>> want;
    for (vertex_id_t v = 0; v < n; ++v) {
      want.emplace_back(p.asym_distance(p.context_for(q), v), v);
    }
    std::sort(want.begin(), want.end());
    EXPECT_EQ(r, want);
  }
}

TEST(SelectNeighbors, SingleCandidateKept) {
  MatrixProvider p(2);
  std::vector<Scored<float>> c = {{0.7F, 1}};
  std::vector<vertex_id_t> out;
  select_neighbors_heuristic<float>(
      c, 4, [&](vertex_id_t a, vertex_id_t b) { return p.sym_distance(a, b); },
      out);
  EXPECT_EQ(out, (std::vector<vertex_id_t>{1}));
}

TEST(SelectNeighbors, Example1Pruning) {
  Example1 ex;
  auto c = greedy_search_layer(ex.g, ex.p, ex.p.context_for(18), 0, 4, 0);
  auto sym = [&](vertex_id_t a, vertex_id_t b) {
    return ex.p.sym_distance(a, b);
  };
  std::vector<vertex_id_t> out;
  select_neighbors_heuristic<float>(c, 2, sym, out);
  EXPECT_EQ(out, (std::vector<vertex_id_t>{17, 5}));
  // v3 and v9 fall to v17 even with room to spare.
  select_neighbors_heuristic<float>(c, 4, sym, out);
  EXPECT_EQ(out, (std::vector<vertex_id_t>{17, 5}));
}

// Reference pruner: builds the kept set by a filter over prefixes.
std::vector<vertex_id_t> reference_prune(
    const std::vector<std::vector<float>>& pts, const std::vector<float>& x,
    std::size_t cap) {
  auto dist = [](const std::vector<float>& a, const std::vector<float>& b) {
    double s = 0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return static_cast<float>(s);
  };
  std::vector<std::size_t> order(pts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<float> dx(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) dx[i] = dist(pts[i], x);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dx[a] < dx[b] || (dx[a] == dx[b] && a < b);
  });
  std::vector<vertex_id_t> kept;
  for (std::size_t v : order) {
    if (kept.size() == cap) break;
    bool dominated = std::any_of(kept.begin(), kept.end(), [&](vertex_id_t u) {
      return dist(pts[u], pts[v]) < dx[v];
    });
    if (!dominated) kept.push_back(static_cast<vertex_id_t>(v));
  }
  return kept;
}

TEST(SelectNeighbors, MatchesReferencePruner) {
  std::mt19937 rng(17);
  std::normal_distribution<float> normal;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<float>> pts(50, std::vector<float>(8));
    std::vector<float> x(8);
    for (auto& p : pts) {
      for (auto& v : p) v = normal(rng);
    }
    for (auto& v : x) v = normal(rng);
    auto d2 = [](const std::vector<float>& a, const std::vector<float>& b) {
      double s = 0;
      for (std::size_t j = 0; j < a.size(); ++j) {
        s += (a[j] - b[j]) * (a[j] - b[j]);
      }
      return static_cast<float>(s);
    };
    std::vector<Scored<float>> cands;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      cands.emplace_back(d2(pts[i], x), static_cast<vertex_id_t>(i));
    }
    std::sort(cands.begin(), cands.end());
    std::size_t cap = 1 + trial % 12;
    std::vector<vertex_id_t> out;
    select_neighbors_heuristic<float>(
        cands, cap,
        [&](vertex_id_t a, vertex_id_t b) { return d2(pts[a], pts[b]); }, out);
    EXPECT_EQ(out, reference_prune(pts, x, cap)) << "trial " << trial;
  }
}

TEST(Insert, FirstVertexBecomesEntry) {
  auto base = random_dataset(4, 8, 1);
  ExactProvider p(&base);
  GraphIndex g(4, 4, 0);
  HnswBuilder<ExactProvider> b(g, p, BuildParams{16, 4, 1, 1});
  SearchScratch<float> s(4);
  SearchCounters c;
  b.insert(2, 3, s, c);
  EXPECT_EQ(g.entry_point(), 2u);
  EXPECT_EQ(g.max_layer(), 3);
  for (int l = 0; l <= 3; ++l) EXPECT_TRUE(g.neighbors(l, 2).empty());
}

TEST(Insert, TwoVerticesLinkMutually) {
  auto base = random_dataset(2, 8, 1);
  ExactProvider p(&base);
  GraphIndex g(2, 4, 0);
  HnswBuilder<ExactProvider> b(g, p, BuildParams{16, 4, 1, 1});
  SearchScratch<float> s(2);
  SearchCounters c;
  b.insert(0, 2, s, c);
  b.insert(1, 1, s, c);
  for (int l = 0; l <= 1; ++l) {
    EXPECT_EQ(std::vector<vertex_id_t>(g.neighbors(l, 0).begin(),
                                       g.neighbors(l, 0).end()),
              std::vector<vertex_id_t>{1});
    EXPECT_EQ(std::vector<vertex_id_t>(g.neighbors(l, 1).begin(),
                                       g.neighbors(l, 1).end()),
              std::vector<vertex_id_t>{0});
  }
  EXPECT_TRUE(g.neighbors(2, 0).empty());
}

TEST(Insert, DuplicateThrows) {
  auto base = random_dataset(2, 8, 1);
  ExactProvider p(&base);
  GraphIndex g(2, 4, 0);
  HnswBuilder<ExactProvider> b(g, p, BuildParams{16, 4, 1, 1});
  SearchScratch<float> s(2);
  SearchCounters c;
  b.insert(0, s, c);
  EXPECT_THROW(b.insert(0, s, c), std::invalid_argument);
}

double exact_recall_at_1(const GraphIndex& g, const ExactProvider& p,
                         const VectorDataset& base, const VectorDataset& q,
                         std::size_t ef) {
  auto gt = brute_force_knn(base, q, 1);
  std::vector<std::vector<Neighbor>> results;
  for (std::size_t i = 0; i < q.size(); ++i) {
    results.push_back(search(g, p, q.row(i), SearchParams{ef, 1, 0}));
  }
  return recall_at_k(results, gt, 1);
}

TEST(Build, RecallAtSaturationWidth) {
  auto base = gen_synthetic(2000, 32, 10, 3);
  auto q = gen_synthetic_queries(200, 32, 10, 3);
  ExactProvider p(&base);
  auto g = build(p, BuildParams{128, 16, 5, 1});
  EXPECT_TRUE(check_graph_invariants(g, p).ok());
  EXPECT_GE(exact_recall_at_1(g, p, base, q, 2048), 0.99);
}

TEST(Build, ThreadCountDoesNotMatterForQuality) {
  auto base = gen_synthetic(3000, 32, 10, 4);
  // Enough queries that sampling noise stays well under the tolerance.
  auto q = gen_synthetic_queries(3000, 32, 10, 4);
  ExactProvider p(&base);
  auto g1 = build(p, BuildParams{64, 8, 5, 1});
  auto g8 = build(p, BuildParams{64, 8, 5, 8});
  auto r1 = check_graph_invariants(g1, p);
  auto r8 = check_graph_invariants(g8, p);
  EXPECT_TRUE(r1.ok()) << (r1.ok() ? "" : r1.violations[0]);
  EXPECT_TRUE(r8.ok()) << (r8.ok() ? "" : r8.violations[0]);
  EXPECT_NEAR(exact_recall_at_1(g1, p, base, q, 32),
              exact_recall_at_1(g8, p, base, q, 32), 0.01);
}

TEST(Build, SingleVertex) {
  auto base = random_dataset(1, 4, 1);
  ExactProvider p(&base);
  auto g = build(p, BuildParams{8, 4, 1, 1});
  EXPECT_EQ(g.entry_point(), 0u);
  EXPECT_TRUE(g.neighbors(0, 0).empty());
  auto r = search(g, p, base.row(0), SearchParams{4, 1, 0});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].id, 0u);
}

TEST(Build, MeanBaseDegreeWithinCap) {
  const std::size_t R = 8;
  auto base = gen_synthetic(10000, 16, 20, 6);
  ExactProvider p(&base);
  auto g = build(p, BuildParams{48, R, 6, 1});
  std::size_t edges = g.edge_count(0);
  double mean = static_cast<double>(edges) / 10000.0;
  EXPECT_GT(mean, 0.0);
  EXPECT_LE(mean, 2.0 * R);
  for (vertex_id_t v = 0; v < 10000; ++v) {
    ASSERT_LE(g.neighbors(0, v).size(), 2 * R);
    for (int l = 1; l <= g.level(v); ++l) {
      ASSERT_LE(g.neighbors(l, v).size(), R);
    }
  }
}

std::string graph_bytes(const GraphIndex& g) {
  std::ostringstream out;
  BinaryWriter w(out);
  g.save(w);
  return out.str();
}

TEST(Build, SingleThreadIsReproducible) {
  auto base = gen_synthetic(1500, 16, 8, 2);
  ExactProvider p(&base);
  auto a = build(p, BuildParams{64, 8, 9, 1});
  auto b = build(p, BuildParams{64, 8, 9, 1});
  EXPECT_EQ(graph_bytes(a), graph_bytes(b));
}

TEST(Build, SearchComputesEachDistanceOnce) {
  auto base = gen_synthetic(2000, 16, 8, 2);
  ExactProvider p(&base);
  auto g = build(p, BuildParams{64, 8, 9, 1});
  auto ctx = p.make_query_context(base.row(5));
  SearchCounters c;
  auto r = greedy_search_layer(g, p, ctx, g.entry_point(), 200, 0, &c);
  EXPECT_LE(c.distance_computations, c.visited);
  EXPECT_LE(c.visited, 2000u);
  std::set<vertex_id_t> ids;
  for (const auto& s : r) EXPECT_TRUE(ids.insert(s.second).second);
}

TEST(Build, RejectsBadParams) {
  auto base = random_dataset(4, 4, 1);
  ExactProvider p(&base);
  EXPECT_THROW(build(p, BuildParams{4, 8, 1, 1}), ConfigError);
  EXPECT_THROW(build(p, BuildParams{4, 0, 1, 1}), ConfigError);
}

TEST(Invariants, DetectPlantedViolations) {
  auto base = gen_synthetic(300, 8, 4, 2);
  ExactProvider p(&base);
  auto g = build(p, BuildParams{32, 4, 1, 1});
  ASSERT_TRUE(check_graph_invariants(g, p).ok());
  auto nb = g.neighbors(0, 10);
  std::vector<vertex_id_t> ids(nb.begin(), nb.end());
  ids.push_back(10);
  set_neighbors(g, 10, ids);
  EXPECT_FALSE(check_graph_invariants(g, p).ok());
}

TEST(Invariants, DetectBrokenHeuristicRun) {
  Example1 ex;
  // A selection run that keeps v3 after v17 violates the pruning rule.
  std::vector<vertex_id_t> run = {17, 3};
  ex.g.add_vertex(18, 0);
  write_vertex_block(ex.g.block(0, 18), ex.g.layout(0),
                     std::span<const vertex_id_t>(run),
                     [](vertex_id_t) -> const std::uint8_t* { return nullptr; },
                     SelectionKind::kAsymmetric);
  auto r = check_graph_invariants(ex.g, ex.p, 19);
  EXPECT_FALSE(r.ok());
}

TEST(GraphIndex, SaveLoadRoundTrip) {
  auto base = gen_synthetic(500, 8, 4, 2);
  ExactProvider p(&base);
  auto g = build(p, BuildParams{32, 4, 1, 1});
  std::string bytes = graph_bytes(g);
  std::istringstream in(bytes);
  BinaryReader r(in);
  auto h = GraphIndex::load(r);
  EXPECT_EQ(graph_bytes(h), bytes);
  EXPECT_EQ(h.entry_point(), g.entry_point());
  EXPECT_EQ(h.max_layer(), g.max_layer());
}

}  // namespace
}  // namespace flashhnsw
