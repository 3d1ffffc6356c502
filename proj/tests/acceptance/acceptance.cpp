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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails. Timings are wall clock on the
// machine running the test; budgets are reported next to each result.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "flashhnsw/certify.hpp"
#include "flashhnsw/distance.hpp"
#include "flashhnsw/flash.hpp"
#include "flashhnsw/flash_kernel.hpp"
#include "flashhnsw/graph.hpp"
#include "flashhnsw/index.hpp"
#include "flashhnsw/pca.hpp"
#include "flashhnsw/quantizers.hpp"

namespace fh = flashhnsw;

namespace {

struct Outcome {
  bool pass = false;
  bool waived = false;
  std::string detail;
  double seconds = 0.0;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double x, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << x;
  return s.str();
}

constexpr std::size_t kBuildThreads = 8;
constexpr std::size_t kClusters = 100;

const char* kNames[] = {"",
                        "flash indexing speedup at 200Kx768",
                        "flash coding-time share",
                        "flash search quality at 100K",
                        "compression certification (PQ, SQ, PCA, Flash)",
                        "bisector sign equivalence",
                        "SIMD kernels equal scalar",
                        "distance quantizer contract",
                        "exact HNSW oracle recall",
                        "graph invariants after every build",
                        "baseline ordering at 100K"};

// Invariant sweeps collected from criteria 1-3 and 8.
struct InvariantLog {
  std::vector<std::string> lines;
  bool ok = true;
  double worst_seconds = 0.0;

  void check(const std::string& label, const fh::Index& idx) {
    Stopwatch w;
    auto report = idx.check_invariants(100);
    double s = w.seconds();
    worst_seconds = std::max(worst_seconds, s);
    std::string line = label + ": " + std::to_string(report.vertices_checked) +
                       " vertices, " +
                       std::to_string(report.heuristic_pairs_checked) +
                       " heuristic pairs, " +
                       std::to_string(report.violations.size()) +
                       " violations (" + fmt(s, 3) + " s)";
    if (!report.ok()) {
      ok = false;
      line += "; first: " + report.violations.front();
    }
    std::printf("  invariants %s\n", line.c_str());
    std::fflush(stdout);
    lines.push_back(line);
  }
};

fh::BuildParams big_build() { return fh::BuildParams{1024, 32, 42, kBuildThreads}; }

fh::Index build_logged(const std::shared_ptr<const fh::VectorDataset>& base,
                       fh::Strategy s, const fh::StrategyParams& sp,
                       const fh::BuildParams& bp, fh::BuildReport* report,
                       const std::string& label) {
  auto idx = fh::Index::build(base, s, sp, bp, report);
  std::printf("  built %s: coding %.2f s, graph %.2f s, total %.2f s\n",
              label.c_str(), report->coding_seconds, report->graph_seconds,
              report->total_seconds());
  std::fflush(stdout);
  return idx;
}

// Criteria 1 and 2 share one run.
std::pair<Outcome, Outcome> speedup_and_coding_share(InvariantLog& inv) {
  Stopwatch w;
  auto base = std::make_shared<const fh::VectorDataset>(
      fh::gen_synthetic(200000, 768, kClusters, 2001));
  fh::StrategyParams sp;
  fh::BuildReport flash, exact;
  {
    auto idx = build_logged(base, fh::Strategy::kFlash, sp, big_build(), &flash,
                            "flash 200K");
    inv.check("flash 200K", idx);
  }
  {
    auto idx = build_logged(base, fh::Strategy::kExact, sp, big_build(), &exact,
                            "exact 200K");
    inv.check("exact 200K", idx);
  }
  double ratio = exact.total_seconds() / flash.total_seconds();
  double share = flash.coding_seconds / flash.total_seconds();
  Outcome c1, c2;
  c1.pass = flash.total_seconds() * 3.0 <= exact.total_seconds();
  c1.detail = "flash " + fmt(flash.total_seconds()) + " s vs exact " +
              fmt(exact.total_seconds()) + " s, speedup " + fmt(ratio, 3) +
              "x (need >= 3)";
  c2.pass = share <= 0.25;
  c2.detail = "coding " + fmt(flash.coding_seconds) + " s of " +
              fmt(flash.total_seconds()) + " s = " + fmt(100 * share, 3) +
              "% (need <= 25%)";
  c1.seconds = c2.seconds = w.seconds();
  return {c1, c2};
}

struct Bench100K {
  std::shared_ptr<const fh::VectorDataset> base;
  fh::VectorDataset queries;
  fh::GroundTruth gt;
};

Bench100K make_bench() {
  Bench100K b;
  b.base = std::make_shared<const fh::VectorDataset>(
      fh::gen_synthetic(100000, 768, kClusters, 1001));
  b.queries = fh::gen_synthetic_queries(1000, 768, kClusters, 1001);
  b.gt = fh::brute_force_knn(*b.base, b.queries, 1);
  return b;
}

const std::vector<std::size_t> kEfGrid = {64, 128, 256, 512};

void print_rows(const std::string& label, const fh::EvalReport& r) {
  for (const auto& row : r.rows) {
    std::printf("  %s ef=%zu rerank=%zu recall@1=%.4f qps=%.0f\n", label.c_str(),
                row.ef, r.rerank_depth, row.recall, row.qps);
  }
  std::fflush(stdout);
}

// Criteria 3 and 10 share the 100K benchmark and its exact index.
std::pair<Outcome, Outcome> quality_and_ordering(InvariantLog& inv) {
  Stopwatch w;
  Bench100K b = make_bench();
  fh::StrategyParams sp;
  fh::BuildReport exact_r, flash_r, pq_r, sq_r;
  fh::EvalReport exact_rr, exact_plain, flash_rr, pq_plain;
  {
    auto idx = build_logged(b.base, fh::Strategy::kExact, sp, big_build(),
                            &exact_r, "exact 100K");
    inv.check("exact 100K", idx);
    exact_rr = idx.evaluate(b.queries, b.gt, kEfGrid, 1, 100, 1);
    exact_plain = idx.evaluate(b.queries, b.gt, kEfGrid, 1, 0, 1);
    print_rows("exact", exact_rr);
    print_rows("exact", exact_plain);
  }
  Stopwatch c3_only;
  {
    auto idx = build_logged(b.base, fh::Strategy::kFlash, sp, big_build(),
                            &flash_r, "flash 100K");
    inv.check("flash 100K", idx);
    flash_rr = idx.evaluate(b.queries, b.gt, kEfGrid, 1, 100, 1);
    print_rows("flash", flash_rr);
  }
  double c3_flash_seconds = c3_only.seconds();

  // Exact reference: best recall over the grid, smallest ef on ties.
  const fh::EvalRow* best = &exact_rr.rows.front();
  for (const auto& row : exact_rr.rows) {
    if (row.recall > best->recall) best = &row;
  }
  Outcome c3;
  const fh::EvalRow* hit = nullptr;
  const fh::EvalRow* closest = &flash_rr.rows.front();
  for (const auto& row : flash_rr.rows) {
    if (row.recall > closest->recall) closest = &row;
    if (hit == nullptr && row.recall >= best->recall - 0.02 &&
        row.qps >= best->qps) {
      hit = &row;
    }
  }
  c3.pass = hit != nullptr;
  const fh::EvalRow* shown = hit != nullptr ? hit : closest;
  c3.detail = "exact best recall " + fmt(best->recall) + " at ef " +
              std::to_string(best->ef) + " (" + fmt(best->qps, 5) +
              " qps); flash " + (hit != nullptr ? "meets it" : "best") +
              " at ef " + std::to_string(shown->ef) + ": recall " +
              fmt(shown->recall) + ", " + fmt(shown->qps, 5) + " qps";

  {
    auto idx = build_logged(b.base, fh::Strategy::kPQ, sp, big_build(), &pq_r,
                            "pq 100K");
    pq_plain = idx.evaluate(b.queries, b.gt, kEfGrid, 1, 0, 1);
    print_rows("pq", pq_plain);
  }
  {
    auto idx = build_logged(b.base, fh::Strategy::kSQ, sp, big_build(), &sq_r,
                            "sq 100K");
  }
  Outcome c10;
  std::vector<std::string> flipped;
  if (!(pq_r.total_seconds() < sq_r.total_seconds())) {
    flipped.push_back("pq build >= sq build");
  }
  if (!(sq_r.total_seconds() < exact_r.total_seconds())) {
    flipped.push_back("sq build >= exact build");
  }
  for (std::size_t i = 0; i < kEfGrid.size(); ++i) {
    if (!(pq_plain.rows[i].recall < exact_plain.rows[i].recall)) {
      flipped.push_back("pq recall >= exact recall at ef " +
                        std::to_string(kEfGrid[i]));
    }
  }
  c10.detail = "build pq " + fmt(pq_r.total_seconds()) + " s < sq " +
               fmt(sq_r.total_seconds()) + " s < exact " +
               fmt(exact_r.total_seconds()) + " s; recall@1 pq/exact at ef " +
               std::to_string(kEfGrid[1]) + ": " +
               fmt(pq_plain.rows[1].recall) + "/" +
               fmt(exact_plain.rows[1].recall);
  c10.pass = flipped.empty();
  if (!c10.pass) {
    std::string joined;
    for (const auto& f : flipped) joined += (joined.empty() ? "" : ", ") + f;
    c10.detail += "; flipped: " + joined;
    // One-line waiver: FLASHHNSW_WAIVE_BASELINE_ORDER="<reason>".
    if (const char* reason = std::getenv("FLASHHNSW_WAIVE_BASELINE_ORDER")) {
      c10.waived = true;
      c10.detail += "; waived: " + std::string(reason);
    }
  }
  c3.seconds = w.seconds();
  c10.seconds = w.seconds();
  std::printf("  criterion 3 flash build+search took %.1f s\n", c3_flash_seconds);
  return {c3, c10};
}

Outcome certification() {
  Stopwatch w;
  auto data = fh::gen_synthetic(20000, 128, kClusters, 4001);
  auto triples = fh::sample_triples(data, 10000, 100, 4002, kBuildThreads);
  auto full = fh::pca_train(data, 1.0);
  std::vector<std::pair<std::string, fh::CertificationReport>> reports;
  reports.emplace_back("pq", fh::certify(fh::pq_view(data, fh::pq_train(data, 16, 8, 25, 1)), triples));
  reports.emplace_back("sq", fh::certify(fh::sq_view(data, fh::sq_train(data, 8)), triples));
  reports.emplace_back("pca", fh::certify(fh::pca_view(data, full, full.dim_for_variance(0.9)), triples));
  reports.emplace_back("flash", fh::certify(fh::flash_view(data, fh::flash_train(data, fh::FlashParams{64, 16, 25, 1})), triples));
  Outcome o;
  o.pass = true;
  for (const auto& [name, r] : reports) {
    if (r.triples < 10000 || r.certified_disagreeing != 0) o.pass = false;
    o.detail += (o.detail.empty() ? "" : "; ") + name + ": " +
                std::to_string(r.triples) + " triples, " +
                std::to_string(r.certified_disagreeing) +
                " certified-but-disagreeing, " +
                fmt(100 * r.certified_fraction(), 3) + "% certified";
  }
  o.seconds = w.seconds();
  return o;
}

Outcome bisector_sign() {
  Stopwatch w;
  std::mt19937_64 rng(5001);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> log_scale(-3.0, 3.0);
  std::size_t violations = 0, ties = 0, mismatched_margin = 0;
  constexpr std::size_t kTriples = 100000;
  for (std::size_t t = 0; t < kTriples; ++t) {
    std::size_t d = 1 + rng() % 64;
    double scale = std::pow(10.0, log_scale(rng));
    std::vector<double> u(d), v(d), w(d);
    for (std::size_t j = 0; j < d; ++j) {
      u[j] = scale * normal(rng);
      v[j] = scale * normal(rng);
      w[j] = scale * normal(rng);
    }
    double eu = 0.0, b = 0.0, dv = 0.0, dw = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      eu += (w[j] - v[j]) * u[j];
      b += (w[j] * w[j] - v[j] * v[j]) / 2.0;
      dv += (u[j] - v[j]) * (u[j] - v[j]);
      dw += (u[j] - w[j]) * (u[j] - w[j]);
    }
    double m = fh::bisector_margin(u, v, w);
    if (std::abs(m - (eu - b)) > 1e-9 * (1.0 + std::abs(b) + std::abs(eu))) {
      ++mismatched_margin;
    }
    if (std::abs(eu - b) <= 1e-9 * (1.0 + std::abs(b))) {
      ++ties;
      continue;
    }
    // d(u,w)^2 - d(u,v)^2 = -2 * margin: positive means u is nearer w.
    if ((m > 0) != (dw < dv)) ++violations;
  }
  Outcome o;
  o.pass = violations == 0 && mismatched_margin == 0;
  o.detail = std::to_string(kTriples) + " triples, " +
             std::to_string(violations) + " violations, " +
             std::to_string(ties) + " in tie band, " +
             std::to_string(mismatched_margin) + " margin mismatches";
  o.seconds = w.seconds();
  return o;
}

Outcome kernel_equivalence() {
  Stopwatch w;
  std::vector<fh::KernelKind> simd;
  for (auto k : {fh::KernelKind::kVector128, fh::KernelKind::kVector256,
                 fh::KernelKind::kVector512}) {
    if (fh::kernel_supported(k)) simd.push_back(k);
  }
  std::mt19937_64 rng(6001);
  constexpr std::size_t kCases = 1000000;
  std::size_t mismatches = 0, padded = 0, saturated8 = 0, saturated16 = 0;
  std::vector<std::uint8_t> adt, block, codes;
  std::vector<fh::vertex_id_t> ids;
  for (std::size_t c = 0; c < kCases; ++c) {
    std::size_t m = 1 + rng() % 64;
    std::size_t cap = 16 * (1 + rng() % 4);
    fh::BlockLayout layout(cap, m);
    adt.resize(m * 16);
    // Mix of low tables (no saturation) and full-range ones.
    unsigned top = (c % 4 == 0) ? 255 : 1 + static_cast<unsigned>(rng() % 64);
    for (auto& a : adt) a = static_cast<std::uint8_t>(rng() % (top + 1));
    std::size_t count = 1 + rng() % cap;
    ids.resize(count);
    codes.resize(count * m);
    for (std::size_t i = 0; i < count; ++i) ids[i] = static_cast<fh::vertex_id_t>(i);
    for (auto& x : codes) x = static_cast<std::uint8_t>(rng() % 16);
    block.assign(layout.bytes, 0);
    fh::write_vertex_block(block.data(), layout,
                           std::span<const fh::vertex_id_t>(ids),
                           [&](fh::vertex_id_t id) { return codes.data() + id * m; });
    std::size_t batch = rng() % ((count + 15) / 16);
    auto nb = fh::read_neighbor_batch(block.data(), layout, batch);
    if (nb.live < 16) ++padded;
    std::uint8_t want8[16], got8[16];
    std::uint16_t want16[16], got16[16];
    fh::batch_distance_scalar(adt.data(), nb.codes, m, want8);
    fh::batch_distance_scalar(adt.data(), nb.codes, m, want16);
    for (std::size_t j = 0; j < 16; ++j) {
      saturated8 += want8[j] == 255;
      saturated16 += want16[j] == 65535;
    }
    for (auto k : simd) {
      fh::batch_kernel_u8(k)(adt.data(), nb.codes, m, got8);
      fh::batch_kernel_u16(k)(adt.data(), nb.codes, m, got16);
      if (!std::equal(got8, got8 + 16, want8) ||
          !std::equal(got16, got16 + 16, want16)) {
        ++mismatches;
      }
    }
  }
  std::string kinds;
  for (auto k : simd) kinds += std::string(kinds.empty() ? "" : ",") + fh::kernel_name(k);
  Outcome o;
  o.pass = mismatches == 0 && !simd.empty() && padded > 0 && saturated8 > 0;
  o.detail = std::to_string(kCases) + " cases on [" + kinds + "], " +
             std::to_string(mismatches) + " mismatches; " +
             std::to_string(padded) + " batches with padded lanes, " +
             std::to_string(saturated8) + " saturated 8-bit lanes";
  if (simd.empty()) o.detail += "; no SIMD kernel available on this CPU";
  o.seconds = w.seconds();
  return o;
}

Outcome quantizer_contract() {
  Stopwatch w;
  auto data = fh::gen_synthetic(20000, 128, kClusters, 7001);
  auto model = fh::flash_train(data, fh::FlashParams{64, 16, 25, 1});
  const double step = static_cast<double>(model.delta()) / fh::kFlashLevels;
  bool endpoints = model.quantize(model.dist_min()) == 0 &&
                   model.quantize(model.dist_max()) == 255;
  std::mt19937_64 rng(7002);
  std::uniform_real_distribution<float> u(model.dist_min(), model.dist_max());
  std::vector<float> xs(100000);
  for (auto& x : xs) x = u(rng);
  xs.push_back(model.dist_min());
  xs.push_back(model.dist_max());
  std::sort(xs.begin(), xs.end());
  std::size_t non_monotone = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    auto q = model.quantize(xs[i]);
    if (i > 0 && model.quantize(xs[i - 1]) > q) ++non_monotone;
    worst = std::max(worst, std::abs(xs[i] - model.dequantize(q)));
  }
  // Same bound on real ADT entries.
  double worst_adt = 0.0;
  std::vector<float> p(model.reduced_dim());
  std::vector<std::uint8_t> code(model.subspaces()), adt(model.subspaces() * 16);
  for (std::size_t r = 0; r < 2000; ++r) {
    model.project(data.row(r * 10).data(), p.data());
    model.adt_projected(p.data(), adt.data());
    for (std::size_t i = 0; i < model.subspaces(); ++i) {
      for (std::size_t j = 0; j < 16; ++j) {
        double d = fh::l2_sqr(p.data() + model.sub_begin(i), model.centroid(i, j),
                              model.sub_dim(i));
        d = std::clamp(d, static_cast<double>(model.dist_min()),
                       static_cast<double>(model.dist_max()));
        worst_adt = std::max(worst_adt, std::abs(d - model.dequantize(adt[i * 16 + j])));
      }
    }
  }
  // float32 inputs: allow rounding of the float value itself.
  double slack = step * 1e-5;
  Outcome o;
  o.pass = endpoints && non_monotone == 0 && worst <= step + slack &&
           worst_adt <= step + slack;
  o.detail = std::string("eta(min)=0 and eta(max)=255: ") +
             (endpoints ? "yes" : "no") + "; " + std::to_string(non_monotone) +
             " monotonicity breaks over " + std::to_string(xs.size()) +
             " sorted inputs; max dequantization error " + fmt(worst / step, 6) +
             " steps (ADT entries " + fmt(worst_adt / step, 6) + " steps)";
  o.seconds = w.seconds();
  return o;
}

Outcome oracle_recall(InvariantLog& inv) {
  Stopwatch w;
  auto base = std::make_shared<const fh::VectorDataset>(
      fh::gen_synthetic(10000, 128, kClusters, 8001));
  auto queries = fh::gen_synthetic_queries(1000, 128, kClusters, 8001);
  auto gt = fh::brute_force_knn(*base, queries, 1);
  fh::BuildReport r;
  auto idx = build_logged(base, fh::Strategy::kExact, fh::StrategyParams{},
                          big_build(), &r, "exact 10K");
  inv.check("exact 10K", idx);
  auto report = idx.evaluate(queries, gt, {2048}, 1, 0, 1);
  Outcome o;
  o.pass = report.rows[0].recall >= 0.99;
  o.detail = "recall@1 at ef 2048 = " + fmt(report.rows[0].recall) + " (need >= 0.99)";
  o.seconds = w.seconds();
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flashhnsw acceptance checks"};
  std::vector<int> only;
  app.add_option("--only", only, "criteria to run (default: all)")
      ->delimiter(',')
      ->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);
  std::set<int> want(only.begin(), only.end());
  if (want.empty()) {
    for (int i = 1; i <= 10; ++i) want.insert(i);
  }
  auto wanted = [&](std::initializer_list<int> ids) {
    return std::any_of(ids.begin(), ids.end(),
                       [&](int i) { return want.count(i) != 0; });
  };
  std::map<int, Outcome> results;
  InvariantLog inv;
  auto note = [&](int id, const Outcome& o) {
    results[id] = o;
    std::printf("  (criterion %d finished in %.1f s)\n", id, o.seconds);
    std::fflush(stdout);
  };

  try {
    if (wanted({5})) note(5, bisector_sign());
    if (wanted({7})) note(7, quantizer_contract());
    if (wanted({6})) note(6, kernel_equivalence());
    if (wanted({4})) note(4, certification());
    if (wanted({8, 9})) note(8, oracle_recall(inv));
    if (wanted({1, 2, 9})) {
      auto [c1, c2] = speedup_and_coding_share(inv);
      note(1, c1);
      note(2, c2);
    }
    if (wanted({3, 9, 10})) {
      auto [c3, c10] = quality_and_ordering(inv);
      note(3, c3);
      note(10, c10);
    }
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 1;
  }
  if (want.count(9) != 0) {
    Outcome o;
    o.pass = inv.ok && !inv.lines.empty();
    o.detail = std::to_string(inv.lines.size()) + " indexes swept, slowest " +
               fmt(inv.worst_seconds, 3) + " s";
    results[9] = o;
  }

  int failed = 0;
  std::printf("\n");
  for (int id : want) {
    const Outcome& o = results.at(id);
    const char* tag = o.pass ? "PASS" : (o.waived ? "WAIVED" : "FAIL");
    if (!o.pass && !o.waived) ++failed;
    std::printf("%s criterion %d (%s): %s\n", tag, id, kNames[id],
                o.detail.c_str());
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
