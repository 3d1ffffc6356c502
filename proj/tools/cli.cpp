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

#include "flashhnsw/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <exception>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "flashhnsw/common.hpp"
#include "flashhnsw/eval.hpp"
#include "flashhnsw/flash.hpp"
#include "flashhnsw/index.hpp"
#include "flashhnsw/pca.hpp"
#include "flashhnsw/quantizers.hpp"
#include "flashhnsw/vectorio.hpp"

namespace flashhnsw {
namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

struct Options {
  std::string strategy = "flash";
  std::vector<std::string> strategies = {"exact", "flash"};
  std::string dataset;
  std::string synthetic;  // n,dim,clusters
  std::string queries;
  std::string gt;
  std::string index;
  std::string out;
  std::string json_out;
  std::size_t query_count = 1000;
  std::size_t gt_k = 100;
  std::size_t C = 1024;
  std::size_t R = 32;
  std::size_t threads = 1;
  std::uint64_t seed = 42;
  std::string ef_grid = "16,32,64,128,256,512";
  std::size_t ef = 64;
  std::size_t k = 1;
  std::size_t rerank_depth = 0;
  std::string kernel = "auto";
  bool check = false;
  StrategyParams sp;
  std::string d_f_grid = "32,48,64";
  std::string m_f_grid = "8,16";
};

std::vector<std::size_t> parse_list(const std::string& text,
                                    const char* what) {
  std::vector<std::size_t> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw ConfigError(std::string("bad ") + what + " '" + text + "'");
    }
    values.push_back(static_cast<std::size_t>(v));
  }
  if (values.empty()) throw ConfigError(std::string("empty ") + what);
  return values;
}

struct SyntheticSpec {
  std::size_t n, dim, clusters;
};

std::optional<SyntheticSpec> synthetic_spec(const Options& o) {
  if (o.synthetic.empty()) return std::nullopt;
  auto v = parse_list(o.synthetic, "--synthetic (want n,dim,clusters)");
  if (v.size() != 3 || v[0] == 0 || v[1] == 0 || v[2] == 0) {
    throw ConfigError("--synthetic wants three positive values n,dim,clusters");
  }
  return SyntheticSpec{v[0], v[1], v[2]};
}

std::shared_ptr<const VectorDataset> load_base(const Options& o) {
  if (!o.dataset.empty() && !o.synthetic.empty()) {
    throw ConfigError("give either --dataset or --synthetic, not both");
  }
  if (!o.dataset.empty()) {
    return std::make_shared<VectorDataset>(load_fvecs(o.dataset));
  }
  if (auto s = synthetic_spec(o)) {
    return std::make_shared<VectorDataset>(
        gen_synthetic(s->n, s->dim, s->clusters, o.seed));
  }
  throw ConfigError("one of --dataset or --synthetic is required");
}

VectorDataset load_queries(const Options& o) {
  if (!o.queries.empty()) return load_fvecs(o.queries);
  if (auto s = synthetic_spec(o)) {
    return gen_synthetic_queries(o.query_count, s->dim, s->clusters, o.seed);
  }
  throw ConfigError("--queries is required with --dataset");
}

GroundTruth load_gt(const Options& o, const VectorDataset& base,
                    const VectorDataset& queries) {
  if (!o.gt.empty()) return load_groundtruth(o.gt, base, queries);
  return brute_force_knn(base, queries, std::max(o.k, o.gt_k), o.threads);
}

BuildParams build_params(const Options& o) {
  BuildParams bp;
  bp.C = o.C;
  bp.R = o.R;
  bp.seed = o.seed;
  bp.threads = o.threads;
  bp.validate();
  return bp;
}

StrategyParams strategy_params(const Options& o) {
  StrategyParams sp = o.sp;
  sp.kernel = parse_kernel_kind(o.kernel);
  return sp;
}

void require_out(const Options& o, const char* cmd) {
  if (o.out.empty()) throw ConfigError(std::string(cmd) + " needs --out");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out.empty()) {
    out << text;
    return;
  }
  auto f = open_out(o.out);
  f << text;
  if (!f) throw IoError("write to '" + o.out + "' failed");
}

void emit_json(const Options& o, const std::string& text) {
  if (o.json_out.empty()) return;
  auto f = open_out(o.json_out);
  f << text << '\n';
}

json build_json(const BuildReport& r) {
  return {{"strategy", strategy_name(r.strategy)},
          {"n", r.n},
          {"dim", r.dim},
          {"threads", r.threads},
          {"coding_seconds", r.coding_seconds},
          {"graph_seconds", r.graph_seconds},
          {"total_seconds", r.total_seconds()},
          {"distance_computations", r.counters.distance_computations},
          {"kernel_calls", r.counters.kernel_calls}};
}

EvalReport fill_report(EvalReport ev, const BuildReport& r) {
  ev.coding_seconds = r.coding_seconds;
  ev.graph_seconds = r.graph_seconds;
  ev.build_seconds = r.total_seconds();
  return ev;
}

void check_or_throw(const Index& index, std::ostream& err) {
  auto inv = index.check_invariants();
  if (inv.ok()) return;
  for (const auto& v : inv.violations) err << "invariant: " << v << '\n';
  throw std::runtime_error("graph invariants violated");
}

int cmd_gen(const Options& o, std::ostream& out) {
  auto s = synthetic_spec(o);
  if (!s) throw ConfigError("gen needs --synthetic n,dim,clusters");
  require_out(o, "gen");
  auto base = gen_synthetic(s->n, s->dim, s->clusters, o.seed);
  save_fvecs(base, o.out);
  out << "wrote " << base.size() << "x" << base.dim() << " to " << o.out
      << '\n';
  if (!o.queries.empty()) {
    auto q = gen_synthetic_queries(o.query_count, s->dim, s->clusters, o.seed);
    save_fvecs(q, o.queries);
    out << "wrote " << q.size() << " queries to " << o.queries << '\n';
    if (!o.gt.empty()) {
      save_groundtruth(brute_force_knn(base, q, o.gt_k, o.threads), o.gt);
      out << "wrote top-" << o.gt_k << " ground truth to " << o.gt << '\n';
    }
  }
  return kExitOk;
}

int cmd_groundtruth(const Options& o, std::ostream& out) {
  require_out(o, "groundtruth");
  auto base = load_base(o);
  auto queries = load_queries(o);
  if (queries.dim() != base->dim()) {
    throw ConfigError("query dimension differs from the dataset");
  }
  save_groundtruth(brute_force_knn(*base, queries, o.gt_k, o.threads), o.out);
  out << "wrote top-" << o.gt_k << " for " << queries.size() << " queries to "
      << o.out << '\n';
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  auto base = load_base(o);
  Strategy strategy = parse_strategy(o.strategy);
  StrategyParams sp = strategy_params(o);
  auto start = Clock::now();
  auto sample = training_sample(*base, sp.train_sample, o.seed);
  json j = {{"strategy", strategy_name(strategy)},
            {"sample", sample.size()},
            {"dim", base->dim()}};
  switch (strategy) {
    case Strategy::kExact:
      break;
    case Strategy::kPQ: {
      auto m = pq_train(sample, sp.M_PQ, sp.L_PQ, sp.kmeans_iters, o.seed);
      j["subspaces"] = m.subspaces();
      j["bits"] = m.nbits();
      break;
    }
    case Strategy::kSQ: {
      auto m = sq_train(sample, sp.L_SQ);
      j["bits"] = sp.L_SQ;
      break;
    }
    case Strategy::kPCA: {
      auto m = pca_train(sample, sp.alpha);
      j["retained"] = m.retained();
      break;
    }
    case Strategy::kFlash: {
      auto m = flash_train(sample,
                           FlashParams{sp.d_F, sp.M_F, sp.kmeans_iters, o.seed});
      j["d_F"] = m.reduced_dim();
      j["M_F"] = m.subspaces();
      j["dist_min"] = m.dist_min();
      j["dist_max"] = m.dist_max();
      j["delta"] = m.delta();
      break;
    }
  }
  j["train_seconds"] =
      std::chrono::duration<double>(Clock::now() - start).count();
  emit(o, j.dump(2) + "\n", out);
  return kExitOk;
}

int cmd_build(const Options& o, std::ostream& out, std::ostream& err) {
  require_out(o, "build");
  auto base = load_base(o);
  BuildReport report;
  auto index = Index::build(base, parse_strategy(o.strategy),
                            strategy_params(o), build_params(o), &report);
  if (o.check) check_or_throw(index, err);
  index.save(o.out);
  json j = build_json(report);
  j["index"] = o.out;
  out << j.dump(2) << '\n';
  emit_json(o, j.dump(2));
  return kExitOk;
}

Index open_index(const Options& o,
                 std::shared_ptr<const VectorDataset> base) {
  if (o.index.empty()) throw ConfigError("--index is required");
  return Index::load(o.index, std::move(base), parse_kernel_kind(o.kernel));
}

int cmd_search(const Options& o, std::ostream& out) {
  auto base = load_base(o);
  auto index = open_index(o, base);
  auto queries = load_queries(o);
  SearchParams params{o.ef, o.k, o.rerank_depth};
  params.validate();
  std::vector<std::vector<std::int32_t>> rows(queries.size());
  auto start = Clock::now();
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (const auto& nb : index.search(queries.row(q), params)) {
      rows[q].push_back(static_cast<std::int32_t>(nb.id));
    }
  }
  double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (!o.out.empty()) save_ivecs(rows, o.out);
  out << "queries=" << queries.size() << " ef=" << o.ef << " k=" << o.k
      << " rerank_depth=" << o.rerank_depth << " seconds=" << secs << '\n';
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
  auto base = load_base(o);
  auto index = open_index(o, base);
  auto queries = load_queries(o);
  auto gt = load_gt(o, *base, queries);
  err << "# " << kRecallFormula << '\n';
  auto report = index.evaluate(queries, gt, parse_list(o.ef_grid, "--ef-grid"),
                               o.k, o.rerank_depth, o.threads);
  emit(o, eval_csv({report}), out);
  emit_json(o, eval_json({report}));
  return kExitOk;
}

double best_recall(const EvalReport& r) {
  double best = 0.0;
  for (const auto& row : r.rows) best = std::max(best, row.recall);
  return best;
}

int cmd_bench(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.strategies.empty()) throw ConfigError("--strategies is empty");
  std::vector<Strategy> strategies;
  for (const auto& s : o.strategies) strategies.push_back(parse_strategy(s));
  auto base = load_base(o);
  auto queries = load_queries(o);
  auto gt = load_gt(o, *base, queries);
  auto ef_grid = parse_list(o.ef_grid, "--ef-grid");
  err << "# " << kRecallFormula << '\n';

  std::vector<EvalReport> reports;
  for (Strategy s : strategies) {
    BuildReport br;
    auto index = Index::build(base, s, strategy_params(o), build_params(o), &br);
    if (o.check) check_or_throw(index, err);
    reports.push_back(fill_report(
        index.evaluate(queries, gt, ef_grid, o.k, o.rerank_depth, o.threads),
        br));
    err << strategy_name(s) << ": build " << br.total_seconds() << " s\n";
  }

  // Speedups are relative to exact when it ran, else to the first strategy.
  std::size_t ref = 0;
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    if (strategies[i] == Strategy::kExact) {
      ref = i;
      break;
    }
  }
  std::ostringstream table;
  table << "strategy,build_seconds,coding_seconds,graph_seconds,"
           "speedup_vs_" << reports[ref].strategy << ",best_recall\n";
  json speedups = json::array();
  for (const auto& r : reports) {
    double ratio = r.build_seconds > 0.0
                       ? reports[ref].build_seconds / r.build_seconds
                       : 0.0;
    if (&r == &reports[ref]) ratio = 1.0;
    table << r.strategy << ',' << r.build_seconds << ',' << r.coding_seconds
          << ',' << r.graph_seconds << ',' << ratio << ',' << best_recall(r)
          << '\n';
    speedups.push_back({{"strategy", r.strategy}, {"speedup", ratio}});
  }
  if (o.out.empty()) {
    out << eval_csv(reports) << '\n' << table.str();
  } else {
    emit(o, eval_csv(reports), out);
    out << table.str();
  }
  if (!o.json_out.empty()) {
    json j = json::parse(eval_json(reports));
    j["speedups"] = speedups;
    emit_json(o, j.dump(2));
  }
  return kExitOk;
}

int cmd_grid(const Options& o, std::ostream& out, std::ostream& err) {
  auto d_fs = parse_list(o.d_f_grid, "--d-f-grid");
  auto m_fs = parse_list(o.m_f_grid, "--m-f-grid");
  auto base = load_base(o);
  auto queries = load_queries(o);
  auto gt = load_gt(o, *base, queries);
  auto ef_grid = parse_list(o.ef_grid, "--ef-grid");
  err << "# " << kRecallFormula << '\n';
  std::ostringstream table;
  table << "d_F,M_F,build_seconds,coding_seconds,graph_seconds,best_ef,"
           "best_recall\n";
  for (std::size_t d_f : d_fs) {
    for (std::size_t m_f : m_fs) {
      if (m_f == 0 || m_f > d_f || d_f > base->dim()) {
        err << "skip d_F=" << d_f << " M_F=" << m_f << '\n';
        continue;
      }
      StrategyParams sp = strategy_params(o);
      sp.d_F = d_f;
      sp.M_F = m_f;
      BuildReport br;
      auto index =
          Index::build(base, Strategy::kFlash, sp, build_params(o), &br);
      auto ev =
          index.evaluate(queries, gt, ef_grid, o.k, o.rerank_depth, o.threads);
      const EvalRow* best = &ev.rows.front();
      for (const auto& row : ev.rows) {
        if (row.recall > best->recall) best = &row;
      }
      table << d_f << ',' << m_f << ',' << br.total_seconds() << ','
            << br.coding_seconds << ',' << br.graph_seconds << ',' << best->ef
            << ',' << best->recall << '\n';
    }
  }
  emit(o, table.str(), out);
  return kExitOk;
}

void add_dataset_options(CLI::App& app, Options& o) {
  app.add_option("--dataset", o.dataset, "base vectors (fvecs)");
  app.add_option("--synthetic", o.synthetic,
                 "generate the base set instead: n,dim,clusters");
  app.add_option("--queries", o.queries, "query vectors (fvecs)");
  app.add_option("--query-count", o.query_count,
                 "held-out synthetic queries when --queries is absent");
  app.add_option("--gt", o.gt, "ground truth ids (ivecs)");
  app.add_option("--gt-k", o.gt_k, "ground-truth depth to compute");
  app.add_option("--seed", o.seed, "seed for data, sampling and layers");
  app.add_option("--threads", o.threads, "worker threads (0 = all cores)");
  app.add_option("--out", o.out, "output path");
  app.add_option("--json", o.json_out, "JSON summary path");
}

void add_build_options(CLI::App& app, Options& o) {
  app.add_option("--strategy", o.strategy, "exact|pq|sq|pca|flash");
  app.add_option("--strategies", o.strategies, "bench: strategies to compare")
      ->delimiter(',');
  app.add_option("--C", o.C, "candidate list size during construction");
  app.add_option("--R", o.R, "neighbors per vertex (2R on the base layer)");
  app.add_option("--m-pq", o.sp.M_PQ, "PQ subspaces");
  app.add_option("--l-pq", o.sp.L_PQ, "PQ bits per subspace");
  app.add_option("--l-sq", o.sp.L_SQ, "SQ bits per dimension");
  app.add_option("--alpha", o.sp.alpha, "PCA retained variance fraction");
  app.add_option("--d-f", o.sp.d_F, "Flash principal components");
  app.add_option("--m-f", o.sp.M_F, "Flash subspaces");
  app.add_option("--d-f-grid", o.d_f_grid, "grid: d_F values");
  app.add_option("--m-f-grid", o.m_f_grid, "grid: M_F values");
  app.add_option("--train-sample", o.sp.train_sample,
                 "vectors used to train the coder");
  app.add_option("--kmeans-iters", o.sp.kmeans_iters, "k-means iterations");
  app.add_option("--kernel", o.kernel,
                 "auto|scalar|vector128|vector256|vector512; FLASH_ANN_KERNEL "
                 "overrides");
  app.add_flag("--check", o.check, "verify graph invariants after building");
}

void add_search_options(CLI::App& app, Options& o) {
  app.add_option("--index", o.index, "index file");
  app.add_option("--ef-grid", o.ef_grid, "comma-separated search widths");
  app.add_option("--ef", o.ef, "search width");
  app.add_option("--k", o.k, "results per query");
  app.add_option("--rerank-depth", o.rerank_depth,
                 "candidates re-scored with full vectors (0 = off)");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  Options o;
  CLI::App app{"flashhnsw: HNSW construction with compact coding"};
  app.name("flashhnsw");
  app.set_config("--config", "", "TOML config file; flags win over it");
  app.require_subcommand(1);
  add_dataset_options(app, o);
  add_build_options(app, o);
  add_search_options(app, o);

  struct Command {
    const char* name;
    const char* help;
  };
  const Command commands[] = {
      {"gen", "write a synthetic base set (and queries/ground truth)"},
      {"groundtruth", "exact top-k by linear scan"},
      {"train", "train a coder and report its range"},
      {"build", "build and save an index"},
      {"search", "run queries against a saved index"},
      {"eval", "recall, ADR, QPS and counters per ef"},
      {"bench", "build and evaluate several strategies"},
      {"grid", "sweep Flash d_F and M_F"},
  };
  std::string chosen;
  for (const auto& c : commands) {
    app.add_subcommand(c.name, c.help)->fallthrough()->final_callback(
        [&chosen, name = c.name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (chosen == "gen") return cmd_gen(o, out);
    if (chosen == "groundtruth") return cmd_groundtruth(o, out);
    if (chosen == "train") return cmd_train(o, out);
    if (chosen == "build") return cmd_build(o, out, err);
    if (chosen == "search") return cmd_search(o, out);
    if (chosen == "eval") return cmd_eval(o, out, err);
    if (chosen == "bench") return cmd_bench(o, out, err);
    if (chosen == "grid") return cmd_grid(o, out, err);
    err << "no command\n";
    return kExitConfig;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const std::invalid_argument& e) {
    // ConfigError derives from invalid_argument.
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace flashhnsw
