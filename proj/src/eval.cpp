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

#include "flashhnsw/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "flashhnsw/distance.hpp"
#include "json.hpp"

namespace flashhnsw {

double recall_at_k(const std::vector<std::vector<Neighbor>>& results,
                   const GroundTruth& gt, std::size_t k) {
  if (results.size() != gt.entries.size()) {
    throw std::invalid_argument("result count differs from ground truth");
  }
  if (k == 0 || gt.k < k) throw std::invalid_argument("bad k for recall");
  if (results.empty()) return 0.0;
  double total = 0.0;
  std::unordered_set<vertex_id_t> truth;
  for (std::size_t q = 0; q < results.size(); ++q) {
    truth.clear();
    for (std::size_t j = 0; j < k && j < gt.entries[q].size(); ++j) {
      truth.insert(gt.entries[q][j].id);
    }
    std::size_t hits = 0;
    std::unordered_set<vertex_id_t> seen;
    for (std::size_t j = 0; j < k && j < results[q].size(); ++j) {
      vertex_id_t id = results[q][j].id;
      if (truth.count(id) != 0 && seen.insert(id).second) ++hits;
    }
    total += static_cast<double>(hits) / static_cast<double>(k);
  }
  return total / static_cast<double>(results.size());
}

double average_distance_ratio(const std::vector<std::vector<Neighbor>>& results,
                              const GroundTruth& gt, const VectorDataset& base,
                              const VectorDataset& queries, std::size_t k) {
  if (results.size() != gt.entries.size() || results.size() != queries.size()) {
    throw std::invalid_argument("result count differs from ground truth");
  }
  double total = 0.0;
  std::size_t counted = 0;
  std::vector<double> found;
  for (std::size_t q = 0; q < results.size(); ++q) {
    const float* qv = queries.row(q).data();
    found.clear();
    for (std::size_t j = 0; j < k && j < results[q].size(); ++j) {
      found.push_back(std::sqrt(static_cast<double>(
          l2_sqr(qv, base.row(results[q][j].id).data(), base.dim()))));
    }
    std::sort(found.begin(), found.end());
    double sum = 0.0;
    std::size_t terms = 0;
    for (std::size_t j = 0; j < found.size() && j < gt.entries[q].size();
         ++j) {
      double truth = std::sqrt(static_cast<double>(
          l2_sqr(qv, base.row(gt.entries[q][j].id).data(), base.dim())));
      if (truth == 0.0) continue;
      sum += found[j] / truth;
      ++terms;
    }
    if (terms == 0) continue;
    total += sum / static_cast<double>(terms);
    ++counted;
  }
  return counted == 0 ? 1.0 : total / static_cast<double>(counted);
}

double register_loads(const RegisterLoadModel& model,
                      const SearchCounters& counters) {
  return model.per_kernel_call * static_cast<double>(counters.kernel_calls) +
         model.per_distance *
             static_cast<double>(counters.distance_computations);
}

std::string eval_csv(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out.precision(9);
  out << "# schema: " << kEvalCsvSchema << "; " << kRecallFormula << "\n";
  out << "strategy,ef,k,rerank_depth,threads,queries,recall,adr,qps,"
         "distance_computations,kernel_calls,visited,expansions,"
         "register_loads_batch,register_loads_distance,build_seconds,"
         "coding_seconds,graph_seconds\n";
  for (const auto& r : reports) {
    for (const auto& row : r.rows) {
      out << r.strategy << ',' << row.ef << ',' << r.k << ',' << r.rerank_depth
          << ',' << r.threads << ',' << r.queries << ',' << row.recall << ','
          << row.adr << ',' << row.qps << ','
          << row.counters.distance_computations << ','
          << row.counters.kernel_calls << ',' << row.counters.visited << ','
          << row.counters.expansions << ','
          << register_loads(r.loads_by_batch, row.counters) << ','
          << register_loads(r.loads_by_distance, row.counters) << ','
          << r.build_seconds << ',' << r.coding_seconds << ','
          << r.graph_seconds << '\n';
    }
  }
  return out.str();
}

void write_eval_csv(const std::vector<EvalReport>& reports,
                    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << eval_csv(reports);
  if (!out) throw IoError("write failed: " + path.string());
}

std::string eval_json(const std::vector<EvalReport>& reports) {
  nlohmann::json doc;
  doc["schema"] = kEvalCsvSchema;
  doc["recall_formula"] = kRecallFormula;
  doc["reports"] = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json j;
    j["strategy"] = r.strategy;
    j["n"] = r.n;
    j["dim"] = r.dim;
    j["queries"] = r.queries;
    j["k"] = r.k;
    j["rerank_depth"] = r.rerank_depth;
    j["threads"] = r.threads;
    j["build_seconds"] = r.build_seconds;
    j["coding_seconds"] = r.coding_seconds;
    j["graph_seconds"] = r.graph_seconds;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : r.rows) {
      j["rows"].push_back({
          {"ef", row.ef},
          {"recall", row.recall},
          {"adr", row.adr},
          {"qps", row.qps},
          {"seconds", row.seconds},
          {"distance_computations", row.counters.distance_computations},
          {"kernel_calls", row.counters.kernel_calls},
          {"visited", row.counters.visited},
          {"expansions", row.counters.expansions},
          {"register_loads_batch",
           register_loads(r.loads_by_batch, row.counters)},
          {"register_loads_distance",
           register_loads(r.loads_by_distance, row.counters)},
      });
    }
    doc["reports"].push_back(std::move(j));
  }
  return doc.dump(2);
}

}  // namespace flashhnsw
