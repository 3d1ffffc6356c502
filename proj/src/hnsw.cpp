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

#include "flashhnsw/hnsw.hpp"

#include <cmath>
#include <string>

#include "flashhnsw/search.hpp"

namespace flashhnsw {

namespace {
constexpr int kMaxLevel = 48;
}

void BuildParams::validate() const {
  if (R == 0) throw ConfigError("R must be at least 1");
  if (R > C) {
    throw ConfigError("R (" + std::to_string(R) + ") must not exceed C (" +
                      std::to_string(C) + ")");
  }
  if (2 * R > kMaxBlockCapacity) throw ConfigError("R is too large");
}

void SearchParams::validate() const {
  if (k == 0) throw ConfigError("k must be at least 1");
  if (k > ef) throw ConfigError("k must not exceed ef");
  if (rerank_depth > 0 && rerank_depth < k) {
    throw ConfigError("rerank depth must be at least k");
  }
}

SearchCounters& SearchCounters::operator+=(const SearchCounters& o) {
  distance_computations += o.distance_computations;
  kernel_calls += o.kernel_calls;
  visited += o.visited;
  expansions += o.expansions;
  saturated_lanes += o.saturated_lanes;
  return *this;
}

int assign_layer(double uniform, double mL) {
  if (!(uniform < 1.0)) return 0;
  if (!(uniform > 0.0)) return kMaxLevel;
  double level = std::floor(-std::log(uniform) * mL);
  return static_cast<int>(std::min<double>(level, kMaxLevel));
}

double layer_uniform(std::uint64_t seed, vertex_id_t id) {
  std::uint64_t x = mix64(seed ^ mix64(0x6c61796572ULL + id));
  // 53 random bits mapped to (0, 1].
  return static_cast<double>((x >> 11) + 1) * 0x1.0p-53;
}

int assign_layer(std::uint64_t seed, vertex_id_t id, std::size_t R) {
  if (R < 2) return 0;
  return assign_layer(layer_uniform(seed, id), layer_normalizer(R));
}

}  // namespace flashhnsw
