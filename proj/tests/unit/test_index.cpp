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

#include <fstream>
#include <memory>
#include <vector>

#include "flashhnsw/index.hpp"
#include "test_util.hpp"

namespace flashhnsw {
namespace {

std::shared_ptr<const VectorDataset> small_base(std::uint64_t seed = 1) {
  return std::make_shared<const VectorDataset>(gen_synthetic(2000, 32, 8, seed));
}

StrategyParams small_params() {
  StrategyParams sp;
  sp.M_PQ = 8;
  sp.d_F = 16;
  sp.M_F = 8;
  sp.kmeans_iters = 8;
  return sp;
}

class IndexRoundTrip : public ::testing::TestWithParam<Strategy> {};

TEST_P(IndexRoundTrip, SameResultsAfterLoad) {
  auto base = small_base();
  auto queries = gen_synthetic_queries(50, 32, 8, 1);
  auto idx = Index::build(base, GetParam(), small_params(), BuildParams{48, 8, 2, 1});
  ASSERT_TRUE(idx.check_invariants().ok());
  TempDir dir;
  auto path = dir.path() / "x.idx";
  idx.save(path);
  auto back = Index::load(path, base);
  EXPECT_EQ(back.strategy(), GetParam());
  EXPECT_EQ(back.build_params().R, 8u);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    SearchParams sp{32, 5, GetParam() == Strategy::kExact ? 0u : 10u};
    ASSERT_EQ(idx.search(queries.row(q), sp), back.search(queries.row(q), sp));
  }
  // Saving the loaded index reproduces the file.
  auto again = dir.path() / "y.idx";
  back.save(again);
  std::ifstream a(path, std::ios::binary), b(again, std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)), {});
  std::string sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);
}

INSTANTIATE_TEST_SUITE_P(AllStrategies, IndexRoundTrip,
                         ::testing::Values(Strategy::kExact, Strategy::kPQ,
                                           Strategy::kSQ, Strategy::kPCA,
                                           Strategy::kFlash),
                         [](const auto& info) {
                           return std::string(strategy_name(info.param));
                         });

TEST(IndexFile, WrongDatasetRejected) {
  auto base = small_base(1);
  auto idx = Index::build(base, Strategy::kFlash, small_params(), BuildParams{32, 4, 1, 1});
  TempDir dir;
  auto path = dir.path() / "x.idx";
  idx.save(path);
  EXPECT_THROW(Index::load(path, small_base(2)), FormatError);
  auto shorter = std::make_shared<const VectorDataset>(base->slice(0, 1999));
  EXPECT_THROW(Index::load(path, shorter), FormatError);
}

TEST(IndexFile, VersionMismatchRejected) {
  auto base = small_base();
  auto idx = Index::build(base, Strategy::kExact, small_params(), BuildParams{32, 4, 1, 1});
  TempDir dir;
  auto path = dir.path() / "x.idx";
  idx.save(path);
  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto corrupt = [&](std::size_t pos, const std::string& name) {
    std::string b = bytes;
    b[pos] = static_cast<char>(b[pos] ^ 0x5A);
    auto p = dir.path() / name;
    std::ofstream(p, std::ios::binary) << b;
    return p;
  };
  EXPECT_THROW(Index::load(corrupt(0, "magic.idx"), base), FormatError);
  EXPECT_THROW(Index::load(corrupt(8, "version.idx"), base), FormatError);
  std::ofstream(dir.path() / "trunc.idx", std::ios::binary)
      << bytes.substr(0, bytes.size() / 2);
  EXPECT_THROW(Index::load(dir.path() / "trunc.idx", base), FormatError);
  EXPECT_THROW(Index::load(dir.path() / "missing.idx", base), IoError);
}

TEST(IndexBuild, ReportsTimesAndRejectsBadConfig) {
  auto base = small_base();
  BuildReport report;
  Index::build(base, Strategy::kFlash, small_params(), BuildParams{32, 4, 1, 1},
               &report);
  EXPECT_EQ(report.n, 2000u);
  EXPECT_GT(report.coding_seconds, 0.0);
  EXPECT_GT(report.graph_seconds, 0.0);
  auto bad = small_params();
  bad.M_F = 40;
  EXPECT_THROW(Index::build(base, Strategy::kFlash, bad, BuildParams{32, 4, 1, 1}),
               ConfigError);
  EXPECT_THROW(Index::build(base, Strategy::kExact, small_params(),
                            BuildParams{4, 8, 1, 1}),
               ConfigError);
  EXPECT_THROW(parse_strategy("opq"), ConfigError);
}

TEST(TrainingSample, DistinctRowsUpToLimit) {
  auto base = small_base();
  auto s = training_sample(*base, 500, 3);
  EXPECT_EQ(s.size(), 500u);
  EXPECT_EQ(training_sample(*base, 500, 3), s);
  EXPECT_EQ(training_sample(*base, 5000, 3).size(), 2000u);
}

}  // namespace
}  // namespace flashhnsw
