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
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <vector>

#include "flashhnsw/common.hpp"
#include "flashhnsw/distance.hpp"
#include "flashhnsw/vectorio.hpp"
#include "test_util.hpp"

namespace flashhnsw {
namespace {

std::vector<char> file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(Fvecs, SingleRecordRoundTrip) {
  TempDir dir;
  auto p = dir.path() / "one.fvecs";
  save_fvecs(VectorDataset(1, 4, {1, 2, 3, 4}), p);
  auto d = load_fvecs(p);
  ASSERT_EQ(d.size(), 1u);
  ASSERT_EQ(d.dim(), 4u);
  EXPECT_EQ(std::vector<float>(d.row(0).begin(), d.row(0).end()),
            (std::vector<float>{1, 2, 3, 4}));
}

TEST(Fvecs, EmptyFileIsEmptyDataset) {
  TempDir dir;
  auto p = dir.path() / "empty.fvecs";
  std::ofstream(p, std::ios::binary).close();
  EXPECT_EQ(load_fvecs(p).size(), 0u);
  save_fvecs(VectorDataset(), p);
  EXPECT_EQ(std::filesystem::file_size(p), 0u);
}

TEST(Fvecs, ExactBytesForOneValue) {
  TempDir dir;
  auto p = dir.path() / "half.fvecs";
  save_fvecs(VectorDataset(1, 1, {0.5F}), p);
  auto bytes = file_bytes(p);
  ASSERT_EQ(bytes.size(), 8u);
  const unsigned char want[8] = {1, 0, 0, 0, 0x00, 0x00, 0x00, 0x3f};
  EXPECT_EQ(std::memcmp(bytes.data(), want, 8), 0);
}

TEST(Fvecs, RandomRoundTripIsBitExact) {
  TempDir dir;
  auto x = random_dataset(100, 16, 3);
  save_fvecs(x, dir.path() / "a.fvecs");
  auto y = load_fvecs(dir.path() / "a.fvecs");
  EXPECT_EQ(x, y);
  save_fvecs(y, dir.path() / "b.fvecs");
  EXPECT_EQ(file_bytes(dir.path() / "a.fvecs"),
            file_bytes(dir.path() / "b.fvecs"));
  auto z = random_dataset(10, 8, 4);
  save_fvecs(z, dir.path() / "c.fvecs");
  EXPECT_EQ(load_fvecs(dir.path() / "c.fvecs"), z);
}

TEST(Fvecs, InconsistentDimIsFormatError) {
  TempDir dir;
  auto p = dir.path() / "bad.fvecs";
  {
    std::ofstream out(p, std::ios::binary);
    std::int32_t d = 2;
    float v[3] = {1, 2, 3};
    out.write(reinterpret_cast<const char*>(&d), 4);
    out.write(reinterpret_cast<const char*>(v), 8);
    d = 3;
    out.write(reinterpret_cast<const char*>(&d), 4);
    out.write(reinterpret_cast<const char*>(v), 12);
  }
  EXPECT_THROW(load_fvecs(p), FormatError);
}

TEST(Fvecs, TruncatedFileIsFormatError) {
  TempDir dir;
  auto p = dir.path() / "cut.fvecs";
  save_fvecs(random_dataset(3, 8, 1), p);
  std::filesystem::resize_file(p, std::filesystem::file_size(p) - 5);
  EXPECT_THROW(load_fvecs(p), FormatError);
}

TEST(Fvecs, NonFiniteIsFormatError) {
  TempDir dir;
  auto p = dir.path() / "nan.fvecs";
  save_fvecs(VectorDataset(1, 2, {1.0F, std::nanf("")}), p);
  EXPECT_THROW(load_fvecs(p), FormatError);
}

TEST(Fvecs, MissingFileIsIoError) {
  EXPECT_THROW(load_fvecs("/nonexistent/x.fvecs"), IoError);
}

TEST(Ivecs, RoundTrip) {
  TempDir dir;
  std::vector<std::vector<std::int32_t>> rows = {{1, 2, 3}, {4, 5, 6}};
  save_ivecs(rows, dir.path() / "r.ivecs");
  EXPECT_EQ(load_ivecs(dir.path() / "r.ivecs"), rows);
}

TEST(Synthetic, SameSeedSameData) {
  EXPECT_EQ(gen_synthetic(200, 16, 4, 9), gen_synthetic(200, 16, 4, 9));
  EXPECT_FALSE(gen_synthetic(200, 16, 4, 9) == gen_synthetic(200, 16, 4, 10));
}

TEST(Synthetic, SingleRowIsFinite) {
  auto d = gen_synthetic(1, 32, 3, 1);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_NO_THROW(d.check_finite());
}

TEST(Synthetic, OneClusterMeanNearCenter) {
  const std::size_t n = 20000;
  const std::size_t dim = 24;
  SyntheticMixture mix(dim, 1, 5);
  auto d = mix.sample(n, 6);
  for (std::size_t j = 0; j < dim; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += d.row(i)[j];
    mean /= static_cast<double>(n);
    double tol = 5.0 * mix.stddev(j) / std::sqrt(static_cast<double>(n));
    EXPECT_NEAR(mean, mix.center(0)[j], tol) << "dimension " << j;
  }
}

TEST(Synthetic, QueriesAreHeldOut) {
  auto base = gen_synthetic(500, 16, 4, 3);
  auto q = gen_synthetic_queries(50, 16, 4, 3);
  ASSERT_EQ(q.size(), 50u);
  for (std::size_t i = 0; i < q.size(); ++i) {
    for (std::size_t j = 0; j < base.size(); ++j) {
      ASSERT_GT(l2_sqr(q.row(i).data(), base.row(j).data(), 16), 0.0F);
    }
  }
}

TEST(Synthetic, PreconditionsThrow) {
  EXPECT_THROW(gen_synthetic(0, 4, 1, 1), std::invalid_argument);
  EXPECT_THROW(gen_synthetic(4, 0, 1, 1), std::invalid_argument);
  EXPECT_THROW(gen_synthetic(4, 4, 0, 1), std::invalid_argument);
}

TEST(BruteForce, SelfDistance) {
  VectorDataset base(2, 2, {0, 0, 3, 4});
  auto gt = brute_force_knn(base, VectorDataset(1, 2, {0, 0}), 1);
  ASSERT_EQ(gt.entries[0].size(), 1u);
  EXPECT_EQ(gt.entries[0][0].id, 0u);
  EXPECT_EQ(gt.entries[0][0].distance, 0.0F);
}

TEST(BruteForce, HandComputedOrder) {
  VectorDataset base(2, 2, {0, 0, 3, 4});
  auto gt = brute_force_knn(base, VectorDataset(1, 2, {3, 3}), 2);
  ASSERT_EQ(gt.entries[0].size(), 2u);
  EXPECT_EQ(gt.entries[0][0].id, 1u);
  EXPECT_EQ(gt.entries[0][0].distance, 1.0F);
  EXPECT_EQ(gt.entries[0][1].id, 0u);
  EXPECT_EQ(gt.entries[0][1].distance, 18.0F);
}

TEST(BruteForce, MatchesQuadraticLoopOracle) {
  auto base = random_dataset(1000, 16, 11);
  auto queries = random_dataset(10, 16, 12);
  auto gt = brute_force_knn(base, queries, 10, 3);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    auto want = naive_knn(base, queries.row(q), 10);
    ASSERT_EQ(gt.entries[q].size(), want.size());
    for (std::size_t j = 0; j < want.size(); ++j) {
      EXPECT_EQ(gt.entries[q][j].id, want[j].first);
      EXPECT_FLOAT_EQ(gt.entries[q][j].distance,
                      static_cast<float>(want[j].second));
    }
  }
}

TEST(BruteForce, FullKIsSortedPermutation) {
  // Duplicated rows force ties.
  auto base = random_dataset(50, 4, 2);
  for (std::size_t j = 0; j < 4; ++j) base.row(7)[j] = base.row(3)[j];
  auto gt = brute_force_knn(base, random_dataset(5, 4, 8), 50);
  for (const auto& list : gt.entries) {
    std::vector<bool> seen(50, false);
    for (std::size_t j = 0; j < list.size(); ++j) {
      ASSERT_FALSE(seen[list[j].id]);
      seen[list[j].id] = true;
      if (j > 0) {
        EXPECT_TRUE(neighbor_less(list[j - 1], list[j]));
      }
    }
  }
}

TEST(BruteForce, IndependentOfThreads) {
  auto base = random_dataset(400, 8, 21);
  auto q = random_dataset(30, 8, 22);
  auto a = brute_force_knn(base, q, 5, 1);
  auto b = brute_force_knn(base, q, 5, 4);
  for (std::size_t i = 0; i < q.size(); ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_EQ(a.entries[i][j].id, b.entries[i][j].id);
    }
  }
}

TEST(BruteForce, DimensionMismatchThrows) {
  EXPECT_THROW(brute_force_knn(random_dataset(4, 3, 1), random_dataset(1, 2, 1),
                               1),
               std::invalid_argument);
}

TEST(Distance, SelfZeroAndSymmetric) {
  auto d = random_dataset(64, 37, 5);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(l2_sqr(d.row(i).data(), d.row(i).data(), d.dim()), 0.0F);
    for (std::size_t j = 0; j < d.size(); j += 7) {
      EXPECT_EQ(l2_sqr(d.row(i).data(), d.row(j).data(), d.dim()),
                l2_sqr(d.row(j).data(), d.row(i).data(), d.dim()));
      EXPECT_NEAR(l2_sqr(d.row(i).data(), d.row(j).data(), d.dim()),
                  naive_l2(d.row(i), d.row(j)), 1e-3);
    }
  }
}

TEST(GroundTruth, IvecsRoundTripRecomputesDistances) {
  TempDir dir;
  auto base = random_dataset(200, 8, 31);
  auto q = random_dataset(10, 8, 32);
  auto gt = brute_force_knn(base, q, 5);
  save_groundtruth(gt, dir.path() / "gt.ivecs");
  auto back = load_groundtruth(dir.path() / "gt.ivecs", base, q);
  ASSERT_EQ(back.k, 5u);
  for (std::size_t i = 0; i < q.size(); ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_EQ(back.entries[i][j].id, gt.entries[i][j].id);
      EXPECT_FLOAT_EQ(back.entries[i][j].distance, gt.entries[i][j].distance);
    }
  }
}

TEST(Sampling, DistinctAndDeterministic) {
  auto a = sample_indices(1000, 100, 4);
  EXPECT_EQ(a, sample_indices(1000, 100, 4));
  std::vector<bool> seen(1000, false);
  for (auto i : a) {
    ASSERT_LT(i, 1000u);
    ASSERT_FALSE(seen[i]);
    seen[i] = true;
  }
  EXPECT_EQ(sample_indices(10, 50, 1).size(), 10u);
}

}  // namespace
}  // namespace flashhnsw
