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

#include "flashhnsw/kmeans.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "flashhnsw/common.hpp"
#include "flashhnsw/distance.hpp"

namespace flashhnsw {

namespace {

using RowMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Assigns every point to its nearest centroid. The candidate comes from the
// expanded form |x|^2 - 2 x.c + |c|^2; the stored distance is recomputed
// directly so inertia is exact for the chosen centroid.
double assign(std::span<const float> points, std::size_t n, std::size_t dim,
              const std::vector<float>& centroids, std::size_t k,
              std::vector<std::uint32_t>& assignment,
              std::vector<float>& distance) {
  Eigen::Map<const RowMatrix> c(centroids.data(), static_cast<Eigen::Index>(k),
                                static_cast<Eigen::Index>(dim));
  Eigen::VectorXf c_norms = c.rowwise().squaredNorm();
  constexpr std::size_t kChunk = 4096;
  double inertia = 0.0;
  RowMatrix cross;
  for (std::size_t begin = 0; begin < n; begin += kChunk) {
    std::size_t rows = std::min(kChunk, n - begin);
    Eigen::Map<const RowMatrix> x(points.data() + begin * dim,
                                  static_cast<Eigen::Index>(rows),
                                  static_cast<Eigen::Index>(dim));
    cross.noalias() = x * c.transpose();
    for (std::size_t r = 0; r < rows; ++r) {
      std::uint32_t best = 0;
      float best_score = std::numeric_limits<float>::max();
      for (std::size_t j = 0; j < k; ++j) {
        float score = c_norms[static_cast<Eigen::Index>(j)] -
                      2.0F * cross(static_cast<Eigen::Index>(r),
                                   static_cast<Eigen::Index>(j));
        if (score < best_score) {
          best_score = score;
          best = static_cast<std::uint32_t>(j);
        }
      }
      std::size_t i = begin + r;
      assignment[i] = best;
      distance[i] = l2_sqr(points.data() + i * dim,
                           centroids.data() + best * dim, dim);
      inertia += distance[i];
    }
  }
  return inertia;
}

}  // namespace

std::vector<std::size_t> subspace_offsets(std::size_t dim, std::size_t parts) {
  if (parts == 0 || parts > dim) {
    throw ConfigError("subspace count must be in [1, dim]");
  }
  std::vector<std::size_t> offsets(parts + 1, 0);
  std::size_t base = dim / parts;
  std::size_t extra = dim % parts;
  for (std::size_t i = 0; i < parts; ++i) {
    offsets[i + 1] = offsets[i] + base + (i < extra ? 1 : 0);
  }
  return offsets;
}

std::uint32_t nearest_centroid(const float* x, const float* centroids,
                               std::size_t k, std::size_t dim) {
  std::uint32_t best = 0;
  float best_d = std::numeric_limits<float>::max();
  for (std::size_t j = 0; j < k; ++j) {
    float d = l2_sqr(x, centroids + j * dim, dim);
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::uint32_t>(j);
    }
  }
  return best;
}

KMeansResult kmeans(std::span<const float> points, std::size_t n,
                    std::size_t dim, const KMeansParams& params) {
  const std::size_t k = params.k;
  if (k == 0 || n < k) {
    throw std::invalid_argument("kmeans: need at least k training points");
  }
  if (points.size() < n * dim) {
    throw std::invalid_argument("kmeans: point buffer too small");
  }
  KMeansResult result;
  result.k = k;
  result.dim = dim;
  result.centroids.assign(k * dim, 0.0F);
  std::mt19937_64 rng(mix64(params.seed ^ 0x6b6d65616e73ULL));

  // k-means++ seeding.
  std::vector<double> min_d(n, std::numeric_limits<double>::max());
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  std::copy_n(points.data() + first * dim, dim, result.centroids.data());
  for (std::size_t c = 1; c < k; ++c) {
    const float* prev = result.centroids.data() + (c - 1) * dim;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = l2_sqr(points.data() + i * dim, prev, dim);
      min_d[i] = std::min(min_d[i], d);
      total += min_d[i];
    }
    std::size_t chosen = 0;
    if (total > 0.0) {
      double target =
          std::uniform_real_distribution<double>(0.0, total)(rng);
      double acc = 0.0;
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += min_d[i];
        if (acc >= target && min_d[i] > 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    std::copy_n(points.data() + chosen * dim, dim,
                result.centroids.data() + c * dim);
  }

  result.assignment.assign(n, 0);
  std::vector<float> distance(n, 0.0F);
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);
  result.inertia.push_back(assign(points, n, dim, result.centroids, k,
                                  result.assignment, distance));
  for (std::size_t it = 0; it < params.iterations; ++it) {
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t a = result.assignment[i];
      ++counts[a];
      const float* x = points.data() + i * dim;
      double* s = sums.data() + a * dim;
      for (std::size_t j = 0; j < dim; ++j) s[j] += x[j];
    }
    std::vector<std::size_t> empty;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        empty.push_back(c);
        continue;
      }
      for (std::size_t j = 0; j < dim; ++j) {
        result.centroids[c * dim + j] = static_cast<float>(
            sums[c * dim + j] / static_cast<double>(counts[c]));
      }
    }
    if (!empty.empty()) {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::partial_sort(order.begin(),
                        order.begin() + static_cast<std::ptrdiff_t>(
                                            std::min(empty.size(), n)),
                        order.end(), [&](std::size_t a, std::size_t b) {
                          return distance[a] > distance[b] ||
                                 (distance[a] == distance[b] && a < b);
                        });
      for (std::size_t e = 0; e < empty.size() && e < n; ++e) {
        std::copy_n(points.data() + order[e] * dim, dim,
                    result.centroids.data() + empty[e] * dim);
      }
    }
    double inertia = assign(points, n, dim, result.centroids, k,
                            result.assignment, distance);
    result.inertia.push_back(inertia);
    if (inertia == 0.0) break;
  }
  return result;
}

}  // namespace flashhnsw
