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

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "flashhnsw/flash.hpp"
#include "flashhnsw/pca.hpp"
#include "flashhnsw/quantizers.hpp"
#include "flashhnsw/vectorio.hpp"

namespace flashhnsw {

/// Sign test for "is u closer to v than to w" through the bisector of v, w.
/// Returns e.u - b with e = w - v, b = (|w|^2 - |v|^2) / 2; negative means
/// v is closer.
double bisector_margin(std::span<const double> u, std::span<const double> v,
                       std::span<const double> w);

/// Error term relating exact and compact margins:
/// margin(u', v', w') = margin(u, v, w) - E, with E_x = x - x'.
double compression_error_term(std::span<const double> u,
                              std::span<const double> v,
                              std::span<const double> w,
                              std::span<const double> eu,
                              std::span<const double> ev,
                              std::span<const double> ew);

struct ComparisonTriple {
  std::vector<double> e;
  double b = 0.0;
  double margin = 0.0;  // e.u - b
  double E = 0.0;
  // sign(d(u,w)^2 - d(u,v)^2) == sign(d(u',w')^2 - d(u',v')^2), computed
  // from distances rather than from the margins.
  bool agree = false;
  // |margin| >= |E| with a float64 rounding guard: cases within the guard
  // are counted as boundary and not certified.
  bool certified = false;
  bool boundary = false;
};

/// Rounding guard for the certification inequality.
double certification_guard(std::span<const double> u,
                           std::span<const double> v,
                           std::span<const double> w);

ComparisonTriple check_triple(std::span<const double> u,
                              std::span<const double> v,
                              std::span<const double> w,
                              std::span<const double> uc,
                              std::span<const double> vc,
                              std::span<const double> wc);

/// Row -> (exact, compact) vectors in a common frame, float64.
struct CompactView {
  std::size_t dim = 0;
  std::function<void(std::size_t row, double* exact, double* compact)> fill;
};

CompactView pq_view(const VectorDataset& data, const PQModel& model);
CompactView sq_view(const VectorDataset& data, const SQModel& model);
/// Rotated frame of a full-rank PCA; compact keeps the first d coordinates.
CompactView pca_view(const VectorDataset& data, const PCAModel& full,
                     std::size_t d);
/// Rotated frame; compact is the code's centroids over the first d_F
/// coordinates, zero elsewhere.
CompactView flash_view(const VectorDataset& data, const FlashModel& model);

/// For `count` random rows u: its `top` nearest neighbors (excluding u) and
/// a random distinct pair v, w among them.
std::vector<std::array<std::size_t, 3>> sample_triples(
    const VectorDataset& data, std::size_t count, std::size_t top,
    std::uint64_t seed, std::size_t threads = 0);

struct CertificationReport {
  std::size_t triples = 0;
  std::size_t agreeing = 0;
  std::size_t certified = 0;
  std::size_t certified_disagreeing = 0;
  std::size_t boundary = 0;
  double certified_fraction() const {
    return triples == 0 ? 0.0
                        : static_cast<double>(certified) /
                              static_cast<double>(triples);
  }
};

CertificationReport certify(
    const CompactView& view,
    const std::vector<std::array<std::size_t, 3>>& triples);

}  // namespace flashhnsw
