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

#include "flashhnsw/certify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace flashhnsw {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

int sign(double x) { return (x > 0.0) - (x < 0.0); }

void check_sizes(std::initializer_list<std::size_t> sizes) {
  std::size_t first = *sizes.begin();
  for (std::size_t s : sizes) {
    if (s != first) throw std::invalid_argument("triple vectors differ in size");
  }
}

// Rotated-frame coordinates y = A^T (x - mean) over every stored component.
void rotate(const PCAModel& pca, const float* x, double* out) {
  const std::size_t dim = pca.dim();
  std::vector<double> centered(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    centered[j] = static_cast<double>(x[j]) - pca.mean()[j];
  }
  for (std::size_t c = 0; c < pca.components(); ++c) {
    auto a = pca.component(c);
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) s += a[j] * centered[j];
    out[c] = s;
  }
}

}  // namespace

double bisector_margin(std::span<const double> u, std::span<const double> v,
                       std::span<const double> w) {
  check_sizes({u.size(), v.size(), w.size()});
  double eu = 0.0;
  double b = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    eu += (w[i] - v[i]) * u[i];
    b += w[i] * w[i] - v[i] * v[i];
  }
  return eu - b / 2.0;
}

double compression_error_term(std::span<const double> u,
                              std::span<const double> v,
                              std::span<const double> w,
                              std::span<const double> eu,
                              std::span<const double> ev,
                              std::span<const double> ew) {
  check_sizes({u.size(), v.size(), w.size(), eu.size(), ev.size(), ew.size()});
  double e = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    e += (ew[i] - ev[i]) * u[i];
    e += (w[i] - v[i]) * eu[i];
    e += ev[i] * eu[i] - ew[i] * eu[i];
    e += 0.5 * ew[i] * ew[i] - 0.5 * ev[i] * ev[i];
    e += v[i] * ev[i] - w[i] * ew[i];
  }
  return e;
}

double certification_guard(std::span<const double> u,
                           std::span<const double> v,
                           std::span<const double> w) {
  return 1e-9 * (1.0 + dot(u, u) + dot(v, v) + dot(w, w));
}

ComparisonTriple check_triple(std::span<const double> u,
                              std::span<const double> v,
                              std::span<const double> w,
                              std::span<const double> uc,
                              std::span<const double> vc,
                              std::span<const double> wc) {
  check_sizes({u.size(), v.size(), w.size(), uc.size(), vc.size(), wc.size()});
  const std::size_t d = u.size();
  ComparisonTriple t;
  t.e.resize(d);
  std::vector<double> eu(d), ev(d), ew(d);
  for (std::size_t i = 0; i < d; ++i) {
    t.e[i] = w[i] - v[i];
    eu[i] = u[i] - uc[i];
    ev[i] = v[i] - vc[i];
    ew[i] = w[i] - wc[i];
  }
  t.b = (dot(w, w) - dot(v, v)) / 2.0;
  t.margin = bisector_margin(u, v, w);
  t.E = compression_error_term(u, v, w, eu, ev, ew);
  int exact = sign(sq_dist(u, w) - sq_dist(u, v));
  int compact = sign(sq_dist(uc, wc) - sq_dist(uc, vc));
  t.agree = exact == compact;
  double slack = std::abs(t.margin) - std::abs(t.E);
  double guard = certification_guard(u, v, w);
  t.certified = slack > guard;
  t.boundary = std::abs(slack) <= guard;
  return t;
}

CompactView pq_view(const VectorDataset& data, const PQModel& model) {
  if (data.dim() != model.dim()) throw std::invalid_argument("pq view dim");
  CompactView view;
  view.dim = data.dim();
  view.fill = [&data, &model](std::size_t row, double* exact, double* compact) {
    const float* x = data.row(row).data();
    std::vector<std::uint8_t> code(model.subspaces());
    std::vector<float> dec(data.dim());
    model.encode(x, code.data());
    model.decode(code.data(), dec.data());
    for (std::size_t j = 0; j < data.dim(); ++j) {
      exact[j] = x[j];
      compact[j] = dec[j];
    }
  };
  return view;
}

CompactView sq_view(const VectorDataset& data, const SQModel& model) {
  if (data.dim() != model.dim()) throw std::invalid_argument("sq view dim");
  CompactView view;
  view.dim = data.dim();
  view.fill = [&data, &model](std::size_t row, double* exact, double* compact) {
    const float* x = data.row(row).data();
    std::vector<std::uint8_t> code(data.dim());
    std::vector<float> dec(data.dim());
    model.encode(x, code.data());
    model.decode(code.data(), dec.data());
    for (std::size_t j = 0; j < data.dim(); ++j) {
      exact[j] = x[j];
      compact[j] = dec[j];
    }
  };
  return view;
}

CompactView pca_view(const VectorDataset& data, const PCAModel& full,
                     std::size_t d) {
  if (data.dim() != full.dim() || full.components() != full.dim()) {
    throw std::invalid_argument("pca view needs a full-rank model");
  }
  if (d > full.dim()) throw std::invalid_argument("pca view: d > D");
  CompactView view;
  view.dim = data.dim();
  view.fill = [&data, &full, d](std::size_t row, double* exact,
                                double* compact) {
    rotate(full, data.row(row).data(), exact);
    for (std::size_t j = 0; j < full.dim(); ++j) {
      compact[j] = j < d ? exact[j] : 0.0;
    }
  };
  return view;
}

CompactView flash_view(const VectorDataset& data, const FlashModel& model) {
  const PCAModel& pca = model.pca();
  if (data.dim() != model.dim() || pca.components() != pca.dim()) {
    throw std::invalid_argument("flash view needs the full rotation");
  }
  CompactView view;
  view.dim = data.dim();
  view.fill = [&data, &model](std::size_t row, double* exact,
                              double* compact) {
    rotate(model.pca(), data.row(row).data(), exact);
    std::vector<float> projected(model.reduced_dim());
    model.project(data.row(row).data(), projected.data());
    std::vector<std::uint8_t> code(model.subspaces());
    model.encode_projected(projected.data(), code.data());
    std::vector<float> dec = model.decode(code);
    for (std::size_t j = 0; j < model.dim(); ++j) {
      compact[j] = j < dec.size() ? dec[j] : 0.0;
    }
  };
  return view;
}

std::vector<std::array<std::size_t, 3>> sample_triples(
    const VectorDataset& data, std::size_t count, std::size_t top,
    std::uint64_t seed, std::size_t threads) {
  if (top < 2 || data.size() < top + 1) {
    throw std::invalid_argument("triple sampling needs more than top rows");
  }
  auto rows = sample_indices(data.size(), count, seed);
  VectorDataset queries = data.gather(rows);
  GroundTruth gt = brute_force_knn(data, queries, top + 1, threads);
  std::mt19937_64 rng(mix64(seed + 1));
  std::vector<std::array<std::size_t, 3>> out;
  out.reserve(rows.size());
  std::vector<std::size_t> pool;
  for (std::size_t q = 0; q < rows.size(); ++q) {
    pool.clear();
    for (const auto& nb : gt.entries[q]) {
      if (nb.id != rows[q] && pool.size() < top) pool.push_back(nb.id);
    }
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    while (b == a) b = pick(rng);
    out.push_back({rows[q], pool[a], pool[b]});
  }
  return out;
}

CertificationReport certify(
    const CompactView& view,
    const std::vector<std::array<std::size_t, 3>>& triples) {
  const std::size_t d = view.dim;
  std::vector<double> x(6 * d);
  std::span<double> u(x.data(), d), v(x.data() + d, d), w(x.data() + 2 * d, d);
  std::span<double> uc(x.data() + 3 * d, d), vc(x.data() + 4 * d, d),
      wc(x.data() + 5 * d, d);
  CertificationReport report;
  for (const auto& t : triples) {
    view.fill(t[0], u.data(), uc.data());
    view.fill(t[1], v.data(), vc.data());
    view.fill(t[2], w.data(), wc.data());
    ComparisonTriple c = check_triple(u, v, w, uc, vc, wc);
    ++report.triples;
    report.agreeing += c.agree ? 1 : 0;
    report.certified += c.certified ? 1 : 0;
    report.boundary += c.boundary ? 1 : 0;
    if (c.certified && !c.agree) ++report.certified_disagreeing;
  }
  return report;
}

}  // namespace flashhnsw
