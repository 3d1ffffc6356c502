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

#include "flashhnsw/graph.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <new>
#include <stdexcept>
#include <string>

namespace flashhnsw {

namespace {
constexpr std::uint32_t kGraphTag = 0x47525031;  // "GRP1"

void init_blocks(std::uint8_t* data, const BlockLayout& layout,
                 std::size_t count) {
  std::memset(data, 0, layout.bytes * count);
  for (std::size_t b = 0; b < count; ++b) {
    auto* ids = reinterpret_cast<vertex_id_t*>(data + b * layout.bytes + 4);
    std::fill_n(ids, layout.capacity, kInvalidVertex);
  }
}
}  // namespace

BlockLayout::BlockLayout(std::size_t cap, std::size_t code_len)
    : capacity(cap), code_bytes(code_len) {
  if (cap > kMaxBlockCapacity) throw ConfigError("block capacity too large");
  batches = (cap + kBatchLanes - 1) / kBatchLanes;
  codes_offset = round_up(4 + 4 * cap, 16);
  bytes = round_up(codes_offset + batches * code_len * kBatchLanes, 64);
}

void write_vertex_block_ids(std::uint8_t* block, const BlockLayout& layout,
                            std::span<const vertex_id_t> ids,
                            SelectionKind kind) {
  if (ids.size() > layout.capacity) {
    throw std::length_error("neighbor list exceeds block capacity");
  }
  auto* dst = reinterpret_cast<vertex_id_t*>(block + 4);
  std::copy(ids.begin(), ids.end(), dst);
  std::fill(dst + ids.size(), dst + layout.capacity, kInvalidVertex);
  std::uint16_t word = 0;
  if (kind != SelectionKind::kNone) {
    word = static_cast<std::uint16_t>(ids.size());
    if (kind == SelectionKind::kSymmetric) word |= 0x8000;
  }
  reinterpret_cast<std::uint16_t*>(block)[1] = word;
  std::atomic_ref<std::uint16_t>(*reinterpret_cast<std::uint16_t*>(block))
      .store(static_cast<std::uint16_t>(ids.size()), std::memory_order_release);
}

SelectionRun block_selection(const std::uint8_t* block) {
  std::uint16_t word = reinterpret_cast<const std::uint16_t*>(block)[1];
  SelectionRun run;
  run.length = word & 0x7fff;
  if (run.length > 0) {
    run.kind = (word & 0x8000) != 0 ? SelectionKind::kSymmetric
                                    : SelectionKind::kAsymmetric;
  }
  return run;
}

NeighborBatch read_neighbor_batch(const std::uint8_t* block,
                                  const BlockLayout& layout,
                                  std::size_t batch) {
  if (batch >= layout.batches) throw std::out_of_range("batch index");
  std::size_t count = block_count(block);
  std::size_t first = batch * kBatchLanes;
  NeighborBatch view;
  view.ids = block_ids(block) + first;
  view.codes = block + layout.codes_offset + batch * layout.batch_stride();
  view.live = count > first ? std::min(kBatchLanes, count - first) : 0;
  return view;
}

vertex_id_t read_block_slot(const std::uint8_t* block,
                            const BlockLayout& layout, std::size_t slot,
                            std::uint8_t* code_out) {
  if (slot >= layout.capacity) throw std::out_of_range("slot index");
  for (std::size_t i = 0; i < layout.code_bytes; ++i) {
    code_out[i] = block[layout.code_offset(slot, i)];
  }
  return block_ids(block)[slot];
}

void GraphIndex::FreeDeleter::operator()(std::uint8_t* p) const {
  std::free(p);
}

GraphIndex::Buffer GraphIndex::allocate(std::size_t bytes) {
  bytes = round_up(std::max<std::size_t>(bytes, 64), 64);
  void* p = std::aligned_alloc(64, bytes);
  if (p == nullptr) throw std::bad_alloc();
  return Buffer(static_cast<std::uint8_t*>(p));
}

GraphIndex::GraphIndex(std::size_t capacity, std::size_t R,
                       std::size_t code_bytes)
    : R_(R),
      base_(2 * R, code_bytes),
      upper_(R, code_bytes),
      upper_data_(capacity),
      levels_(capacity, -1),
      locks_(new std::mutex[std::max<std::size_t>(capacity, 1)]) {
  if (R == 0) throw ConfigError("R must be positive");
  base_data_ = allocate(base_.bytes * capacity);
  init_blocks(base_data_.get(), base_, capacity);
}

void GraphIndex::add_vertex(vertex_id_t id, int level) {
  if (id >= capacity()) throw std::invalid_argument("vertex id out of range");
  if (level < 0) throw std::invalid_argument("negative level");
  if (level > 0) {
    Buffer buf = allocate(upper_.bytes * static_cast<std::size_t>(level));
    init_blocks(buf.get(), upper_, static_cast<std::size_t>(level));
    upper_data_[id] = std::move(buf);
  }
  int expected = -1;
  if (!std::atomic_ref<int>(levels_[id]).compare_exchange_strong(
          expected, level, std::memory_order_acq_rel)) {
    throw std::invalid_argument("duplicate insert of vertex " +
                                std::to_string(id));
  }
}

std::size_t GraphIndex::size() const {
  return static_cast<std::size_t>(
      std::count_if(levels_.begin(), levels_.end(),
                    [](int l) { return l >= 0; }));
}

std::size_t GraphIndex::edge_count(int layer) const {
  std::size_t total = 0;
  for (vertex_id_t v = 0; v < capacity(); ++v) {
    if (level(v) >= layer) total += neighbors(layer, v).size();
  }
  return total;
}

void GraphIndex::save(BinaryWriter& out) const {
  out.put<std::uint32_t>(kGraphTag);
  out.put<std::uint64_t>(capacity());
  out.put<std::uint64_t>(R_);
  out.put<std::uint64_t>(base_.code_bytes);
  out.put<std::uint32_t>(entry_);
  out.put<std::int32_t>(max_layer_);
  out.put_array<std::int32_t>(levels_);
  out.put_raw(base_data_.get(), base_.bytes * capacity());
  for (vertex_id_t v = 0; v < capacity(); ++v) {
    if (levels_[v] > 0) {
      out.put_raw(upper_data_[v].get(),
                  upper_.bytes * static_cast<std::size_t>(levels_[v]));
    }
  }
}

GraphIndex GraphIndex::load(BinaryReader& in) {
  if (in.get<std::uint32_t>() != kGraphTag) throw FormatError("bad graph tag");
  auto capacity = in.get<std::uint64_t>();
  auto R = in.get<std::uint64_t>();
  auto code_bytes = in.get<std::uint64_t>();
  if (R == 0 || R > 4096 || code_bytes > 4096 || capacity > (1ULL << 32) - 1) {
    throw FormatError("bad graph parameters");
  }
  GraphIndex g(capacity, R, code_bytes);
  g.entry_ = in.get<std::uint32_t>();
  g.max_layer_ = in.get<std::int32_t>();
  auto levels = in.get_array<std::int32_t>(capacity);
  if (levels.size() != capacity) throw FormatError("bad level table");
  in.get_raw(g.base_data_.get(), g.base_.bytes * capacity);
  int top = -1;
  for (vertex_id_t v = 0; v < capacity; ++v) {
    int l = levels[v];
    if (l < -1 || l > 64) throw FormatError("bad vertex level");
    g.levels_[v] = l;
    top = std::max(top, l);
    if (l > 0) {
      g.upper_data_[v] = allocate(g.upper_.bytes * static_cast<std::size_t>(l));
      in.get_raw(g.upper_data_[v].get(),
                 g.upper_.bytes * static_cast<std::size_t>(l));
    }
  }
  if (top != g.max_layer_ ||
      (top >= 0 && (g.entry_ >= capacity || levels[g.entry_] != top))) {
    throw FormatError("inconsistent entry point");
  }
  // Reject neighbor ids that point outside the graph.
  for (vertex_id_t v = 0; v < capacity; ++v) {
    for (int l = 0; l <= g.levels_[v]; ++l) {
      const std::uint8_t* b = g.block(l, v);
      std::uint32_t count = block_count(b);
      if (count > g.cap(l)) throw FormatError("neighbor count over capacity");
      for (std::uint32_t j = 0; j < count; ++j) {
        if (block_ids(b)[j] >= capacity) throw FormatError("bad neighbor id");
      }
    }
  }
  return g;
}

}  // namespace flashhnsw
