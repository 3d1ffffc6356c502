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

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

#include "flashhnsw/binary_io.hpp"
#include "flashhnsw/common.hpp"

namespace flashhnsw {

inline constexpr std::size_t kBatchLanes = 16;
inline constexpr std::uint8_t kPadCode = 0;

/// Byte layout of one adjacency block (all offsets from the block start):
///
///   [0, 2)                 live neighbor count, u16
///   [2, 4)                 selection word, u16: bits 0-14 hold the length
///                          of the leading run written by neighbor
///                          selection; bit 15 is set when that run was
///                          selected with symmetric (code-to-code) distances
///   [4, 4 + 4 * capacity)  neighbor ids, u32; unused slots hold kInvalidVertex
///   [codes_offset, ...)    ceil(capacity / 16) batches. Batch b holds
///                          code_bytes groups of 16 bytes; byte j of group i
///                          is codeword i of neighbor slot 16 * b + j.
///                          Unused slots hold code 0.
///
/// codes_offset is 16-aligned and the block size is a multiple of 64.
struct BlockLayout {
  std::size_t capacity = 0;
  std::size_t code_bytes = 0;
  std::size_t batches = 0;
  std::size_t codes_offset = 0;
  std::size_t bytes = 0;

  BlockLayout() = default;
  BlockLayout(std::size_t cap, std::size_t code_len);

  std::size_t batch_stride() const { return code_bytes * kBatchLanes; }
  std::size_t code_offset(std::size_t slot, std::size_t subspace) const {
    return codes_offset + (slot / kBatchLanes) * batch_stride() +
           subspace * kBatchLanes + slot % kBatchLanes;
  }
};

/// One 16-slot batch of a block as seen by the distance kernel.
struct NeighborBatch {
  const vertex_id_t* ids = nullptr;  // 16 entries
  const std::uint8_t* codes = nullptr;  // code_bytes * 16 bytes
  std::size_t live = 0;  // lanes [0, live) are real neighbors
};

inline constexpr std::size_t kMaxBlockCapacity = 0x7fff;

enum class SelectionKind : std::uint8_t { kNone, kAsymmetric, kSymmetric };

struct SelectionRun {
  std::size_t length = 0;
  SelectionKind kind = SelectionKind::kNone;
};

/// Rewrites a whole block; the ids become the selection run of `kind`.
/// `code_of(id)` returns a pointer to code_bytes bytes. Throws
/// std::length_error if ids exceed the capacity.
template <class CodeFn>
void write_vertex_block(std::uint8_t* block, const BlockLayout& layout,
                        std::span<const vertex_id_t> ids, CodeFn&& code_of,
                        SelectionKind kind = SelectionKind::kNone);

void write_vertex_block_ids(std::uint8_t* block, const BlockLayout& layout,
                            std::span<const vertex_id_t> ids,
                            SelectionKind kind = SelectionKind::kNone);

inline std::uint32_t block_count(const std::uint8_t* block) {
  return std::atomic_ref<const std::uint16_t>(
             *reinterpret_cast<const std::uint16_t*>(block))
      .load(std::memory_order_acquire);
}

SelectionRun block_selection(const std::uint8_t* block);

inline const vertex_id_t* block_ids(const std::uint8_t* block) {
  return reinterpret_cast<const vertex_id_t*>(block + 4);
}

NeighborBatch read_neighbor_batch(const std::uint8_t* block,
                                  const BlockLayout& layout,
                                  std::size_t batch);

/// Reads slot `slot` back into (id, code bytes).
vertex_id_t read_block_slot(const std::uint8_t* block,
                            const BlockLayout& layout, std::size_t slot,
                            std::uint8_t* code_out);

/// Layered adjacency. Layer 0 blocks live in one contiguous buffer with
/// capacity 2R; each vertex above layer 0 owns one buffer holding its
/// layer 1..L blocks with capacity R. Codewords are stored at every layer.
class GraphIndex {
 public:
  GraphIndex() = default;
  GraphIndex(std::size_t capacity, std::size_t R, std::size_t code_bytes);

  GraphIndex(const GraphIndex&) = delete;
  GraphIndex& operator=(const GraphIndex&) = delete;
  GraphIndex(GraphIndex&&) noexcept = default;
  GraphIndex& operator=(GraphIndex&&) noexcept = default;

  std::size_t capacity() const { return levels_.size(); }
  std::size_t R() const { return R_; }
  std::size_t code_bytes() const { return base_.code_bytes; }
  std::size_t cap(int layer) const { return layer == 0 ? 2 * R_ : R_; }
  const BlockLayout& layout(int layer) const {
    return layer == 0 ? base_ : upper_;
  }

  /// Claims `id` at `level`, allocating its upper blocks. Thread-safe.
  /// Throws std::invalid_argument on a duplicate or out-of-range id.
  void add_vertex(vertex_id_t id, int level);
  bool contains(vertex_id_t id) const { return level(id) >= 0; }
  int level(vertex_id_t id) const {
    return std::atomic_ref<const int>(levels_[id]).load(
        std::memory_order_acquire);
  }
  std::size_t size() const;

  std::uint8_t* block(int layer, vertex_id_t id) {
    return layer == 0 ? base_data_.get() + id * base_.bytes
                      : upper_data_[id].get() + (layer - 1) * upper_.bytes;
  }
  const std::uint8_t* block(int layer, vertex_id_t id) const {
    return const_cast<GraphIndex*>(this)->block(layer, id);
  }
  std::span<const vertex_id_t> neighbors(int layer, vertex_id_t id) const {
    const std::uint8_t* b = block(layer, id);
    return {block_ids(b), block_count(b)};
  }

  std::mutex& vertex_mutex(vertex_id_t id) const { return locks_[id]; }

  vertex_id_t entry_point() const { return entry_; }
  int max_layer() const { return max_layer_; }
  void set_entry(vertex_id_t id, int layer) {
    entry_ = id;
    max_layer_ = layer;
  }
  std::mutex& global_mutex() const { return *global_; }

  /// Edge counts at one layer, for diagnostics.
  std::size_t edge_count(int layer) const;

  void save(BinaryWriter& out) const;
  static GraphIndex load(BinaryReader& in);

 private:
  struct FreeDeleter {
    void operator()(std::uint8_t* p) const;
  };
  using Buffer = std::unique_ptr<std::uint8_t[], FreeDeleter>;
  static Buffer allocate(std::size_t bytes);

  std::size_t R_ = 0;
  BlockLayout base_;
  BlockLayout upper_;
  Buffer base_data_;
  std::vector<Buffer> upper_data_;
  std::vector<int> levels_;
  mutable std::unique_ptr<std::mutex[]> locks_;
  std::unique_ptr<std::mutex> global_ = std::make_unique<std::mutex>();
  vertex_id_t entry_ = kInvalidVertex;
  int max_layer_ = -1;
};

template <class CodeFn>
void write_vertex_block(std::uint8_t* block, const BlockLayout& layout,
                        std::span<const vertex_id_t> ids, CodeFn&& code_of,
                        SelectionKind kind) {
  if (ids.size() > layout.capacity) {
    throw std::length_error("neighbor list exceeds block capacity");
  }
  if (layout.code_bytes == 0) {
    write_vertex_block_ids(block, layout, ids, kind);
    return;
  }
  std::uint8_t* codes = block + layout.codes_offset;
  std::size_t used = round_up(ids.size(), kBatchLanes);
  for (std::size_t s = 0; s < ids.size(); ++s) {
    const std::uint8_t* c = code_of(ids[s]);
    std::uint8_t* dst = codes + (s / kBatchLanes) * layout.batch_stride() +
                        s % kBatchLanes;
    for (std::size_t i = 0; i < layout.code_bytes; ++i) {
      dst[i * kBatchLanes] = c[i];
    }
  }
  for (std::size_t s = ids.size(); s < used; ++s) {
    std::uint8_t* dst = codes + (s / kBatchLanes) * layout.batch_stride() +
                        s % kBatchLanes;
    for (std::size_t i = 0; i < layout.code_bytes; ++i) {
      dst[i * kBatchLanes] = kPadCode;
    }
  }
  // Ids and count last so a reader never sees a count ahead of its codes.
  write_vertex_block_ids(block, layout, ids, kind);
}

/// Appends one neighbor; the caller guarantees count < capacity.
template <class CodeFn>
void append_block_neighbor(std::uint8_t* block, const BlockLayout& layout,
                           vertex_id_t id, CodeFn&& code_of) {
  auto* count = reinterpret_cast<std::uint16_t*>(block);
  std::uint16_t slot = *count;
  reinterpret_cast<vertex_id_t*>(block + 4)[slot] = id;
  if (layout.code_bytes != 0) {
    const std::uint8_t* c = code_of(id);
    for (std::size_t i = 0; i < layout.code_bytes; ++i) {
      block[layout.code_offset(slot, i)] = c[i];
    }
  }
  std::atomic_ref<std::uint16_t>(*count).store(
      static_cast<std::uint16_t>(slot + 1), std::memory_order_release);
}

}  // namespace flashhnsw
