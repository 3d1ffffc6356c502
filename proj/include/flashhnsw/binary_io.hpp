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

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "flashhnsw/common.hpp"

namespace flashhnsw {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian");

/// Little-endian binary writer over a std::ostream.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  template <class T>
    requires std::is_trivially_copyable_v<T>
  void put(const T& value) {
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }

  template <class T>
    requires std::is_trivially_copyable_v<T>
  void put_array(std::span<const T> values) {
    put<std::uint64_t>(values.size());
    put_raw(values.data(), values.size_bytes());
  }

  void put_raw(const void* data, std::size_t bytes) {
    out_.write(static_cast<const char*>(data),
               static_cast<std::streamsize>(bytes));
  }

  void check() const {
    if (!out_) throw IoError("write failed");
  }

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}

  template <class T>
    requires std::is_trivially_copyable_v<T>
  T get() {
    T value{};
    get_raw(&value, sizeof(T));
    return value;
  }

  template <class T>
    requires std::is_trivially_copyable_v<T>
  std::vector<T> get_array(std::size_t max_elements = std::size_t{1} << 40) {
    auto n = get<std::uint64_t>();
    if (n > max_elements) throw FormatError("array length out of range");
    std::vector<T> values(n);
    get_raw(values.data(), n * sizeof(T));
    return values;
  }

  void get_raw(void* data, std::size_t bytes) {
    if (bytes == 0) return;
    if (!in_.read(static_cast<char*>(data),
                  static_cast<std::streamsize>(bytes))) {
      throw FormatError("unexpected end of file");
    }
  }

 private:
  std::istream& in_;
};

}  // namespace flashhnsw
