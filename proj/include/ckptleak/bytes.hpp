/*
 * Copyright 2026 The ckptleak Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Little-endian byte cursors shared by every binary format in the project.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ckptleak/error.hpp"

namespace ckptleak {

using Bytes = std::vector<std::uint8_t>;
using ByteSpan = std::span<const std::uint8_t>;

static_assert(std::endian::native == std::endian::little,
              "ckptleak formats are little-endian; add byte swapping for this host");

class ByteWriter {
 public:
  ByteWriter() = default;
  explicit ByteWriter(Bytes& out) : out_(&out) {}

  void u8(std::uint8_t v) { buf().push_back(v); }
  void u16(std::uint16_t v) { put(v); }
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void f32(float v) { put(v); }
  void raw(ByteSpan data) { buf().insert(buf().end(), data.begin(), data.end()); }
  void raw(std::string_view s) {
    buf().insert(buf().end(), reinterpret_cast<const std::uint8_t*>(s.data()),
                 reinterpret_cast<const std::uint8_t*>(s.data()) + s.size());
  }

  Bytes& bytes() { return buf(); }
  Bytes take() { return std::move(buf()); }

 private:
  template <class T>
  void put(T v) {
    std::uint8_t tmp[sizeof(T)];
    std::memcpy(tmp, &v, sizeof(T));
    buf().insert(buf().end(), tmp, tmp + sizeof(T));
  }
  Bytes& buf() { return out_ ? *out_ : own_; }

  Bytes own_;
  Bytes* out_ = nullptr;
};

// Bounds-checked reader. Every read past the end raises Errc::Truncated with
// the caller-supplied context so parsers never touch memory they do not own.
class ByteReader {
 public:
  explicit ByteReader(ByteSpan data, std::string_view context = "input")
      : data_(data), context_(context) {}

  std::uint8_t u8() { return get<std::uint8_t>(); }
  std::uint16_t u16() { return get<std::uint16_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  float f32() { return get<float>(); }

  ByteSpan take(std::uint64_t n) {
    need(n);
    auto out = data_.subspan(pos_, static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return out;
  }
  std::string take_string(std::uint64_t n) {
    auto s = take(n);
    return {reinterpret_cast<const char*>(s.data()), s.size()};
  }
  void expect_magic(std::string_view magic) {
    if (remaining() < magic.size())
      throw Error(Errc::Truncated, std::string(context_) + ": header shorter than magic");
    if (std::memcmp(data_.data() + pos_, magic.data(), magic.size()) != 0)
      throw Error(Errc::BadMagic, std::string(context_) + ": expected magic \"" +
                                      std::string(magic) + "\"");
    pos_ += magic.size();
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > remaining())
      throw Error(Errc::Truncated, std::string(context_) + ": need " + std::to_string(n) +
                                       " bytes at offset " + std::to_string(pos_) + ", have " +
                                       std::to_string(remaining()));
  }
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  ByteSpan data_;
  std::size_t pos_ = 0;
  std::string_view context_;
};

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, ByteSpan data);

inline ByteSpan as_span(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace ckptleak
