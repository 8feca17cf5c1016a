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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ckptleak/bytes.hpp"

namespace ckptleak {

enum class DType : std::uint8_t { F32 = 0, F64 = 1, U8 = 2, I64 = 3 };

std::size_t dtype_width(DType d);
std::string_view dtype_name(DType d);  // "f32", "f64", "u8", "i64"
std::optional<DType> dtype_from_code(std::uint8_t code);
std::optional<DType> dtype_from_name(std::string_view name);

inline constexpr std::size_t kMaxKeyBytes = 4096;
inline constexpr std::uint64_t kMaxEntryPayload = std::uint64_t{1} << 40;

// Element count of a shape; throws LengthOverflow if it does not fit in the
// payload limit once multiplied by the element width.
std::uint64_t shape_elements(const std::vector<std::uint64_t>& shape, DType dtype);

struct TensorEntry {
  std::string key;
  DType dtype = DType::F32;
  std::vector<std::uint64_t> shape;  // empty = scalar
  Bytes payload;                     // little-endian, C order

  friend bool operator==(const TensorEntry&, const TensorEntry&) = default;
};

// Throws InvalidKey / ShapeMismatch / LengthOverflow if the entry cannot be
// serialized.
void validate_entry(const TensorEntry& e);

TensorEntry make_entry(std::string key, DType dtype, std::vector<std::uint64_t> shape,
                       Bytes payload);
TensorEntry make_f32_entry(std::string key, std::vector<std::uint64_t> shape,
                           std::span<const float> values);

enum class ContainerFormat { WDC, NPZ };

class Checkpoint {
 public:
  Checkpoint() = default;
  explicit Checkpoint(ContainerFormat format) : format_(format) {}

  void add(TensorEntry e);
  const TensorEntry& get(std::string_view key) const;
  const TensorEntry* find(std::string_view key) const;
  TensorEntry remove(std::string_view key);
  bool contains(std::string_view key) const { return find(key) != nullptr; }

  const std::vector<TensorEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  ContainerFormat format() const { return format_; }
  void set_format(ContainerFormat f) { format_ = f; }

  // Equality is over the ordered entry list; the format tag is not compared.
  friend bool operator==(const Checkpoint& a, const Checkpoint& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<TensorEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  ContainerFormat format_ = ContainerFormat::WDC;
};

// Free-function spellings of the dictionary operations.
inline void add_entry(Checkpoint& c, TensorEntry e) { c.add(std::move(e)); }
inline const TensorEntry& get_entry(const Checkpoint& c, std::string_view key) { return c.get(key); }
inline TensorEntry remove_entry(Checkpoint& c, std::string_view key) { return c.remove(key); }

// Exact WDC-serialized size, computed without serializing.
std::uint64_t wdc_entry_size(std::size_t key_len, std::size_t ndim, std::uint64_t payload_len);
std::uint64_t total_size(const Checkpoint& c);
std::uint64_t payload_bytes(const Checkpoint& c);

// --- WDC ---------------------------------------------------------------
//   "WDC1" u32 version=1 u64 entry_count
//   per entry: u32 key_len, key, u8 dtype, u8 ndim, ndim*u64 dims,
//              u64 payload_len, payload
inline constexpr std::uint32_t kWdcVersion = 1;
inline constexpr std::size_t kWdcHeaderSize = 16;

Bytes serialize_wdc(const Checkpoint& c);
Checkpoint parse_wdc(ByteSpan data);
std::uint64_t write_wdc(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint read_wdc(const std::filesystem::path& path);

// --- NPZ ---------------------------------------------------------------
Bytes serialize_npy(const TensorEntry& e);
TensorEntry parse_npy(std::string key, ByteSpan data);

Bytes serialize_npz(const Checkpoint& c, bool compressed = false);
Checkpoint parse_npz(ByteSpan data);
std::uint64_t write_npz(const Checkpoint& c, const std::filesystem::path& path,
                        bool compressed = false);
Checkpoint read_npz(const std::filesystem::path& path);

// Dispatch on magic bytes ("WDC1" or a ZIP local header).
Checkpoint parse_checkpoint(ByteSpan data);
Checkpoint read_checkpoint(const std::filesystem::path& path);
std::uint64_t write_checkpoint(const Checkpoint& c, const std::filesystem::path& path);

bool is_valid_utf8(std::string_view s);

}  // namespace ckptleak
