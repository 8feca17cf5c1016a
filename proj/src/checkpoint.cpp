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

#include "ckptleak/checkpoint.hpp"

#include <cstring>
#include <limits>

namespace ckptleak {

std::size_t dtype_width(DType d) {
  switch (d) {
    case DType::F32: return 4;
    case DType::F64: return 8;
    case DType::U8: return 1;
    case DType::I64: return 8;
  }
  throw Error(Errc::InvalidDType, "unknown dtype");
}

std::string_view dtype_name(DType d) {
  switch (d) {
    case DType::F32: return "f32";
    case DType::F64: return "f64";
    case DType::U8: return "u8";
    case DType::I64: return "i64";
  }
  return "?";
}

std::optional<DType> dtype_from_code(std::uint8_t code) {
  if (code > 3) return std::nullopt;
  return static_cast<DType>(code);
}

std::optional<DType> dtype_from_name(std::string_view name) {
  for (auto d : {DType::F32, DType::F64, DType::U8, DType::I64})
    if (dtype_name(d) == name) return d;
  return std::nullopt;
}

std::uint64_t shape_elements(const std::vector<std::uint64_t>& shape, DType dtype) {
  const std::uint64_t max_elems = kMaxEntryPayload / dtype_width(dtype);
  std::uint64_t n = 1;
  bool zero = false;
  for (auto d : shape) {
    if (d == 0) zero = true;
    else if (!zero && n > max_elems / d)
      throw Error(Errc::LengthOverflow, "shape element count exceeds entry payload limit");
    else if (!zero) n *= d;
  }
  return zero ? 0 : n;
}

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len;
    std::uint32_t cp;
    if (c < 0x80) { ++i; continue; }
    if ((c & 0xE0) == 0xC0) { len = 2; cp = c & 0x1F; }
    else if ((c & 0xF0) == 0xE0) { len = 3; cp = c & 0x0F; }
    else if ((c & 0xF8) == 0xF0) { len = 4; cp = c & 0x07; }
    else return false;
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // overlong forms, surrogates, out of range
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF)
      return false;
    i += len;
  }
  return true;
}

void validate_entry(const TensorEntry& e) {
  if (e.key.empty()) throw Error(Errc::InvalidKey, "empty key");
  if (e.key.size() > kMaxKeyBytes)
    throw Error(Errc::InvalidKey, "key longer than " + std::to_string(kMaxKeyBytes) + " bytes");
  if (!is_valid_utf8(e.key)) throw Error(Errc::InvalidKey, "key is not valid UTF-8");
  if (e.shape.size() > 255) throw Error(Errc::ShapeMismatch, "more than 255 dimensions");
  const std::uint64_t expected = shape_elements(e.shape, e.dtype) * dtype_width(e.dtype);
  if (expected != e.payload.size())
    throw Error(Errc::ShapeMismatch, "entry '" + e.key + "' shape needs " +
                                         std::to_string(expected) + " bytes, payload has " +
                                         std::to_string(e.payload.size()));
}

TensorEntry make_entry(std::string key, DType dtype, std::vector<std::uint64_t> shape,
                       Bytes payload) {
  TensorEntry e{std::move(key), dtype, std::move(shape), std::move(payload)};
  validate_entry(e);
  return e;
}

TensorEntry make_f32_entry(std::string key, std::vector<std::uint64_t> shape,
                           std::span<const float> values) {
  Bytes payload(values.size() * sizeof(float));
  if (!values.empty()) std::memcpy(payload.data(), values.data(), payload.size());
  return make_entry(std::move(key), DType::F32, std::move(shape), std::move(payload));
}

void Checkpoint::add(TensorEntry e) {
  validate_entry(e);
  if (index_.contains(e.key)) throw Error(Errc::DuplicateKey, "key '" + e.key + "' already present");
  index_.emplace(e.key, entries_.size());
  entries_.push_back(std::move(e));
}

const TensorEntry* Checkpoint::find(std::string_view key) const {
  auto it = index_.find(std::string(key));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

const TensorEntry& Checkpoint::get(std::string_view key) const {
  if (const auto* e = find(key)) return *e;
  throw Error(Errc::MissingKey, "no entry '" + std::string(key) + "'");
}

TensorEntry Checkpoint::remove(std::string_view key) {
  auto it = index_.find(std::string(key));
  if (it == index_.end()) throw Error(Errc::MissingKey, "no entry '" + std::string(key) + "'");
  const std::size_t pos = it->second;
  TensorEntry out = std::move(entries_[pos]);
  entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(pos));
  index_.erase(it);
  for (auto& [k, i] : index_)
    if (i > pos) --i;
  return out;
}

std::uint64_t wdc_entry_size(std::size_t key_len, std::size_t ndim, std::uint64_t payload_len) {
  return 4 + key_len + 1 + 1 + 8 * std::uint64_t{ndim} + 8 + payload_len;
}

std::uint64_t total_size(const Checkpoint& c) {
  std::uint64_t total = kWdcHeaderSize;
  for (const auto& e : c.entries()) total += wdc_entry_size(e.key.size(), e.shape.size(), e.payload.size());
  return total;
}

std::uint64_t payload_bytes(const Checkpoint& c) {
  std::uint64_t total = 0;
  for (const auto& e : c.entries()) total += e.payload.size();
  return total;
}

Bytes serialize_wdc(const Checkpoint& c) {
  Bytes out;
  out.reserve(static_cast<std::size_t>(total_size(c)));
  ByteWriter w(out);
  w.raw(std::string_view("WDC1"));
  w.u32(kWdcVersion);
  w.u64(c.size());
  for (const auto& e : c.entries()) {
    validate_entry(e);
    w.u32(static_cast<std::uint32_t>(e.key.size()));
    w.raw(e.key);
    w.u8(static_cast<std::uint8_t>(e.dtype));
    w.u8(static_cast<std::uint8_t>(e.shape.size()));
    for (auto d : e.shape) w.u64(d);
    w.u64(e.payload.size());
    w.raw(e.payload);
  }
  return out;
}

Checkpoint parse_wdc(ByteSpan data) {
  ByteReader r(data, "wdc");
  r.expect_magic("WDC1");
  const std::uint32_t version = r.u32();
  if (version != kWdcVersion)
    throw Error(Errc::UnsupportedVersion, "wdc version " + std::to_string(version));
  const std::uint64_t count = r.u64();
  Checkpoint c(ContainerFormat::WDC);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t key_len = r.u32();
    if (key_len == 0 || key_len > kMaxKeyBytes)
      throw Error(Errc::InvalidKey, "entry " + std::to_string(i) + " key length " +
                                        std::to_string(key_len));
    TensorEntry e;
    e.key = r.take_string(key_len);
    const std::uint8_t code = r.u8();
    const auto dtype = dtype_from_code(code);
    if (!dtype) throw Error(Errc::InvalidDType, "dtype code " + std::to_string(code));
    e.dtype = *dtype;
    const std::uint8_t ndim = r.u8();
    e.shape.resize(ndim);
    for (auto& d : e.shape) d = r.u64();
    const std::uint64_t payload_len = r.u64();
    if (payload_len > kMaxEntryPayload)
      throw Error(Errc::LengthOverflow, "entry '" + e.key + "' declares " +
                                            std::to_string(payload_len) + " payload bytes");
    const std::uint64_t expected = shape_elements(e.shape, e.dtype) * dtype_width(e.dtype);
    if (expected != payload_len)
      throw Error(Errc::ShapeMismatch, "entry '" + e.key + "' shape/payload length disagree");
    const ByteSpan body = r.take(payload_len);
    e.payload.assign(body.begin(), body.end());
    if (c.contains(e.key)) throw Error(Errc::DuplicateKey, "duplicate key '" + e.key + "'");
    c.add(std::move(e));
  }
  if (!r.at_end())
    throw Error(Errc::TrailingData, std::to_string(r.remaining()) + " bytes after last entry");
  return c;
}

std::uint64_t write_wdc(const Checkpoint& c, const std::filesystem::path& path) {
  const Bytes bytes = serialize_wdc(c);
  write_file(path, bytes);
  return bytes.size();
}

Checkpoint read_wdc(const std::filesystem::path& path) { return parse_wdc(read_file(path)); }

Checkpoint parse_checkpoint(ByteSpan data) {
  if (data.size() >= 4 && std::memcmp(data.data(), "WDC", 3) == 0) return parse_wdc(data);
  if (data.size() >= 4 && data[0] == 'P' && data[1] == 'K') return parse_npz(data);
  throw Error(Errc::BadMagic, "neither a WDC container nor a ZIP archive");
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path));
}

std::uint64_t write_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  return c.format() == ContainerFormat::NPZ ? write_npz(c, path) : write_wdc(c, path);
}

}  // namespace ckptleak
