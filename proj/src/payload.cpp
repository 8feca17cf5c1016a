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

#include "ckptleak/payload.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <cstring>

#include "ckptleak/compress.hpp"

namespace ckptleak {
namespace {

constexpr std::size_t kMimicHexChars = 32;
constexpr std::size_t kManifestFixedSize = 4 + 4 + 1 + 4 + 8 + 4;
constexpr std::size_t kChunkRecordFixedSize = 4 + 4 + 4;

std::uint64_t pad4(std::uint64_t n) { return (n + 3) / 4 * 4; }

void check_mode(const DisguiseMode& mode) {
  if (mode.kind == DisguiseMode::Kind::MimicKeys && mode.secret.empty())
    throw Error(Errc::InvalidArgument, "MimicKeys needs a non-empty secret");
}

std::string sha256_hex_prefix(std::string_view secret, std::uint32_t index) {
  std::string msg(secret);
  char le[4];
  std::memcpy(le, &index, 4);
  msg.append(le, 4);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(msg.data(), msg.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(Errc::InvalidArgument, "SHA-256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(kMimicHexChars);
  for (std::size_t i = 0; i < kMimicHexChars / 2; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::size_t dedicated_key_len(std::uint64_t index) {
  std::size_t digits = 1;
  for (std::uint64_t v = index; v >= 10; v /= 10) ++digits;
  return std::string_view("__stash/chunk_").size() + std::max<std::size_t>(8, digits);
}

TensorEntry wrap(std::string key, const DisguiseMode& mode, ByteSpan bytes) {
  if (mode.kind == DisguiseMode::Kind::DedicatedKeys)
    return make_entry(std::move(key), DType::U8, {bytes.size()}, Bytes(bytes.begin(), bytes.end()));
  Bytes padded(pad4(bytes.size()), 0);
  std::copy(bytes.begin(), bytes.end(), padded.begin());
  const std::uint64_t n = padded.size() / 4;
  return make_entry(std::move(key), DType::F32, {n}, std::move(padded));
}

}  // namespace

std::size_t manifest_size(const PayloadManifest& m) {
  std::size_t n = kManifestFixedSize + m.label.size();
  for (const auto& c : m.chunks) n += kChunkRecordFixedSize + c.key.size();
  return n;
}

Bytes serialize_manifest(const PayloadManifest& m) {
  Bytes out;
  out.reserve(manifest_size(m));
  ByteWriter w(out);
  w.raw(std::string_view("STSH"));
  w.u32(m.version);
  w.u8(static_cast<std::uint8_t>(m.mode));
  w.u32(static_cast<std::uint32_t>(m.chunks.size()));
  w.u64(m.total_bytes);
  w.u32(static_cast<std::uint32_t>(m.label.size()));
  w.raw(m.label);
  for (const auto& c : m.chunks) {
    w.u32(static_cast<std::uint32_t>(c.key.size()));
    w.raw(c.key);
    w.u32(c.byte_len);
    w.u32(c.crc32);
  }
  return out;
}

PayloadManifest parse_manifest(ByteSpan data) {
  ByteReader r(data, "stash manifest");
  r.expect_magic("STSH");
  PayloadManifest m;
  m.version = r.u32();
  if (m.version != kManifestVersion)
    throw Error(Errc::UnsupportedVersion, "manifest version " + std::to_string(m.version));
  const std::uint8_t mode = r.u8();
  if (mode > 1) throw Error(Errc::CorruptManifest, "unknown disguise mode " + std::to_string(mode));
  m.mode = static_cast<DisguiseMode::Kind>(mode);
  const std::uint32_t count = r.u32();
  m.total_bytes = r.u64();
  m.label = r.take_string(r.u32());
  if (count > r.remaining() / kChunkRecordFixedSize)
    throw Error(Errc::Truncated, "manifest lists more chunks than it has room for");
  m.chunks.resize(count);
  std::uint64_t sum = 0;
  for (auto& c : m.chunks) {
    const std::uint32_t key_len = r.u32();
    if (key_len == 0 || key_len > kMaxKeyBytes)
      throw Error(Errc::CorruptManifest, "chunk key length " + std::to_string(key_len));
    c.key = r.take_string(key_len);
    c.byte_len = r.u32();
    c.crc32 = r.u32();
    sum += c.byte_len;
  }
  if (sum != m.total_bytes)
    throw Error(Errc::CorruptManifest, "chunk lengths sum to " + std::to_string(sum) +
                                           ", manifest declares " + std::to_string(m.total_bytes));
  const ByteSpan rest = r.take(r.remaining());
  if (rest.size() > 3) throw Error(Errc::TrailingData, "bytes after manifest");
  for (auto b : rest)
    if (b != 0) throw Error(Errc::TrailingData, "non-zero padding after manifest");
  return m;
}

std::string chunk_key(const DisguiseMode& mode, std::uint32_t index) {
  check_mode(mode);
  if (mode.kind == DisguiseMode::Kind::MimicKeys)
    return kMimicPrefix + sha256_hex_prefix(mode.secret, index);
  char buf[32];
  std::snprintf(buf, sizeof buf, "__stash/chunk_%08u", index);
  return buf;
}

std::string manifest_key(const DisguiseMode& mode) {
  check_mode(mode);
  if (mode.kind == DisguiseMode::Kind::MimicKeys)
    return kMimicPrefix + sha256_hex_prefix(mode.secret, kManifestIndex);
  return std::string(kStashPrefix) + "manifest";
}

EmbedResult embed(const Checkpoint& carrier, ByteSpan payload, const DisguiseMode& mode,
                  std::uint32_t chunk_size, std::string label) {
  check_mode(mode);
  if (payload.empty()) throw Error(Errc::EmptyPayload, "nothing to embed");
  if (chunk_size < kMinChunkSize)
    throw Error(Errc::InvalidArgument, "chunk size must be at least " + std::to_string(kMinChunkSize));
  const std::uint64_t n_chunks = (payload.size() + chunk_size - 1) / chunk_size;
  if (n_chunks >= kManifestIndex)
    throw Error(Errc::Overflow, "payload needs more than 2^32-2 chunks");

  EmbedResult result{carrier, {}, 0};
  result.manifest.mode = mode.kind;
  result.manifest.total_bytes = payload.size();
  result.manifest.label = std::move(label);
  result.manifest.chunks.reserve(static_cast<std::size_t>(n_chunks));

  auto append = [&](TensorEntry e) {
    if (result.carrier.contains(e.key))
      throw Error(Errc::KeyCollision, "carrier already has an entry named '" + e.key + "'");
    result.added_bytes += wdc_entry_size(e.key.size(), e.shape.size(), e.payload.size());
    result.carrier.add(std::move(e));
  };

  for (std::uint64_t i = 0; i < n_chunks; ++i) {
    const std::size_t off = static_cast<std::size_t>(i * chunk_size);
    const ByteSpan piece = payload.subspan(off, std::min<std::size_t>(chunk_size, payload.size() - off));
    ChunkRecord rec{chunk_key(mode, static_cast<std::uint32_t>(i)),
                    static_cast<std::uint32_t>(piece.size()), crc32(piece)};
    append(wrap(rec.key, mode, piece));
    result.manifest.chunks.push_back(std::move(rec));
  }
  append(wrap(manifest_key(mode), mode, serialize_manifest(result.manifest)));
  return result;
}

Extracted extract(const Checkpoint& carrier, const DisguiseMode& mode) {
  check_mode(mode);
  const std::string mkey = manifest_key(mode);
  const TensorEntry* entry = carrier.find(mkey);
  if (!entry) throw Error(Errc::NoManifest, "no stash manifest for this disguise mode");

  Extracted out;
  out.manifest = parse_manifest(entry->payload);
  if (out.manifest.mode != mode.kind)
    throw Error(Errc::CorruptManifest, "manifest was written in a different disguise mode");
  out.payload.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(out.manifest.total_bytes, 1u << 30)));

  for (std::size_t i = 0; i < out.manifest.chunks.size(); ++i) {
    const auto& rec = out.manifest.chunks[i];
    const TensorEntry* chunk = carrier.find(rec.key);
    if (!chunk)
      throw Error(Errc::MissingChunk, "chunk " + std::to_string(i) + " ('" + rec.key + "') is absent");
    const std::uint64_t stored =
        mode.kind == DisguiseMode::Kind::MimicKeys ? pad4(rec.byte_len) : rec.byte_len;
    if (chunk->payload.size() != stored)
      throw Error(Errc::LengthMismatch, "chunk " + std::to_string(i) + " holds " +
                                            std::to_string(chunk->payload.size()) + " bytes, manifest says " +
                                            std::to_string(rec.byte_len));
    const ByteSpan body = ByteSpan(chunk->payload).first(rec.byte_len);
    if (crc32(body) != rec.crc32)
      throw Error(Errc::CrcMismatch, "chunk " + std::to_string(i) + " failed its CRC-32 check");
    out.payload.insert(out.payload.end(), body.begin(), body.end());
  }
  return out;
}

std::uint64_t embedding_overhead(std::uint64_t payload_len, const DisguiseMode& mode,
                                 std::uint32_t chunk_size, std::size_t label_len) {
  check_mode(mode);
  if (payload_len == 0) throw Error(Errc::EmptyPayload, "overhead of an empty payload is undefined");
  if (chunk_size < kMinChunkSize)
    throw Error(Errc::InvalidArgument, "chunk size must be at least " + std::to_string(kMinChunkSize));
  const std::uint64_t n = (payload_len + chunk_size - 1) / chunk_size;
  const std::uint64_t last = payload_len - (n - 1) * chunk_size;
  const bool mimic = mode.kind == DisguiseMode::Kind::MimicKeys;

  // Sum of chunk key lengths; dedicated keys widen past 8 digits.
  std::uint64_t key_total = 0;
  if (mimic) {
    key_total = n * (std::string_view(kMimicPrefix).size() + kMimicHexChars);
  } else {
    std::uint64_t start = 0, bound = 100000000;  // 10^8
    std::size_t len = dedicated_key_len(0);
    while (start < n) {
      const std::uint64_t stop = std::min(n, bound);
      key_total += (stop - start) * len;
      start = stop;
      bound *= 10;
      len = dedicated_key_len(start);
    }
  }

  const std::uint64_t per_entry_fixed = wdc_entry_size(0, 1, 0);
  std::uint64_t chunk_payloads = mimic ? (n - 1) * pad4(chunk_size) + pad4(last) : payload_len;
  const std::uint64_t chunks = n * per_entry_fixed + key_total + chunk_payloads;

  const std::uint64_t manifest_len = kManifestFixedSize + label_len + n * kChunkRecordFixedSize + key_total;
  const std::uint64_t manifest_key_len =
      mimic ? std::string_view(kMimicPrefix).size() + kMimicHexChars : std::string_view("__stash/manifest").size();
  const std::uint64_t manifest = wdc_entry_size(manifest_key_len, 1, mimic ? pad4(manifest_len) : manifest_len);
  return chunks + manifest;
}

}  // namespace ckptleak
