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

// Hides arbitrary byte payloads in a checkpoint as extra tensor entries and
// recovers them.
//
// DedicatedKeys: chunk i -> U8 tensor "__stash/chunk_{i:08}", manifest ->
//   "__stash/manifest".
// MimicKeys(secret): chunk i -> F32 tensor "opt_state/" +
//   hex(SHA-256(secret || u32le(i)))[0..32], zero-padded to a multiple of 4
//   bytes; the manifest uses i = 0xFFFFFFFF. Without the secret the manifest
//   cannot be located.

#include <cstdint>
#include <string>
#include <vector>

#include "ckptleak/bytes.hpp"
#include "ckptleak/checkpoint.hpp"

namespace ckptleak {

struct DisguiseMode {
  enum class Kind : std::uint8_t { DedicatedKeys = 0, MimicKeys = 1 };

  Kind kind = Kind::DedicatedKeys;
  std::string secret;  // MimicKeys only, non-empty

  static DisguiseMode dedicated() { return {}; }
  static DisguiseMode mimic(std::string secret) { return {Kind::MimicKeys, std::move(secret)}; }
};

inline constexpr std::uint32_t kDefaultChunkSize = 1u << 20;
inline constexpr std::uint32_t kMinChunkSize = 64;
inline constexpr std::uint32_t kManifestIndex = 0xFFFFFFFFu;
inline constexpr std::uint32_t kManifestVersion = 1;
inline constexpr const char* kStashPrefix = "__stash/";
inline constexpr const char* kMimicPrefix = "opt_state/";

struct ChunkRecord {
  std::string key;
  std::uint32_t byte_len = 0;
  std::uint32_t crc32 = 0;
  friend bool operator==(const ChunkRecord&, const ChunkRecord&) = default;
};

struct PayloadManifest {
  std::uint32_t version = kManifestVersion;
  DisguiseMode::Kind mode = DisguiseMode::Kind::DedicatedKeys;
  std::uint64_t total_bytes = 0;
  std::string label;
  std::vector<ChunkRecord> chunks;

  friend bool operator==(const PayloadManifest&, const PayloadManifest&) = default;
};

//   "STSH" u32 version u8 mode u32 chunk_count u64 total_bytes u32 label_len
//   label, then per chunk: u32 key_len key u32 byte_len u32 crc32
Bytes serialize_manifest(const PayloadManifest& m);
// Up to three trailing zero bytes (F32 padding) are accepted.
PayloadManifest parse_manifest(ByteSpan data);
std::size_t manifest_size(const PayloadManifest& m);

std::string chunk_key(const DisguiseMode& mode, std::uint32_t index);
std::string manifest_key(const DisguiseMode& mode);

struct EmbedResult {
  Checkpoint carrier;
  PayloadManifest manifest;
  std::uint64_t added_bytes = 0;  // growth of the WDC serialization
};

EmbedResult embed(const Checkpoint& carrier, ByteSpan payload, const DisguiseMode& mode,
                  std::uint32_t chunk_size = kDefaultChunkSize, std::string label = {});

struct Extracted {
  Bytes payload;
  PayloadManifest manifest;
};

Extracted extract(const Checkpoint& carrier, const DisguiseMode& mode);

// Exact number of bytes embed() adds to the WDC serialization.
std::uint64_t embedding_overhead(std::uint64_t payload_len, const DisguiseMode& mode,
                                 std::uint32_t chunk_size = kDefaultChunkSize,
                                 std::size_t label_len = 0);

}  // namespace ckptleak
