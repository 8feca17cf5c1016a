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

// Raw DEFLATE (RFC 1951) and the IEEE CRC-32, both backed by zlib.

#include <cstdint>

#include "ckptleak/bytes.hpp"

namespace ckptleak {

inline constexpr int kDeflateMaxLevel = 9;

Bytes deflate_raw(ByteSpan input, int level = kDeflateMaxLevel);

// Inflates a raw DEFLATE stream. The output may not exceed max_output bytes;
// a stream that does not terminate inside the input is a DecompressionError.
Bytes inflate_raw(ByteSpan input, std::uint64_t max_output);

std::uint32_t crc32(ByteSpan data, std::uint32_t seed = 0);

}  // namespace ckptleak
