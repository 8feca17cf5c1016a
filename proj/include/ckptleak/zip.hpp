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

// Minimal ZIP (PKWARE APPNOTE) reader/writer: stored and DEFLATE members,
// no ZIP64, no encryption, no spanning. Timestamps are pinned to
// 1980-01-01 00:00 so archives are byte-deterministic.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ckptleak/bytes.hpp"

namespace ckptleak {

enum class ZipMethod : std::uint16_t { Stored = 0, Deflate = 8 };

struct ZipMember {
  std::string name;
  Bytes data;
};

Bytes write_zip(std::span<const ZipMember> members, ZipMethod method,
                int level = 9);

// Members are returned in central-directory order with CRCs verified.
std::vector<ZipMember> read_zip(ByteSpan archive);

}  // namespace ckptleak
