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
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ckptleak::cli {

inline constexpr int kExitUsage = 64;
inline constexpr int kExitData = 65;
inline constexpr int kExitIo = 74;

// Runs the ckptleak command line with explicit streams; returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "1500000", "2.27MB", "64KiB" -> bytes. Decimal units are powers of 1000,
// binary ones powers of 1024; the result must be a whole number of bytes.
std::uint64_t parse_size(std::string_view text);

}  // namespace ckptleak::cli
