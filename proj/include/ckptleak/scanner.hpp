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

// Export audit for checkpoints: diff against the expected architecture,
// total-size check, name heuristics, and two statistical tests (byte
// entropy, DEFLATE compressibility) that catch payloads hiding under
// plausible names.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ckptleak/bytes.hpp"
#include "ckptleak/checkpoint.hpp"

namespace ckptleak {

struct ExpectedEntry {
  std::string key;
  DType dtype = DType::F32;
  std::vector<std::uint64_t> shape;
};

struct ArchitectureManifest {
  std::vector<ExpectedEntry> entries;
  std::uint64_t expected_total_bytes = 0;  // sum of tensor payload bytes
};

ArchitectureManifest manifest_from_checkpoint(const Checkpoint& c);
nlohmann::ordered_json to_json(const ArchitectureManifest& m);
ArchitectureManifest architecture_from_json(const nlohmann::json& j);

enum class FindingKind {
  UnknownKey,
  ShapeMismatch,
  DTypeMismatch,
  SizeAnomaly,
  HighEntropy,
  Incompressible,
  SuspiciousName,
};
enum class Severity { Info, Warn, Alert };
enum class Verdict { Clean, Suspicious, Flagged };

std::string_view finding_kind_name(FindingKind k);
std::string_view severity_name(Severity s);
std::string_view verdict_name(Verdict v);

struct ScanFinding {
  std::string key;  // "<global>" for whole-file findings
  FindingKind kind = FindingKind::UnknownKey;
  Severity severity = Severity::Info;
  std::string details;
  double score = 0.0;  // [0,1]
};

struct ScanThresholds {
  double entropy_bits = 7.5;
  double incompressible_ratio = 0.95;
  std::uint64_t min_entry_bytes = 4096;
  double size_tolerance = 0.01;
  int deflate_level = 6;
};

struct ScanReport {
  std::vector<ScanFinding> findings;
  std::uint64_t declared_bytes = 0;
  std::optional<std::uint64_t> expected_bytes;
  Verdict verdict = Verdict::Clean;

  std::size_t count(Severity s) const;
};

ScanReport scan(const Checkpoint& c, const ArchitectureManifest* manifest = nullptr,
                const ScanThresholds& thresholds = {});

// Shannon entropy of the byte histogram in bits per byte, in [0, 8].
double entropy_bits_per_byte(ByteSpan bytes);
// Raw-DEFLATE size over input size.
double compression_ratio(ByteSpan bytes, int level = 6);

// Exit codes of the scan subcommand: 0 clean, 1 suspicious, 2 flagged.
int verdict_exit_code(Verdict v);

nlohmann::ordered_json to_json(const ScanReport& r);

}  // namespace ckptleak
