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

#include "ckptleak/scanner.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <unordered_map>

#include "ckptleak/compress.hpp"

namespace ckptleak {
namespace {

std::string shape_string(const std::vector<std::uint64_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? ", " : "") + std::to_string(shape[i]);
  return s + ")";
}

bool is_hex_name(std::string_view key) {
  return key.size() == 32 && std::all_of(key.begin(), key.end(), [](char c) {
           return std::isxdigit(static_cast<unsigned char>(c)) != 0;
         });
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string_view finding_kind_name(FindingKind k) {
  switch (k) {
    case FindingKind::UnknownKey: return "UnknownKey";
    case FindingKind::ShapeMismatch: return "ShapeMismatch";
    case FindingKind::DTypeMismatch: return "DTypeMismatch";
    case FindingKind::SizeAnomaly: return "SizeAnomaly";
    case FindingKind::HighEntropy: return "HighEntropy";
    case FindingKind::Incompressible: return "Incompressible";
    case FindingKind::SuspiciousName: return "SuspiciousName";
  }
  return "?";
}

std::string_view severity_name(Severity s) {
  switch (s) {
    case Severity::Info: return "Info";
    case Severity::Warn: return "Warn";
    case Severity::Alert: return "Alert";
  }
  return "?";
}

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Clean: return "Clean";
    case Verdict::Suspicious: return "Suspicious";
    case Verdict::Flagged: return "Flagged";
  }
  return "?";
}

ArchitectureManifest manifest_from_checkpoint(const Checkpoint& c) {
  ArchitectureManifest m;
  for (const auto& e : c.entries()) m.entries.push_back({e.key, e.dtype, e.shape});
  m.expected_total_bytes = payload_bytes(c);
  return m;
}

nlohmann::ordered_json to_json(const ArchitectureManifest& m) {
  nlohmann::ordered_json j;
  j["expected_total_bytes"] = m.expected_total_bytes;
  j["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : m.entries)
    j["entries"].push_back({{"key", e.key}, {"dtype", dtype_name(e.dtype)}, {"shape", e.shape}});
  return j;
}

ArchitectureManifest architecture_from_json(const nlohmann::json& j) {
  try {
    ArchitectureManifest m;
    m.expected_total_bytes = j.at("expected_total_bytes").get<std::uint64_t>();
    std::unordered_map<std::string, int> seen;
    for (const auto& item : j.at("entries")) {
      ExpectedEntry e;
      e.key = item.at("key").get<std::string>();
      const auto name = item.at("dtype").get<std::string>();
      const auto dtype = dtype_from_name(name);
      if (!dtype) throw Error(Errc::InvalidDType, "architecture manifest dtype '" + name + "'");
      e.dtype = *dtype;
      e.shape = item.at("shape").get<std::vector<std::uint64_t>>();
      if (seen[e.key]++) throw Error(Errc::DuplicateKey, "architecture manifest repeats '" + e.key + "'");
      m.entries.push_back(std::move(e));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("architecture manifest: ") + e.what());
  }
}

double entropy_bits_per_byte(ByteSpan bytes) {
  if (bytes.empty()) throw Error(Errc::InvalidArgument, "entropy of an empty buffer");
  std::array<std::uint64_t, 256> hist{};
  for (auto b : bytes) ++hist[b];
  const double n = static_cast<double>(bytes.size());
  double h = 0;
  for (auto c : hist)
    if (c) {
      const double p = c / n;
      h -= p * std::log2(p);
    }
  return std::clamp(h, 0.0, 8.0);
}

double compression_ratio(ByteSpan bytes, int level) {
  if (bytes.empty()) throw Error(Errc::InvalidArgument, "compression ratio of an empty buffer");
  return static_cast<double>(deflate_raw(bytes, level).size()) / static_cast<double>(bytes.size());
}

std::size_t ScanReport::count(Severity s) const {
  return static_cast<std::size_t>(
      std::count_if(findings.begin(), findings.end(), [s](const auto& f) { return f.severity == s; }));
}

ScanReport scan(const Checkpoint& c, const ArchitectureManifest* manifest,
                const ScanThresholds& t) {
  ScanReport report;
  report.declared_bytes = payload_bytes(c);

  std::unordered_map<std::string_view, const ExpectedEntry*> expected;
  if (manifest) {
    report.expected_bytes = manifest->expected_total_bytes;
    for (const auto& e : manifest->entries) expected.emplace(e.key, &e);
  }
  auto add = [&](std::string key, FindingKind kind, Severity sev, std::string details, double score) {
    report.findings.push_back({std::move(key), kind, sev, std::move(details), std::clamp(score, 0.0, 1.0)});
  };

  for (const auto& e : c.entries()) {
    if (manifest) {
      auto it = expected.find(e.key);
      if (it == expected.end()) {
        add(e.key, FindingKind::UnknownKey, Severity::Alert, "key is not part of the declared architecture", 1.0);
      } else {
        if (it->second->dtype != e.dtype)
          add(e.key, FindingKind::DTypeMismatch, Severity::Alert,
              "declared " + std::string(dtype_name(it->second->dtype)) + ", found " +
                  std::string(dtype_name(e.dtype)), 1.0);
        if (it->second->shape != e.shape)
          add(e.key, FindingKind::ShapeMismatch, Severity::Alert,
              "declared " + shape_string(it->second->shape) + ", found " + shape_string(e.shape), 1.0);
      }
    }

    if (e.key.starts_with("__stash"))
      add(e.key, FindingKind::SuspiciousName, Severity::Alert, "reserved stash prefix", 1.0);
    else if (is_hex_name(e.key))
      add(e.key, FindingKind::SuspiciousName, Severity::Alert, "32-hex-character payload-style name", 1.0);

    if (e.payload.size() >= t.min_entry_bytes && !e.payload.empty()) {
      const double h = entropy_bits_per_byte(e.payload);
      if (h > t.entropy_bits)
        add(e.key, FindingKind::HighEntropy, Severity::Warn,
            "byte entropy " + fmt(h) + " bits/byte", (h - t.entropy_bits) / (8.0 - t.entropy_bits));
      const double ratio = compression_ratio(e.payload, t.deflate_level);
      if (ratio > t.incompressible_ratio)
        add(e.key, FindingKind::Incompressible, Severity::Warn,
            "deflate ratio " + fmt(ratio), (ratio - t.incompressible_ratio) / (1.0 - t.incompressible_ratio));
    }
  }

  if (manifest) {
    const double limit = static_cast<double>(manifest->expected_total_bytes) * (1.0 + t.size_tolerance);
    if (static_cast<double>(report.declared_bytes) > limit)
      add("<global>", FindingKind::SizeAnomaly, Severity::Alert,
          std::to_string(report.declared_bytes) + " tensor bytes against " +
              std::to_string(manifest->expected_total_bytes) + " expected", 1.0);
  }

  if (report.count(Severity::Alert)) report.verdict = Verdict::Flagged;
  else if (report.count(Severity::Warn)) report.verdict = Verdict::Suspicious;
  return report;
}

int verdict_exit_code(Verdict v) {
  switch (v) {
    case Verdict::Clean: return 0;
    case Verdict::Suspicious: return 1;
    case Verdict::Flagged: return 2;
  }
  return 2;
}

nlohmann::ordered_json to_json(const ScanReport& r) {
  nlohmann::ordered_json j;
  j["verdict"] = verdict_name(r.verdict);
  j["declared_bytes"] = r.declared_bytes;
  j["expected_bytes"] = r.expected_bytes ? nlohmann::ordered_json(*r.expected_bytes) : nullptr;
  j["findings"] = nlohmann::ordered_json::array();
  for (const auto& f : r.findings)
    j["findings"].push_back({{"key", f.key},
                             {"kind", finding_kind_name(f.kind)},
                             {"severity", severity_name(f.severity)},
                             {"details", f.details},
                             {"score", f.score}});
  return j;
}

}  // namespace ckptleak
