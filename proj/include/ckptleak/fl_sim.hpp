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

// Round-based simulation of exfiltration through federated model updates:
// every round each node hides up to per_round_budget_bytes of its image
// codes in the update it sends, and the (attacker-controlled) server
// reassembles them. Aggregation math and transport are not modeled.

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "ckptleak/payload.hpp"
#include "ckptleak/scanner.hpp"

namespace ckptleak {

struct CodeSampling {
  std::uint32_t images_per_node = 1;
  double mean_bytes = 1.0;  // arithmetic mean of the lognormal
  double sigma = 0.0;       // log-space standard deviation
};

struct SimConfig {
  std::uint64_t seed = 0;
  std::uint32_t n_nodes = 1;
  std::uint32_t rounds = 1;
  std::uint64_t per_round_budget_bytes = 1;
  std::uint64_t base_model_bytes = 0;
  // Either explicit per-node code sizes (FIFO order) or a sampling config.
  std::vector<std::vector<std::uint64_t>> node_codes;
  std::optional<CodeSampling> sampling;
  // Ship only whole images per round instead of straddling rounds.
  bool whole_image_mode = false;

  // Scanner in the loop: measurement only, never blocks the transfer.
  bool scanner_enabled = false;
  bool scanner_uses_manifest = true;
  ScanThresholds thresholds;
  DisguiseMode disguise;
  std::uint32_t chunk_size = kDefaultChunkSize;
};

// Throws InvalidArgument on a config that breaks its invariants.
void validate(const SimConfig& cfg);
// The explicit lists, or the lognormal draws for a sampling config.
std::vector<std::vector<std::uint64_t>> resolve_code_sizes(const SimConfig& cfg);

struct RoundEvent {
  std::uint32_t round = 0;  // 1-based
  std::uint32_t node = 0;
  std::uint64_t bytes_smuggled = 0;
  std::uint32_t images_completed = 0;  // completed in this round
  std::optional<Verdict> verdict;      // scanner result, when enabled
  bool flagged() const { return verdict && *verdict != Verdict::Clean; }
};

struct NodeSummary {
  std::uint32_t node = 0;
  std::uint64_t total_code_bytes = 0;
  std::uint64_t cumulative_bytes = 0;
  std::uint32_t images_total = 0;
  std::uint32_t images_completed = 0;
  std::optional<std::uint32_t> rounds_to_complete;  // nullopt = incomplete
  std::vector<std::optional<std::uint32_t>> image_completion_round;
  std::uint32_t flagged_rounds = 0;
};

struct SimReport {
  std::vector<RoundEvent> events;  // round-major, node-minor
  std::vector<NodeSummary> nodes;
  std::uint64_t total_bytes = 0;
  std::uint64_t images_completed = 0;
  std::uint64_t images_total = 0;
};

// Gaussian f32 layers ("layer<i>.weight", at most 1 MiB each) adding up to
// `bytes` rounded down to whole floats. Also used as the scanner's base model.
Checkpoint synthetic_model(std::uint64_t bytes, std::uint64_t seed, double stddev = 0.05);

SimReport run_simulation(const SimConfig& cfg);

// ceil(total / budget); 0 bytes take 0 rounds.
std::uint64_t rounds_to_exfiltrate(std::uint64_t total_bytes, std::uint64_t per_round_budget);

SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const SimConfig& cfg);
nlohmann::ordered_json to_json(const SimReport& r);

}  // namespace ckptleak
