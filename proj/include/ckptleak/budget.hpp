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

// Export-size arithmetic: how many images fit in an exported model of a
// given size, and which strategy steals the most.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace ckptleak {

// Sizes are exact integers of bytes; table values in MB use 1 MB = 10^6 B.
inline constexpr std::uint64_t kMB = 1'000'000;

struct StrategyCosts {
  std::string name;
  std::uint64_t fixed_bytes = 0;      // decoder + utility model, or utility model alone
  std::uint64_t per_image_bytes = 1;  // >= 1
  bool decoder_required = false;
};

struct ImageCapacity {
  std::uint64_t n_images = 0;
  bool feasible = true;  // false when the budget cannot hold the fixed part
};

struct ExportPlan {
  std::string strategy;
  std::uint64_t n_images = 0;
  std::uint64_t total_bytes = 0;
  std::uint64_t budget_bytes = 0;
  bool feasible = true;
};

// fixed + n * per_image; throws Overflow past 2^64.
std::uint64_t export_size(const StrategyCosts& s, std::uint64_t n);
ImageCapacity max_images(const StrategyCosts& s, std::uint64_t budget);

// Maximizes max_images; ties go to the smaller total, then to list order.
// When no strategy fits, returns the one with the smallest fixed part with
// feasible = false and n_images = 0.
ExportPlan best_strategy(std::span<const StrategyCosts> costs, std::uint64_t budget);

// Component sizes behind the attack-cost table (MB figures as bytes).
struct AttackCosts {
  static constexpr std::uint64_t decoder = 598 * kMB;
  static constexpr std::uint64_t utility_branch = 3 * kMB;
  static constexpr std::uint64_t lits_high = 21'990'000;
  static constexpr std::uint64_t lits_low = 2'270'000;
  static constexpr std::uint64_t lits_zip = 134 * kMB;
  static constexpr std::uint64_t lits_public_utility = 66 * kMB;
  static constexpr std::uint64_t brats_high = 910'000;
  static constexpr std::uint64_t brats_zip = 2'300'000;
  static constexpr std::uint64_t brats_public_utility = 30 * kMB;
};

std::vector<StrategyCosts> lits_strategies();   // high, low, zip
std::vector<StrategyCosts> brats_strategies();  // high, zip

struct CostTableRow {
  std::string dataset;
  // D, D+UB, D+UB+100*High, D+UB+100*Low, PU+100*ZIP; absent cells are nullopt
  std::array<std::optional<std::uint64_t>, 5> cells_mb;
};

inline constexpr std::array<const char*, 5> kCostTableColumns = {
    "D", "D+UB", "D+UB+100*High", "D+UB+100*Low", "PU+100*ZIP"};

std::vector<CostTableRow> cost_table();

// Federated case: decoder pre-shared, only the utility branch plus codes.
struct FederatedScenario {
  std::uint64_t budget_bytes = 100 * kMB;
  std::uint64_t images_that_fit = 0;
  std::uint64_t size_for_50_images = 0;
};
FederatedScenario federated_scenario();

nlohmann::ordered_json to_json(const ExportPlan& p);
nlohmann::ordered_json to_json(const StrategyCosts& s);
StrategyCosts strategy_from_json(const nlohmann::json& j);
nlohmann::ordered_json cost_table_json();

}  // namespace ckptleak
