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

#include "ckptleak/budget.hpp"

#include <limits>

#include "ckptleak/error.hpp"

namespace ckptleak {

std::uint64_t export_size(const StrategyCosts& s, std::uint64_t n) {
  std::uint64_t images = 0, total = 0;
  if (__builtin_mul_overflow(n, s.per_image_bytes, &images) ||
      __builtin_add_overflow(s.fixed_bytes, images, &total))
    throw Error(Errc::Overflow, "export size of '" + s.name + "' overflows 64 bits");
  return total;
}

ImageCapacity max_images(const StrategyCosts& s, std::uint64_t budget) {
  if (s.per_image_bytes == 0) throw Error(Errc::InvalidArgument, "per-image size must be >= 1");
  if (budget < s.fixed_bytes) return {0, false};
  return {(budget - s.fixed_bytes) / s.per_image_bytes, true};
}

ExportPlan best_strategy(std::span<const StrategyCosts> costs, std::uint64_t budget) {
  if (costs.empty()) throw Error(Errc::InvalidArgument, "no strategies to choose from");
  std::optional<ExportPlan> best;
  for (const auto& s : costs) {
    const auto cap = max_images(s, budget);
    if (!cap.feasible) continue;
    ExportPlan plan{s.name, cap.n_images, export_size(s, cap.n_images), budget, true};
    if (!best || plan.n_images > best->n_images ||
        (plan.n_images == best->n_images && plan.total_bytes < best->total_bytes))
      best = std::move(plan);
  }
  if (best) return *best;

  const StrategyCosts* cheapest = &costs.front();
  for (const auto& s : costs)
    if (s.fixed_bytes < cheapest->fixed_bytes) cheapest = &s;
  return {cheapest->name, 0, cheapest->fixed_bytes, budget, false};
}

std::vector<StrategyCosts> lits_strategies() {
  using P = AttackCosts;
  return {{"lossy-high", P::decoder + P::utility_branch, P::lits_high, true},
          {"lossy-low", P::decoder + P::utility_branch, P::lits_low, true},
          {"lossless-zip", P::lits_public_utility, P::lits_zip, false}};
}

std::vector<StrategyCosts> brats_strategies() {
  using P = AttackCosts;
  return {{"lossy-high", P::decoder + P::utility_branch, P::brats_high, true},
          {"lossless-zip", P::brats_public_utility, P::brats_zip, false}};
}

std::vector<CostTableRow> cost_table() {
  using P = AttackCosts;
  constexpr std::uint64_t n = 100;
  auto mb = [](std::uint64_t bytes) -> std::optional<std::uint64_t> {
    if (bytes % kMB != 0) throw Error(Errc::InvalidArgument, "table cell is not a whole MB");
    return bytes / kMB;
  };
  const std::uint64_t d_ub = P::decoder + P::utility_branch;
  return {
      {"LiTS",
       {mb(P::decoder), mb(d_ub), mb(d_ub + n * P::lits_high), mb(d_ub + n * P::lits_low),
        mb(P::lits_public_utility + n * P::lits_zip)}},
      {"BraTS",
       {mb(P::decoder), mb(d_ub), mb(d_ub + n * P::brats_high), std::nullopt,
        mb(P::brats_public_utility + n * P::brats_zip)}},
  };
}

FederatedScenario federated_scenario() {
  const StrategyCosts fl{"federated-low", AttackCosts::utility_branch, AttackCosts::lits_low, false};
  FederatedScenario s;
  s.images_that_fit = max_images(fl, s.budget_bytes).n_images;
  s.size_for_50_images = export_size(fl, 50);
  return s;
}

nlohmann::ordered_json to_json(const ExportPlan& p) {
  nlohmann::ordered_json j;
  j["strategy"] = p.strategy;
  j["n_images"] = p.n_images;
  j["total_bytes"] = p.total_bytes;
  j["budget_bytes"] = p.budget_bytes;
  j["feasible"] = p.feasible;
  return j;
}

nlohmann::ordered_json to_json(const StrategyCosts& s) {
  nlohmann::ordered_json j;
  j["name"] = s.name;
  j["fixed_bytes"] = s.fixed_bytes;
  j["per_image_bytes"] = s.per_image_bytes;
  j["decoder_required"] = s.decoder_required;
  return j;
}

StrategyCosts strategy_from_json(const nlohmann::json& j) {
  try {
    StrategyCosts s;
    s.name = j.at("name").get<std::string>();
    s.fixed_bytes = j.at("fixed_bytes").get<std::uint64_t>();
    s.per_image_bytes = j.at("per_image_bytes").get<std::uint64_t>();
    s.decoder_required = j.value("decoder_required", false);
    if (s.per_image_bytes == 0)
      throw Error(Errc::InvalidArgument, "strategy '" + s.name + "' has per_image_bytes = 0");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("strategy costs: ") + e.what());
  }
}

nlohmann::ordered_json cost_table_json() {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : cost_table()) {
    nlohmann::ordered_json r;
    r["dataset"] = row.dataset;
    for (std::size_t i = 0; i < row.cells_mb.size(); ++i)
      r[kCostTableColumns[i]] = row.cells_mb[i] ? nlohmann::ordered_json(*row.cells_mb[i]) : nullptr;
    rows.push_back(r);
  }
  const auto fl = federated_scenario();
  nlohmann::ordered_json out;
  out["unit"] = "MB";
  out["rows"] = rows;
  out["federated"] = {{"budget_mb", fl.budget_bytes / kMB},
                      {"images_that_fit", fl.images_that_fit},
                      {"size_for_50_images_bytes", fl.size_for_50_images}};
  return out;
}

}  // namespace ckptleak
