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

// Standalone fuzz driver: runs a seeded campaign over every parser and
// exits non-zero when any input escapes with something other than a typed
// library error.

#include <chrono>
#include <cstdint>
#include <iostream>

#include <CLI11.hpp>

#include "fuzz_targets.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ckptleak parser fuzz driver"};
  std::uint64_t inputs = 100000, seed = 1;
  app.add_option("-n,--inputs", inputs, "Number of inputs")->capture_default_str();
  app.add_option("--seed", seed, "Campaign seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const auto t0 = std::chrono::steady_clock::now();
  const auto stats = ckptleak::fuzz::run_campaign(seed, inputs);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::cout << "inputs " << stats.inputs << " accepted " << stats.accepted << " rejected " << stats.rejected
            << " failures " << stats.failures.size() << " in " << secs << " s\n";
  for (std::size_t t = 0; t < ckptleak::fuzz::kTargetCount; ++t)
    std::cout << "  " << ckptleak::fuzz::target_name(static_cast<ckptleak::fuzz::Target>(t)) << ": "
              << stats.per_target[t] << '\n';
  for (const auto& f : stats.failures) std::cout << "FAILURE " << f << '\n';
  return stats.failures.empty() ? 0 : 1;
}
