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

#include "ckptleak/fl_sim.hpp"

#include <cmath>
#include <cstring>

#include "ckptleak/rng.hpp"

namespace ckptleak {
namespace {

constexpr std::uint64_t kLayerBytes = 1u << 20;

[[noreturn]] void invalid(const std::string& what) {
  throw Error(Errc::InvalidArgument, "simulation config: " + what);
}

// Stand-in for compressed image codes: uniformly random bytes.
Bytes code_bytes(std::uint64_t seed, std::uint32_t node, std::uint32_t round, std::uint64_t n) {
  Rng rng(seed ^ (std::uint64_t{node} << 32) ^ (std::uint64_t{round} * 0x9E3779B97F4A7C15ull));
  Bytes out(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < out.size(); i += 8) {
    const std::uint64_t r = rng.next();
    std::memcpy(out.data() + i, &r, std::min<std::size_t>(8, out.size() - i));
  }
  return out;
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

Checkpoint synthetic_model(std::uint64_t bytes, std::uint64_t seed, double stddev) {
  Rng rng(seed);
  Checkpoint c;
  std::uint64_t floats = bytes / 4;
  for (std::uint32_t layer = 0; floats > 0; ++layer) {
    const std::uint64_t n = std::min<std::uint64_t>(floats, kLayerBytes / 4);
    std::vector<float> w(n);
    for (auto& v : w) v = static_cast<float>(rng.normal(0.0, stddev));
    c.add(make_f32_entry("layer" + std::to_string(layer) + ".weight", {n}, w));
    floats -= n;
  }
  return c;
}

void validate(const SimConfig& cfg) {
  if (cfg.n_nodes == 0) invalid("n_nodes must be positive");
  if (cfg.rounds == 0) invalid("rounds must be positive");
  if (cfg.per_round_budget_bytes == 0) invalid("per_round_budget_bytes must be >= 1");
  if (!cfg.node_codes.empty()) {
    if (cfg.sampling) invalid("give either node_codes or sampling, not both");
    if (cfg.node_codes.size() != cfg.n_nodes) invalid("node_codes needs one list per node");
    for (const auto& list : cfg.node_codes) {
      if (list.empty()) invalid("every node needs at least one image");
      for (auto s : list)
        if (s == 0) invalid("image code sizes must be >= 1");
    }
  } else if (cfg.sampling) {
    if (cfg.sampling->images_per_node == 0) invalid("images_per_node must be positive");
    if (!(cfg.sampling->mean_bytes >= 1.0)) invalid("mean_bytes must be >= 1");
    if (!(cfg.sampling->sigma >= 0.0)) invalid("sigma must be >= 0");
  } else {
    invalid("node_codes or sampling is required");
  }
  if (cfg.scanner_enabled && cfg.chunk_size < kMinChunkSize) invalid("chunk_size below minimum");
  if (cfg.disguise.kind == DisguiseMode::Kind::MimicKeys && cfg.disguise.secret.empty())
    invalid("mimic disguise needs a secret");
}

std::vector<std::vector<std::uint64_t>> resolve_code_sizes(const SimConfig& cfg) {
  validate(cfg);
  if (!cfg.node_codes.empty()) return cfg.node_codes;
  const auto& s = *cfg.sampling;
  const double mu = std::log(s.mean_bytes) - s.sigma * s.sigma / 2.0;
  Rng rng(cfg.seed);
  std::vector<std::vector<std::uint64_t>> out(cfg.n_nodes);
  for (auto& list : out) {
    list.resize(s.images_per_node);
    for (auto& v : list)
      v = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(std::exp(mu + s.sigma * rng.normal()))));
  }
  return out;
}

std::uint64_t rounds_to_exfiltrate(std::uint64_t total_bytes, std::uint64_t per_round_budget) {
  if (per_round_budget == 0) throw Error(Errc::InvalidArgument, "per-round budget must be >= 1");
  return total_bytes / per_round_budget + (total_bytes % per_round_budget != 0);
}

SimReport run_simulation(const SimConfig& cfg) {
  const auto codes = resolve_code_sizes(cfg);

  Checkpoint base;
  std::optional<ArchitectureManifest> arch;
  if (cfg.scanner_enabled) {
    base = synthetic_model(cfg.base_model_bytes, cfg.seed);
    if (cfg.scanner_uses_manifest) arch = manifest_from_checkpoint(base);
  }

  SimReport report;
  struct Stream {
    std::size_t next_image = 0;
    std::uint64_t offset_in_image = 0;
  };
  std::vector<Stream> streams(cfg.n_nodes);
  for (std::uint32_t n = 0; n < cfg.n_nodes; ++n) {
    NodeSummary s;
    s.node = n;
    s.images_total = static_cast<std::uint32_t>(codes[n].size());
    s.image_completion_round.assign(codes[n].size(), std::nullopt);
    for (auto b : codes[n]) s.total_code_bytes += b;
    report.nodes.push_back(std::move(s));
    report.images_total += codes[n].size();
  }

  for (std::uint32_t round = 1; round <= cfg.rounds; ++round) {
    for (std::uint32_t n = 0; n < cfg.n_nodes; ++n) {
      auto& st = streams[n];
      auto& summary = report.nodes[n];
      const auto& sizes = codes[n];
      RoundEvent ev{round, n, 0, 0, std::nullopt};
      std::uint64_t budget = cfg.per_round_budget_bytes;
      while (budget > 0 && st.next_image < sizes.size()) {
        const std::uint64_t left = sizes[st.next_image] - st.offset_in_image;
        if (cfg.whole_image_mode && left > budget) break;
        const std::uint64_t take = std::min(left, budget);
        budget -= take;
        ev.bytes_smuggled += take;
        st.offset_in_image += take;
        if (st.offset_in_image == sizes[st.next_image]) {
          summary.image_completion_round[st.next_image] = round;
          ++ev.images_completed;
          ++st.next_image;
          st.offset_in_image = 0;
        }
      }
      summary.cumulative_bytes += ev.bytes_smuggled;
      summary.images_completed += ev.images_completed;
      if (st.next_image == sizes.size() && !summary.rounds_to_complete && ev.images_completed > 0)
        summary.rounds_to_complete = round;

      if (cfg.scanner_enabled && ev.bytes_smuggled > 0) {
        const Bytes chunk = code_bytes(cfg.seed, n, round, ev.bytes_smuggled);
        const auto carrier = embed(base, chunk, cfg.disguise, cfg.chunk_size,
                                   "node" + std::to_string(n) + "/round" + std::to_string(round));
        ev.verdict = scan(carrier.carrier, arch ? &*arch : nullptr, cfg.thresholds).verdict;
        if (ev.flagged()) ++summary.flagged_rounds;
      }
      report.total_bytes += ev.bytes_smuggled;
      report.images_completed += ev.images_completed;
      report.events.push_back(ev);
    }
  }
  return report;
}

SimConfig sim_config_from_json(const nlohmann::json& j) {
  try {
    SimConfig cfg;
    cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
    cfg.n_nodes = j.at("n_nodes").get<std::uint32_t>();
    cfg.rounds = j.at("rounds").get<std::uint32_t>();
    cfg.per_round_budget_bytes = j.at("per_round_budget_bytes").get<std::uint64_t>();
    cfg.base_model_bytes = get_or<std::uint64_t>(j, "base_model_bytes", 0);
    if (j.contains("node_codes")) cfg.node_codes = j.at("node_codes").get<std::vector<std::vector<std::uint64_t>>>();
    if (j.contains("sampling")) {
      const auto& s = j.at("sampling");
      cfg.sampling = CodeSampling{s.at("images_per_node").get<std::uint32_t>(),
                                  s.at("mean_bytes").get<double>(), get_or<double>(s, "sigma", 0.0)};
    }
    cfg.whole_image_mode = get_or<bool>(j, "whole_image_mode", false);
    if (j.contains("scanner")) {
      const auto& s = j.at("scanner");
      cfg.scanner_enabled = get_or<bool>(s, "enabled", true);
      cfg.scanner_uses_manifest = get_or<bool>(s, "use_manifest", true);
      const auto disguise = get_or<std::string>(s, "disguise", "dedicated");
      if (disguise == "mimic") cfg.disguise = DisguiseMode::mimic(get_or<std::string>(s, "secret", ""));
      else if (disguise != "dedicated") invalid("unknown disguise '" + disguise + "'");
      cfg.chunk_size = get_or<std::uint32_t>(s, "chunk_size", kDefaultChunkSize);
      if (s.contains("thresholds")) {
        const auto& t = s.at("thresholds");
        cfg.thresholds.entropy_bits = get_or<double>(t, "entropy_bits", cfg.thresholds.entropy_bits);
        cfg.thresholds.incompressible_ratio =
            get_or<double>(t, "incompressible_ratio", cfg.thresholds.incompressible_ratio);
        cfg.thresholds.min_entry_bytes = get_or<std::uint64_t>(t, "min_entry_bytes", cfg.thresholds.min_entry_bytes);
        cfg.thresholds.size_tolerance = get_or<double>(t, "size_tolerance", cfg.thresholds.size_tolerance);
      }
    }
    validate(cfg);
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    invalid(e.what());
  }
}

nlohmann::ordered_json to_json(const SimConfig& cfg) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["n_nodes"] = cfg.n_nodes;
  j["rounds"] = cfg.rounds;
  j["per_round_budget_bytes"] = cfg.per_round_budget_bytes;
  j["base_model_bytes"] = cfg.base_model_bytes;
  if (!cfg.node_codes.empty()) j["node_codes"] = cfg.node_codes;
  if (cfg.sampling)
    j["sampling"] = {{"images_per_node", cfg.sampling->images_per_node},
                     {"mean_bytes", cfg.sampling->mean_bytes},
                     {"sigma", cfg.sampling->sigma}};
  j["whole_image_mode"] = cfg.whole_image_mode;
  if (cfg.scanner_enabled) {
    nlohmann::ordered_json s;
    s["enabled"] = true;
    s["use_manifest"] = cfg.scanner_uses_manifest;
    s["disguise"] = cfg.disguise.kind == DisguiseMode::Kind::MimicKeys ? "mimic" : "dedicated";
    if (!cfg.disguise.secret.empty()) s["secret"] = cfg.disguise.secret;
    s["chunk_size"] = cfg.chunk_size;
    s["thresholds"] = {{"entropy_bits", cfg.thresholds.entropy_bits},
                       {"incompressible_ratio", cfg.thresholds.incompressible_ratio},
                       {"min_entry_bytes", cfg.thresholds.min_entry_bytes},
                       {"size_tolerance", cfg.thresholds.size_tolerance}};
    j["scanner"] = s;
  }
  return j;
}

nlohmann::ordered_json to_json(const SimReport& r) {
  nlohmann::ordered_json j;
  j["totals"] = {{"bytes", r.total_bytes},
                 {"images_completed", r.images_completed},
                 {"images_total", r.images_total}};
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : r.nodes) {
    nlohmann::ordered_json node;
    node["node"] = n.node;
    node["total_code_bytes"] = n.total_code_bytes;
    node["cumulative_bytes"] = n.cumulative_bytes;
    node["images_total"] = n.images_total;
    node["images_completed"] = n.images_completed;
    node["rounds_to_complete"] =
        n.rounds_to_complete ? nlohmann::ordered_json(*n.rounds_to_complete) : nlohmann::ordered_json("incomplete");
    node["flagged_rounds"] = n.flagged_rounds;
    j["nodes"].push_back(node);
  }
  j["events"] = nlohmann::ordered_json::array();
  for (const auto& e : r.events) {
    nlohmann::ordered_json ev;
    ev["round"] = e.round;
    ev["node"] = e.node;
    ev["bytes_smuggled"] = e.bytes_smuggled;
    ev["images_completed"] = e.images_completed;
    ev["flagged"] = e.flagged();
    if (e.verdict) ev["verdict"] = verdict_name(*e.verdict);
    j["events"].push_back(ev);
  }
  return j;
}

}  // namespace ckptleak
