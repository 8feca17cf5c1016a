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

#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "ckptleak/budget.hpp"
#include "ckptleak/checkpoint.hpp"
#include "ckptleak/codec.hpp"
#include "ckptleak/error.hpp"
#include "ckptleak/fl_sim.hpp"
#include "ckptleak/metrics.hpp"
#include "ckptleak/payload.hpp"
#include "ckptleak/scanner.hpp"
#include "ckptleak/volume.hpp"

namespace ckptleak::cli {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// JSON config file: top-level keys are global options, nested objects hold
// the options of the subcommand with that name.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    ojson j;
    for (const CLI::Option* opt : app->get_options()) {
      if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
      const std::string name = opt->get_lnames().front();
      if (opt->count() > 0) j[name] = opt->as<std::string>();
      else if (default_also && !opt->get_default_str().empty()) j[name] = opt->get_default_str();
    }
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void collect(const nlohmann::json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto next = parents;
        next.push_back(key);
        collect(value, next, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

void print_flat(std::ostream& out, const ojson& j, const std::string& prefix) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) print_flat(out, v, prefix.empty() ? k : prefix + "." + k);
  } else if (j.is_array() && std::any_of(j.begin(), j.end(), [](const ojson& e) { return e.is_structured(); })) {
    for (std::size_t i = 0; i < j.size(); ++i) print_flat(out, j[i], prefix + "[" + std::to_string(i) + "]");
  } else {
    out << prefix << ": " << (j.is_string() ? j.get<std::string>() : j.dump()) << '\n';
  }
}

void emit(std::ostream& out, const ojson& j, bool json) {
  if (json) out << j.dump(2) << '\n';
  else print_flat(out, j, "");
}

std::uint64_t file_size(const fs::path& p) {
  std::error_code ec;
  const auto n = fs::file_size(p, ec);
  if (ec) throw Error(Errc::Io, "cannot stat '" + p.string() + "': " + ec.message());
  return n;
}

Volume load_any_volume(const fs::path& p) {
  return load_volume(p, fs::exists(sidecar_path(p)) ? VolumeFormat::RawSidecar : VolumeFormat::RVOL);
}

nlohmann::json load_json(const fs::path& p) {
  const Bytes raw = read_file(p);
  try {
    return nlohmann::json::parse(raw.begin(), raw.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedHeader, "'" + p.string() + "' is not valid JSON: " + e.what());
  }
}

void save_json(const ojson& j, const fs::path& p) {
  const std::string s = j.dump(2) + "\n";
  write_file(p, ByteSpan(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

DisguiseMode disguise_from(const std::string& name, const std::string& secret) {
  if (name == "mimic") {
    if (secret.empty()) throw CLI::ValidationError("--secret", "mimic disguise needs a non-empty --secret");
    return DisguiseMode::mimic(secret);
  }
  return DisguiseMode::dedicated();
}

ojson dims_json(Dims d) { return ojson::array({d.depth, d.height, d.width}); }

const std::map<std::string, ContainerFormat> kFormats = {{"wdc", ContainerFormat::WDC},
                                                         {"npz", ContainerFormat::NPZ}};

ContainerFormat format_for(const fs::path& p) {
  return p.extension() == ".npz" ? ContainerFormat::NPZ : ContainerFormat::WDC;
}

// Options shared by every subcommand handler.
struct Globals {
  bool json = false;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
};

using Handler = std::function<int(std::ostream&)>;

Handler add_phantom(CLI::App& app, const Globals& g) {
  struct Opts {
    std::uint64_t seed = 0;
    std::vector<std::uint32_t> dims = {64, 256, 256};
    std::uint32_t ellipsoids = 4;
    std::string output, mask;
    bool raw = false;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("phantom", "Generate a synthetic volume and its lesion mask");
  sub->add_option("--seed", o->seed, "Generator seed")->capture_default_str();
  sub->add_option("--dims", o->dims, "Depth,height,width")->delimiter(',')->expected(3)->capture_default_str();
  sub->add_option("--ellipsoids", o->ellipsoids, "Number of ellipsoids")->check(CLI::Range(0u, 64u))->capture_default_str();
  sub->add_option("-o,--output", o->output, "Output volume")->required();
  sub->add_option("--mask", o->mask, "Output mask volume");
  sub->add_flag("--raw", o->raw, "Write raw f32 plus a JSON sidecar instead of RVOL");
  return [o, &g](std::ostream& out) {
    const Dims dims{o->dims[0], o->dims[1], o->dims[2]};
    const auto ph = generate_phantom(o->seed, dims, o->ellipsoids);
    const auto fmt = o->raw ? VolumeFormat::RawSidecar : VolumeFormat::RVOL;
    save_volume(ph.volume, o->output, fmt);
    ojson j;
    j["output"] = o->output;
    j["dims"] = dims_json(dims);
    j["seed"] = o->seed;
    j["intensity_min"] = ph.volume.intensity_min;
    j["intensity_max"] = ph.volume.intensity_max;
    if (!o->mask.empty()) {
      save_volume(ph.mask, o->mask, fmt);
      j["mask"] = o->mask;
    }
    emit(out, j, g.json);
    return 0;
  };
}

Handler add_encode(CLI::App& app, const Globals& g) {
  struct Opts {
    std::string input, output, mode = "high";
    int quality = 75;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("encode", "Compress a volume into a VolumeCode file");
  sub->add_option("-i,--input", o->input, "Input volume (RVOL, or raw with sidecar)")->required();
  sub->add_option("-o,--output", o->output, "Output VolumeCode file")->required();
  sub->add_option("--mode", o->mode, "Slice sampling")->check(CLI::IsMember({"low", "high", "pad"}))->capture_default_str();
  sub->add_option("-q,--quality", o->quality, "Quality 1..100")->check(CLI::Range(kMinQuality, kMaxQuality))->capture_default_str();
  return [o, &g](std::ostream& out) {
    const Volume v = load_any_volume(o->input);
    const Volume n = v.normalized ? v : normalize_minmax(v);
    const auto vc = encode_volume(n, parse_tiling_mode(o->mode), o->quality, g.threads);
    const auto bytes = write_volume_code(vc, o->output);
    ojson j;
    j["output"] = o->output;
    j["mode"] = o->mode;
    j["quality"] = o->quality;
    j["slice_codes"] = vc.codes.size();
    j["bytes"] = bytes;
    j["bpp"] = bpp(bytes, v.voxel_count());
    j["clamped_inputs"] = vc.clamped_inputs();
    emit(out, j, g.json);
    return 0;
  };
}

Handler add_decode(CLI::App& app, const Globals& g) {
  struct Opts {
    std::string input, output;
    bool raw = false;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("decode", "Reconstruct a volume from a VolumeCode file");
  sub->add_option("-i,--input", o->input, "Input VolumeCode file")->required();
  sub->add_option("-o,--output", o->output, "Output volume")->required();
  sub->add_flag("--raw", o->raw, "Write raw f32 plus a JSON sidecar instead of RVOL");
  return [o, &g](std::ostream& out) {
    const auto vc = read_volume_code(o->input);
    const Volume v = decode_volume(vc, g.threads);
    save_volume(v, o->output, o->raw ? VolumeFormat::RawSidecar : VolumeFormat::RVOL);
    ojson j;
    j["output"] = o->output;
    j["dims"] = dims_json(v.dims());
    j["mode"] = tiling_mode_name(vc.mode);
    j["quality"] = vc.q;
    emit(out, j, g.json);
    return 0;
  };
}

Handler add_zipvol(CLI::App& app, const Globals& g) {
  struct Opts {
    std::string input, output, code;
    bool unzip = false;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("zipvol", "Lossless ZIP path and practical ratio");
  sub->add_option("-i,--input", o->input, "Input volume (or ZIP with --unzip)")->required();
  sub->add_option("-o,--output", o->output, "Output ZIP (or volume with --unzip)")->required();
  sub->add_option("--code", o->code, "VolumeCode file of the same volume, for the practical ratio");
  sub->add_flag("--unzip", o->unzip, "Extract a volume from a ZIP");
  return [o, &g](std::ostream& out) {
    ojson j;
    j["output"] = o->output;
    if (o->unzip) {
      const Volume v = unzip_volume(read_file(o->input));
      save_volume(v, o->output);
      j["dims"] = dims_json(v.dims());
    } else {
      const Volume v = load_any_volume(o->input);
      const Bytes zipped = zip_volume(v);
      write_file(o->output, zipped);
      const auto zip_bytes = file_size(o->output);
      j["bytes"] = zip_bytes;
      j["bpp"] = bpp(zip_bytes, v.voxel_count());
      if (!o->code.empty()) {
        const auto code_bytes = file_size(o->code);
        j["code_bytes"] = code_bytes;
        j["practical_ratio"] = practical_ratio(code_bytes, zip_bytes);
      }
    }
    emit(out, j, g.json);
    return 0;
  };
}

struct DisguiseOpts {
  std::string disguise = "dedicated";
  std::string secret;
};

void add_disguise_options(CLI::App* sub, DisguiseOpts& d) {
  sub->add_option("--disguise", d.disguise, "Key scheme for hidden entries")
      ->check(CLI::IsMember({"dedicated", "mimic"}))
      ->capture_default_str();
  sub->add_option("--secret", d.secret, "Secret deriving the mimic key names");
}

Handler add_embed(CLI::App& app, const Globals& g) {
  struct Opts : DisguiseOpts {
    std::string carrier, payload, output, label, format;
    std::string chunk_size = "1MiB";
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("embed", "Hide a payload file in a checkpoint");
  sub->add_option("--carrier", o->carrier, "Carrier checkpoint (WDC or NPZ)")->required();
  sub->add_option("--payload", o->payload, "File to hide")->required();
  sub->add_option("-o,--output", o->output, "Output checkpoint")->required();
  add_disguise_options(sub, *o);
  sub->add_option("--chunk-size", o->chunk_size, "Bytes per hidden entry")->capture_default_str();
  sub->add_option("--label", o->label, "Free-form label stored in the manifest");
  sub->add_option("--format", o->format, "Output container (default: carrier format)")->check(CLI::IsMember({"wdc", "npz"}));
  return [o, &g](std::ostream& out) {
    const auto mode = disguise_from(o->disguise, o->secret);
    const auto chunk = parse_size(o->chunk_size);
    if (chunk < kMinChunkSize || chunk > 0xFFFFFFFFu)
      throw CLI::ValidationError("--chunk-size", "must be between 64 bytes and 4 GiB");
    const Checkpoint carrier = read_checkpoint(o->carrier);
    const Bytes payload = read_file(o->payload);
    auto result = embed(carrier, payload, mode, static_cast<std::uint32_t>(chunk), o->label);
    if (!o->format.empty()) result.carrier.set_format(kFormats.at(o->format));
    const auto written = write_checkpoint(result.carrier, o->output);
    ojson j;
    j["output"] = o->output;
    j["payload_bytes"] = payload.size();
    j["chunks"] = result.manifest.chunks.size();
    j["carrier_bytes"] = file_size(o->carrier);
    j["output_bytes"] = written;
    emit(out, j, g.json);
    return 0;
  };
}

Handler add_extract(CLI::App& app, const Globals& g) {
  struct Opts : DisguiseOpts {
    std::string input, output;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("extract", "Recover a hidden payload from a checkpoint");
  sub->add_option("-i,--input", o->input, "Checkpoint holding the payload")->required();
  sub->add_option("-o,--output", o->output, "Recovered payload file")->required();
  add_disguise_options(sub, *o);
  return [o, &g](std::ostream& out) {
    const auto mode = disguise_from(o->disguise, o->secret);
    const auto got = extract(read_checkpoint(o->input), mode);
    write_file(o->output, got.payload);
    ojson j;
    j["output"] = o->output;
    j["payload_bytes"] = got.payload.size();
    j["chunks"] = got.manifest.chunks.size();
    j["label"] = got.manifest.label;
    emit(out, j, g.json);
    return 0;
  };
}

Handler add_scan(CLI::App& app, const Globals&) {
  struct Opts {
    std::string input, manifest;
    ScanThresholds t;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("scan", "Audit a checkpoint for hidden payloads (exit 0 clean, 1 suspicious, 2 flagged)");
  sub->add_option("-i,--input", o->input, "Checkpoint to audit")->required();
  sub->add_option("--manifest", o->manifest, "Expected architecture (JSON)");
  sub->add_option("--entropy-threshold", o->t.entropy_bits, "Byte entropy warning level")->check(CLI::Range(0.0, 8.0))->capture_default_str();
  sub->add_option("--ratio-threshold", o->t.incompressible_ratio, "DEFLATE ratio warning level")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--min-entry-bytes", o->t.min_entry_bytes, "Smallest entry given statistical tests")->capture_default_str();
  sub->add_option("--size-tolerance", o->t.size_tolerance, "Allowed growth over the expected size")->check(CLI::NonNegativeNumber)->capture_default_str();
  return [o](std::ostream& out) {
    const Checkpoint c = read_checkpoint(o->input);
    std::optional<ArchitectureManifest> m;
    if (!o->manifest.empty()) m = architecture_from_json(load_json(o->manifest));
    const auto report = scan(c, m ? &*m : nullptr, o->t);
    out << to_json(report).dump(2) << '\n';
    return verdict_exit_code(report.verdict);
  };
}

Handler add_plan(CLI::App& app, const Globals& g) {
  struct Opts {
    bool table4 = false, scenario = false;
    std::string costs, budget;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("plan", "Export-size budget planning");
  auto* t4 = sub->add_flag("--table4", o->table4, "Reproduce the disk-size table for 100 stolen images");
  auto* sc = sub->add_flag("--scenario", o->scenario, "Federated variant with a pre-shared decoder");
  auto* costs = sub->add_option("--costs", o->costs, "Strategy list: JSON file, or 'lits' / 'brats'");
  auto* budget = sub->add_option("--budget", o->budget, "Size budget, e.g. 3000MB");
  costs->needs(budget);
  budget->needs(costs);
  t4->excludes(sc)->excludes(costs)->excludes(budget);
  sc->excludes(costs)->excludes(budget);
  return [o, &g](std::ostream& out) {
    if (o->table4) {
      emit(out, cost_table_json(), g.json);
      return 0;
    }
    if (o->scenario) {
      const auto fl = federated_scenario();
      emit(out, ojson{{"budget_bytes", fl.budget_bytes},
                      {"images_that_fit", fl.images_that_fit},
                      {"size_for_50_images", fl.size_for_50_images}},
           g.json);
      return 0;
    }
    if (o->costs.empty()) throw CLI::RequiredError("--table4, --scenario or --costs/--budget");
    std::vector<StrategyCosts> list;
    if (o->costs == "lits") list = lits_strategies();
    else if (o->costs == "brats") list = brats_strategies();
    else {
      const auto j = load_json(o->costs);
      if (!j.is_array() || j.empty()) throw Error(Errc::MalformedHeader, "costs file must hold a non-empty JSON array");
      for (const auto& s : j) list.push_back(strategy_from_json(s));
    }
    const auto b = parse_size(o->budget);
    ojson j;
    j["budget_bytes"] = b;
    j["best"] = to_json(best_strategy(list, b));
    j["strategies"] = ojson::array();
    for (const auto& s : list) {
      const auto cap = max_images(s, b);
      auto e = to_json(s);
      e["n_images"] = cap.n_images;
      e["feasible"] = cap.feasible;
      if (cap.feasible) e["total_bytes"] = export_size(s, cap.n_images);
      j["strategies"].push_back(e);
    }
    emit(out, j, g.json);
    return 0;
  };
}

Handler add_simulate(CLI::App& app, const Globals&) {
  struct Opts {
    std::string config, output;
    std::optional<std::uint64_t> seed;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("simulate", "Federated-learning exfiltration simulation (JSON report)");
  sub->add_option("sim_config", o->config, "Simulation config (JSON)")->required();
  sub->add_option("--seed", o->seed, "Override the config seed");
  sub->add_option("-o,--output", o->output, "Write the report here instead of standard output");
  return [o](std::ostream& out) {
    auto cfg = sim_config_from_json(load_json(o->config));
    if (o->seed) cfg.seed = *o->seed;
    ojson j;
    j["config"] = to_json(cfg);
    j["report"] = to_json(run_simulation(cfg));
    if (o->output.empty()) out << j.dump(2) << '\n';
    else save_json(j, o->output);
    return 0;
  };
}

Handler add_metrics(CLI::App& app, const Globals& g) {
  struct Opts {
    std::string reference, test, pred, truth;
    std::optional<double> peak;
    std::vector<double> spacing = {1.0, 1.0, 1.0};
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("metrics", "Image-quality and segmentation metrics");
  auto* ref = sub->add_option("--reference", o->reference, "Reference volume");
  auto* test = sub->add_option("--test", o->test, "Reconstructed volume");
  sub->add_option("--peak", o->peak, "PSNR peak and MS-SSIM range (default: reference max - min)")->check(CLI::PositiveNumber);
  auto* pred = sub->add_option("--pred", o->pred, "Predicted mask volume");
  auto* truth = sub->add_option("--truth", o->truth, "Ground-truth mask volume");
  sub->add_option("--spacing", o->spacing, "Voxel spacing z,y,x in mm")->delimiter(',')->expected(3)->capture_default_str();
  ref->needs(test);
  test->needs(ref);
  pred->needs(truth);
  truth->needs(pred);
  return [o, &g](std::ostream& out) {
    if (o->reference.empty() && o->pred.empty())
      throw CLI::RequiredError("--reference/--test or --pred/--truth");
    MetricReport r;
    if (!o->reference.empty()) {
      const Volume a = load_any_volume(o->reference);
      const Volume b = load_any_volume(o->test);
      if (a.dims() != b.dims()) throw Error(Errc::DimensionMismatch, "reference and test dimensions differ");
      const auto [mn, mx] = std::minmax_element(a.voxels.begin(), a.voxels.end());
      const double peak = o->peak.value_or(double(*mx) - *mn);
      if (!(peak > 0)) throw Error(Errc::InvalidArgument, "reference is constant; pass --peak");
      r.psnr = psnr(a, b, peak);
      if (a.height >= 176 && a.width >= 176) {
        SsimParams p;
        p.data_range = peak;
        r.ms_ssim = ms_ssim(a, b, p);
      }
    }
    if (!o->pred.empty()) {
      const Spacing sp{o->spacing[0], o->spacing[1], o->spacing[2]};
      const auto p = mask_from_volume(load_any_volume(o->pred), sp);
      const auto t = mask_from_volume(load_any_volume(o->truth), sp);
      const auto ov = overlap_metrics(p, t);
      r.dice = ov.dice;
      r.voe = ov.voe;
      r.rvd = ov.rvd;
      if (p.count() > 0 && t.count() > 0) {
        const auto s = surface_metrics(p, t);
        r.assd = s.assd;
        r.msd = s.msd;
        r.rmsd = s.rmsd;
      }
    }
    emit(out, to_json(r), g.json);
    return 0;
  };
}

Handler add_mkmodel(CLI::App& app, const Globals& g) {
  struct Opts {
    std::string output, manifest, bytes = "4MB";
    std::uint64_t seed = 0;
    double stddev = 0.05;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("mkmodel", "Write a synthetic Gaussian-weight checkpoint and its architecture manifest");
  sub->add_option("-o,--output", o->output, "Output checkpoint (.npz selects NPZ)")->required();
  sub->add_option("--manifest", o->manifest, "Output architecture manifest (JSON)");
  sub->add_option("--bytes", o->bytes, "Total weight bytes")->capture_default_str();
  sub->add_option("--seed", o->seed, "Weight seed")->capture_default_str();
  sub->add_option("--stddev", o->stddev, "Weight standard deviation")->check(CLI::PositiveNumber)->capture_default_str();
  return [o, &g](std::ostream& out) {
    Checkpoint c = synthetic_model(parse_size(o->bytes), o->seed, o->stddev);
    c.set_format(format_for(o->output));
    ojson j;
    j["output"] = o->output;
    j["entries"] = c.size();
    j["bytes"] = write_checkpoint(c, o->output);
    if (!o->manifest.empty()) {
      save_json(to_json(manifest_from_checkpoint(c)), o->manifest);
      j["manifest"] = o->manifest;
    }
    emit(out, j, g.json);
    return 0;
  };
}

int exit_code_for(Errc code) { return code == Errc::Io ? kExitIo : kExitData; }

}  // namespace

std::uint64_t parse_size(std::string_view text) {
  static const std::pair<std::string_view, std::uint64_t> kUnits[] = {
      {"KiB", 1ull << 10}, {"MiB", 1ull << 20}, {"GiB", 1ull << 30}, {"KB", 1'000},
      {"MB", 1'000'000},   {"GB", 1'000'000'000}, {"B", 1}};
  std::uint64_t unit = 1;
  for (const auto& [suffix, factor] : kUnits) {
    if (text.size() > suffix.size() && text.ends_with(suffix)) {
      text.remove_suffix(suffix.size());
      unit = factor;
      break;
    }
  }
  const auto bad = [&] { return Error(Errc::InvalidArgument, "invalid size '" + std::string(text) + "'"); };
  const auto dot = text.find('.');
  const std::string_view whole = text.substr(0, dot);
  const std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (whole.empty() || frac.size() > 9 || (dot != std::string_view::npos && frac.empty())) throw bad();
  std::uint64_t w = 0, f = 0;
  const auto parse = [&](std::string_view s, std::uint64_t& v) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc::result_out_of_range) throw Error(Errc::Overflow, "size too large");
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw bad();
  };
  parse(whole, w);
  if (!frac.empty()) parse(frac, f);
  std::uint64_t scale = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
  if (w > UINT64_MAX / unit) throw Error(Errc::Overflow, "size too large");
  if ((f * unit) % scale != 0) throw Error(Errc::InvalidArgument, "size is not a whole number of bytes");
  return w * unit + f * unit / scale;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Data-stealing attack toolkit: hide compressed image codes in checkpoints, and audit them",
               "ckptleak"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file (command-line flags take precedence)");
  app.allow_config_extras(CLI::config_extras_mode::error);

  Globals g;
  app.add_flag("--json", g.json, "Machine-readable JSON on standard output");
  app.add_option("--threads", g.threads, "Worker thread cap")->check(CLI::Range(1u, 1024u));

  std::vector<std::pair<CLI::App*, Handler>> handlers;
  for (auto add : {add_phantom, add_encode, add_decode, add_zipvol, add_embed, add_extract, add_scan,
                   add_plan, add_simulate, add_metrics, add_mkmodel}) {
    auto h = add(app, g);
    handlers.emplace_back(app.get_subcommands({}).back(), std::move(h));
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    for (auto& [sub, handler] : handlers)
      if (sub->parsed()) return handler(out);
  } catch (const CLI::ParseError& e) {
    err << "ckptleak: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "ckptleak: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "ckptleak: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace ckptleak::cli
