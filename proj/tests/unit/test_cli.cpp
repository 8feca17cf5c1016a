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

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "ckptleak/checkpoint.hpp"
#include "cli.hpp"
#include "test_support.hpp"

using namespace ckptleak;
namespace t = ckptleak::testing;

namespace {

struct Run {
  int rc = 0;
  std::string out, err;
  nlohmann::json json() const { return nlohmann::json::parse(out); }
};

Run cli_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.rc = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string p(const t::TempDir& d, const char* name) { return (d / name).string(); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("parse_size units") {
  CHECK(cli::parse_size("0") == 0);
  CHECK(cli::parse_size("1234") == 1234);
  CHECK(cli::parse_size("12B") == 12);
  CHECK(cli::parse_size("3000MB") == 3'000'000'000ull);
  CHECK(cli::parse_size("2.27MB") == 2'270'000);
  CHECK(cli::parse_size("1MiB") == 1'048'576);
  CHECK(cli::parse_size("1.5KiB") == 1536);
  CHECK(cli::parse_size("4GiB") == 4ull << 30);
  for (const char* bad : {"", "MB", "1.MB", "x", "1.2.3", "-5", "1.0000000001GB", "0.3B"})
    CHECK_THROWS_AS(cli::parse_size(bad), Error);
  CHECK_THROWS_AS(cli::parse_size("99999999999999999999"), Error);
  CHECK_THROWS_AS(cli::parse_size("20000000000GB"), Error);
}

TEST_CASE("help for every subcommand") {
  CHECK(cli_run({"--help"}).rc == 0);
  for (const char* sub : {"phantom", "encode", "decode", "zipvol", "embed", "extract", "scan", "plan",
                          "simulate", "metrics", "mkmodel"}) {
    const auto r = cli_run({sub, "--help"});
    CAPTURE(std::string(sub));
    CHECK(r.rc == 0);
    CHECK(r.out.find(sub) != std::string::npos);
  }
}

TEST_CASE("usage errors exit 64") {
  CHECK(cli_run({}).rc == cli::kExitUsage);
  CHECK(cli_run({"bogus"}).rc == cli::kExitUsage);
  CHECK(cli_run({"encode", "-i", "x"}).rc == cli::kExitUsage);
  CHECK(cli_run({"encode", "-i", "x", "-o", "y", "-q", "0"}).rc == cli::kExitUsage);
  CHECK(cli_run({"encode", "-i", "x", "-o", "y", "--mode", "mid"}).rc == cli::kExitUsage);
  CHECK(cli_run({"plan", "--table4", "--scenario"}).rc == cli::kExitUsage);
  CHECK(cli_run({"plan", "--costs", "lits"}).rc == cli::kExitUsage);
  CHECK(cli_run({"plan"}).rc == cli::kExitUsage);
  CHECK(cli_run({"metrics"}).rc == cli::kExitUsage);
}

TEST_CASE("missing files exit 74, malformed data exits 65") {
  t::TempDir dir;
  const auto r = cli_run({"decode", "-i", p(dir, "missing.vc"), "-o", p(dir, "out.rvol")});
  CHECK(r.rc == cli::kExitIo);
  CHECK(r.err.find("io: ") != std::string::npos);
  write_text(p(dir, "junk.vc"), "not a volume code at all");
  const auto bad = cli_run({"decode", "-i", p(dir, "junk.vc"), "-o", p(dir, "out.rvol")});
  CHECK(bad.rc == cli::kExitData);
  CHECK(bad.err.find("bad magic") != std::string::npos);
  CHECK(cli_run({"plan", "--costs", "lits", "--budget", "lots"}).rc == cli::kExitData);
}

TEST_CASE("plan reproduces the table and the federated variant") {
  const auto r = cli_run({"--json", "plan", "--table4"});
  REQUIRE(r.rc == 0);
  const auto j = r.json();
  CHECK(j["rows"][0]["D+UB+100*High"] == 2800);
  CHECK(j["rows"][1]["PU+100*ZIP"] == 260);
  // --json after the subcommand works too.
  CHECK(cli_run({"plan", "--table4", "--json"}).json() == j);
  const auto s = cli_run({"plan", "--scenario", "--json"}).json();
  CHECK(s["images_that_fit"] == 42);
  const auto best = cli_run({"plan", "--costs", "lits", "--budget", "3000MB", "--json"}).json();
  CHECK(best["best"]["strategy"] == "lossy-low");
  CHECK(best["best"]["n_images"] == 1056);
  const auto text = cli_run({"plan", "--scenario"});
  CHECK(text.rc == 0);
  CHECK(text.out.find("images_that_fit") != std::string::npos);
}

TEST_CASE("phantom output is deterministic") {
  t::TempDir dir;
  const std::vector<std::string> a = {"phantom", "--seed", "9", "--dims", "8,32,32", "-o", p(dir, "a.rvol"), "--mask", p(dir, "a_mask.rvol")};
  const std::vector<std::string> b = {"phantom", "--seed", "9", "--dims", "8,32,32", "-o", p(dir, "b.rvol")};
  REQUIRE(cli_run(a).rc == 0);
  REQUIRE(cli_run(b).rc == 0);
  CHECK(read_file(p(dir, "a.rvol")) == read_file(p(dir, "b.rvol")));
  REQUIRE(cli_run({"phantom", "--seed", "10", "--dims", "8,32,32", "-o", p(dir, "c.rvol")}).rc == 0);
  CHECK(read_file(p(dir, "a.rvol")) != read_file(p(dir, "c.rvol")));
  CHECK(cli_run({"phantom", "--dims", "4,32,32", "-o", p(dir, "d.rvol")}).rc == cli::kExitData);
}

TEST_CASE("end-to-end pipeline through the command line") {
  t::TempDir dir;
  REQUIRE(cli_run({"phantom", "--seed", "3", "--dims", "8,256,256", "-o", p(dir, "v.rvol"), "--mask", p(dir, "m.rvol")}).rc == 0);
  const auto enc = cli_run({"--json", "encode", "-i", p(dir, "v.rvol"), "-o", p(dir, "v.vc"), "--mode", "low", "-q", "80"});
  REQUIRE(enc.rc == 0);
  CHECK(enc.json()["slice_codes"] == 8);
  CHECK(enc.json()["bytes"] == std::filesystem::file_size(dir / "v.vc"));
  REQUIRE(cli_run({"decode", "-i", p(dir, "v.vc"), "-o", p(dir, "r.rvol")}).rc == 0);
  const auto zip = cli_run({"--json", "zipvol", "-i", p(dir, "v.rvol"), "-o", p(dir, "v.zip"), "--code", p(dir, "v.vc")});
  REQUIRE(zip.rc == 0);
  const double zb = static_cast<double>(std::filesystem::file_size(dir / "v.zip"));
  const double cb = static_cast<double>(std::filesystem::file_size(dir / "v.vc"));
  CHECK(zip.json()["practical_ratio"].get<double>() == doctest::Approx(cb / zb).epsilon(1e-12));
  REQUIRE(cli_run({"zipvol", "--unzip", "-i", p(dir, "v.zip"), "-o", p(dir, "u.rvol")}).rc == 0);
  CHECK(read_file(p(dir, "u.rvol")) == read_file(p(dir, "v.rvol")));

  const auto met = cli_run({"--json", "metrics", "--reference", p(dir, "v.rvol"), "--test", p(dir, "r.rvol"),
                            "--pred", p(dir, "m.rvol"), "--truth", p(dir, "m.rvol")});
  REQUIRE(met.rc == 0);
  CHECK(met.json()["psnr"].get<double>() > 20.0);
  CHECK(met.json()["dice"] == 1.0);
  CHECK(met.json()["assd"] == 0.0);

  REQUIRE(cli_run({"mkmodel", "-o", p(dir, "model.wdc"), "--manifest", p(dir, "arch.json"), "--bytes", "300KB", "--seed", "1"}).rc == 0);
  CHECK(cli_run({"scan", "-i", p(dir, "model.wdc"), "--manifest", p(dir, "arch.json")}).rc == 0);

  for (const char* fmt : {"wdc", "npz"}) {
    CAPTURE(std::string(fmt));
    const std::string out = p(dir, "carrier.out");
    REQUIRE(cli_run({"embed", "--carrier", p(dir, "model.wdc"), "--payload", p(dir, "v.vc"), "-o", out,
                     "--chunk-size", "4KiB", "--format", fmt, "--label", "case"}).rc == 0);
    const auto scan = cli_run({"scan", "-i", out, "--manifest", p(dir, "arch.json")});
    CHECK(scan.rc == 2);
    CHECK(scan.json()["verdict"] == "Flagged");
    const auto ex = cli_run({"--json", "extract", "-i", out, "-o", p(dir, "back.vc")});
    REQUIRE(ex.rc == 0);
    CHECK(ex.json()["label"] == "case");
    CHECK(read_file(p(dir, "back.vc")) == read_file(p(dir, "v.vc")));
  }

  REQUIRE(cli_run({"embed", "--carrier", p(dir, "model.wdc"), "--payload", p(dir, "v.zip"), "-o", p(dir, "mimic.wdc"),
                   "--disguise", "mimic", "--secret", "s", "--chunk-size", "16KiB"}).rc == 0);
  CHECK(cli_run({"scan", "-i", p(dir, "mimic.wdc")}).rc == 1);
  CHECK(cli_run({"extract", "-i", p(dir, "mimic.wdc"), "-o", p(dir, "x"), "--disguise", "mimic", "--secret", "t"}).rc == cli::kExitData);
  CHECK(cli_run({"embed", "--carrier", p(dir, "model.wdc"), "--payload", p(dir, "v.zip"), "-o", p(dir, "y"),
                 "--disguise", "mimic"}).rc != 0);
  CHECK(cli_run({"embed", "--carrier", p(dir, "model.wdc"), "--payload", p(dir, "v.zip"), "-o", p(dir, "y"),
                 "--chunk-size", "63"}).rc == cli::kExitUsage);
}

TEST_CASE("simulate writes a report and honors the seed override") {
  t::TempDir dir;
  write_text(p(dir, "sim.json"), R"({"seed": 1, "n_nodes": 2, "rounds": 4, "per_round_budget_bytes": 1000,
    "sampling": {"images_per_node": 3, "mean_bytes": 900, "sigma": 0.2}})");
  const auto a = cli_run({"simulate", p(dir, "sim.json")});
  REQUIRE(a.rc == 0);
  CHECK(a.json()["config"]["seed"] == 1);
  const auto b = cli_run({"simulate", p(dir, "sim.json"), "--seed", "2", "-o", p(dir, "rep.json")});
  REQUIRE(b.rc == 0);
  std::ifstream f(p(dir, "rep.json"));
  const auto rep = nlohmann::json::parse(f);
  CHECK(rep["config"]["seed"] == 2);
  CHECK(rep["report"]["events"].size() == 8);
  write_text(p(dir, "bad.json"), R"({"n_nodes": 0, "rounds": 1, "per_round_budget_bytes": 1, "node_codes": []})");
  CHECK(cli_run({"simulate", p(dir, "bad.json")}).rc == cli::kExitData);
}

TEST_CASE("json config file with command-line precedence") {
  t::TempDir dir;
  write_text(p(dir, "cfg.json"), R"({"json": true, "plan": {"costs": "brats", "budget": "500MB"}})");
  const auto r = cli_run({"--config", p(dir, "cfg.json"), "plan"});
  REQUIRE(r.rc == 0);
  CHECK(r.json()["best"]["strategy"] == "lossless-zip");
  const auto o = cli_run({"--config", p(dir, "cfg.json"), "plan", "--budget", "2000MB"});
  REQUIRE(o.rc == 0);
  CHECK(o.json()["best"]["strategy"] == "lossy-high");
  write_text(p(dir, "extra.json"), R"({"plan": {"colour": "red"}})");
  CHECK(cli_run({"--config", p(dir, "extra.json"), "plan", "--table4"}).rc == cli::kExitUsage);
  CHECK(cli_run({"--config", p(dir, "missing.json"), "plan", "--table4"}).rc != 0);
}

}  // TEST_SUITE
