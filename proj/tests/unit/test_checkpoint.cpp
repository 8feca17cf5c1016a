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

#include <cstring>

#include "ckptleak/checkpoint.hpp"
#include "ckptleak/zip.hpp"
#include "test_support.hpp"

using namespace ckptleak;
namespace t = ckptleak::testing;

namespace {

Errc error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return Errc::InvalidArgument;
}

Bytes header_only(std::uint32_t version, std::uint64_t count) {
  ByteWriter w;
  w.raw(std::string_view("WDC1"));
  w.u32(version);
  w.u64(count);
  return w.take();
}

std::string npy_header(std::string_view dict) {
  std::string h(dict);
  const std::size_t total = 10 + h.size() + 1;
  h.append((64 - total % 64) % 64, ' ');
  h += '\n';
  std::string out = "\x93NUMPY";
  out += '\x01';
  out += '\x00';
  out += static_cast<char>(h.size() & 0xFF);
  out += static_cast<char>(h.size() >> 8);
  return out + h;
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("empty checkpoint serializes to the 16-byte header") {
  const Checkpoint c;
  const Bytes b = serialize_wdc(c);
  CHECK(b.size() == 16);
  CHECK(b == header_only(1, 0));
  CHECK(total_size(c) == 16);
}

TEST_CASE("one f32 scalar with a 3-byte key is 37 bytes") {
  Checkpoint c;
  const float v = 1.5f;
  c.add(make_f32_entry("abc", {}, std::span(&v, 1)));
  CHECK(serialize_wdc(c).size() == 37);
  CHECK(total_size(c) == 37);
}

TEST_CASE("golden fixture parses to its documented entries") {
  const Bytes golden = read_file(t::fixture_dir() / "golden.wdc");
  REQUIRE(golden.size() == 76);
  const Checkpoint c = parse_wdc(golden);
  REQUIRE(c.size() == 2);
  const auto& bias = c.entries()[0];
  CHECK(bias.key == "bias");
  CHECK(bias.dtype == DType::F32);
  CHECK(bias.shape == std::vector<std::uint64_t>{2});
  float vals[2];
  std::memcpy(vals, bias.payload.data(), 8);
  CHECK(vals[0] == 1.0f);
  CHECK(vals[1] == -2.0f);
  const auto& step = c.entries()[1];
  CHECK(step.key == "step");
  CHECK(step.dtype == DType::I64);
  CHECK(step.shape.empty());
  std::int64_t s;
  std::memcpy(&s, step.payload.data(), 8);
  CHECK(s == 7);
  CHECK(serialize_wdc(c) == golden);
}

TEST_CASE("wdc parser error kinds") {
  const Bytes golden = read_file(t::fixture_dir() / "golden.wdc");
  SUBCASE("bad magic") {
    Bytes b = golden;
    b[3] = 'X';
    CHECK(error_of([&] { parse_wdc(b); }) == Errc::BadMagic);
  }
  SUBCASE("unsupported version") { CHECK(error_of([&] { parse_wdc(header_only(2, 0)); }) == Errc::UnsupportedVersion); }
  SUBCASE("trailing data") {
    Bytes b = golden;
    b.push_back(0);
    CHECK(error_of([&] { parse_wdc(b); }) == Errc::TrailingData);
  }
  SUBCASE("truncation at every cut point") {
    for (std::size_t n = 0; n < golden.size(); ++n) {
      const auto code = error_of([&] { parse_wdc(ByteSpan(golden).first(n)); });
      CHECK((code == Errc::Truncated || code == Errc::BadMagic));
    }
  }
  SUBCASE("duplicate key") {
    Bytes b = golden;
    std::memcpy(b.data() + 54, "bias", 4);
    CHECK(error_of([&] { parse_wdc(b); }) == Errc::DuplicateKey);
  }
  SUBCASE("unknown dtype") {
    Bytes b = golden;
    b[24] = 9;
    CHECK(error_of([&] { parse_wdc(b); }) == Errc::InvalidDType);
  }
  SUBCASE("payload length disagrees with shape") {
    Bytes b = golden;
    b[26] = 3;  // dim 0 = 3 -> 12 bytes expected, 8 declared
    CHECK(error_of([&] { parse_wdc(b); }) == Errc::ShapeMismatch);
  }
  SUBCASE("oversized payload length") {
    Bytes b = golden;
    b[34 + 6] = 0x01;  // 2^48 + 8
    const auto code = error_of([&] { parse_wdc(b); });
    CHECK((code == Errc::LengthOverflow || code == Errc::ShapeMismatch));
  }
  SUBCASE("oversized entry count does not allocate") {
    CHECK(error_of([&] { parse_wdc(header_only(1, ~0ull)); }) == Errc::Truncated);
  }
  SUBCASE("empty and invalid keys") {
    Bytes b = golden;
    b[16] = 0;
    const auto code = error_of([&] { parse_wdc(b); });
    CHECK(code == Errc::InvalidKey);
    Bytes u = golden;
    u[20] = 0xFF;  // not UTF-8
    CHECK(error_of([&] { parse_wdc(u); }) == Errc::InvalidKey);
  }
}

TEST_CASE("dictionary operations") {
  Checkpoint c;
  const float v[3] = {1, 2, 3};
  c.add(make_f32_entry("w", {3}, v));
  CHECK(c.get("w").shape == std::vector<std::uint64_t>{3});
  CHECK(get_entry(c, "w") == c.get("w"));
  CHECK(error_of([&] { c.add(make_f32_entry("w", {3}, v)); }) == Errc::DuplicateKey);
  CHECK(error_of([&] { c.get("nope"); }) == Errc::MissingKey);
  add_entry(c, make_f32_entry("b", {1}, std::span(v, 1)));
  const auto removed = remove_entry(c, "w");
  CHECK(removed.key == "w");
  CHECK_FALSE(c.contains("w"));
  CHECK(c.get("b").key == "b");
  CHECK(error_of([&] { c.remove("w"); }) == Errc::MissingKey);
}

TEST_CASE("entry validation") {
  CHECK(error_of([] { make_entry("", DType::U8, {1}, {0}); }) == Errc::InvalidKey);
  CHECK(error_of([] { make_entry(std::string(4097, 'k'), DType::U8, {1}, {0}); }) == Errc::InvalidKey);
  CHECK(error_of([] { make_entry("k", DType::F32, {2}, {0, 0, 0}); }) == Errc::ShapeMismatch);
  CHECK(error_of([] { make_entry("k", DType::U8, {1ull << 32, 1ull << 32}, {}); }) == Errc::LengthOverflow);
  CHECK_NOTHROW(make_entry(std::string(4096, 'k'), DType::U8, {0, 5}, {}));
}

TEST_CASE("random checkpoints: round trip, determinism, total_size") {
  Rng rng(2024);
  for (int i = 0; i < 50; ++i) {
    const Checkpoint c = t::random_checkpoint(rng, 12, 2000);
    const Bytes wdc = serialize_wdc(c);
    CHECK(wdc.size() == total_size(c));
    CHECK(serialize_wdc(c) == wdc);
    CHECK(parse_wdc(wdc) == c);
    CHECK(parse_npz(serialize_npz(c)) == c);
    CHECK(parse_npz(serialize_npz(c, true)) == c);
  }
}

TEST_CASE("file round trips and format dispatch") {
  t::TempDir dir;
  Rng rng(5);
  const Checkpoint c = t::random_checkpoint(rng, 6, 100);
  const auto written = write_wdc(c, dir / "a.wdc");
  CHECK(written == std::filesystem::file_size(dir / "a.wdc"));
  CHECK(read_wdc(dir / "a.wdc") == c);
  write_npz(c, dir / "a.npz");
  CHECK(read_npz(dir / "a.npz") == c);
  CHECK(read_checkpoint(dir / "a.npz").format() == ContainerFormat::NPZ);
  CHECK(read_checkpoint(dir / "a.wdc").format() == ContainerFormat::WDC);
  CHECK(error_of([&] { read_wdc(dir / "missing.wdc"); }) == Errc::Io);
}

TEST_CASE("npz member layout") {
  Checkpoint c;
  const float v[6] = {0, 1, 2, 3, 4, 5};
  c.add(make_f32_entry("w", {2, 3}, v));
  const auto members = read_zip(serialize_npz(c));
  REQUIRE(members.size() == 1);
  CHECK(members[0].name == "w.npy");
  const auto& m = members[0].data;
  const std::string text(m.begin(), m.end());
  CHECK(text.starts_with("\x93NUMPY\x01\x00"));
  const std::size_t header_len = m[8] | (m[9] << 8);
  CHECK((10 + header_len) % 64 == 0);
  CHECK(text.find("'descr': '<f4'") != std::string::npos);
  CHECK(text.find("'fortran_order': False") != std::string::npos);
  CHECK(text.find("'shape': (2, 3)") != std::string::npos);
  CHECK(m.size() == 10 + header_len + 24);
}

TEST_CASE("numpy-written archives load with the right values") {
  for (const char* name : {"numpy_stored.npz", "numpy_deflate.npz"}) {
    const std::string member_set = name;
    CAPTURE(member_set);
    const Checkpoint c = read_npz(t::fixture_dir() / name);
    REQUIRE(c.size() == 5);
    const auto& w = c.get("w");
    CHECK(w.dtype == DType::F32);
    CHECK(w.shape == std::vector<std::uint64_t>{2, 3});
    float wv[6];
    std::memcpy(wv, w.payload.data(), 24);
    for (int i = 0; i < 6; ++i) CHECK(wv[i] == static_cast<float>(i / 4.0));
    const auto& ids = c.get("ids");
    CHECK(ids.dtype == DType::I64);
    std::int64_t iv[3];
    std::memcpy(iv, ids.payload.data(), 24);
    CHECK(iv[1] == -2);
    CHECK(c.get("mask").dtype == DType::U8);
    CHECK(c.get("mask").payload == Bytes{0, 1, 1, 0});
    const auto& s = c.get("scale");
    CHECK(s.dtype == DType::F64);
    CHECK(s.shape.empty());
    double sv;
    std::memcpy(&sv, s.payload.data(), 8);
    CHECK(sv == 2.5);
    CHECK(c.get("empty").shape == std::vector<std::uint64_t>{0, 4});
    CHECK(c.get("empty").payload.empty());
  }
}

TEST_CASE("npy header rejections") {
  auto member = [](std::string_view dict, std::size_t payload) {
    const std::string h = npy_header(dict);
    Bytes b(h.begin(), h.end());
    b.resize(b.size() + payload);
    return b;
  };
  CHECK(error_of([&] { parse_npy("k", member("{'descr': '<f4', 'fortran_order': True, 'shape': (2,), }", 8)); }) ==
        Errc::UnsupportedLayout);
  CHECK(error_of([&] { parse_npy("k", member("{'descr': '>f4', 'fortran_order': False, 'shape': (2,), }", 8)); }) ==
        Errc::UnsupportedDescr);
  CHECK(error_of([&] { parse_npy("k", member("{'descr': '<f4', 'fortran_order': False, 'shape': (3,), }", 8)); }) ==
        Errc::ShapeMismatch);
  CHECK(error_of([&] { parse_npy("k", member("{'descr': '<f4', 'fortran_order': False, 'shape': (2,, }", 8)); }) ==
        Errc::MalformedHeader);
  CHECK_NOTHROW(parse_npy("k", member("{'shape': (2,), 'fortran_order': False, 'descr': '<f4'}", 8)));
  Bytes v2 = member("{'descr': '<f4', 'fortran_order': False, 'shape': (2,), }", 8);
  v2[6] = 2;
  CHECK(error_of([&] { parse_npy("k", v2); }) == Errc::UnsupportedVersion);
}

TEST_CASE("npz with a non-npy member is rejected") {
  std::vector<ZipMember> members = {{"readme.txt", Bytes{1, 2, 3}}};
  CHECK_THROWS_AS(parse_npz(write_zip(members, ZipMethod::Stored)), Error);
}

}  // TEST_SUITE
