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

#include <cmath>

#include "ckptleak/metrics.hpp"
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

MaskVolume single_voxel(Dims d, std::uint32_t z, std::uint32_t y, std::uint32_t x, Spacing s) {
  MaskVolume m{d, std::vector<std::uint8_t>(d.count()), s};
  m.voxels[m.index(z, y, x)] = 1;
  return m;
}

Dims random_dims(Rng& rng) {
  return {static_cast<std::uint32_t>(1 + rng.below(16)), static_cast<std::uint32_t>(1 + rng.below(16)),
          static_cast<std::uint32_t>(1 + rng.below(16))};
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("psnr closed forms") {
  std::vector<float> a(100, 0.5f), b = a;
  CHECK(std::isinf(psnr(a, b, 1.0)));
  for (std::size_t i = 0; i < b.size(); ++i) b[i] += (i % 2 ? 0.01f : -0.01f);
  CHECK(psnr(a, b, 1.0) == doctest::Approx(40.0).epsilon(1e-5));
  CHECK(error_of([] { psnr(Volume::zeros({1, 2, 2}), Volume::zeros({1, 2, 3}), 1.0); }) == Errc::DimensionMismatch);
}

TEST_CASE("psnr matches the naive oracle on random volumes") {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const Dims d = random_dims(rng);
    std::vector<float> a(d.count()), b(d.count());
    for (auto& x : a) x = static_cast<float>(rng.uniform(-5, 5));
    for (auto& x : b) x = static_cast<float>(rng.uniform(-5, 5));
    CHECK(std::abs(psnr(a, b, 10.0) - t::oracle::psnr(a, b, 10.0)) <= 1e-9);
  }
}

TEST_CASE("psnr strictly decreases along a noise ladder") {
  Rng rng(2);
  std::vector<float> base(4096), noise(4096);
  for (auto& x : base) x = static_cast<float>(rng.uniform());
  for (auto& x : noise) x = static_cast<float>(rng.normal());
  double prev = kInf;
  for (double amp : {0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1}) {
    std::vector<float> b(base.size());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = static_cast<float>(base[i] + amp * noise[i]);
    const double p = psnr(base, b, 1.0);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("ms_ssim identity, symmetry, range and size limit") {
  Rng rng(3);
  const std::uint32_t h = 176, w = 190;
  const auto a = t::smooth_image(rng, h, w);
  auto b = a;
  for (auto& x : b) x = std::clamp(x + static_cast<float>(rng.normal(0, 0.05)), 0.0f, 1.0f);
  CHECK(ms_ssim(a, a, h, w) == 1.0);
  const double ab = ms_ssim(a, b, h, w), ba = ms_ssim(b, a, h, w);
  CHECK(ab == ba);
  CHECK(ab > 0.0);
  CHECK(ab < 1.0);
  std::vector<float> small(175 * 175);
  CHECK(error_of([&] { ms_ssim(small, small, 175, 175); }) == Errc::UnsupportedSize);
}

TEST_CASE("ms_ssim of constant 0 against constant 1") {
  const std::vector<float> zero(176 * 176, 0.0f), one(176 * 176, 1.0f);
  const double v = ms_ssim(zero, one, 176, 176);
  // Contrast terms are 1 for flat images; only the luminance term at the
  // coarsest scale remains: (C1 / (1 + C1))^0.1333.
  const double c1 = 0.01 * 0.01;
  CHECK(v == doctest::Approx(std::pow(c1 / (1 + c1), 0.1333)).epsilon(1e-12));
  CHECK(v < 0.3);
}

TEST_CASE("ms_ssim matches the direct-window oracle") {
  Rng rng(4);
  for (int i = 0; i < 3; ++i) {
    const std::uint32_t h = 176 + static_cast<std::uint32_t>(rng.below(8)), w = 176 + static_cast<std::uint32_t>(rng.below(8));
    std::vector<float> a(std::size_t{h} * w), b(a.size());
    for (auto& x : a) x = static_cast<float>(rng.uniform());
    for (std::size_t k = 0; k < a.size(); ++k) b[k] = std::clamp(a[k] + static_cast<float>(rng.normal(0, 0.2)), 0.0f, 1.0f);
    const std::vector<double> da(a.begin(), a.end()), db(b.begin(), b.end());
    CHECK(std::abs(ms_ssim(a, b, h, w) - t::oracle::ms_ssim(da, db, h, w)) <= 1e-6);
  }
}

TEST_CASE("volume ms_ssim is the slice mean") {
  Rng rng(5);
  Volume a = Volume::zeros({2, 176, 176}), b = a;
  for (std::uint32_t z = 0; z < 2; ++z) {
    const auto s = t::smooth_image(rng, 176, 176);
    std::copy(s.begin(), s.end(), a.slice(z).begin());
    for (std::size_t k = 0; k < s.size(); ++k) b.slice(z)[k] = std::clamp(s[k] + static_cast<float>(rng.normal(0, 0.1)), 0.0f, 1.0f);
  }
  const double expect = (ms_ssim(a.slice(0), b.slice(0), 176, 176) + ms_ssim(a.slice(1), b.slice(1), 176, 176)) / 2;
  CHECK(ms_ssim(a, b) == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("overlap metrics on the hand-counted 2x2x2 fixture") {
  MaskVolume p{{2, 2, 2}, {1, 1, 1, 0, 0, 0, 0, 0}, {}};
  MaskVolume g{{2, 2, 2}, {1, 1, 0, 1, 1, 0, 0, 0}, {}};
  const auto m = overlap_metrics(p, g);  // |P|=3, |G|=4, |P and G|=2, |P or G|=5
  CHECK(m.dice == doctest::Approx(4.0 / 7.0).epsilon(1e-15));
  CHECK(m.voe == doctest::Approx(1.0 - 2.0 / 5.0).epsilon(1e-15));
  CHECK(m.rvd == doctest::Approx(-0.25).epsilon(1e-15));
}

TEST_CASE("overlap degenerate cases") {
  MaskVolume empty{{1, 2, 2}, {0, 0, 0, 0}, {}};
  MaskVolume full{{1, 2, 2}, {1, 1, 1, 1}, {}};
  MaskVolume other{{1, 2, 2}, {0, 0, 1, 1}, {}};
  MaskVolume first{{1, 2, 2}, {1, 1, 0, 0}, {}};
  const auto both_empty = overlap_metrics(empty, empty);
  CHECK(both_empty.dice == 1.0);
  CHECK(both_empty.voe == 0.0);
  CHECK(both_empty.rvd == 0.0);
  CHECK(std::isinf(overlap_metrics(full, empty).rvd));
  CHECK(overlap_metrics(empty, full).rvd == -1.0);
  const auto same = overlap_metrics(full, full);
  CHECK(same.dice == 1.0);
  CHECK(same.voe == 0.0);
  CHECK(same.rvd == 0.0);
  const auto disjoint = overlap_metrics(first, other);
  CHECK(disjoint.dice == 0.0);
  CHECK(disjoint.voe == 1.0);
}

TEST_CASE("dice and voe satisfy the Jaccard identity") {
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    const Dims d = random_dims(rng);
    const auto p = t::random_mask(rng, d, rng.uniform());
    const auto g = t::random_mask(rng, d, rng.uniform());
    const auto m = overlap_metrics(p, g);
    CHECK(std::abs(m.voe - 2 * (1 - m.dice) / (2 - m.dice)) <= 1e-12);
    const auto o = t::oracle::overlap(p, g);
    CHECK(std::abs(m.dice - o.dice) <= 1e-9);
    CHECK(std::abs(m.voe - o.voe) <= 1e-9);
    if (std::isfinite(o.rvd)) CHECK(std::abs(m.rvd - o.rvd) <= 1e-9);
  }
}

TEST_CASE("surface metrics: single voxels 3 apart along z at 2 mm spacing") {
  const Spacing s{2, 1, 1};
  const auto p = single_voxel({8, 4, 4}, 1, 2, 2, s);
  const auto g = single_voxel({8, 4, 4}, 4, 2, 2, s);
  const auto m = surface_metrics(p, g);
  CHECK(m.assd == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(m.msd == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(m.rmsd == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("surface metrics identity and empty masks") {
  Rng rng(7);
  const auto p = t::random_mask(rng, {6, 7, 8}, 0.4, {1.5, 0.7, 0.9});
  const auto m = surface_metrics(p, p);
  CHECK(m.assd == 0.0);
  CHECK(m.msd == 0.0);
  CHECK(m.rmsd == 0.0);
  MaskVolume empty{{6, 7, 8}, std::vector<std::uint8_t>(6 * 7 * 8), {1.5, 0.7, 0.9}};
  CHECK(error_of([&] { surface_metrics(p, empty); }) == Errc::NoSurface);
}

TEST_CASE("surface voxels use six-connectivity with a background border") {
  MaskVolume cube{{3, 3, 3}, std::vector<std::uint8_t>(27, 1), {}};
  CHECK(surface_voxels(cube).size() == 26);  // only the center is interior
  MaskVolume big{{5, 5, 5}, std::vector<std::uint8_t>(125, 0), {}};
  for (std::uint32_t z = 1; z < 4; ++z)
    for (std::uint32_t y = 1; y < 4; ++y)
      for (std::uint32_t x = 1; x < 4; ++x) big.voxels[big.index(z, y, x)] = 1;
  CHECK(surface_voxels(big).size() == 26);
}

TEST_CASE("surface metrics match the all-pairs oracle") {
  Rng rng(8);
  for (int i = 0; i < 60; ++i) {
    const Dims d = random_dims(rng);
    const Spacing s{rng.uniform(0.5, 3), rng.uniform(0.5, 3), rng.uniform(0.5, 3)};
    auto p = t::random_mask(rng, d, rng.uniform(0.05, 0.6), s);
    auto g = t::random_mask(rng, d, rng.uniform(0.05, 0.6), s);
    if (p.count() == 0) p.voxels[0] = 1;
    if (g.count() == 0) g.voxels[d.count() - 1] = 1;
    const auto m = surface_metrics(p, g);
    const auto o = t::oracle::surface(p, g);
    CHECK(std::abs(m.assd - o.assd) <= 1e-9);
    CHECK(std::abs(m.msd - o.msd) <= 1e-9);
    CHECK(std::abs(m.rmsd - o.rmsd) <= 1e-9);
  }
}

TEST_CASE("metric report json") {
  MetricReport r;
  r.psnr = kInf;
  r.ms_ssim = 0.5;
  r.dice = 1.0;
  const auto j = to_json(r);
  CHECK(j["psnr"] == "inf");
  CHECK(j["ms_ssim"] == 0.5);
  CHECK(j["assd"].is_null());
  CHECK(j.size() == 8);
}

}  // TEST_SUITE
