#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dds/image.hpp"
#include "dds/synth.hpp"
#include "support/oracles.hpp"

using namespace dds;
using testing::random_tensor;

namespace {
constexpr double kPi = 3.14159265358979323846;

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return false;
  for (std::int64_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}
}  // namespace

TEST_CASE("canonicalize resizes to the target and keeps the aspect contract") {
  std::mt19937_64 rng(1);
  Tensor big = random_tensor({3, 512, 1024}, rng, 0.0, 1.0);
  EquirectImage out = canonicalize(big, {512, 256});
  CHECK(out.height() == 256);
  CHECK(out.width() == 512);
}

TEST_CASE("canonicalize at the native size is the identity") {
  std::mt19937_64 rng(2);
  Tensor x = random_tensor({3, 256, 512}, rng, 0.0, 1.0);
  EquirectImage out = canonicalize(x, {512, 256});
  CHECK(bit_equal(out.pixels, x));
}

TEST_CASE("canonicalize preserves constant rasters") {
  Tensor x = Tensor::full({3, 100, 300}, 0.5);
  EquirectImage out = canonicalize(x, {512, 256});
  for (std::int64_t i = 0; i < out.pixels.size(); ++i) CHECK(out.pixels[i] == doctest::Approx(0.5));
}

TEST_CASE("canonicalize clamps any input range into [0,1]") {
  std::mt19937_64 rng(3);
  Tensor x = random_tensor({3, 64, 100}, rng, -0.7, 1.9);
  EquirectImage out = canonicalize(x, {128, 64});
  for (std::int64_t i = 0; i < out.pixels.size(); ++i) {
    CHECK(out.pixels[i] >= 0.0);
    CHECK(out.pixels[i] <= 1.0);
  }
}

TEST_CASE("canonicalize rejects rasters without 3 channels") {
  CHECK_THROWS_AS(canonicalize(Tensor({1, 8, 16}), {16, 8}), MalformedImageError);
  CHECK_THROWS_AS(canonicalize(Tensor({4, 8, 16}), {16, 8}), MalformedImageError);
}

TEST_CASE("hflip is an involution on the image/mask pair") {
  std::mt19937_64 rng(4);
  EquirectImage img;
  img.pixels = random_tensor({3, 8, 16}, rng, 0.0, 1.0);
  BinaryMask mask = testing::random_mask(8, 16, rng);

  auto [fi, fm] = hflip(img, mask);
  auto [bi, bm] = hflip(fi, fm);
  CHECK(bit_equal(bi.pixels, img.pixels));
  CHECK(bm.values == mask.values);
}

TEST_CASE("hflip mirrors a left-half-white mask to the right half") {
  EquirectImage img;
  img.pixels = Tensor({3, 4, 8});
  BinaryMask mask(4, 8);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) mask.at(y, x) = 1;

  auto [fi, fm] = hflip(img, mask);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 8; ++x) CHECK(fm.at(y, x) == (x >= 4 ? 1 : 0));
}

TEST_CASE("hflip maps column c to column W-1-c") {
  std::mt19937_64 rng(5);
  EquirectImage img;
  img.pixels = random_tensor({3, 8, 16}, rng, 0.0, 1.0);
  BinaryMask mask = testing::random_mask(8, 16, rng);
  auto [fi, fm] = hflip(img, mask);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 16; ++x) CHECK(fi.pixels.at(c, y, x) == img.pixels.at(c, y, 15 - x));
}

TEST_CASE("hflip rejects mismatched pairs") {
  EquirectImage img;
  img.pixels = Tensor({3, 8, 16});
  CHECK_THROWS_AS(hflip(img, BinaryMask(8, 8)), PairedDataError);
}

TEST_CASE("cut_blocks produces the documented grid at 512x256, n=4") {
  Tensor x({3, 256, 512});
  BlockGrid grid = cut_blocks(x, 4);
  CHECK(grid.blocks.size() == 16);
  for (const Tensor& b : grid.blocks) {
    CHECK(b.dim(1) == 64);
    CHECK(b.dim(2) == 128);
  }
}

TEST_CASE("cut_blocks with n=1 yields the image itself") {
  std::mt19937_64 rng(6);
  Tensor x = random_tensor({3, 8, 16}, rng);
  BlockGrid grid = cut_blocks(x, 1);
  REQUIRE(grid.blocks.size() == 1);
  CHECK(bit_equal(grid.blocks[0], x));
}

TEST_CASE("cut_blocks matches manual slicing") {
  std::mt19937_64 rng(7);
  Tensor x = random_tensor({3, 8, 16}, rng);
  BlockGrid grid = cut_blocks(x, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 4; ++y)
          for (int xx = 0; xx < 8; ++xx)
            CHECK(grid.block(i, j).at(c, y, xx) == x.at(c, i * 4 + y, j * 8 + xx));
}

TEST_CASE("cut_blocks rejects non-divisible block counts") {
  CHECK_THROWS_AS(cut_blocks(Tensor({3, 8, 16}), 3), BlockGeometryError);
}

TEST_CASE("stitch inverts cut exactly") {
  std::mt19937_64 rng(8);
  Tensor x = random_tensor({3, 64, 32}, rng);
  CHECK(bit_equal(stitch_blocks(cut_blocks(x, 4)), x));

  SUBCASE("for every divisor of both dimensions") {
    for (int n : {1, 2, 4, 8, 16, 32}) CHECK(bit_equal(stitch_blocks(cut_blocks(x, n)), x));
  }
}

TEST_CASE("stitching constant blocks gives a piecewise-constant checkerboard") {
  BlockGrid grid;
  grid.n = 2;
  grid.orig_height = 4;
  grid.orig_width = 8;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) grid.blocks.push_back(Tensor::full({1, 2, 4}, i * 2 + j));
  Tensor out = stitch_blocks(grid);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 8; ++x) CHECK(out.at(0, y, x) == (y / 2) * 2 + (x / 4));
}

TEST_CASE("stitch rejects inconsistent block shapes") {
  BlockGrid grid;
  grid.n = 1;
  grid.blocks.push_back(Tensor({3, 2, 4}));
  grid.blocks.push_back(Tensor({3, 2, 5}));
  CHECK_THROWS_AS(stitch_blocks(grid), BlockGeometryError);
}

// ---------------------------------------------------------------------------
// Synthetic scenes

TEST_CASE("a pole cap rasterizes to the exact full-width latitude band") {
  const int w = 128, h = 64;
  SphericalCap cap;
  cap.lon = 0.3;  // irrelevant at the pole
  cap.lat = kPi / 2.0;
  cap.radius = 20.0 * kPi / 180.0;
  auto [img, mask] = render_caps(w, h, {cap}, 0.0, 1);

  for (int y = 0; y < h; ++y) {
    auto [lon, lat] = pixel_lonlat(0, y, w, h);
    const bool expected = (kPi / 2.0 - lat) < cap.radius;
    for (int x = 0; x < w; ++x) CHECK(mask.at(y, x) == (expected ? 1 : 0));
  }
  CHECK(mask.foreground_count() > 0);
}

TEST_CASE("synth_scene is bit-deterministic in the seed") {
  SceneSpec spec;
  spec.width = 64;
  spec.height = 32;
  auto a = synth_scene(42, spec);
  auto b = synth_scene(42, spec);
  CHECK(bit_equal(a.first.pixels, b.first.pixels));
  CHECK(a.second.values == b.second.values);

  auto c = synth_scene(43, spec);
  CHECK_FALSE(bit_equal(a.first.pixels, c.first.pixels));
}

TEST_CASE("an equator cap covers the analytic spherical-cap area fraction") {
  const int w = 512, h = 256;
  SphericalCap cap;
  cap.lon = 0.0;
  cap.lat = 0.0;
  cap.radius = 10.0 * kPi / 180.0;
  auto [img, mask] = render_caps(w, h, {cap}, 0.0, 1);

  // Solid-angle weighted quadrature of the mask.
  const double dlon = 2.0 * kPi / w, dlat = kPi / h;
  double covered = 0.0;
  for (int y = 0; y < h; ++y) {
    auto [lon, lat] = pixel_lonlat(0, y, w, h);
    for (int x = 0; x < w; ++x)
      if (mask.at(y, x)) covered += std::cos(lat) * dlon * dlat;
  }
  const double fraction = covered / (4.0 * kPi);
  const double analytic = (1.0 - std::cos(cap.radius)) / 2.0;
  CHECK(fraction == doctest::Approx(analytic).epsilon(0.05));
}

TEST_CASE("synth_scene masks are binary, and non-empty when a cap is guaranteed") {
  SceneSpec spec;
  spec.width = 64;
  spec.height = 32;
  spec.min_caps = 1;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    auto [img, mask] = synth_scene(seed, spec);
    CHECK(mask.foreground_count() > 0);
    for (std::uint8_t v : mask.values) CHECK(v <= 1);
    for (std::int64_t i = 0; i < img.pixels.size(); ++i) {
      CHECK(img.pixels[i] >= 0.0);
      CHECK(img.pixels[i] <= 1.0);
    }
  }
}

TEST_CASE("synth_scene rejects degenerate specs") {
  SceneSpec spec;
  spec.max_caps = 0;
  CHECK_THROWS_AS(synth_scene(1, spec), DegenerateSpecError);

  SceneSpec spec2;
  spec2.max_radius_deg = 0.0;
  CHECK_THROWS_AS(synth_scene(1, spec2), DegenerateSpecError);
}
