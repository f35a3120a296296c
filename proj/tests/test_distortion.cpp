#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dds/distortion.hpp"
#include "support/oracles.hpp"

using namespace dds;
using namespace dds::testing;

namespace {

DistortionKernels random_kernels(int n, int k, std::mt19937_64& rng) {
  DistortionKernels kernels(n, k);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (std::int64_t i = 0; i < kernels.weights.size(); ++i) kernels.weights[i] = dist(rng);
  return kernels;
}

double max_rel_diff(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), 1e-12});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("zero kernels leave the input bit-identical (residual identity)") {
  std::mt19937_64 rng(21);
  Tensor x = random_tensor({3, 16, 32}, rng, 0.0, 1.0);
  DistortionKernels kernels(4, 3);

  Tensor naive = da_forward_naive(x, kernels);
  Tensor grouped = da_forward_grouped(x, kernels);
  for (std::int64_t i = 0; i < x.size(); ++i) {
    CHECK(naive[i] == x[i]);
    CHECK(grouped[i] == x[i]);
  }
}

TEST_CASE("per-channel Dirac kernels double the input") {
  std::mt19937_64 rng(22);
  Tensor x = random_tensor({3, 8, 16}, rng, 0.0, 1.0);
  DistortionKernels kernels(2, 3);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int c = 0; c < 3; ++c) kernels.tap(i, j, c, c, 1, 1) = 1.0;

  Tensor y = da_forward_grouped(x, kernels);
  for (std::int64_t i = 0; i < x.size(); ++i) CHECK(y[i] == doctest::Approx(2.0 * x[i]).epsilon(1e-12));
}

TEST_CASE("naive form matches a dense-loop per-block convolution oracle") {
  std::mt19937_64 rng(23);
  Tensor x = random_tensor({3, 64, 32}, rng, 0.0, 1.0);
  DistortionKernels kernels = random_kernels(4, 3, rng);

  Tensor got = da_forward_naive(x, kernels);

  ConvGeom g;
  g.in_ch = 3;
  g.out_ch = 3;
  g.k = 3;
  g.pad = 1;
  BlockGrid grid = cut_blocks(x, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      Tensor w({3, 3, 3, 3});
      for (int oc = 0; oc < 3; ++oc)
        for (int ic = 0; ic < 3; ++ic)
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) w.at(oc, ic, ky, kx) = kernels.tap(i, j, oc, ic, ky, kx);
      Tensor learned = conv2d_reference(grid.block(i, j), w, nullptr, g);
      grid.block(i, j).add_scaled(learned, 1.0);
    }
  }
  Tensor expected = stitch_blocks(grid);
  for (std::int64_t i = 0; i < got.size(); ++i)
    CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-6));
}

TEST_CASE("grouped and naive forms agree over random cases") {
  std::mt19937_64 rng(24);
  for (int n : {1, 2, 4}) {
    for (int rep = 0; rep < 10; ++rep) {
      Tensor x = random_tensor({3, 64, 32}, rng, 0.0, 1.0);
      DistortionKernels kernels = random_kernels(n, 3, rng);
      CHECK(max_rel_diff(da_forward_naive(x, kernels), da_forward_grouped(x, kernels)) < 1e-5);
    }
  }
}

TEST_CASE("n=1 reduces to an ordinary 3->3 convolution plus residual") {
  std::mt19937_64 rng(25);
  Tensor x = random_tensor({3, 8, 16}, rng, 0.0, 1.0);
  DistortionKernels kernels = random_kernels(1, 3, rng);

  ConvGeom g;
  g.in_ch = 3;
  g.out_ch = 3;
  g.k = 3;
  g.pad = 1;
  Tensor expected = conv2d_reference(x, kernels.weights, nullptr, g);
  expected.add_scaled(x, 1.0);

  Tensor got = da_forward_grouped(x, kernels);
  for (std::int64_t i = 0; i < got.size(); ++i)
    CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central finite differences") {
  std::mt19937_64 rng(26);
  Tensor x = random_tensor({3, 8, 16}, rng, 0.0, 1.0);
  DistortionKernels kernels = random_kernels(2, 3, rng);
  Tensor up = random_tensor({3, 8, 16}, rng);

  auto scalar = [&] {
    Tensor y = da_forward_grouped(x, kernels);
    double s = 0.0;
    for (std::int64_t i = 0; i < y.size(); ++i) s += y[i] * up[i];
    return s;
  };

  DaGradients grads = da_gradients(x, kernels, up);
  CHECK(max_grad_rel_error(scalar, x, grads.wrt_image) < 1e-4);
  CHECK(max_grad_rel_error(scalar, kernels.weights, grads.wrt_kernels.weights) < 1e-4);
}

TEST_CASE("with zero kernels the input gradient is the upstream gradient") {
  std::mt19937_64 rng(27);
  Tensor x = random_tensor({3, 8, 16}, rng, 0.0, 1.0);
  DistortionKernels kernels(2, 3);
  Tensor up = random_tensor({3, 8, 16}, rng);

  DaGradients grads = da_gradients(x, kernels, up);
  for (std::int64_t i = 0; i < up.size(); ++i) CHECK(grads.wrt_image[i] == up[i]);
}

TEST_CASE("perturbing a block's kernels only changes that block (locality)") {
  std::mt19937_64 rng(28);
  Tensor x = random_tensor({3, 8, 16}, rng, 0.0, 1.0);
  DistortionKernels kernels = random_kernels(2, 3, rng);
  Tensor base = da_forward_grouped(x, kernels);

  DistortionKernels bumped = kernels;
  bumped.tap(0, 1, 1, 2, 0, 2) += 0.25;
  Tensor moved = da_forward_grouped(x, bumped);

  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 8; ++y)
      for (int xx = 0; xx < 16; ++xx) {
        const bool inside = (y < 4) && (xx >= 8);  // block (0, 1)
        if (inside) continue;
        CHECK(moved.at(c, y, xx) == base.at(c, y, xx));
      }
  CHECK(max_rel_diff(base, moved) > 0.0);
}

TEST_CASE("the learned correction is linear in the kernels") {
  std::mt19937_64 rng(29);
  Tensor x = random_tensor({3, 8, 8}, rng, 0.0, 1.0);
  DistortionKernels kernels = random_kernels(2, 3, rng);
  DistortionKernels scaled = kernels;
  const double alpha = 2.75;
  for (std::int64_t i = 0; i < scaled.weights.size(); ++i) scaled.weights[i] *= alpha;

  Tensor base = da_forward_grouped(x, kernels);
  Tensor big = da_forward_grouped(x, scaled);
  for (std::int64_t i = 0; i < x.size(); ++i)
    CHECK(big[i] - x[i] == doctest::Approx(alpha * (base[i] - x[i])).epsilon(1e-10));
}

TEST_CASE("geometry violations raise block-geometry errors") {
  Tensor x({3, 9, 16});
  DistortionKernels kernels(4, 3);
  CHECK_THROWS_AS(da_forward_grouped(x, kernels), BlockGeometryError);
  CHECK_THROWS_AS(da_forward_naive(x, kernels), BlockGeometryError);
}
