#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dds/conv.hpp"
#include "support/oracles.hpp"

using namespace dds;
using namespace dds::testing;

namespace {

ConvGeom geom(int in_ch, int out_ch, int k, int stride, int pad, int dil, int groups) {
  ConvGeom g;
  g.in_ch = in_ch;
  g.out_ch = out_ch;
  g.k = k;
  g.stride = stride;
  g.pad = pad;
  g.dilation = dil;
  g.groups = groups;
  return g;
}

}  // namespace

TEST_CASE("conv2d matches the dense-loop reference across geometries") {
  std::mt19937_64 rng(11);
  struct Case {
    int in_ch, out_ch, k, stride, pad, dil, groups, h, w;
  };
  const Case cases[] = {
      {3, 5, 3, 1, 1, 1, 1, 9, 13},  {4, 4, 3, 2, 1, 1, 2, 10, 12}, {6, 9, 3, 1, 2, 2, 3, 11, 9},
      {2, 2, 1, 1, 0, 1, 1, 7, 7},   {3, 8, 3, 1, 4, 4, 1, 12, 16}, {12, 12, 3, 1, 1, 1, 4, 8, 8},
      {3, 6, 7, 2, 3, 1, 1, 14, 18},
  };
  for (const Case& c : cases) {
    const ConvGeom g = geom(c.in_ch, c.out_ch, c.k, c.stride, c.pad, c.dil, c.groups);
    Tensor x = random_tensor({c.in_ch, c.h, c.w}, rng);
    Tensor w = random_tensor({c.out_ch, g.in_per_group(), c.k, c.k}, rng);
    Tensor b = random_tensor({c.out_ch}, rng);

    Tensor fast = conv2d_forward(x, w, &b, g);
    Tensor slow = conv2d_reference(x, w, &b, g);
    REQUIRE(fast.same_shape(slow));
    for (std::int64_t i = 0; i < fast.size(); ++i)
      CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-12));
  }
}

TEST_CASE("conv2d backward agrees with finite differences") {
  std::mt19937_64 rng(12);
  const ConvGeom g = geom(2, 4, 3, 1, 1, 1, 2);
  Tensor x = random_tensor({2, 6, 7}, rng);
  Tensor w = random_tensor({4, 1, 3, 3}, rng);
  Tensor b = random_tensor({4}, rng);
  Tensor up = random_tensor({4, 6, 7}, rng);

  auto scalar = [&] {
    Tensor y = conv2d_forward(x, w, &b, g);
    double s = 0.0;
    for (std::int64_t i = 0; i < y.size(); ++i) s += y[i] * up[i];
    return s;
  };

  Tensor dw({4, 1, 3, 3});
  Tensor db({4});
  conv2d_backward_params(x, up, g, dw, &db);
  Tensor dx = conv2d_backward_input(up, w, g, 6, 7);

  CHECK(max_grad_rel_error(scalar, x, dx) < 1e-6);
  CHECK(max_grad_rel_error(scalar, w, dw) < 1e-6);
  CHECK(max_grad_rel_error(scalar, b, db) < 1e-6);
}

TEST_CASE("resize_bilinear preserves constants and same-size identity") {
  std::mt19937_64 rng(13);
  Tensor c = Tensor::full({2, 5, 9}, 0.37);
  Tensor up = resize_bilinear(c, 11, 23);
  for (std::int64_t i = 0; i < up.size(); ++i) CHECK(up[i] == doctest::Approx(0.37).epsilon(1e-14));

  Tensor x = random_tensor({2, 5, 9}, rng);
  Tensor same = resize_bilinear(x, 5, 9);
  for (std::int64_t i = 0; i < x.size(); ++i) CHECK(same[i] == x[i]);
}

TEST_CASE("resize_bilinear_backward is the exact adjoint") {
  std::mt19937_64 rng(14);
  Tensor x = random_tensor({3, 6, 10}, rng);
  Tensor y = random_tensor({3, 9, 17}, rng);

  Tensor fx = resize_bilinear(x, 9, 17);
  Tensor bty = resize_bilinear_backward(y, 6, 10);

  double lhs = 0.0, rhs = 0.0;
  for (std::int64_t i = 0; i < fx.size(); ++i) lhs += fx[i] * y[i];
  for (std::int64_t i = 0; i < x.size(); ++i) rhs += x[i] * bty[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("maxpool forward/backward bookkeeping") {
  std::mt19937_64 rng(15);
  Tensor x = random_tensor({2, 8, 10}, rng);
  std::vector<std::int64_t> argmax;
  Tensor y = maxpool3x3s2_forward(x, argmax);
  CHECK(y.dim(1) == 4);
  CHECK(y.dim(2) == 5);
  // every output is an input value from its window
  for (std::int64_t o = 0; o < y.size(); ++o) CHECK(y[o] == x[argmax[static_cast<std::size_t>(o)]]);

  Tensor dy = random_tensor(y.shape(), rng);
  Tensor dx = maxpool3x3s2_backward(dy, argmax, 2, 8, 10);
  double sy = 0.0, sx = 0.0;
  for (std::int64_t i = 0; i < dy.size(); ++i) sy += dy[i];
  for (std::int64_t i = 0; i < dx.size(); ++i) sx += dx[i];
  CHECK(sx == doctest::Approx(sy).epsilon(1e-12));
}

TEST_CASE("channel concat and slice are inverses") {
  std::mt19937_64 rng(16);
  Tensor a = random_tensor({3, 4, 5}, rng);
  Tensor b = random_tensor({2, 4, 5}, rng);
  Tensor cat = concat_channels(a, b);
  REQUIRE(cat.dim(0) == 5);
  Tensor a2 = slice_channels(cat, 0, 3);
  Tensor b2 = slice_channels(cat, 3, 5);
  for (std::int64_t i = 0; i < a.size(); ++i) CHECK(a2[i] == a[i]);
  for (std::int64_t i = 0; i < b.size(); ++i) CHECK(b2[i] == b[i]);
}
