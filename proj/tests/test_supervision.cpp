#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dds/loss.hpp"
#include "dds/synth.hpp"
#include "dds/train.hpp"
#include "support/oracles.hpp"

using namespace dds;
using namespace dds::testing;

namespace {

Tensor logits_for(const BinaryMask& gt, double magnitude) {
  Tensor z({1, gt.height, gt.width});
  for (std::int64_t i = 0; i < z.size(); ++i)
    z[i] = gt.values[static_cast<std::size_t>(i)] ? magnitude : -magnitude;
  return z;
}

SideOutputs fake_sides(const BinaryMask& gt, double magnitude) {
  SideOutputs sides;
  sides.strides = {2, 4, 8, 8, 8};
  for (int stride : sides.strides) {
    BinaryMask g = resize_nearest(gt, gt.height / stride, gt.width / stride);
    sides.logits.push_back(logits_for(g, magnitude));
  }
  return sides;
}

}  // namespace

TEST_CASE("saturated correct logits drive the loss to zero") {
  std::mt19937_64 rng(41);
  BinaryMask gt = random_mask(8, 16, rng);
  CHECK(side_loss(logits_for(gt, 20.0), gt) < 1e-6);
}

TEST_CASE("all-zero logits cost exactly |I| * ln 2") {
  std::mt19937_64 rng(42);
  BinaryMask gt = random_mask(4, 8, rng);
  const double loss = side_loss(Tensor({1, 4, 8}), gt);
  CHECK(loss == doctest::Approx(32.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("side_loss matches the scalar-loop cross-entropy oracle") {
  std::mt19937_64 rng(43);
  BinaryMask gt = random_mask(4, 8, rng);
  Tensor z = random_tensor({1, 4, 8}, rng, -3.0, 3.0);
  CHECK(side_loss(z, gt) == doctest::Approx(bce_sum_reference(z, gt)).epsilon(1e-9));
}

TEST_CASE("supervision errors: non-binary or misshaped ground truth") {
  BinaryMask bad(4, 8);
  bad.values[5] = 7;
  CHECK_THROWS_AS(side_loss(Tensor({1, 4, 8}), bad), SupervisionError);
  CHECK_THROWS_AS(side_loss(Tensor({1, 4, 8}), BinaryMask(4, 9)), SupervisionError);
}

TEST_CASE("total_loss sums five per-resolution side losses") {
  std::mt19937_64 rng(44);
  BinaryMask gt = random_mask(32, 64, rng);
  SideOutputs sides = fake_sides(gt, 1.3);

  LossReport report = total_loss(sides, gt);
  double expected_total = 0.0;
  for (int s = 0; s < 5; ++s) {
    const Tensor& z = sides.logits[static_cast<std::size_t>(s)];
    BinaryMask g = resize_nearest(gt, z.dim(1), z.dim(2));
    const double ls = bce_sum_reference(z, g);
    CHECK(report.side_losses[static_cast<std::size_t>(s)] == doctest::Approx(ls).epsilon(1e-9));
    expected_total += ls;
  }
  CHECK(report.total == doctest::Approx(expected_total).epsilon(1e-12));
}

TEST_CASE("perfect side outputs give a vanishing total") {
  std::mt19937_64 rng(45);
  BinaryMask gt = random_mask(32, 64, rng);
  CHECK(total_loss(fake_sides(gt, 25.0), gt).total < 1e-6);
}

TEST_CASE("zeroing one side's logits changes only that side's term") {
  std::mt19937_64 rng(46);
  BinaryMask gt = random_mask(32, 64, rng);
  SideOutputs sides = fake_sides(gt, 1.7);
  LossReport before = total_loss(sides, gt);

  sides.logits[2].fill(0.0);
  LossReport after = total_loss(sides, gt);
  for (int s = 0; s < 5; ++s) {
    if (s == 2) continue;
    CHECK(after.side_losses[static_cast<std::size_t>(s)] ==
          before.side_losses[static_cast<std::size_t>(s)]);
  }
  CHECK(after.side_losses[2] != before.side_losses[2]);
}

TEST_CASE("total_loss rejects a wrong side-output count") {
  std::mt19937_64 rng(47);
  BinaryMask gt = random_mask(32, 64, rng);
  SideOutputs sides = fake_sides(gt, 1.0);
  sides.logits.pop_back();
  CHECK_THROWS_AS(total_loss(sides, gt), ConfigError);
}

TEST_CASE("loss gradients are sigmoid(z) - g") {
  std::mt19937_64 rng(48);
  BinaryMask gt = random_mask(32, 64, rng);
  SideOutputs sides = fake_sides(gt, 0.9);
  std::vector<Tensor> grads = total_loss_backward(sides, gt);
  REQUIRE(grads.size() == 5);
  for (int s = 0; s < 5; ++s) {
    const Tensor& z = sides.logits[static_cast<std::size_t>(s)];
    BinaryMask g = resize_nearest(gt, z.dim(1), z.dim(2));
    for (std::int64_t i = 0; i < z.size(); ++i) {
      const double expected = 1.0 / (1.0 + std::exp(-z[i])) - g.values[static_cast<std::size_t>(i)];
      CHECK(grads[static_cast<std::size_t>(s)][i] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

// ---------------------------------------------------------------------------
// Schedule and optimizer

TEST_CASE("poly schedule endpoints and midpoint") {
  TrainConfig cfg;
  cfg.iterations = 1000;
  cfg.base_lr = 0.02;
  cfg.poly_power = 0.9;
  CHECK(poly_lr(0, cfg) == 0.02);
  CHECK(poly_lr(1000, cfg) == 0.0);
  CHECK(poly_lr(500, cfg) == doctest::Approx(0.02 * std::pow(0.5, 0.9)).epsilon(1e-12));
  CHECK(poly_lr(500, cfg) == doctest::Approx(0.02 * 0.5358867).epsilon(1e-6));
  CHECK_THROWS_AS(poly_lr(1001, cfg), ScheduleError);
}

TEST_CASE("an lr=0 step leaves parameters unchanged despite gradients") {
  NetConfig nc;
  DdsNet net(nc);
  net.init_params(51);
  for (ParamRef& p : net.params()) p.grad->fill(0.5);

  std::vector<double> before;
  for (const ParamRef& p : net.params())
    for (std::int64_t i = 0; i < p.value->size(); ++i) before.push_back((*p.value)[i]);

  SgdOptimizer opt(net.params(), 0.9, 5e-4);
  opt.step(0.0, 0.0);

  std::size_t k = 0;
  for (const ParamRef& p : net.params())
    for (std::int64_t i = 0; i < p.value->size(); ++i) CHECK((*p.value)[i] == before[k++]);
}

TEST_CASE("weight decay alone shrinks parameter norms monotonically") {
  NetConfig nc;
  nc.profile = "mini";
  DdsNet net(nc);
  net.init_params(52);
  SgdOptimizer opt(net.params(), 0.9, 1e-2);

  auto norm = [&] {
    double s = 0.0;
    for (const ParamRef& p : net.params())
      for (std::int64_t i = 0; i < p.value->size(); ++i) s += (*p.value)[i] * (*p.value)[i];
    return std::sqrt(s);
  };

  double prev = norm();
  for (int step = 0; step < 5; ++step) {
    net.zero_grads();
    opt.step(0.05, 0.05);
    const double cur = norm();
    CHECK(cur < prev);
    prev = cur;
  }
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

std::vector<TrainSample> tiny_dataset(int count, int width, int height) {
  std::vector<TrainSample> set;
  SceneSpec spec;
  spec.width = width;
  spec.height = height;
  spec.min_caps = 1;
  spec.max_caps = 2;
  spec.min_radius_deg = 15.0;
  spec.max_radius_deg = 35.0;
  for (int i = 0; i < count; ++i) {
    auto [img, mask] = synth_scene(1000 + static_cast<std::uint64_t>(i), spec);
    set.push_back({std::move(img), std::move(mask)});
  }
  return set;
}

TrainConfig quick_config(int iterations) {
  TrainConfig cfg;
  cfg.iterations = iterations;
  cfg.width = 96;
  cfg.height = 48;
  cfg.base_lr = 2e-6;
  cfg.seed = 77;
  cfg.checkpoint_every = 0;
  return cfg;
}

}  // namespace

TEST_CASE("training is bit-deterministic in the seed") {
  const std::vector<TrainSample> data = tiny_dataset(3, 96, 48);

  auto run = [&] {
    DdsNet net(quick_config(8).net_config());
    net.init_params(55);
    train_loop(net, quick_config(8), data);
    std::vector<double> flat;
    for (const ParamRef& p : net.params())
      for (std::int64_t i = 0; i < p.value->size(); ++i) flat.push_back((*p.value)[i]);
    return flat;
  };
  CHECK(run() == run());
}

TEST_CASE("the loss curve trends downward on a tiny synthetic set") {
  const std::vector<TrainSample> data = tiny_dataset(4, 96, 48);
  TrainConfig cfg = quick_config(120);
  DdsNet net(cfg.net_config());
  net.init_params(cfg.seed);
  std::vector<IterationRecord> curve = train_loop(net, cfg, data);

  REQUIRE(static_cast<int>(curve.size()) == cfg.iterations);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 20; ++i) {
    head += curve[static_cast<std::size_t>(i)].loss.total;
    tail += curve[curve.size() - 1 - static_cast<std::size_t>(i)].loss.total;
  }
  CHECK(tail < head);
}

TEST_CASE("training rejects an empty split") {
  TrainConfig cfg = quick_config(4);
  DdsNet net(cfg.net_config());
  net.init_params(1);
  CHECK_THROWS_AS(train_loop(net, cfg, {}), DataError);
}
