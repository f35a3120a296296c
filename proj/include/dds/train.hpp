#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "dds/loss.hpp"
#include "dds/network.hpp"

namespace dds {

struct TrainConfig {
  int iterations = 1000;
  int batch_size = 1;
  double base_lr = 1e-6;  // feature-extractor rate; losses are pixel sums, hence the scale
  double head_lr_multiplier = 10.0;
  double weight_decay = 5e-4;
  double momentum = 0.9;
  double poly_power = 0.9;
  int width = 512;
  int height = 256;
  int blocks_n = 4;
  std::uint64_t seed = 0;
  std::string profile = "mini";
  bool enable_da = true;
  bool enable_mci = true;
  /// With deep supervision every side output is penalized; without it only
  /// the finest side drives the gradients.
  bool deep_supervision = true;
  double hflip_prob = 0.5;
  int checkpoint_every = 1000;

  void validate() const;
  NetConfig net_config() const;
};

/// lr(iter) = base_lr * (1 - iter/iterations)^power.
double poly_lr(int iter, const TrainConfig& cfg);

/// SGD with momentum and decoupled-by-group learning rates:
///   v <- momentum * v + (grad + weight_decay * theta)
///   theta <- theta - lr(group) * v
/// The feature extractor trains at the base rate; the distortion kernels
/// and all side-output heads at head_lr_multiplier times that.
class SgdOptimizer {
 public:
  SgdOptimizer(std::vector<ParamRef>& params, double momentum, double weight_decay);
  void step(double backbone_lr, double head_lr);

 private:
  std::vector<ParamRef>* params_;
  std::vector<Tensor> velocity_;
  double momentum_;
  double weight_decay_;
};

/// One canonicalized training pair.
struct TrainSample {
  EquirectImage image;
  BinaryMask mask;
};

struct IterationRecord {
  int iteration = 0;
  LossReport loss;
  double lr = 0.0;
};

/// Core optimization loop: per-iteration uniform sample draw and coin-flip
/// horizontal flip, both driven by cfg.seed; deterministic given the seed.
/// checkpoint_cb, when set, runs every cfg.checkpoint_every iterations and
/// once more at the end.
std::vector<IterationRecord> train_loop(
    DdsNet& net, const TrainConfig& cfg, const std::vector<TrainSample>& train_set,
    const std::function<void(int iteration)>& checkpoint_cb = {});

void write_loss_curve(const std::filesystem::path& path,
                      const std::vector<IterationRecord>& curve);

}  // namespace dds
