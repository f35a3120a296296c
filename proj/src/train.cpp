#include "dds/train.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace dds {

void TrainConfig::validate() const {
  if (iterations <= 0) throw ConfigError("train: iterations must be positive");
  if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
  if (base_lr <= 0.0 || head_lr_multiplier <= 0.0)
    throw ConfigError("train: learning rates must be positive");
  if (weight_decay < 0.0 || momentum < 0.0 || momentum >= 1.0)
    throw ConfigError("train: bad momentum/weight decay");
  if (hflip_prob < 0.0 || hflip_prob > 1.0) throw ConfigError("train: bad flip probability");
}

NetConfig TrainConfig::net_config() const {
  NetConfig nc;
  nc.profile = profile;
  nc.blocks_n = blocks_n;
  nc.enable_da = enable_da;
  nc.enable_mci = enable_mci;
  return nc;
}

double poly_lr(int iter, const TrainConfig& cfg) {
  if (iter < 0 || iter > cfg.iterations)
    throw ScheduleError("poly_lr: iteration outside the schedule");
  return cfg.base_lr * std::pow(1.0 - static_cast<double>(iter) / cfg.iterations, cfg.poly_power);
}

SgdOptimizer::SgdOptimizer(std::vector<ParamRef>& params, double momentum, double weight_decay)
    : params_(&params), momentum_(momentum), weight_decay_(weight_decay) {
  velocity_.reserve(params.size());
  for (const ParamRef& p : params) velocity_.push_back(Tensor(p.value->shape()));
}

void SgdOptimizer::step(double backbone_lr, double head_lr) {
  for (std::size_t i = 0; i < params_->size(); ++i) {
    ParamRef& p = (*params_)[i];
    Tensor& v = velocity_[i];
    const double lr = (p.group == ParamGroup::kBackbone) ? backbone_lr : head_lr;
    for (std::int64_t j = 0; j < p.value->size(); ++j) {
      v[j] = momentum_ * v[j] + ((*p.grad)[j] + weight_decay_ * (*p.value)[j]);
      (*p.value)[j] -= lr * v[j];
    }
  }
}

std::vector<IterationRecord> train_loop(DdsNet& net, const TrainConfig& cfg,
                                        const std::vector<TrainSample>& train_set,
                                        const std::function<void(int)>& checkpoint_cb) {
  cfg.validate();
  if (train_set.empty()) throw DataError("train: empty training split");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, train_set.size() - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  SgdOptimizer opt(net.params(), cfg.momentum, cfg.weight_decay);
  std::vector<IterationRecord> curve;
  curve.reserve(static_cast<std::size_t>(cfg.iterations));

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const double lr = poly_lr(iter, cfg);
    net.zero_grads();

    LossReport batch_loss;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const TrainSample& sample = train_set[pick(rng)];
      const EquirectImage* img = &sample.image;
      const BinaryMask* mask = &sample.mask;
      std::pair<EquirectImage, BinaryMask> flipped;
      if (coin(rng) < cfg.hflip_prob) {
        flipped = hflip(sample.image, sample.mask);
        img = &flipped.first;
        mask = &flipped.second;
      }

      SideOutputs sides = net.forward(img->pixels);
      LossReport loss = total_loss(sides, *mask);
      if (!std::isfinite(loss.total)) throw NumericalError("train: non-finite loss");
      for (int s = 0; s < kSideOutputs; ++s)
        batch_loss.side_losses[static_cast<std::size_t>(s)] +=
            loss.side_losses[static_cast<std::size_t>(s)];
      batch_loss.total += cfg.deep_supervision ? loss.total : loss.side_losses[0];

      std::vector<Tensor> dlogits = total_loss_backward(sides, *mask);
      if (!cfg.deep_supervision)
        for (int s = 1; s < kSideOutputs; ++s) dlogits[static_cast<std::size_t>(s)].fill(0.0);
      net.backward(dlogits);
    }

    opt.step(lr, lr * cfg.head_lr_multiplier);
    curve.push_back({iter, batch_loss, lr});

    if (checkpoint_cb && cfg.checkpoint_every > 0 && (iter + 1) % cfg.checkpoint_every == 0 &&
        iter + 1 < cfg.iterations)
      checkpoint_cb(iter + 1);
  }
  if (checkpoint_cb) checkpoint_cb(cfg.iterations);
  return curve;
}

void write_loss_curve(const std::filesystem::path& path,
                      const std::vector<IterationRecord>& curve) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("write_loss_curve: cannot open " + path.string());
  os << "iteration,loss1,loss2,loss3,loss4,loss5,total,lr\n";
  os.precision(17);
  for (const IterationRecord& r : curve) {
    os << r.iteration;
    for (double l : r.loss.side_losses) os << ',' << l;
    os << ',' << r.loss.total << ',' << r.lr << '\n';
  }
}

}  // namespace dds
