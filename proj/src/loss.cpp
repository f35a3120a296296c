#include "dds/loss.hpp"

#include <cmath>

namespace dds {

namespace {

void check_side(const Tensor& logits, const BinaryMask& gt) {
  if (logits.ndim() != 3 || logits.dim(0) != 1)
    throw SupervisionError("side_loss: logits must be (1, h, w)");
  if (logits.dim(1) != gt.height || logits.dim(2) != gt.width)
    throw SupervisionError("side_loss: ground truth not at logits resolution");
  for (std::uint8_t v : gt.values)
    if (v > 1) throw SupervisionError("side_loss: ground truth must be binary");
}

BinaryMask gt_for_side(const BinaryMask& gt, const Tensor& logits) {
  return resize_nearest(gt, logits.dim(1), logits.dim(2));
}

void check_sides(const SideOutputs& sides) {
  if (sides.logits.size() != kSideOutputs)
    throw ConfigError("total_loss: expected exactly 5 side outputs");
}

}  // namespace

double side_loss(const Tensor& logits, const BinaryMask& gt) {
  check_side(logits, gt);
  double loss = 0.0;
  for (std::int64_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    const double g = gt.values[static_cast<std::size_t>(i)];
    // -[g log p + (1-g) log(1-p)] = softplus(z) - g*z, softplus in stable form.
    loss += std::max(z, 0.0) - g * z + std::log1p(std::exp(-std::abs(z)));
  }
  return loss;
}

LossReport total_loss(const SideOutputs& sides, const BinaryMask& gt) {
  check_sides(sides);
  LossReport report;
  for (int s = 0; s < kSideOutputs; ++s) {
    const Tensor& z = sides.logits[static_cast<std::size_t>(s)];
    report.side_losses[static_cast<std::size_t>(s)] = side_loss(z, gt_for_side(gt, z));
    report.total += report.side_losses[static_cast<std::size_t>(s)];
  }
  return report;
}

std::vector<Tensor> total_loss_backward(const SideOutputs& sides, const BinaryMask& gt) {
  check_sides(sides);
  std::vector<Tensor> grads;
  grads.reserve(kSideOutputs);
  for (int s = 0; s < kSideOutputs; ++s) {
    const Tensor& z = sides.logits[static_cast<std::size_t>(s)];
    const BinaryMask g = gt_for_side(gt, z);
    Tensor dz({1, z.dim(1), z.dim(2)});
    for (std::int64_t i = 0; i < z.size(); ++i)
      dz[i] = 1.0 / (1.0 + std::exp(-z[i])) - g.values[static_cast<std::size_t>(i)];
    grads.push_back(std::move(dz));
  }
  return grads;
}

}  // namespace dds
