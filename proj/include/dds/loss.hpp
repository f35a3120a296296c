#pragma once

#include <array>

#include "dds/image.hpp"
#include "dds/network.hpp"

namespace dds {

/// Per-side cross-entropy values and their sum: the deep-supervision
/// objective penalizes every side output.
struct LossReport {
  std::array<double, kSideOutputs> side_losses{};
  double total = 0.0;
};

/// Binary cross-entropy of sigmoid(logits) against gt, SUMMED over pixels.
/// gt must already be at the logits resolution (nearest-downsampled).
/// Evaluated in the numerically stable softplus form.
double side_loss(const Tensor& logits, const BinaryMask& gt);

/// Losses of all five side outputs against per-resolution ground truth
/// (nearest-neighbor downsampled from gt, which is at input resolution).
LossReport total_loss(const SideOutputs& sides, const BinaryMask& gt);

/// Upstream gradients d(total)/d(logit_s): sigmoid(z) - g, per pixel.
std::vector<Tensor> total_loss_backward(const SideOutputs& sides, const BinaryMask& gt);

}  // namespace dds
