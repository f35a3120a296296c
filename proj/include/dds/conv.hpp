#pragma once

#include <vector>

#include "dds/tensor.hpp"

namespace dds {

/// Geometry of a 2-D convolution over (C, H, W) tensors with square kernels.
/// Weights are laid out (out_ch, in_ch / groups, k, k); cross-correlation
/// convention, as usual for learned kernels.
struct ConvGeom {
  int in_ch = 0;
  int out_ch = 0;
  int k = 3;
  int stride = 1;
  int pad = 0;
  int dilation = 1;
  int groups = 1;

  int in_per_group() const { return in_ch / groups; }
  int out_per_group() const { return out_ch / groups; }
  std::int64_t weight_count() const {
    return static_cast<std::int64_t>(out_ch) * in_per_group() * k * k;
  }
  /// Multiply-accumulate count per output pixel row of all channels.
  std::int64_t macs_per_pixel() const {
    return static_cast<std::int64_t>(out_ch) * in_per_group() * k * k;
  }
};

int conv_out_size(int in, int k, int stride, int pad, int dilation);

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, const ConvGeom& g);

/// Gradient wrt the input. in_h/in_w give the forward input size.
Tensor conv2d_backward_input(const Tensor& dy, const Tensor& w, const ConvGeom& g, int in_h,
                             int in_w);

/// Accumulates gradients wrt weights (and bias when db != nullptr).
void conv2d_backward_params(const Tensor& x, const Tensor& dy, const ConvGeom& g, Tensor& dw,
                            Tensor* db);

Tensor relu(const Tensor& x);
/// Backward through relu given the forward *output* (mask y > 0).
Tensor relu_backward(const Tensor& dy, const Tensor& y);

Tensor sigmoid(const Tensor& x);

/// 3x3 stride-2 pad-1 max pooling; argmax stores the flat input index that
/// won each output element, for the backward pass.
Tensor maxpool3x3s2_forward(const Tensor& x, std::vector<std::int64_t>& argmax);
Tensor maxpool3x3s2_backward(const Tensor& dy, const std::vector<std::int64_t>& argmax, int in_c,
                             int in_h, int in_w);

/// Adjoint of resize_bilinear: scatter output gradients back to a
/// (C, in_h, in_w) tensor with the same interpolation weights.
Tensor resize_bilinear_backward(const Tensor& dy, int in_h, int in_w);

/// Channel-axis concatenation of two (C, H, W) tensors.
Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Slice channels [from, to) of a (C, H, W) tensor.
Tensor slice_channels(const Tensor& x, int from, int to);

}  // namespace dds
