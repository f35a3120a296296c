#pragma once

#include <array>

#include "dds/conv.hpp"
#include "dds/tensor.hpp"

namespace dds {

/// Multi-scale context integration: four parallel 3x3 convolutions with
/// dilation rates 1..4 (padding equal to the dilation, so spatial size is
/// preserved), fused by element-wise summation. 128 output channels
/// regardless of the input width; no activation inside the block.
constexpr int kMciBranches = 4;
constexpr int kMciChannels = 128;

struct MciParams {
  int in_ch = 0;
  std::array<Tensor, kMciBranches> weights;  // each (128, in_ch, 3, 3)
  std::array<Tensor, kMciBranches> biases;   // each (128), zero-initialized

  MciParams() = default;
  explicit MciParams(int in_channels) : in_ch(in_channels) {
    if (in_ch <= 0) throw ConfigError("MciParams: input channels must be positive");
    for (int b = 0; b < kMciBranches; ++b) {
      weights[b] = Tensor({kMciChannels, in_ch, 3, 3});
      biases[b] = Tensor({kMciChannels});
    }
  }

  static ConvGeom branch_geom(int in_ch, int branch) {
    ConvGeom g;
    g.in_ch = in_ch;
    g.out_ch = kMciChannels;
    g.k = 3;
    g.pad = branch + 1;
    g.dilation = branch + 1;
    return g;
  }
};

Tensor mci_forward(const Tensor& features, const MciParams& params);

struct MciGradients {
  Tensor wrt_features;
  MciParams wrt_params;
};

MciGradients mci_gradients(const Tensor& features, const MciParams& params,
                           const Tensor& upstream);

}  // namespace dds
