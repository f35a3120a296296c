#include "dds/mci.hpp"

namespace dds {

namespace {

void check_mci_input(const Tensor& features, const MciParams& params) {
  if (features.ndim() != 3 || features.dim(0) != params.in_ch)
    throw ConfigError("mci: feature channel count mismatch");
  // The widest branch spans a 9-tap footprint (3x3 at dilation 4). Zero
  // padding covers one short dimension, but an input short in both carries
  // no usable context for the block.
  if (features.dim(1) < 9 && features.dim(2) < 9)
    throw ReceptiveFieldError("mci: input smaller than the largest dilated kernel footprint");
}

}  // namespace

Tensor mci_forward(const Tensor& features, const MciParams& params) {
  check_mci_input(features, params);
  Tensor out;
  for (int b = 0; b < kMciBranches; ++b) {
    Tensor y = conv2d_forward(features, params.weights[b], &params.biases[b],
                              MciParams::branch_geom(params.in_ch, b));
    if (b == 0)
      out = std::move(y);
    else
      out.add_scaled(y, 1.0);  // fixed branch order keeps the sum reproducible
  }
  return out;
}

MciGradients mci_gradients(const Tensor& features, const MciParams& params,
                           const Tensor& upstream) {
  check_mci_input(features, params);
  if (upstream.ndim() != 3 || upstream.dim(0) != kMciChannels ||
      upstream.dim(1) != features.dim(1) || upstream.dim(2) != features.dim(2))
    throw ConfigError("mci_gradients: upstream shape mismatch");

  MciGradients out;
  out.wrt_params = MciParams(params.in_ch);
  out.wrt_features = Tensor({params.in_ch, features.dim(1), features.dim(2)});
  for (int b = 0; b < kMciBranches; ++b) {
    const ConvGeom g = MciParams::branch_geom(params.in_ch, b);
    conv2d_backward_params(features, upstream, g, out.wrt_params.weights[b],
                           &out.wrt_params.biases[b]);
    Tensor dx = conv2d_backward_input(upstream, params.weights[b], g, features.dim(1),
                                      features.dim(2));
    out.wrt_features.add_scaled(dx, 1.0);
  }
  return out;
}

}  // namespace dds
