#pragma once

#include "dds/conv.hpp"
#include "dds/image.hpp"
#include "dds/tensor.hpp"

namespace dds {

/// Per-block learnable kernels for the distortion-adaptive operator: an
/// n x n grid, one bank of 3 filters (3 input channels, k x k taps) per
/// block, no bias terms. Stored grouped, shape (n*n*3, 3, k, k); group
/// index of block (i, j) is i*n + j.
struct DistortionKernels {
  int n = 0;
  int k = 3;
  Tensor weights;

  DistortionKernels() = default;
  DistortionKernels(int n_, int k_) : n(n_), k(k_) {
    if (n <= 0) throw BlockGeometryError("DistortionKernels: block count must be positive");
    if (k <= 0 || k % 2 == 0) throw Error("DistortionKernels: kernel size must be odd");
    weights = Tensor({n * n * 3, 3, k, k});
  }

  /// Tap (out_c, in_c, ky, kx) of block (i, j).
  double& tap(int i, int j, int out_c, int in_c, int ky, int kx) {
    return weights.at((i * n + j) * 3 + out_c, in_c, ky, kx);
  }
  double tap(int i, int j, int out_c, int in_c, int ky, int kx) const {
    return weights.at((i * n + j) * 3 + out_c, in_c, ky, kx);
  }
};

/// Reference form: convolve every block in isolation (same-size, zero
/// padded) with its own kernels, add the block back in, stitch.
Tensor da_forward_naive(const Tensor& image, const DistortionKernels& kernels);

/// Production form: cut -> channel concat -> one grouped convolution with
/// n^2 groups -> slice -> stitch -> add input. Numerically equal to the
/// naive form.
Tensor da_forward_grouped(const Tensor& image, const DistortionKernels& kernels);

struct DaGradients {
  Tensor wrt_image;
  DistortionKernels wrt_kernels;
};

/// Exact gradients of the forward map under an upstream gradient of the
/// same shape as the output.
DaGradients da_gradients(const Tensor& image, const DistortionKernels& kernels,
                         const Tensor& upstream);

}  // namespace dds
