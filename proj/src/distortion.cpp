#include "dds/distortion.hpp"

namespace dds {

namespace {

void check_da_geometry(const Tensor& image, const DistortionKernels& kernels) {
  if (image.ndim() != 3 || image.dim(0) != 3)
    throw BlockGeometryError("distortion-adaptive: input must be (3, H, W)");
  if (kernels.n <= 0 || image.dim(1) % kernels.n != 0 || image.dim(2) % kernels.n != 0)
    throw BlockGeometryError("distortion-adaptive: block count must divide both dimensions");
}

// Blocks channel-concatenated in grid order: (3*n^2, H/n, W/n).
Tensor concat_grid(const BlockGrid& grid) {
  const int bh = grid.blocks.front().dim(1), bw = grid.blocks.front().dim(2);
  Tensor stacked({3 * grid.n * grid.n, bh, bw});
  const std::int64_t plane = static_cast<std::int64_t>(bh) * bw;
  double* dst = stacked.data();
  for (const Tensor& b : grid.blocks) {
    std::copy(b.data(), b.data() + b.size(), dst);
    dst += 3 * plane;
  }
  return stacked;
}

BlockGrid split_grid(const Tensor& stacked, int n, int orig_h, int orig_w) {
  const int bh = stacked.dim(1), bw = stacked.dim(2);
  const std::int64_t plane = static_cast<std::int64_t>(bh) * bw;
  BlockGrid grid;
  grid.n = n;
  grid.orig_height = orig_h;
  grid.orig_width = orig_w;
  grid.blocks.reserve(static_cast<std::size_t>(n) * n);
  const double* src = stacked.data();
  for (int b = 0; b < n * n; ++b) {
    Tensor blk({3, bh, bw});
    std::copy(src, src + blk.size(), blk.data());
    src += 3 * plane;
    grid.blocks.push_back(std::move(blk));
  }
  return grid;
}

ConvGeom da_geom(const DistortionKernels& kernels) {
  ConvGeom g;
  g.in_ch = 3 * kernels.n * kernels.n;
  g.out_ch = 3 * kernels.n * kernels.n;
  g.k = kernels.k;
  g.stride = 1;
  g.pad = (kernels.k - 1) / 2;
  g.dilation = 1;
  g.groups = kernels.n * kernels.n;
  return g;
}

}  // namespace

Tensor da_forward_naive(const Tensor& image, const DistortionKernels& kernels) {
  check_da_geometry(image, kernels);
  BlockGrid grid = cut_blocks(image, kernels.n);

  ConvGeom g;
  g.in_ch = 3;
  g.out_ch = 3;
  g.k = kernels.k;
  g.pad = (kernels.k - 1) / 2;
  const std::int64_t bank = static_cast<std::int64_t>(3) * 3 * kernels.k * kernels.k;

  for (int i = 0; i < kernels.n; ++i) {
    for (int j = 0; j < kernels.n; ++j) {
      Tensor w({3, 3, kernels.k, kernels.k});
      const double* src = kernels.weights.data() + (i * kernels.n + j) * bank;
      std::copy(src, src + bank, w.data());
      Tensor learned = conv2d_forward(grid.block(i, j), w, nullptr, g);
      grid.block(i, j).add_scaled(learned, 1.0);
    }
  }
  return stitch_blocks(grid);
}

Tensor da_forward_grouped(const Tensor& image, const DistortionKernels& kernels) {
  check_da_geometry(image, kernels);
  BlockGrid grid = cut_blocks(image, kernels.n);
  Tensor stacked = concat_grid(grid);
  Tensor learned = conv2d_forward(stacked, kernels.weights, nullptr, da_geom(kernels));
  Tensor out = stitch_blocks(split_grid(learned, kernels.n, image.dim(1), image.dim(2)));
  out.add_scaled(image, 1.0);
  return out;
}

DaGradients da_gradients(const Tensor& image, const DistortionKernels& kernels,
                         const Tensor& upstream) {
  check_da_geometry(image, kernels);
  if (!upstream.same_shape(image))
    throw BlockGeometryError("da_gradients: upstream shape must match the input");

  const ConvGeom g = da_geom(kernels);
  // Cut/stitch are permutations, so pushing the upstream gradient through
  // them is just the same reindexing.
  Tensor up_stacked = concat_grid(cut_blocks(upstream, kernels.n));
  Tensor x_stacked = concat_grid(cut_blocks(image, kernels.n));
  const int bh = image.dim(1) / kernels.n, bw = image.dim(2) / kernels.n;

  DaGradients out;
  out.wrt_kernels = DistortionKernels(kernels.n, kernels.k);
  conv2d_backward_params(x_stacked, up_stacked, g, out.wrt_kernels.weights, nullptr);

  Tensor dx_stacked = conv2d_backward_input(up_stacked, kernels.weights, g, bh, bw);
  out.wrt_image = stitch_blocks(split_grid(dx_stacked, kernels.n, image.dim(1), image.dim(2)));
  // Residual path.
  out.wrt_image.add_scaled(upstream, 1.0);
  return out;
}

}  // namespace dds
