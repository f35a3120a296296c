#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dds/tensor.hpp"

namespace dds {

/// 3-channel equirectangular raster, values in [0,1], stored as a
/// (3, height, width) tensor. Canonical frames satisfy width == 2 * height.
struct EquirectImage {
  Tensor pixels;           // (3, H, W)
  std::string provenance;  // file path or "synthetic:<seed>"

  int height() const { return pixels.dim(1); }
  int width() const { return pixels.dim(2); }
};

/// Strictly binary mask, one byte per pixel (0 background, 1 foreground).
struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> values;  // row-major, size height * width

  BinaryMask() = default;
  BinaryMask(int h, int w) : height(h), width(w), values(static_cast<std::size_t>(h) * w, 0) {}

  std::uint8_t& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
  std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
  std::int64_t foreground_count() const;
};

/// Real-valued saliency prediction in [0,1], same shape as its image.
struct SaliencyMap {
  Tensor values;  // (H, W)

  int height() const { return values.dim(0); }
  int width() const { return values.dim(1); }
};

/// n x n grid of equally shaped blocks cut from a (C, H, W) raster.
struct BlockGrid {
  int n = 0;
  int orig_height = 0;
  int orig_width = 0;
  std::vector<Tensor> blocks;  // row-major grid order, each (C, H/n, W/n)

  const Tensor& block(int i, int j) const { return blocks[static_cast<std::size_t>(i) * n + j]; }
  Tensor& block(int i, int j) { return blocks[static_cast<std::size_t>(i) * n + j]; }
};

/// Bilinear resample of a (C, H, W) raster to (C, out_h, out_w) with
/// pixel-center alignment and edge clamping. Same-size calls copy exactly.
Tensor resize_bilinear(const Tensor& src, int out_h, int out_w);

/// Nearest-neighbor resample of a mask (keeps values binary).
BinaryMask resize_nearest(const BinaryMask& src, int out_h, int out_w);

/// Resample an arbitrary 3-channel raster to the target size and clamp the
/// result into [0,1]. target is (width, height) with width == 2 * height.
EquirectImage canonicalize(const Tensor& raster, std::pair<int, int> target,
                           std::string provenance = {});

/// Mirror image and mask about the vertical axis.
std::pair<EquirectImage, BinaryMask> hflip(const EquirectImage& image, const BinaryMask& mask);

/// Cut a (C, H, W) raster into an n x n block grid. n must divide H and W.
BlockGrid cut_blocks(const Tensor& raster, int n);

/// Reassemble a block grid into the full raster; exact inverse of cut_blocks.
Tensor stitch_blocks(const BlockGrid& grid);

}  // namespace dds
