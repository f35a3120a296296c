#include "dds/image.hpp"

#include <algorithm>
#include <cmath>

namespace dds {

std::int64_t BinaryMask::foreground_count() const {
  std::int64_t n = 0;
  for (std::uint8_t v : values) n += v;
  return n;
}

namespace {

// Source coordinate of an output pixel center under pixel-center alignment.
inline double src_coord(int out_idx, int in_size, int out_size) {
  return (out_idx + 0.5) * static_cast<double>(in_size) / out_size - 0.5;
}

}  // namespace

Tensor resize_bilinear(const Tensor& src, int out_h, int out_w) {
  if (src.ndim() != 3) throw Error("resize_bilinear: expected (C, H, W) tensor");
  const int c = src.dim(0), in_h = src.dim(1), in_w = src.dim(2);
  if (out_h <= 0 || out_w <= 0) throw Error("resize_bilinear: non-positive target size");
  if (in_h == out_h && in_w == out_w) return src;

  Tensor dst({c, out_h, out_w});
  std::vector<int> x0(out_w), x1(out_w);
  std::vector<double> wx(out_w);
  for (int x = 0; x < out_w; ++x) {
    double sx = src_coord(x, in_w, out_w);
    double fx = std::floor(sx);
    x0[x] = std::clamp(static_cast<int>(fx), 0, in_w - 1);
    x1[x] = std::clamp(static_cast<int>(fx) + 1, 0, in_w - 1);
    wx[x] = std::clamp(sx - fx, 0.0, 1.0);
  }
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < out_h; ++y) {
      double sy = src_coord(y, in_h, out_h);
      double fy = std::floor(sy);
      int y0 = std::clamp(static_cast<int>(fy), 0, in_h - 1);
      int y1 = std::clamp(static_cast<int>(fy) + 1, 0, in_h - 1);
      double wy = std::clamp(sy - fy, 0.0, 1.0);
      for (int x = 0; x < out_w; ++x) {
        double top = (1.0 - wx[x]) * src.at(ch, y0, x0[x]) + wx[x] * src.at(ch, y0, x1[x]);
        double bot = (1.0 - wx[x]) * src.at(ch, y1, x0[x]) + wx[x] * src.at(ch, y1, x1[x]);
        dst.at(ch, y, x) = (1.0 - wy) * top + wy * bot;
      }
    }
  }
  return dst;
}

BinaryMask resize_nearest(const BinaryMask& src, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0) throw Error("resize_nearest: non-positive target size");
  if (src.height == out_h && src.width == out_w) return src;
  BinaryMask dst(out_h, out_w);
  for (int y = 0; y < out_h; ++y) {
    int sy = std::clamp(static_cast<int>((y + 0.5) * src.height / out_h), 0, src.height - 1);
    for (int x = 0; x < out_w; ++x) {
      int sx = std::clamp(static_cast<int>((x + 0.5) * src.width / out_w), 0, src.width - 1);
      dst.at(y, x) = src.at(sy, sx);
    }
  }
  return dst;
}

EquirectImage canonicalize(const Tensor& raster, std::pair<int, int> target,
                           std::string provenance) {
  if (raster.ndim() != 3 || raster.dim(0) != 3)
    throw MalformedImageError("canonicalize: input must have 3 channels");
  const int tw = target.first, th = target.second;
  if (tw <= 0 || th <= 0 || tw != 2 * th)
    throw ConfigError("canonicalize: target must satisfy width == 2 * height");

  EquirectImage out;
  out.pixels = resize_bilinear(raster, th, tw);
  for (std::int64_t i = 0; i < out.pixels.size(); ++i)
    out.pixels[i] = std::clamp(out.pixels[i], 0.0, 1.0);
  out.provenance = std::move(provenance);
  return out;
}

std::pair<EquirectImage, BinaryMask> hflip(const EquirectImage& image, const BinaryMask& mask) {
  const int h = image.height(), w = image.width();
  if (mask.height != h || mask.width != w)
    throw PairedDataError("hflip: image and mask shapes differ");

  EquirectImage fi;
  fi.pixels = Tensor({3, h, w});
  fi.provenance = image.provenance;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) fi.pixels.at(c, y, x) = image.pixels.at(c, y, w - 1 - x);

  BinaryMask fm(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) fm.at(y, x) = mask.at(y, w - 1 - x);
  return {std::move(fi), std::move(fm)};
}

BlockGrid cut_blocks(const Tensor& raster, int n) {
  if (raster.ndim() != 3) throw BlockGeometryError("cut_blocks: expected (C, H, W) tensor");
  const int c = raster.dim(0), h = raster.dim(1), w = raster.dim(2);
  if (n <= 0 || h % n != 0 || w % n != 0)
    throw BlockGeometryError("cut_blocks: block count must divide both dimensions");

  const int bh = h / n, bw = w / n;
  BlockGrid grid;
  grid.n = n;
  grid.orig_height = h;
  grid.orig_width = w;
  grid.blocks.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Tensor b({c, bh, bw});
      for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < bh; ++y)
          for (int x = 0; x < bw; ++x) b.at(ch, y, x) = raster.at(ch, i * bh + y, j * bw + x);
      grid.blocks.push_back(std::move(b));
    }
  }
  return grid;
}

Tensor stitch_blocks(const BlockGrid& grid) {
  if (grid.n <= 0 || grid.blocks.size() != static_cast<std::size_t>(grid.n) * grid.n)
    throw BlockGeometryError("stitch_blocks: grid is not n x n");
  const Tensor& first = grid.blocks.front();
  if (first.ndim() != 3) throw BlockGeometryError("stitch_blocks: blocks must be (C, h, w)");
  const int c = first.dim(0), bh = first.dim(1), bw = first.dim(2);
  for (const Tensor& b : grid.blocks)
    if (!b.same_shape(first)) throw BlockGeometryError("stitch_blocks: inconsistent block shapes");

  Tensor out({c, bh * grid.n, bw * grid.n});
  for (int i = 0; i < grid.n; ++i) {
    for (int j = 0; j < grid.n; ++j) {
      const Tensor& b = grid.block(i, j);
      for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < bh; ++y)
          for (int x = 0; x < bw; ++x) out.at(ch, i * bh + y, j * bw + x) = b.at(ch, y, x);
    }
  }
  return out;
}

}  // namespace dds
