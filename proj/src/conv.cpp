#include "dds/conv.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace dds {

namespace {

using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void check_conv_args(const Tensor& x, const Tensor& w, const Tensor* bias, const ConvGeom& g) {
  if (x.ndim() != 3) throw Error("conv2d: input must be (C, H, W)");
  if (x.dim(0) != g.in_ch) throw Error("conv2d: input channel mismatch");
  if (g.groups <= 0 || g.in_ch % g.groups != 0 || g.out_ch % g.groups != 0)
    throw Error("conv2d: groups must divide channel counts");
  if (g.k <= 0 || g.k % 2 == 0) throw Error("conv2d: kernel size must be odd and positive");
  if (w.size() != g.weight_count()) throw Error("conv2d: weight tensor size mismatch");
  if (bias && bias->size() != g.out_ch) throw Error("conv2d: bias size mismatch");
}

// Column matrix of input patches: rows in_per_group*k*k per group stacked
// over all groups (i.e. in_ch*k*k rows), columns out_h*out_w.
std::vector<double> im2col(const Tensor& x, const ConvGeom& g, int out_h, int out_w) {
  const int in_h = x.dim(1), in_w = x.dim(2);
  const std::int64_t cols = static_cast<std::int64_t>(out_h) * out_w;
  std::vector<double> col(static_cast<std::size_t>(g.in_ch) * g.k * g.k * cols, 0.0);

  for (int c = 0; c < g.in_ch; ++c) {
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        double* row = col.data() + ((static_cast<std::size_t>(c) * g.k + ky) * g.k + kx) * cols;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky * g.dilation;
          if (iy < 0 || iy >= in_h) continue;
          const double* src = x.data() + (static_cast<std::size_t>(c) * in_h + iy) * in_w;
          double* dst = row + static_cast<std::size_t>(oy) * out_w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx * g.dilation;
            if (ix >= 0 && ix < in_w) dst[ox] = src[ix];
          }
        }
      }
    }
  }
  return col;
}

void col2im_accumulate(const std::vector<double>& col, const ConvGeom& g, int in_h, int in_w,
                       int out_h, int out_w, Tensor& dx) {
  const std::int64_t cols = static_cast<std::int64_t>(out_h) * out_w;
  for (int c = 0; c < g.in_ch; ++c) {
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        const double* row = col.data() + ((static_cast<std::size_t>(c) * g.k + ky) * g.k + kx) * cols;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky * g.dilation;
          if (iy < 0 || iy >= in_h) continue;
          double* dst = dx.data() + (static_cast<std::size_t>(c) * in_h + iy) * in_w;
          const double* src = row + static_cast<std::size_t>(oy) * out_w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx * g.dilation;
            if (ix >= 0 && ix < in_w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

int conv_out_size(int in, int k, int stride, int pad, int dilation) {
  const int eff = dilation * (k - 1) + 1;
  return (in + 2 * pad - eff) / stride + 1;
}

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, const ConvGeom& g) {
  check_conv_args(x, w, bias, g);
  const int in_h = x.dim(1), in_w = x.dim(2);
  const int out_h = conv_out_size(in_h, g.k, g.stride, g.pad, g.dilation);
  const int out_w = conv_out_size(in_w, g.k, g.stride, g.pad, g.dilation);
  if (out_h <= 0 || out_w <= 0) throw Error("conv2d: output would be empty");

  const std::int64_t cols = static_cast<std::int64_t>(out_h) * out_w;
  std::vector<double> col = im2col(x, g, out_h, out_w);

  Tensor y({g.out_ch, out_h, out_w});
  const int icpg = g.in_per_group(), ocpg = g.out_per_group();
  const std::int64_t krows = static_cast<std::int64_t>(icpg) * g.k * g.k;
  for (int grp = 0; grp < g.groups; ++grp) {
    ConstMatMap wm(w.data() + static_cast<std::size_t>(grp) * ocpg * krows, ocpg, krows);
    ConstMatMap cm(col.data() + static_cast<std::size_t>(grp) * krows * cols, krows, cols);
    MatMap ym(y.data() + static_cast<std::size_t>(grp) * ocpg * cols, ocpg, cols);
    ym.noalias() = wm * cm;
  }
  if (bias) {
    for (int c = 0; c < g.out_ch; ++c) {
      double b = (*bias)[c];
      double* dst = y.data() + static_cast<std::size_t>(c) * cols;
      for (std::int64_t i = 0; i < cols; ++i) dst[i] += b;
    }
  }
  return y;
}

Tensor conv2d_backward_input(const Tensor& dy, const Tensor& w, const ConvGeom& g, int in_h,
                             int in_w) {
  const int out_h = dy.dim(1), out_w = dy.dim(2);
  const std::int64_t cols = static_cast<std::int64_t>(out_h) * out_w;
  const int icpg = g.in_per_group(), ocpg = g.out_per_group();
  const std::int64_t krows = static_cast<std::int64_t>(icpg) * g.k * g.k;

  std::vector<double> dcol(static_cast<std::size_t>(g.in_ch) * g.k * g.k * cols, 0.0);
  for (int grp = 0; grp < g.groups; ++grp) {
    ConstMatMap wm(w.data() + static_cast<std::size_t>(grp) * ocpg * krows, ocpg, krows);
    ConstMatMap dym(dy.data() + static_cast<std::size_t>(grp) * ocpg * cols, ocpg, cols);
    MatMap dcm(dcol.data() + static_cast<std::size_t>(grp) * krows * cols, krows, cols);
    dcm.noalias() = wm.transpose() * dym;
  }
  Tensor dx({g.in_ch, in_h, in_w});
  col2im_accumulate(dcol, g, in_h, in_w, out_h, out_w, dx);
  return dx;
}

void conv2d_backward_params(const Tensor& x, const Tensor& dy, const ConvGeom& g, Tensor& dw,
                            Tensor* db) {
  const int out_h = dy.dim(1), out_w = dy.dim(2);
  const std::int64_t cols = static_cast<std::int64_t>(out_h) * out_w;
  const int icpg = g.in_per_group(), ocpg = g.out_per_group();
  const std::int64_t krows = static_cast<std::int64_t>(icpg) * g.k * g.k;
  if (dw.size() != g.weight_count()) throw Error("conv2d: dw size mismatch");

  std::vector<double> col = im2col(x, g, out_h, out_w);
  for (int grp = 0; grp < g.groups; ++grp) {
    ConstMatMap dym(dy.data() + static_cast<std::size_t>(grp) * ocpg * cols, ocpg, cols);
    ConstMatMap cm(col.data() + static_cast<std::size_t>(grp) * krows * cols, krows, cols);
    MatMap dwm(dw.data() + static_cast<std::size_t>(grp) * ocpg * krows, ocpg, krows);
    dwm.noalias() += dym * cm.transpose();
  }
  if (db) {
    for (int c = 0; c < g.out_ch; ++c) {
      const double* src = dy.data() + static_cast<std::size_t>(c) * cols;
      double s = 0.0;
      for (std::int64_t i = 0; i < cols; ++i) s += src[i];
      (*db)[c] += s;
    }
  }
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (std::int64_t i = 0; i < y.size(); ++i) y[i] = std::max(0.0, y[i]);
  return y;
}

Tensor relu_backward(const Tensor& dy, const Tensor& y) {
  Tensor dx = dy;
  for (std::int64_t i = 0; i < dx.size(); ++i)
    if (y[i] <= 0.0) dx[i] = 0.0;
  return dx;
}

Tensor sigmoid(const Tensor& x) {
  Tensor y = x;
  for (std::int64_t i = 0; i < y.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-y[i]));
  return y;
}

Tensor maxpool3x3s2_forward(const Tensor& x, std::vector<std::int64_t>& argmax) {
  const int c = x.dim(0), in_h = x.dim(1), in_w = x.dim(2);
  const int out_h = conv_out_size(in_h, 3, 2, 1, 1);
  const int out_w = conv_out_size(in_w, 3, 2, 1, 1);
  Tensor y({c, out_h, out_w});
  argmax.assign(static_cast<std::size_t>(y.size()), -1);

  std::int64_t o = 0;
  for (int ch = 0; ch < c; ++ch) {
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox, ++o) {
        double best = -std::numeric_limits<double>::infinity();
        std::int64_t best_idx = -1;
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = oy * 2 - 1 + ky;
          if (iy < 0 || iy >= in_h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = ox * 2 - 1 + kx;
            if (ix < 0 || ix >= in_w) continue;
            const std::int64_t idx = (static_cast<std::int64_t>(ch) * in_h + iy) * in_w + ix;
            if (x[idx] > best) {
              best = x[idx];
              best_idx = idx;
            }
          }
        }
        y[o] = best;
        argmax[static_cast<std::size_t>(o)] = best_idx;
      }
    }
  }
  return y;
}

Tensor maxpool3x3s2_backward(const Tensor& dy, const std::vector<std::int64_t>& argmax, int in_c,
                             int in_h, int in_w) {
  Tensor dx({in_c, in_h, in_w});
  for (std::int64_t o = 0; o < dy.size(); ++o) {
    const std::int64_t idx = argmax[static_cast<std::size_t>(o)];
    if (idx >= 0) dx[idx] += dy[o];
  }
  return dx;
}

Tensor resize_bilinear_backward(const Tensor& dy, int in_h, int in_w) {
  const int c = dy.dim(0), out_h = dy.dim(1), out_w = dy.dim(2);
  if (in_h == out_h && in_w == out_w) return dy;
  Tensor dx({c, in_h, in_w});
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < out_h; ++y) {
      double sy = (y + 0.5) * static_cast<double>(in_h) / out_h - 0.5;
      double fy = std::floor(sy);
      int y0 = std::clamp(static_cast<int>(fy), 0, in_h - 1);
      int y1 = std::clamp(static_cast<int>(fy) + 1, 0, in_h - 1);
      double wy = std::clamp(sy - fy, 0.0, 1.0);
      for (int x = 0; x < out_w; ++x) {
        double sx = (x + 0.5) * static_cast<double>(in_w) / out_w - 0.5;
        double fx = std::floor(sx);
        int x0 = std::clamp(static_cast<int>(fx), 0, in_w - 1);
        int x1 = std::clamp(static_cast<int>(fx) + 1, 0, in_w - 1);
        double wx = std::clamp(sx - fx, 0.0, 1.0);
        const double gv = dy.at(ch, y, x);
        dx.at(ch, y0, x0) += (1.0 - wy) * (1.0 - wx) * gv;
        dx.at(ch, y0, x1) += (1.0 - wy) * wx * gv;
        dx.at(ch, y1, x0) += wy * (1.0 - wx) * gv;
        dx.at(ch, y1, x1) += wy * wx * gv;
      }
    }
  }
  return dx;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 3 || b.ndim() != 3 || a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2))
    throw Error("concat_channels: spatial shapes differ");
  Tensor y({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
  std::copy(a.data(), a.data() + a.size(), y.data());
  std::copy(b.data(), b.data() + b.size(), y.data() + a.size());
  return y;
}

Tensor slice_channels(const Tensor& x, int from, int to) {
  if (from < 0 || to > x.dim(0) || from >= to) throw Error("slice_channels: bad range");
  const std::int64_t plane = static_cast<std::int64_t>(x.dim(1)) * x.dim(2);
  Tensor y({to - from, x.dim(1), x.dim(2)});
  std::copy(x.data() + from * plane, x.data() + to * plane, y.data());
  return y;
}

}  // namespace dds
