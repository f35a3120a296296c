#include "dds/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace dds {

namespace {

void check_shapes(const SaliencyMap& pred, const BinaryMask& gt) {
  if (pred.height() != gt.height || pred.width() != gt.width)
    throw PairedDataError("metrics: prediction and ground truth shapes differ");
}

void require_foreground(const BinaryMask& gt) {
  if (gt.foreground_count() == 0)
    throw UndefinedMetric("metrics: ground truth has no foreground");
}

}  // namespace

double mae(const SaliencyMap& pred, const BinaryMask& gt) {
  check_shapes(pred, gt);
  double s = 0.0;
  for (std::int64_t i = 0; i < pred.values.size(); ++i)
    s += std::abs(pred.values[i] - gt.values[static_cast<std::size_t>(i)]);
  return s / static_cast<double>(pred.values.size());
}

double f_measure(double precision, double recall, double beta2) {
  const double denom = beta2 * precision + recall;
  if (denom <= 0.0) return 0.0;
  return (1.0 + beta2) * precision * recall / denom;
}

Confusion confusion_at(const SaliencyMap& pred, const BinaryMask& gt, double threshold) {
  check_shapes(pred, gt);
  Confusion c;
  for (std::int64_t i = 0; i < pred.values.size(); ++i) {
    const bool hit = pred.values[i] * 255.0 >= threshold;
    const bool fg = gt.values[static_cast<std::size_t>(i)] != 0;
    if (hit && fg)
      ++c.tp;
    else if (hit && !fg)
      ++c.fp;
    else if (!hit && fg)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

double adaptive_threshold(const SaliencyMap& pred) {
  double mean = 0.0;
  for (std::int64_t i = 0; i < pred.values.size(); ++i) mean += pred.values[i] * 255.0;
  mean /= static_cast<double>(pred.values.size());
  return std::min(2.0 * mean, 255.0);
}

double f_beta_adaptive(const SaliencyMap& pred, const BinaryMask& gt) {
  check_shapes(pred, gt);
  require_foreground(gt);
  const Confusion c = confusion_at(pred, gt, adaptive_threshold(pred));
  return f_measure(c.precision(), c.recall());
}

std::vector<PrPoint> pr_sweep(const SaliencyMap& pred, const BinaryMask& gt) {
  check_shapes(pred, gt);
  // One pass: histogram of floor(255*pred) per ground-truth class, then
  // cumulative counts give every threshold at once.
  std::array<std::int64_t, 257> fg_below{}, bg_below{};
  std::int64_t fg_total = 0, bg_total = 0;
  for (std::int64_t i = 0; i < pred.values.size(); ++i) {
    const double v = pred.values[i] * 255.0;
    // A pixel valued v is first dropped at threshold floor(v)+1 (v >= t
    // keeps exact hits); bucket b counts pixels dropped from threshold b on.
    const int bucket = std::clamp(static_cast<int>(std::floor(v)) + 1, 0, 256);
    if (gt.values[static_cast<std::size_t>(i)] != 0) {
      ++fg_total;
      ++fg_below[static_cast<std::size_t>(bucket)];
    } else {
      ++bg_total;
      ++bg_below[static_cast<std::size_t>(bucket)];
    }
  }
  std::vector<PrPoint> out(256);
  std::int64_t fg_dropped = 0, bg_dropped = 0;
  for (int t = 0; t < 256; ++t) {
    fg_dropped += fg_below[static_cast<std::size_t>(t)];
    bg_dropped += bg_below[static_cast<std::size_t>(t)];
    const std::int64_t tp = fg_total - fg_dropped;
    const std::int64_t fp = bg_total - bg_dropped;
    const std::int64_t fn = fg_dropped;
    out[static_cast<std::size_t>(t)].threshold = t;
    out[static_cast<std::size_t>(t)].precision =
        (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    out[static_cast<std::size_t>(t)].recall =
        (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exact Euclidean distance transform (two-pass lower-envelope method with
// nearest-seed index propagation).

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared distance transform of sampled function f; arg[i] receives the
// index of the parabola that attains the minimum at i.
void dt1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& arg) {
  const int n = static_cast<int>(f.size());
  std::vector<int> v(static_cast<std::size_t>(n));
  std::vector<double> z(static_cast<std::size_t>(n) + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    if (f[static_cast<std::size_t>(q)] == kInf) continue;
    double s;
    while (true) {
      const int p = v[static_cast<std::size_t>(k)];
      if (f[static_cast<std::size_t>(p)] == kInf) {
        // Drop unreachable parabolas outright.
        if (--k < 0) break;
        continue;
      }
      s = ((f[static_cast<std::size_t>(q)] + q * q) - (f[static_cast<std::size_t>(p)] + p * p)) /
          (2.0 * q - 2.0 * p);
      if (s > z[static_cast<std::size_t>(k)]) break;
      if (--k < 0) break;
    }
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
    } else {
      ++k;
      v[static_cast<std::size_t>(k)] = q;
      z[static_cast<std::size_t>(k)] = s;
    }
    z[static_cast<std::size_t>(k) + 1] = kInf;
  }

  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(k) + 1] < q) ++k;
    const int p = v[static_cast<std::size_t>(k)];
    if (f[static_cast<std::size_t>(p)] == kInf) {
      d[static_cast<std::size_t>(q)] = kInf;
      arg[static_cast<std::size_t>(q)] = -1;
    } else {
      d[static_cast<std::size_t>(q)] = (q - p) * static_cast<double>(q - p) + f[static_cast<std::size_t>(p)];
      arg[static_cast<std::size_t>(q)] = p;
    }
  }
}

}  // namespace

DistanceTransform distance_transform(const BinaryMask& seeds) {
  const int h = seeds.height, w = seeds.width;
  DistanceTransform out;
  out.distance.assign(static_cast<std::size_t>(h) * w, kInf);
  out.nearest_y.assign(static_cast<std::size_t>(h) * w, -1);
  out.nearest_x.assign(static_cast<std::size_t>(h) * w, -1);

  // Pass 1, per column: squared distance to the nearest seed in the column.
  std::vector<double> col_d(static_cast<std::size_t>(h) * w, kInf);
  std::vector<int> col_row(static_cast<std::size_t>(h) * w, -1);
  {
    std::vector<double> f(static_cast<std::size_t>(h));
    std::vector<double> d(static_cast<std::size_t>(h));
    std::vector<int> arg(static_cast<std::size_t>(h));
    for (int x = 0; x < w; ++x) {
      bool any = false;
      for (int y = 0; y < h; ++y) {
        f[static_cast<std::size_t>(y)] = seeds.at(y, x) ? 0.0 : kInf;
        any |= seeds.at(y, x) != 0;
      }
      if (!any) continue;
      dt1d(f, d, arg);
      for (int y = 0; y < h; ++y) {
        col_d[static_cast<std::size_t>(y) * w + x] = d[static_cast<std::size_t>(y)];
        col_row[static_cast<std::size_t>(y) * w + x] = arg[static_cast<std::size_t>(y)];
      }
    }
  }

  // Pass 2, per row, over the columnwise squared distances.
  {
    std::vector<double> f(static_cast<std::size_t>(w));
    std::vector<double> d(static_cast<std::size_t>(w));
    std::vector<int> arg(static_cast<std::size_t>(w));
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) f[static_cast<std::size_t>(x)] = col_d[static_cast<std::size_t>(y) * w + x];
      dt1d(f, d, arg);
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (arg[static_cast<std::size_t>(x)] < 0) continue;
        const int bx = arg[static_cast<std::size_t>(x)];
        out.distance[i] = std::sqrt(d[static_cast<std::size_t>(x)]);
        out.nearest_x[i] = bx;
        out.nearest_y[i] = col_row[static_cast<std::size_t>(y) * w + bx];
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

double weighted_f(const SaliencyMap& pred, const BinaryMask& gt) {
  check_shapes(pred, gt);
  require_foreground(gt);
  const int h = gt.height, w = gt.width;
  const std::size_t n = static_cast<std::size_t>(h) * w;

  std::vector<double> err(n);
  for (std::size_t i = 0; i < n; ++i)
    err[i] = std::abs(pred.values[static_cast<std::int64_t>(i)] - gt.values[i]);

  const DistanceTransform dt = distance_transform(gt);

  // Background pixels inherit the error of their nearest foreground pixel
  // before smoothing, so foreground boundaries see their own errors.
  std::vector<double> err_t = err;
  for (std::size_t i = 0; i < n; ++i)
    if (!gt.values[i])
      err_t[i] = err[static_cast<std::size_t>(dt.nearest_y[i]) * w + dt.nearest_x[i]];

  // 7x7 Gaussian, sigma 5, normalized; zero-padded smoothing.
  constexpr int kHalf = 3;
  double kernel[7][7];
  double ksum = 0.0;
  for (int dy = -kHalf; dy <= kHalf; ++dy)
    for (int dx = -kHalf; dx <= kHalf; ++dx) {
      kernel[dy + kHalf][dx + kHalf] = std::exp(-(dy * dy + dx * dx) / (2.0 * 25.0));
      ksum += kernel[dy + kHalf][dx + kHalf];
    }
  for (auto& row : kernel)
    for (double& v : row) v /= ksum;

  std::vector<double> err_smooth(n, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int dy = -kHalf; dy <= kHalf; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        for (int dx = -kHalf; dx <= kHalf; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= w) continue;
          acc += kernel[dy + kHalf][dx + kHalf] * err_t[static_cast<std::size_t>(yy) * w + xx];
        }
      }
      err_smooth[static_cast<std::size_t>(y) * w + x] = acc;
    }

  // Foreground keeps whichever is smaller, raw or smoothed (a hit inside a
  // detected region forgives interpolation error); background is weighted
  // down with distance from the annotation.
  constexpr double kLnHalf = -0.6931471805599453;  // ln(0.5)
  double sum_fg_ew = 0.0, sum_bg_ew = 0.0;
  std::int64_t fg_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (gt.values[i]) {
      const double e = std::min(err[i], err_smooth[i]);
      sum_fg_ew += e;
      ++fg_count;
    } else {
      const double weight = 2.0 - std::exp(kLnHalf / 5.0 * dt.distance[i]);
      sum_bg_ew += err[i] * weight;
    }
  }

  constexpr double kEps = 2.220446049250313e-16;
  const double tpw = static_cast<double>(fg_count) - sum_fg_ew;
  const double fpw = sum_bg_ew;
  const double recall = 1.0 - sum_fg_ew / static_cast<double>(fg_count);
  const double precision = tpw / (kEps + tpw + fpw);
  return 2.0 * precision * recall / (kEps + precision + recall);
}

MetricsReport aggregate(const std::vector<PerImageMetrics>& records) {
  if (records.empty()) throw EmptyReportError("aggregate: no per-image records");
  MetricsReport report;
  report.per_image = records;
  std::int64_t valid = 0;
  for (const PerImageMetrics& r : records) {
    report.mean_mae += r.mae_value;
    if (r.excluded) {
      ++report.excluded_count;
      continue;
    }
    ++valid;
    report.mean_f_beta += r.f_beta;
    report.mean_weighted_f += r.weighted;
  }
  report.mean_mae /= static_cast<double>(records.size());
  if (valid == 0) throw EmptyReportError("aggregate: every image was excluded");
  report.mean_f_beta /= static_cast<double>(valid);
  report.mean_weighted_f /= static_cast<double>(valid);
  return report;
}

double pooled_f_beta(const std::vector<PerImageMetrics>& records) {
  Confusion pooled;
  bool any = false;
  for (const PerImageMetrics& r : records) {
    if (r.excluded) continue;
    any = true;
    pooled.tp += r.adaptive_confusion.tp;
    pooled.fp += r.adaptive_confusion.fp;
    pooled.fn += r.adaptive_confusion.fn;
    pooled.tn += r.adaptive_confusion.tn;
  }
  if (!any) throw EmptyReportError("pooled_f_beta: every image was excluded");
  return f_measure(pooled.precision(), pooled.recall());
}

}  // namespace dds
