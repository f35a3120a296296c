#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dds/image.hpp"

namespace dds {

constexpr double kFBetaSquared = 0.3;  // emphasizes precision over recall

/// Mean absolute error between a saliency map and a binary mask.
double mae(const SaliencyMap& pred, const BinaryMask& gt);

struct Confusion {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn); }
};

/// F-measure with beta^2 = 0.3; zero when the denominator vanishes.
double f_measure(double precision, double recall, double beta2 = kFBetaSquared);

/// Confusion counts of (255 * pred >= threshold) against gt.
Confusion confusion_at(const SaliencyMap& pred, const BinaryMask& gt, double threshold);

/// Adaptive threshold of a saliency map scaled into [0,255]: twice its
/// mean, clipped at 255.
double adaptive_threshold(const SaliencyMap& pred);

/// F-measure at the adaptive threshold. Throws UndefinedMetric for masks
/// without foreground (such images are excluded from aggregation).
double f_beta_adaptive(const SaliencyMap& pred, const BinaryMask& gt);

struct PrPoint {
  int threshold = 0;
  double precision = 0.0;
  double recall = 0.0;
};

/// Precision/recall with the threshold sliding over 0..255 (256 entries).
std::vector<PrPoint> pr_sweep(const SaliencyMap& pred, const BinaryMask& gt);

/// Dependency-weighted F-measure (beta^2 = 1): foreground errors borrow
/// from their neighborhood through a Gaussian, background errors decay
/// with distance to the ground truth. Throws UndefinedMetric on empty gt.
double weighted_f(const SaliencyMap& pred, const BinaryMask& gt);

/// Exact Euclidean distance transform: for every pixel, the distance to
/// the nearest seed (mask != 0) and that seed's coordinates.
struct DistanceTransform {
  std::vector<double> distance;   // row-major h x w
  std::vector<int> nearest_y, nearest_x;
};
DistanceTransform distance_transform(const BinaryMask& seeds);

struct PerImageMetrics {
  std::string id;
  double mae_value = 0.0;
  double f_beta = 0.0;
  double weighted = 0.0;
  bool excluded = false;  // empty ground truth: F-measures undefined
  Confusion adaptive_confusion;
};

struct MetricsReport {
  std::vector<PerImageMetrics> per_image;
  double mean_mae = 0.0;
  double mean_f_beta = 0.0;
  double mean_weighted_f = 0.0;
  int excluded_count = 0;
};

/// Arithmetic means over non-excluded images.
MetricsReport aggregate(const std::vector<PerImageMetrics>& records);

/// Alternative convention: pool adaptive-threshold confusion counts over
/// the whole dataset and compute one F-measure.
double pooled_f_beta(const std::vector<PerImageMetrics>& records);

}  // namespace dds
