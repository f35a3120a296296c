#include "dds/png_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>

namespace dds {

Tensor read_image_png(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw MalformedImageError("cannot read image " + path.string());
  Tensor t({3, bgr.rows, bgr.cols});
  for (int y = 0; y < bgr.rows; ++y) {
    const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      t.at(0, y, x) = row[x][2] / 255.0;  // OpenCV stores BGR
      t.at(1, y, x) = row[x][1] / 255.0;
      t.at(2, y, x) = row[x][0] / 255.0;
    }
  }
  return t;
}

BinaryMask read_mask_png(const std::filesystem::path& path) {
  cv::Mat gray = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (gray.empty()) throw MalformedImageError("cannot read mask " + path.string());
  BinaryMask m(gray.rows, gray.cols);
  for (int y = 0; y < gray.rows; ++y) {
    const std::uint8_t* row = gray.ptr<std::uint8_t>(y);
    for (int x = 0; x < gray.cols; ++x) m.at(y, x) = row[x] >= 128 ? 1 : 0;
  }
  return m;
}

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void write_png(const std::filesystem::path& path, const cv::Mat& mat) {
  if (!cv::imwrite(path.string(), mat))
    throw DataError("cannot write " + path.string());
}

}  // namespace

void write_image_png(const std::filesystem::path& path, const Tensor& rgb) {
  if (rgb.ndim() != 3 || rgb.dim(0) != 3)
    throw MalformedImageError("write_image_png: raster must be (3, H, W)");
  cv::Mat bgr(rgb.dim(1), rgb.dim(2), CV_8UC3);
  for (int y = 0; y < bgr.rows; ++y) {
    cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      row[x][2] = to_byte(rgb.at(0, y, x));
      row[x][1] = to_byte(rgb.at(1, y, x));
      row[x][0] = to_byte(rgb.at(2, y, x));
    }
  }
  write_png(path, bgr);
}

void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask) {
  cv::Mat gray(mask.height, mask.width, CV_8UC1);
  for (int y = 0; y < mask.height; ++y) {
    std::uint8_t* row = gray.ptr<std::uint8_t>(y);
    for (int x = 0; x < mask.width; ++x) row[x] = mask.at(y, x) ? 255 : 0;
  }
  write_png(path, gray);
}

void write_saliency_png(const std::filesystem::path& path, const SaliencyMap& map) {
  cv::Mat gray(map.height(), map.width(), CV_8UC1);
  for (int y = 0; y < map.height(); ++y) {
    std::uint8_t* row = gray.ptr<std::uint8_t>(y);
    for (int x = 0; x < map.width(); ++x) row[x] = to_byte(map.values.at(y, x));
  }
  write_png(path, gray);
}

}  // namespace dds
