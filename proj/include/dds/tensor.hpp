#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

#include "dds/common.hpp"

namespace dds {

/// Dense row-major tensor of doubles. Rank is dynamic (1..4 in practice);
/// feature maps use (channels, height, width) order.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    std::int64_t n = 1;
    for (int d : shape_) {
      if (d <= 0) throw Error("Tensor: non-positive dimension");
      n *= d;
    }
    data_.assign(static_cast<std::size_t>(n), 0.0);
  }

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<int> shape, double v) {
    Tensor t(std::move(shape));
    t.fill(v);
    return t;
  }

  const std::vector<int>& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  double& at(int a, int b) { return data_[idx2(a, b)]; }
  double at(int a, int b) const { return data_[idx2(a, b)]; }
  double& at(int a, int b, int c) { return data_[idx3(a, b, c)]; }
  double at(int a, int b, int c) const { return data_[idx3(a, b, c)]; }
  double& at(int a, int b, int c, int d) { return data_[idx4(a, b, c, d)]; }
  double at(int a, int b, int c, int d) const { return data_[idx4(a, b, c, d)]; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  /// this += alpha * other (shapes must match).
  void add_scaled(const Tensor& o, double alpha) {
    if (!same_shape(o)) throw Error("Tensor::add_scaled: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += alpha * o.data_[i];
  }

 private:
  std::size_t idx2(int a, int b) const {
    return static_cast<std::size_t>(a) * shape_[1] + b;
  }
  std::size_t idx3(int a, int b, int c) const {
    return (static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c;
  }
  std::size_t idx4(int a, int b, int c, int d) const {
    return ((static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c) * shape_[3] + d;
  }

  std::vector<int> shape_;
  std::vector<double> data_;
};

}  // namespace dds
