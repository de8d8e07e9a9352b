#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace hypermv {

/// Dense row-major tensor of doubles with up to 4 axes.
/// Value-semantic: copy/move behave like std::vector.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> values);

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, double v);
  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const { return shape_[static_cast<size_t>(axis)]; }
  std::size_t size() const { return values_.size(); }
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  // 2-D accessors (rows x cols).
  double& at(int i, int j) { return values_[static_cast<size_t>(i) * dim(1) + j]; }
  double at(int i, int j) const { return values_[static_cast<size_t>(i) * dim(1) + j]; }

  int rows() const { return dim(0); }
  int cols() const { return dim(1); }

  void fill(double v);
  double max_abs() const;
  double sum() const;  // fixed left-to-right order

  std::string shape_str() const;

 private:
  std::vector<int> shape_;
  std::vector<double> values_;
};

std::size_t shape_count(const std::vector<int>& shape);

}  // namespace hypermv
