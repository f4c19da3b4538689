#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace feddig::nn {

using Real = double;
using Shape = std::vector<int>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major tensor. Activations are NCHW, dense features are (N, F).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = 0.0);
  Tensor(Shape shape, std::vector<Real> values);

  const Shape& shape() const noexcept { return shape_; }
  int rank() const noexcept { return static_cast<int>(shape_.size()); }
  int dim(int axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  Real* data() noexcept { return data_.data(); }
  const Real* data() const noexcept { return data_.data(); }
  std::span<Real> values() noexcept { return data_; }
  std::span<const Real> values() const noexcept { return data_; }

  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }

  // Elements per leading-axis slice.
  std::size_t stride0() const;
  std::span<Real> slice0(int i);
  std::span<const Real> slice0(int i) const;

  void reshape(Shape shape);
  Tensor reshaped(Shape shape) const;
  void fill(Real value);

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<Real> data_;
};

// Rows `rows` of a tensor, gathered along axis 0.
Tensor gather_rows(const Tensor& source, std::span<const int> rows);

// Concatenates two (N, F) tensors along the feature axis.
Tensor concat_features(const Tensor& a, const Tensor& b);

Real max_abs_diff(const Tensor& a, const Tensor& b);
bool all_finite(std::span<const Real> values);

}  // namespace feddig::nn
