#include "feddig/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "feddig/error.hpp"

namespace feddig::nn {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    require(d >= 0, ErrorCategory::kContract, "negative tensor dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape shape, Real fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<Real> values) : shape_(std::move(shape)), data_(std::move(values)) {
  require(data_.size() == shape_size(shape_), ErrorCategory::kContract,
          "tensor value count does not match shape " + shape_string(shape_));
}

std::size_t Tensor::stride0() const {
  if (shape_.empty() || shape_[0] == 0) return 0;
  return data_.size() / static_cast<std::size_t>(shape_[0]);
}

std::span<Real> Tensor::slice0(int i) {
  const auto s = stride0();
  return std::span<Real>(data_).subspan(static_cast<std::size_t>(i) * s, s);
}

std::span<const Real> Tensor::slice0(int i) const {
  const auto s = stride0();
  return std::span<const Real>(data_).subspan(static_cast<std::size_t>(i) * s, s);
}

void Tensor::reshape(Shape shape) {
  require(shape_size(shape) == data_.size(), ErrorCategory::kContract,
          "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  shape_ = std::move(shape);
}

Tensor Tensor::reshaped(Shape shape) const {
  Tensor t = *this;
  t.reshape(std::move(shape));
  return t;
}

void Tensor::fill(Real value) { std::fill(data_.begin(), data_.end(), value); }

Tensor gather_rows(const Tensor& source, std::span<const int> rows) {
  Shape shape = source.shape();
  require(!shape.empty(), ErrorCategory::kContract, "gather_rows on a scalar");
  shape[0] = static_cast<int>(rows.size());
  Tensor out(shape);
  const auto stride = source.stride0();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] >= 0 && rows[r] < source.dim(0), ErrorCategory::kContract, "gather_rows index out of range");
    std::memcpy(out.data() + r * stride, source.data() + static_cast<std::size_t>(rows[r]) * stride,
                stride * sizeof(Real));
  }
  return out;
}

Tensor concat_features(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2 && a.dim(0) == b.dim(0), ErrorCategory::kContract,
          "concat_features expects two (N, F) tensors with equal N");
  const int n = a.dim(0);
  const int fa = a.dim(1);
  const int fb = b.dim(1);
  Tensor out({n, fa + fb});
  for (int i = 0; i < n; ++i) {
    std::copy_n(a.data() + static_cast<std::size_t>(i) * fa, fa, out.data() + static_cast<std::size_t>(i) * (fa + fb));
    std::copy_n(b.data() + static_cast<std::size_t>(i) * fb, fb,
                out.data() + static_cast<std::size_t>(i) * (fa + fb) + fa);
  }
  return out;
}

Real max_abs_diff(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), ErrorCategory::kContract, "max_abs_diff shape mismatch");
  Real m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool all_finite(std::span<const Real> values) {
  return std::all_of(values.begin(), values.end(), [](Real v) { return std::isfinite(v); });
}

}  // namespace feddig::nn
