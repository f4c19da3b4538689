#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "feddig/nn/kernels.hpp"
#include "feddig/nn/tensor.hpp"
#include "feddig/util/rng.hpp"

namespace feddig::nn {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

// Layers are value types: copying a layer copies its parameters and any
// activation cache. forward() caches what backward() needs; infer() does not.

class Conv2d {
 public:
  explicit Conv2d(kernels::ConvGeometry geometry);
  Tensor forward(const Tensor& x);
  Tensor infer(const Tensor& x) const;
  Tensor backward(const Tensor& grad_out);
  void initialize(util::Rng& rng);
  std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }
  Shape output_shape() const { return {geometry_.out_channels, geometry_.out_height(), geometry_.out_width()}; }
  const kernels::ConvGeometry& geometry() const { return geometry_; }

 private:
  kernels::ConvGeometry geometry_;
  Parameter weight_;
  Parameter bias_;
  Tensor input_;
};

class ConvTranspose2d {
 public:
  explicit ConvTranspose2d(kernels::TransposedGeometry geometry);
  Tensor forward(const Tensor& x);
  Tensor infer(const Tensor& x) const;
  Tensor backward(const Tensor& grad_out);
  void initialize(util::Rng& rng);
  std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }
  Shape output_shape() const { return {geometry_.out_channels, geometry_.out_height(), geometry_.out_width()}; }

 private:
  kernels::TransposedGeometry geometry_;
  Parameter weight_;
  Parameter bias_;
  Tensor input_;
};

class Dense {
 public:
  Dense(int in_features, int out_features);
  Tensor forward(const Tensor& x);
  Tensor infer(const Tensor& x) const;
  Tensor backward(const Tensor& grad_out);
  void initialize(util::Rng& rng);
  std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }
  Shape output_shape() const { return {weight_.value.dim(0)}; }

 private:
  Parameter weight_;
  Parameter bias_;
  Tensor input_;
};

class Relu {
 public:
  Tensor forward(const Tensor& x);
  Tensor infer(const Tensor& x) const;
  Tensor backward(const Tensor& grad_out);

 private:
  Tensor input_;
};

class Sigmoid {
 public:
  Tensor forward(const Tensor& x);
  Tensor infer(const Tensor& x) const;
  Tensor backward(const Tensor& grad_out);

 private:
  Tensor output_;
};

class MaxPool2d {
 public:
  Tensor forward(const Tensor& x);
  Tensor infer(const Tensor& x) const;
  Tensor backward(const Tensor& grad_out);

 private:
  Shape input_shape_;
  std::vector<int> argmax_;
};

// (N, ...) -> (N, prod(...)).
class Flatten {
 public:
  Tensor forward(const Tensor& x);
  Tensor infer(const Tensor& x) const;
  Tensor backward(const Tensor& grad_out);

 private:
  Shape input_shape_;
};

using Layer = std::variant<Conv2d, ConvTranspose2d, Dense, Relu, Sigmoid, MaxPool2d, Flatten>;

class Sequential {
 public:
  Sequential() = default;
  // `sample_shape` excludes the batch axis.
  Sequential(std::string name, Shape sample_shape, std::vector<Layer> layers);

  Tensor forward(const Tensor& x);
  Tensor infer(const Tensor& x) const;
  Tensor backward(const Tensor& grad_out);

  void initialize(std::uint64_t seed);
  void zero_grad();

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const;

  const std::string& name() const { return name_; }
  const Shape& sample_shape() const { return sample_shape_; }
  const Shape& output_shape() const { return output_shape_; }
  // "name:shape;..." over all parameters, used to compare architectures.
  std::string signature() const;

 private:
  void check_input(const Tensor& x) const;

  std::string name_;
  Shape sample_shape_;
  Shape output_shape_;
  std::vector<Layer> layers_;
};

}  // namespace feddig::nn
