#include "feddig/nn/layers.hpp"

#include <cmath>
#include <sstream>

#include "feddig/error.hpp"

namespace feddig::nn {

namespace {

void uniform_fill(Tensor& t, Real bound, util::Rng& rng) {
  std::uniform_real_distribution<Real> dist(-bound, bound);
  for (auto& v : t.values()) v = dist(rng);
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Shape propagate(const Layer& layer, const Shape& in) {
  return std::visit(
      Overloaded{
          [&](const Conv2d& l) {
            const auto& g = l.geometry();
            require(in == Shape{g.in_channels, g.in_height, g.in_width}, ErrorCategory::kContract,
                    "conv2d expects input " + shape_string({g.in_channels, g.in_height, g.in_width}) + ", got " +
                        shape_string(in));
            return l.output_shape();
          },
          [&](const ConvTranspose2d& l) { return l.output_shape(); },
          [&](const Dense& l) {
            require(in.size() == 1, ErrorCategory::kContract, "dense layer expects a flat input");
            return l.output_shape();
          },
          [&](const MaxPool2d&) {
            require(in.size() == 3, ErrorCategory::kContract, "maxpool expects (C, H, W)");
            return Shape{in[0], in[1] / 2, in[2] / 2};
          },
          [&](const Flatten&) { return Shape{static_cast<int>(shape_size(in))}; },
          [&](const auto&) { return in; },
      },
      layer);
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(kernels::ConvGeometry geometry) : geometry_(geometry) {
  geometry_.validate();
  const Shape ws{geometry_.out_channels, geometry_.in_channels, geometry_.kernel, geometry_.kernel};
  weight_ = {"weight", Tensor(ws), Tensor(ws)};
  bias_ = {"bias", Tensor({geometry_.out_channels}), Tensor({geometry_.out_channels})};
}

Tensor Conv2d::forward(const Tensor& x) {
  input_ = x;
  return infer(x);
}

Tensor Conv2d::infer(const Tensor& x) const {
  return kernels::conv2d_forward(x, weight_.value, bias_.value, geometry_);
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  return kernels::conv2d_backward(input_, weight_.value, grad_out, geometry_, weight_.grad, bias_.grad);
}

void Conv2d::initialize(util::Rng& rng) {
  const Real bound = 1.0 / std::sqrt(static_cast<Real>(geometry_.patch_size()));
  uniform_fill(weight_.value, bound, rng);
  uniform_fill(bias_.value, bound, rng);
}

// ------------------------------------------------------- ConvTranspose2d

ConvTranspose2d::ConvTranspose2d(kernels::TransposedGeometry geometry) : geometry_(geometry) {
  geometry_.validate();
  const Shape ws{geometry_.in_channels, geometry_.out_channels, geometry_.kernel, geometry_.kernel};
  weight_ = {"weight", Tensor(ws), Tensor(ws)};
  bias_ = {"bias", Tensor({geometry_.out_channels}), Tensor({geometry_.out_channels})};
}

Tensor ConvTranspose2d::forward(const Tensor& x) {
  input_ = x;
  return infer(x);
}

Tensor ConvTranspose2d::infer(const Tensor& x) const {
  return kernels::conv_transpose2d_forward(x, weight_.value, bias_.value, geometry_);
}

Tensor ConvTranspose2d::backward(const Tensor& grad_out) {
  return kernels::conv_transpose2d_backward(input_, weight_.value, grad_out, geometry_, weight_.grad, bias_.grad);
}

void ConvTranspose2d::initialize(util::Rng& rng) {
  const Real fan_in = static_cast<Real>(geometry_.out_channels * geometry_.kernel * geometry_.kernel);
  const Real bound = 1.0 / std::sqrt(fan_in);
  uniform_fill(weight_.value, bound, rng);
  uniform_fill(bias_.value, bound, rng);
}

// ----------------------------------------------------------------- Dense

Dense::Dense(int in_features, int out_features) {
  require(in_features > 0 && out_features > 0, ErrorCategory::kContract, "dense layer needs positive widths");
  weight_ = {"weight", Tensor({out_features, in_features}), Tensor({out_features, in_features})};
  bias_ = {"bias", Tensor({out_features}), Tensor({out_features})};
}

Tensor Dense::forward(const Tensor& x) {
  input_ = x;
  return infer(x);
}

Tensor Dense::infer(const Tensor& x) const { return kernels::dense_forward(x, weight_.value, bias_.value); }

Tensor Dense::backward(const Tensor& grad_out) {
  return kernels::dense_backward(input_, weight_.value, grad_out, weight_.grad, bias_.grad);
}

void Dense::initialize(util::Rng& rng) {
  const Real bound = 1.0 / std::sqrt(static_cast<Real>(weight_.value.dim(1)));
  uniform_fill(weight_.value, bound, rng);
  uniform_fill(bias_.value, bound, rng);
}

// ----------------------------------------------------------- activations

Tensor Relu::forward(const Tensor& x) {
  input_ = x;
  return infer(x);
}

Tensor Relu::infer(const Tensor& x) const {
  Tensor y = x;
  for (auto& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor Relu::backward(const Tensor& grad_out) {
  Tensor dx = grad_out;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!(input_[i] > 0.0)) dx[i] = 0.0;
  }
  return dx;
}

Tensor Sigmoid::forward(const Tensor& x) {
  output_ = infer(x);
  return output_;
}

Tensor Sigmoid::infer(const Tensor& x) const {
  Tensor y = x;
  for (auto& v : y.values()) v = 1.0 / (1.0 + std::exp(-v));
  return y;
}

Tensor Sigmoid::backward(const Tensor& grad_out) {
  Tensor dx = grad_out;
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= output_[i] * (1.0 - output_[i]);
  return dx;
}

Tensor MaxPool2d::forward(const Tensor& x) {
  input_shape_ = x.shape();
  return kernels::maxpool2_forward(x, &argmax_);
}

Tensor MaxPool2d::infer(const Tensor& x) const { return kernels::maxpool2_forward(x, nullptr); }

Tensor MaxPool2d::backward(const Tensor& grad_out) {
  return kernels::maxpool2_backward(input_shape_, argmax_, grad_out);
}

Tensor Flatten::forward(const Tensor& x) {
  input_shape_ = x.shape();
  return infer(x);
}

Tensor Flatten::infer(const Tensor& x) const {
  const int n = x.dim(0);
  return x.reshaped({n, static_cast<int>(x.size() / static_cast<std::size_t>(std::max(n, 1)))});
}

Tensor Flatten::backward(const Tensor& grad_out) { return grad_out.reshaped(input_shape_); }

// ------------------------------------------------------------ Sequential

Sequential::Sequential(std::string name, Shape sample_shape, std::vector<Layer> layers)
    : name_(std::move(name)), sample_shape_(std::move(sample_shape)), layers_(std::move(layers)) {
  Shape shape = sample_shape_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    shape = propagate(layers_[i], shape);
    std::visit(Overloaded{[&](auto& l) {
                 if constexpr (requires { l.parameters(); }) {
                   for (Parameter* p : l.parameters()) p->name = name_ + "." + std::to_string(i) + "." + p->name;
                 }
               }},
               layers_[i]);
  }
  output_shape_ = shape;
}

void Sequential::check_input(const Tensor& x) const {
  require(x.rank() == static_cast<int>(sample_shape_.size()) + 1, ErrorCategory::kContract,
          name_ + " expects a batch of " + shape_string(sample_shape_) + ", got " + shape_string(x.shape()));
  for (std::size_t i = 0; i < sample_shape_.size(); ++i) {
    require(x.dim(static_cast<int>(i) + 1) == sample_shape_[i], ErrorCategory::kContract,
            name_ + " expects a batch of " + shape_string(sample_shape_) + ", got " + shape_string(x.shape()));
  }
}

Tensor Sequential::forward(const Tensor& x) {
  check_input(x);
  Tensor h = x;
  for (auto& layer : layers_) h = std::visit([&](auto& l) { return l.forward(h); }, layer);
  return h;
}

Tensor Sequential::infer(const Tensor& x) const {
  check_input(x);
  Tensor h = x;
  for (const auto& layer : layers_) h = std::visit([&](const auto& l) { return l.infer(h); }, layer);
  return h;
}

Tensor Sequential::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    g = std::visit([&](auto& l) { return l.backward(g); }, *it);
  }
  return g;
}

void Sequential::initialize(std::uint64_t seed) {
  util::Rng rng(seed);
  for (auto& layer : layers_) {
    std::visit(
        [&](auto& l) {
          if constexpr (requires { l.initialize(rng); }) l.initialize(rng);
        },
        layer);
  }
}

void Sequential::zero_grad() {
  for (Parameter* p : parameters()) p->grad.fill(0.0);
}

std::vector<Parameter*> Sequential::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_) {
    std::visit(
        [&](auto& l) {
          if constexpr (requires { l.parameters(); }) {
            for (Parameter* p : l.parameters()) out.push_back(p);
          }
        },
        layer);
  }
  return out;
}

std::vector<const Parameter*> Sequential::parameters() const {
  auto params = const_cast<Sequential*>(this)->parameters();
  return {params.begin(), params.end()};
}

std::size_t Sequential::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += p->value.size();
  return n;
}

std::string Sequential::signature() const {
  std::ostringstream os;
  for (const Parameter* p : parameters()) os << p->name << ':' << shape_string(p->value.shape()) << ';';
  return os.str();
}

}  // namespace feddig::nn
