#pragma once

#include <vector>

#include "feddig/nn/tensor.hpp"

// OpenMP-parallel compute kernels. Every kernel parallelizes over
// independent output elements only (batch samples or output rows), so results
// are bit-identical for any thread count. Serial reference versions live in
// reference_kernels.hpp and are used by the tests and the benchmark.
namespace feddig::nn::kernels {

struct ConvGeometry {
  int in_channels = 1;
  int in_height = 1;
  int in_width = 1;
  int out_channels = 1;
  int kernel = 1;
  int stride = 1;
  int pad = 0;

  int out_height() const { return (in_height + 2 * pad - kernel) / stride + 1; }
  int out_width() const { return (in_width + 2 * pad - kernel) / stride + 1; }
  int patch_size() const { return in_channels * kernel * kernel; }
  void validate() const;
};

struct TransposedGeometry {
  int in_channels = 1;
  int in_height = 1;
  int in_width = 1;
  int out_channels = 1;
  int kernel = 1;
  int stride = 1;
  int pad = 0;
  int output_pad = 0;

  int out_height() const { return (in_height - 1) * stride - 2 * pad + kernel + output_pad; }
  int out_width() const { return (in_width - 1) * stride - 2 * pad + kernel + output_pad; }
  // The convolution whose data-gradient this transposed convolution computes.
  ConvGeometry adjoint() const;
  void validate() const;
};

// C = alpha * op(A) * op(B) + beta * C, row-major. op(A) is m x k, op(B) is k x n.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, Real alpha, const Real* a, const Real* b, Real beta,
          Real* c, bool parallel = true);

void im2col(const Real* image, const ConvGeometry& g, Real* columns);
// Accumulates columns back into `image` (which must be pre-initialized).
void col2im(const Real* columns, const ConvGeometry& g, Real* image);

// x: (N, Cin, H, W); weight: (Cout, Cin, k, k); bias: (Cout).
Tensor conv2d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias, const ConvGeometry& g);
// Accumulates into weight_grad and bias_grad; returns the input gradient.
Tensor conv2d_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out, const ConvGeometry& g,
                       Tensor& weight_grad, Tensor& bias_grad);

// x: (N, Cin, H, W); weight: (Cin, Cout, k, k); bias: (Cout).
Tensor conv_transpose2d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias,
                                const TransposedGeometry& g);
Tensor conv_transpose2d_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out,
                                 const TransposedGeometry& g, Tensor& weight_grad, Tensor& bias_grad);

// x: (N, In); weight: (Out, In); bias: (Out).
Tensor dense_forward(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor dense_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out, Tensor& weight_grad,
                      Tensor& bias_grad);

// 2x2 max pooling with stride 2 (floor). `argmax` receives flat input offsets.
Tensor maxpool2_forward(const Tensor& x, std::vector<int>* argmax);
Tensor maxpool2_backward(const Shape& input_shape, const std::vector<int>& argmax, const Tensor& grad_out);

}  // namespace feddig::nn::kernels
