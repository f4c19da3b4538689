#pragma once

#include "feddig/nn/kernels.hpp"

// Direct-loop serial implementations of the kernels in kernels.hpp. They are
// slow and obviously correct; tests and the benchmark compare against them.
namespace feddig::nn::reference {

using kernels::ConvGeometry;
using kernels::TransposedGeometry;

void gemm(bool trans_a, bool trans_b, int m, int n, int k, Real alpha, const Real* a, const Real* b, Real beta,
          Real* c);

Tensor conv2d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias, const ConvGeometry& g);
Tensor conv2d_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out, const ConvGeometry& g,
                       Tensor& weight_grad, Tensor& bias_grad);

Tensor conv_transpose2d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias,
                                const TransposedGeometry& g);
Tensor conv_transpose2d_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out,
                                 const TransposedGeometry& g, Tensor& weight_grad, Tensor& bias_grad);

Tensor dense_forward(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor dense_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out, Tensor& weight_grad,
                      Tensor& bias_grad);

}  // namespace feddig::nn::reference
