#include "feddig/nn/kernels.hpp"

#include <algorithm>
#include <vector>

#include "feddig/error.hpp"

namespace feddig::nn::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr long kParallelThreshold = 1L << 15;

void check_rank4(const Tensor& t, const char* what) {
  require(t.rank() == 4, ErrorCategory::kContract, std::string(what) + " must be rank 4, got " + shape_string(t.shape()));
}

}  // namespace

void ConvGeometry::validate() const {
  require(in_channels > 0 && out_channels > 0 && kernel > 0 && stride > 0 && pad >= 0, ErrorCategory::kContract,
          "invalid convolution geometry");
  require(out_height() > 0 && out_width() > 0, ErrorCategory::kContract, "convolution output would be empty");
}

ConvGeometry TransposedGeometry::adjoint() const {
  return ConvGeometry{out_channels, out_height(), out_width(), in_channels, kernel, stride, pad};
}

void TransposedGeometry::validate() const {
  require(in_channels > 0 && out_channels > 0 && kernel > 0 && stride > 0 && pad >= 0 && output_pad >= 0,
          ErrorCategory::kContract, "invalid transposed convolution geometry");
  require(output_pad < stride, ErrorCategory::kContract, "output padding must be smaller than the stride");
  const auto adj = adjoint();
  require(adj.out_height() == in_height && adj.out_width() == in_width, ErrorCategory::kContract,
          "transposed convolution geometry is not invertible");
}

void gemm(bool trans_a, bool trans_b, int m, int n, int k, Real alpha, const Real* a, const Real* b, Real beta,
          Real* c, bool parallel) {
  const bool par = parallel && static_cast<long>(m) * n * k > kParallelThreshold;
#pragma omp parallel for schedule(static) if (par)
  for (int i = 0; i < m; ++i) {
    Real* crow = c + static_cast<std::size_t>(i) * n;
    if (beta == 0.0) {
      std::fill(crow, crow + n, 0.0);
    } else if (beta != 1.0) {
      for (int j = 0; j < n; ++j) crow[j] *= beta;
    }
    if (!trans_a && !trans_b) {
      const Real* arow = a + static_cast<std::size_t>(i) * k;
      for (int p = 0; p < k; ++p) {
        const Real aip = alpha * arow[p];
        const Real* brow = b + static_cast<std::size_t>(p) * n;
        for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
    } else if (!trans_a && trans_b) {
      const Real* arow = a + static_cast<std::size_t>(i) * k;
      for (int j = 0; j < n; ++j) {
        const Real* brow = b + static_cast<std::size_t>(j) * k;
        Real s = 0.0;
        for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
        crow[j] += alpha * s;
      }
    } else if (trans_a && !trans_b) {
      for (int p = 0; p < k; ++p) {
        const Real aip = alpha * a[static_cast<std::size_t>(p) * m + i];
        const Real* brow = b + static_cast<std::size_t>(p) * n;
        for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
    } else {
      for (int j = 0; j < n; ++j) {
        const Real* brow = b + static_cast<std::size_t>(j) * k;
        Real s = 0.0;
        for (int p = 0; p < k; ++p) s += a[static_cast<std::size_t>(p) * m + i] * brow[p];
        crow[j] += alpha * s;
      }
    }
  }
}

void im2col(const Real* image, const ConvGeometry& g, Real* columns) {
  const int oh = g.out_height();
  const int ow = g.out_width();
  const int plane = oh * ow;
  for (int c = 0; c < g.in_channels; ++c) {
    const Real* src = image + static_cast<std::size_t>(c) * g.in_height * g.in_width;
    for (int ki = 0; ki < g.kernel; ++ki) {
      for (int kj = 0; kj < g.kernel; ++kj) {
        Real* dst = columns + static_cast<std::size_t>((c * g.kernel + ki) * g.kernel + kj) * plane;
        for (int y = 0; y < oh; ++y) {
          const int iy = y * g.stride - g.pad + ki;
          if (iy < 0 || iy >= g.in_height) {
            std::fill(dst + y * ow, dst + (y + 1) * ow, 0.0);
            continue;
          }
          for (int x = 0; x < ow; ++x) {
            const int ix = x * g.stride - g.pad + kj;
            dst[y * ow + x] = (ix >= 0 && ix < g.in_width) ? src[iy * g.in_width + ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const Real* columns, const ConvGeometry& g, Real* image) {
  const int oh = g.out_height();
  const int ow = g.out_width();
  const int plane = oh * ow;
  for (int c = 0; c < g.in_channels; ++c) {
    Real* dst = image + static_cast<std::size_t>(c) * g.in_height * g.in_width;
    for (int ki = 0; ki < g.kernel; ++ki) {
      for (int kj = 0; kj < g.kernel; ++kj) {
        const Real* src = columns + static_cast<std::size_t>((c * g.kernel + ki) * g.kernel + kj) * plane;
        for (int y = 0; y < oh; ++y) {
          const int iy = y * g.stride - g.pad + ki;
          if (iy < 0 || iy >= g.in_height) continue;
          for (int x = 0; x < ow; ++x) {
            const int ix = x * g.stride - g.pad + kj;
            if (ix >= 0 && ix < g.in_width) dst[iy * g.in_width + ix] += src[y * ow + x];
          }
        }
      }
    }
  }
}

Tensor conv2d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias, const ConvGeometry& g) {
  check_rank4(x, "conv2d input");
  require(x.dim(1) == g.in_channels && x.dim(2) == g.in_height && x.dim(3) == g.in_width, ErrorCategory::kContract,
          "conv2d input shape " + shape_string(x.shape()) + " does not match the layer geometry");
  const int n = x.dim(0);
  const int oh = g.out_height();
  const int ow = g.out_width();
  const int plane = oh * ow;
  const int patch = g.patch_size();
  Tensor y({n, g.out_channels, oh, ow});
  const std::size_t in_stride = x.stride0();
  const std::size_t out_stride = static_cast<std::size_t>(g.out_channels) * plane;
#pragma omp parallel
  {
    std::vector<Real> col(static_cast<std::size_t>(patch) * plane);
#pragma omp for schedule(static)
    for (int s = 0; s < n; ++s) {
      im2col(x.data() + s * in_stride, g, col.data());
      Real* out = y.data() + s * out_stride;
      gemm(false, false, g.out_channels, plane, patch, 1.0, weight.data(), col.data(), 0.0, out, false);
      for (int co = 0; co < g.out_channels; ++co) {
        const Real b = bias[static_cast<std::size_t>(co)];
        for (int p = 0; p < plane; ++p) out[co * plane + p] += b;
      }
    }
  }
  return y;
}

Tensor conv2d_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out, const ConvGeometry& g,
                       Tensor& weight_grad, Tensor& bias_grad) {
  const int n = x.dim(0);
  const int plane = g.out_height() * g.out_width();
  const int patch = g.patch_size();
  const std::size_t in_stride = x.stride0();
  const std::size_t out_stride = static_cast<std::size_t>(g.out_channels) * plane;
  Tensor dx(x.shape());

#pragma omp parallel
  {
    std::vector<Real> col(static_cast<std::size_t>(patch) * plane);
#pragma omp for schedule(static)
    for (int s = 0; s < n; ++s) {
      gemm(true, false, patch, plane, g.out_channels, 1.0, weight.data(), grad_out.data() + s * out_stride, 0.0,
           col.data(), false);
      col2im(col.data(), g, dx.data() + s * in_stride);
    }
  }

  std::vector<Real> col(static_cast<std::size_t>(patch) * plane);
  for (int s = 0; s < n; ++s) {
    im2col(x.data() + s * in_stride, g, col.data());
    gemm(false, true, g.out_channels, patch, plane, 1.0, grad_out.data() + s * out_stride, col.data(), 1.0,
         weight_grad.data());
  }
  for (int co = 0; co < g.out_channels; ++co) {
    Real acc = 0.0;
    for (int s = 0; s < n; ++s) {
      const Real* d = grad_out.data() + s * out_stride + static_cast<std::size_t>(co) * plane;
      for (int p = 0; p < plane; ++p) acc += d[p];
    }
    bias_grad[static_cast<std::size_t>(co)] += acc;
  }
  return dx;
}

Tensor conv_transpose2d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias,
                                const TransposedGeometry& g) {
  check_rank4(x, "conv_transpose2d input");
  require(x.dim(1) == g.in_channels && x.dim(2) == g.in_height && x.dim(3) == g.in_width, ErrorCategory::kContract,
          "conv_transpose2d input shape " + shape_string(x.shape()) + " does not match the layer geometry");
  const auto adj = g.adjoint();
  const int n = x.dim(0);
  const int in_plane = g.in_height * g.in_width;
  const int out_plane = g.out_height() * g.out_width();
  const int patch = adj.patch_size();
  Tensor y({n, g.out_channels, g.out_height(), g.out_width()});
  const std::size_t in_stride = x.stride0();
  const std::size_t out_stride = y.stride0();
#pragma omp parallel
  {
    std::vector<Real> col(static_cast<std::size_t>(patch) * in_plane);
#pragma omp for schedule(static)
    for (int s = 0; s < n; ++s) {
      gemm(true, false, patch, in_plane, g.in_channels, 1.0, weight.data(), x.data() + s * in_stride, 0.0,
           col.data(), false);
      Real* out = y.data() + s * out_stride;
      col2im(col.data(), adj, out);
      for (int co = 0; co < g.out_channels; ++co) {
        const Real b = bias[static_cast<std::size_t>(co)];
        for (int p = 0; p < out_plane; ++p) out[co * out_plane + p] += b;
      }
    }
  }
  return y;
}

Tensor conv_transpose2d_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out,
                                 const TransposedGeometry& g, Tensor& weight_grad, Tensor& bias_grad) {
  const auto adj = g.adjoint();
  const int n = x.dim(0);
  const int in_plane = g.in_height * g.in_width;
  const int out_plane = g.out_height() * g.out_width();
  const int patch = adj.patch_size();
  const std::size_t in_stride = x.stride0();
  const std::size_t out_stride = grad_out.stride0();
  Tensor dx(x.shape());
#pragma omp parallel
  {
    std::vector<Real> col(static_cast<std::size_t>(patch) * in_plane);
#pragma omp for schedule(static)
    for (int s = 0; s < n; ++s) {
      im2col(grad_out.data() + s * out_stride, adj, col.data());
      gemm(false, false, g.in_channels, in_plane, patch, 1.0, weight.data(), col.data(), 0.0,
           dx.data() + s * in_stride, false);
    }
  }
  std::vector<Real> col(static_cast<std::size_t>(patch) * in_plane);
  for (int s = 0; s < n; ++s) {
    im2col(grad_out.data() + s * out_stride, adj, col.data());
    gemm(false, true, g.in_channels, patch, in_plane, 1.0, x.data() + s * in_stride, col.data(), 1.0,
         weight_grad.data());
  }
  for (int co = 0; co < g.out_channels; ++co) {
    Real acc = 0.0;
    for (int s = 0; s < n; ++s) {
      const Real* d = grad_out.data() + s * out_stride + static_cast<std::size_t>(co) * out_plane;
      for (int p = 0; p < out_plane; ++p) acc += d[p];
    }
    bias_grad[static_cast<std::size_t>(co)] += acc;
  }
  return dx;
}

Tensor dense_forward(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require(x.rank() == 2 && x.dim(1) == weight.dim(1), ErrorCategory::kContract,
          "dense input shape " + shape_string(x.shape()) + " does not match weight " + shape_string(weight.shape()));
  const int n = x.dim(0);
  const int out = weight.dim(0);
  const int in = weight.dim(1);
  Tensor y({n, out});
  gemm(false, true, n, out, in, 1.0, x.data(), weight.data(), 0.0, y.data());
  for (int s = 0; s < n; ++s) {
    for (int o = 0; o < out; ++o) y[static_cast<std::size_t>(s) * out + o] += bias[static_cast<std::size_t>(o)];
  }
  return y;
}

Tensor dense_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out, Tensor& weight_grad,
                      Tensor& bias_grad) {
  const int n = x.dim(0);
  const int out = weight.dim(0);
  const int in = weight.dim(1);
  Tensor dx({n, in});
  gemm(false, false, n, in, out, 1.0, grad_out.data(), weight.data(), 0.0, dx.data());
  gemm(true, false, out, in, n, 1.0, grad_out.data(), x.data(), 1.0, weight_grad.data());
  for (int o = 0; o < out; ++o) {
    Real acc = 0.0;
    for (int s = 0; s < n; ++s) acc += grad_out[static_cast<std::size_t>(s) * out + o];
    bias_grad[static_cast<std::size_t>(o)] += acc;
  }
  return dx;
}

Tensor maxpool2_forward(const Tensor& x, std::vector<int>* argmax) {
  check_rank4(x, "maxpool input");
  const int n = x.dim(0);
  const int c = x.dim(1);
  const int h = x.dim(2);
  const int w = x.dim(3);
  const int oh = h / 2;
  const int ow = w / 2;
  require(oh > 0 && ow > 0, ErrorCategory::kContract, "maxpool input too small");
  Tensor y({n, c, oh, ow});
  if (argmax) argmax->assign(y.size(), 0);
  const int planes = n * c;
#pragma omp parallel for schedule(static) if (static_cast<long>(y.size()) > kParallelThreshold)
  for (int pl = 0; pl < planes; ++pl) {
    const std::size_t in_base = static_cast<std::size_t>(pl) * h * w;
    const std::size_t out_base = static_cast<std::size_t>(pl) * oh * ow;
    for (int i = 0; i < oh; ++i) {
      for (int j = 0; j < ow; ++j) {
        std::size_t best = in_base + static_cast<std::size_t>(2 * i) * w + 2 * j;
        for (int di = 0; di < 2; ++di) {
          for (int dj = 0; dj < 2; ++dj) {
            const std::size_t idx = in_base + static_cast<std::size_t>(2 * i + di) * w + 2 * j + dj;
            if (x[idx] > x[best]) best = idx;
          }
        }
        y[out_base + i * ow + j] = x[best];
        if (argmax) (*argmax)[out_base + i * ow + j] = static_cast<int>(best);
      }
    }
  }
  return y;
}

Tensor maxpool2_backward(const Shape& input_shape, const std::vector<int>& argmax, const Tensor& grad_out) {
  Tensor dx(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) dx[static_cast<std::size_t>(argmax[i])] += grad_out[i];
  return dx;
}

}  // namespace feddig::nn::kernels
