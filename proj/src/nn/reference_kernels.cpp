#include "feddig/nn/reference_kernels.hpp"

namespace feddig::nn::reference {

namespace {

inline std::size_t idx4(int a, int b, int c, int d, int nb, int nc, int nd) {
  return ((static_cast<std::size_t>(a) * nb + b) * nc + c) * nd + d;
}

}  // namespace

void gemm(bool trans_a, bool trans_b, int m, int n, int k, Real alpha, const Real* a, const Real* b, Real beta,
          Real* c) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      Real s = 0.0;
      for (int p = 0; p < k; ++p) {
        const Real av = trans_a ? a[static_cast<std::size_t>(p) * m + i] : a[static_cast<std::size_t>(i) * k + p];
        const Real bv = trans_b ? b[static_cast<std::size_t>(j) * k + p] : b[static_cast<std::size_t>(p) * n + j];
        s += av * bv;
      }
      Real& cij = c[static_cast<std::size_t>(i) * n + j];
      cij = alpha * s + (beta == 0.0 ? 0.0 : beta * cij);
    }
  }
}

Tensor conv2d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias, const ConvGeometry& g) {
  const int n = x.dim(0);
  const int oh = g.out_height();
  const int ow = g.out_width();
  Tensor y({n, g.out_channels, oh, ow});
  for (int s = 0; s < n; ++s) {
    for (int co = 0; co < g.out_channels; ++co) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          Real acc = bias[static_cast<std::size_t>(co)];
          for (int ci = 0; ci < g.in_channels; ++ci) {
            for (int ki = 0; ki < g.kernel; ++ki) {
              for (int kj = 0; kj < g.kernel; ++kj) {
                const int iy = oy * g.stride - g.pad + ki;
                const int ix = ox * g.stride - g.pad + kj;
                if (iy < 0 || iy >= g.in_height || ix < 0 || ix >= g.in_width) continue;
                acc += weight[idx4(co, ci, ki, kj, g.in_channels, g.kernel, g.kernel)] *
                       x[idx4(s, ci, iy, ix, g.in_channels, g.in_height, g.in_width)];
              }
            }
          }
          y[idx4(s, co, oy, ox, g.out_channels, oh, ow)] = acc;
        }
      }
    }
  }
  return y;
}

Tensor conv2d_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out, const ConvGeometry& g,
                       Tensor& weight_grad, Tensor& bias_grad) {
  const int n = x.dim(0);
  const int oh = g.out_height();
  const int ow = g.out_width();
  Tensor dx(x.shape());
  for (int s = 0; s < n; ++s) {
    for (int co = 0; co < g.out_channels; ++co) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const Real d = grad_out[idx4(s, co, oy, ox, g.out_channels, oh, ow)];
          bias_grad[static_cast<std::size_t>(co)] += d;
          for (int ci = 0; ci < g.in_channels; ++ci) {
            for (int ki = 0; ki < g.kernel; ++ki) {
              for (int kj = 0; kj < g.kernel; ++kj) {
                const int iy = oy * g.stride - g.pad + ki;
                const int ix = ox * g.stride - g.pad + kj;
                if (iy < 0 || iy >= g.in_height || ix < 0 || ix >= g.in_width) continue;
                const auto wi = idx4(co, ci, ki, kj, g.in_channels, g.kernel, g.kernel);
                const auto xi = idx4(s, ci, iy, ix, g.in_channels, g.in_height, g.in_width);
                weight_grad[wi] += x[xi] * d;
                dx[xi] += weight[wi] * d;
              }
            }
          }
        }
      }
    }
  }
  return dx;
}

Tensor conv_transpose2d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias,
                                const TransposedGeometry& g) {
  const int n = x.dim(0);
  const int oh = g.out_height();
  const int ow = g.out_width();
  Tensor y({n, g.out_channels, oh, ow});
  for (int s = 0; s < n; ++s) {
    for (int co = 0; co < g.out_channels; ++co) {
      for (int p = 0; p < oh * ow; ++p) y[idx4(s, co, 0, p, g.out_channels, 1, oh * ow)] = bias[co];
    }
    for (int ci = 0; ci < g.in_channels; ++ci) {
      for (int iy = 0; iy < g.in_height; ++iy) {
        for (int ix = 0; ix < g.in_width; ++ix) {
          const Real v = x[idx4(s, ci, iy, ix, g.in_channels, g.in_height, g.in_width)];
          for (int co = 0; co < g.out_channels; ++co) {
            for (int ki = 0; ki < g.kernel; ++ki) {
              for (int kj = 0; kj < g.kernel; ++kj) {
                const int oy = iy * g.stride - g.pad + ki;
                const int ox = ix * g.stride - g.pad + kj;
                if (oy < 0 || oy >= oh || ox < 0 || ox >= ow) continue;
                y[idx4(s, co, oy, ox, g.out_channels, oh, ow)] +=
                    v * weight[idx4(ci, co, ki, kj, g.out_channels, g.kernel, g.kernel)];
              }
            }
          }
        }
      }
    }
  }
  return y;
}

Tensor conv_transpose2d_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out,
                                 const TransposedGeometry& g, Tensor& weight_grad, Tensor& bias_grad) {
  const int n = x.dim(0);
  const int oh = g.out_height();
  const int ow = g.out_width();
  Tensor dx(x.shape());
  for (int s = 0; s < n; ++s) {
    for (int co = 0; co < g.out_channels; ++co) {
      for (int p = 0; p < oh * ow; ++p) bias_grad[co] += grad_out[idx4(s, co, 0, p, g.out_channels, 1, oh * ow)];
    }
    for (int ci = 0; ci < g.in_channels; ++ci) {
      for (int iy = 0; iy < g.in_height; ++iy) {
        for (int ix = 0; ix < g.in_width; ++ix) {
          const auto xi = idx4(s, ci, iy, ix, g.in_channels, g.in_height, g.in_width);
          for (int co = 0; co < g.out_channels; ++co) {
            for (int ki = 0; ki < g.kernel; ++ki) {
              for (int kj = 0; kj < g.kernel; ++kj) {
                const int oy = iy * g.stride - g.pad + ki;
                const int ox = ix * g.stride - g.pad + kj;
                if (oy < 0 || oy >= oh || ox < 0 || ox >= ow) continue;
                const Real d = grad_out[idx4(s, co, oy, ox, g.out_channels, oh, ow)];
                const auto wi = idx4(ci, co, ki, kj, g.out_channels, g.kernel, g.kernel);
                dx[xi] += weight[wi] * d;
                weight_grad[wi] += x[xi] * d;
              }
            }
          }
        }
      }
    }
  }
  return dx;
}

Tensor dense_forward(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const int n = x.dim(0);
  const int out = weight.dim(0);
  const int in = weight.dim(1);
  Tensor y({n, out});
  for (int s = 0; s < n; ++s) {
    for (int o = 0; o < out; ++o) {
      Real acc = bias[o];
      for (int i = 0; i < in; ++i) acc += weight[static_cast<std::size_t>(o) * in + i] * x[static_cast<std::size_t>(s) * in + i];
      y[static_cast<std::size_t>(s) * out + o] = acc;
    }
  }
  return y;
}

Tensor dense_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out, Tensor& weight_grad,
                      Tensor& bias_grad) {
  const int n = x.dim(0);
  const int out = weight.dim(0);
  const int in = weight.dim(1);
  Tensor dx({n, in});
  for (int s = 0; s < n; ++s) {
    for (int o = 0; o < out; ++o) {
      const Real d = grad_out[static_cast<std::size_t>(s) * out + o];
      bias_grad[o] += d;
      for (int i = 0; i < in; ++i) {
        weight_grad[static_cast<std::size_t>(o) * in + i] += d * x[static_cast<std::size_t>(s) * in + i];
        dx[static_cast<std::size_t>(s) * in + i] += d * weight[static_cast<std::size_t>(o) * in + i];
      }
    }
  }
  return dx;
}

}  // namespace feddig::nn::reference
