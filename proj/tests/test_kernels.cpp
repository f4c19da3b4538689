#include <gtest/gtest.h>
#include <omp.h>

#include <random>

#include "feddig/nn/kernels.hpp"
#include "feddig/nn/layers.hpp"
#include "feddig/nn/reference_kernels.hpp"
#include "support.hpp"

namespace feddig {
namespace {

using namespace nn;
using kernels::ConvGeometry;
using kernels::TransposedGeometry;
using testing::random_tensor;

constexpr Real kTol = 1e-10;

ConvGeometry random_conv(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> ch(1, 4), sz(3, 9), k(1, 4), s(1, 2), p(0, 2);
  ConvGeometry g;
  g.in_channels = ch(rng);
  g.out_channels = ch(rng);
  g.kernel = k(rng);
  g.in_height = std::max(g.kernel, sz(rng));
  g.in_width = std::max(g.kernel, sz(rng));
  g.stride = s(rng);
  g.pad = std::min(p(rng), g.kernel - 1);
  return g;
}

TEST(Kernels, GemmMatchesReferenceForAllTransposes) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 40; ++trial) {
    std::uniform_int_distribution<int> d(1, 33);
    const int m = d(rng), n = d(rng), k = d(rng);
    const bool ta = trial % 2, tb = (trial / 2) % 2;
    const auto a = random_tensor({m * k}, rng);
    const auto b = random_tensor({k * n}, rng);
    auto c1 = random_tensor({m * n}, rng);
    auto c2 = c1;
    kernels::gemm(ta, tb, m, n, k, 0.7, a.data(), b.data(), 0.3, c1.data());
    reference::gemm(ta, tb, m, n, k, 0.7, a.data(), b.data(), 0.3, c2.data());
    EXPECT_LT(max_abs_diff(c1, c2), kTol) << m << "x" << n << "x" << k;
  }
}

TEST(Kernels, Conv2dMatchesReference) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 40; ++trial) {
    const auto g = random_conv(rng);
    const int batch = 1 + trial % 3;
    const auto x = random_tensor({batch, g.in_channels, g.in_height, g.in_width}, rng);
    const auto w = random_tensor({g.out_channels, g.in_channels, g.kernel, g.kernel}, rng);
    const auto b = random_tensor({g.out_channels}, rng);
    const auto y1 = kernels::conv2d_forward(x, w, b, g);
    const auto y2 = reference::conv2d_forward(x, w, b, g);
    ASSERT_EQ(y1.shape(), y2.shape());
    EXPECT_LT(max_abs_diff(y1, y2), kTol);

    const auto gy = random_tensor(y1.shape(), rng);
    Tensor wg1(w.shape()), bg1(b.shape()), wg2(w.shape()), bg2(b.shape());
    const auto gx1 = kernels::conv2d_backward(x, w, gy, g, wg1, bg1);
    const auto gx2 = reference::conv2d_backward(x, w, gy, g, wg2, bg2);
    EXPECT_LT(max_abs_diff(gx1, gx2), kTol);
    EXPECT_LT(max_abs_diff(wg1, wg2), kTol);
    EXPECT_LT(max_abs_diff(bg1, bg2), kTol);
  }
}

TEST(Kernels, ConvTransposeMatchesReference) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    std::uniform_int_distribution<int> ch(1, 4), sz(2, 6), k(1, 5), s(1, 2);
    TransposedGeometry g;
    g.in_channels = ch(rng);
    g.out_channels = ch(rng);
    g.in_height = sz(rng);
    g.in_width = sz(rng);
    g.kernel = k(rng);
    g.stride = s(rng);
    g.pad = std::uniform_int_distribution<int>(0, g.kernel - 1)(rng) / 2;
    g.output_pad = g.stride > 1 ? trial % 2 : 0;
    if (g.out_height() < 1 || g.out_width() < 1) continue;
    const int batch = 1 + trial % 2;
    const auto x = random_tensor({batch, g.in_channels, g.in_height, g.in_width}, rng);
    const auto w = random_tensor({g.in_channels, g.out_channels, g.kernel, g.kernel}, rng);
    const auto b = random_tensor({g.out_channels}, rng);
    const auto y1 = kernels::conv_transpose2d_forward(x, w, b, g);
    const auto y2 = reference::conv_transpose2d_forward(x, w, b, g);
    ASSERT_EQ(y1.shape(), y2.shape());
    EXPECT_LT(max_abs_diff(y1, y2), kTol);

    const auto gy = random_tensor(y1.shape(), rng);
    Tensor wg1(w.shape()), bg1(b.shape()), wg2(w.shape()), bg2(b.shape());
    const auto gx1 = kernels::conv_transpose2d_backward(x, w, gy, g, wg1, bg1);
    const auto gx2 = reference::conv_transpose2d_backward(x, w, gy, g, wg2, bg2);
    EXPECT_LT(max_abs_diff(gx1, gx2), kTol);
    EXPECT_LT(max_abs_diff(wg1, wg2), kTol);
    EXPECT_LT(max_abs_diff(bg1, bg2), kTol);
  }
}

TEST(Kernels, DenseMatchesReference) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<int> d(1, 40);
    const int n = d(rng), in = d(rng), out = d(rng);
    const auto x = random_tensor({n, in}, rng);
    const auto w = random_tensor({out, in}, rng);
    const auto b = random_tensor({out}, rng);
    EXPECT_LT(max_abs_diff(kernels::dense_forward(x, w, b), reference::dense_forward(x, w, b)), kTol);
    const auto gy = random_tensor({n, out}, rng);
    Tensor wg1(w.shape()), bg1(b.shape()), wg2(w.shape()), bg2(b.shape());
    const auto gx1 = kernels::dense_backward(x, w, gy, wg1, bg1);
    const auto gx2 = reference::dense_backward(x, w, gy, wg2, bg2);
    EXPECT_LT(max_abs_diff(gx1, gx2), kTol);
    EXPECT_LT(max_abs_diff(wg1, wg2), kTol);
    EXPECT_LT(max_abs_diff(bg1, bg2), kTol);
  }
}

TEST(Kernels, MaxPoolRoutesGradientToArgmax) {
  std::mt19937_64 rng(5);
  const auto x = random_tensor({2, 3, 5, 4}, rng);
  std::vector<int> argmax;
  const auto y = kernels::maxpool2_forward(x, &argmax);
  ASSERT_EQ(y.shape(), (Shape{2, 3, 2, 2}));
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(y[i], x[static_cast<std::size_t>(argmax[i])]);
  Tensor gy(y.shape(), 1.0);
  const auto gx = kernels::maxpool2_backward(x.shape(), argmax, gy);
  Real total = 0.0;
  for (Real v : gx.values()) total += v;
  EXPECT_DOUBLE_EQ(total, static_cast<Real>(y.size()));
}

TEST(Kernels, ResultsIndependentOfThreadCount) {
  std::mt19937_64 rng(6);
  const ConvGeometry g{3, 12, 12, 8, 3, 1, 1};
  const auto x = random_tensor({6, 3, 12, 12}, rng);
  const auto w = random_tensor({8, 3, 3, 3}, rng);
  const auto b = random_tensor({8}, rng);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = kernels::conv2d_forward(x, w, b, g);
  omp_set_num_threads(4);
  const auto four = kernels::conv2d_forward(x, w, b, g);
  omp_set_num_threads(saved);
  EXPECT_EQ(one, four);
}

// Finite-difference check of a whole Sequential through every layer type.
TEST(Layers, SequentialGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  Sequential net("probe", {2, 6, 6},
                 {Conv2d(ConvGeometry{2, 6, 6, 3, 3, 1, 1}), Relu{}, MaxPool2d{},
                  ConvTranspose2d(TransposedGeometry{3, 3, 3, 2, 2, 1, 0, 0}), Sigmoid{}, Flatten{}, Dense(32, 3)});
  net.initialize(11);
  const auto x = random_tensor({2, 2, 6, 6}, rng);
  const auto target = random_tensor({2, 3}, rng);
  auto loss = [&] {
    const auto y = net.infer(x);
    Real s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += 0.5 * (y[i] - target[i]) * (y[i] - target[i]);
    return s;
  };
  net.zero_grad();
  const auto y = net.forward(x);
  Tensor gy(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) gy[i] = y[i] - target[i];
  net.backward(gy);
  const auto params = net.parameters();
  EXPECT_LT(testing::relative_error(testing::flat_grads(params), testing::numeric_gradient(params, loss)), 1e-6);
}

}  // namespace
}  // namespace feddig
