// OpenMP kernels against the serial reference, on shapes from the EMNIST
// models. Run with OMP_NUM_THREADS set to compare thread counts.

#include <benchmark/benchmark.h>

#include <random>

#include "feddig/nn/kernels.hpp"
#include "feddig/nn/losses.hpp"
#include "feddig/nn/models.hpp"
#include "feddig/nn/reference_kernels.hpp"

namespace {

using namespace feddig::nn;

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::normal_distribution<Real> g(0.0, 1.0);
  for (auto& v : t.values()) v = g(rng);
  return t;
}

template <bool Reference>
void BM_Gemm(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = random_tensor({n, n}, 1);
  const auto b = random_tensor({n, n}, 2);
  Tensor c({n, n});
  for (auto _ : state) {
    if constexpr (Reference) {
      reference::gemm(false, false, n, n, n, 1.0, a.data(), b.data(), 0.0, c.data());
    } else {
      kernels::gemm(false, false, n, n, n, 1.0, a.data(), b.data(), 0.0, c.data());
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * 2LL * n * n * n);
}
BENCHMARK(BM_Gemm<false>)->Name("gemm/omp")->Arg(64)->Arg(256);
BENCHMARK(BM_Gemm<true>)->Name("gemm/reference")->Arg(64)->Arg(256);

// First encoder convolution: 1x28x28 -> 16 channels, 3x3, stride 1, pad 1.
kernels::ConvGeometry conv_geometry() { return {1, 28, 28, 16, 3, 1, 1}; }

template <bool Reference>
void BM_Conv2d(benchmark::State& state) {
  const auto g = conv_geometry();
  const int batch = static_cast<int>(state.range(0));
  const auto x = random_tensor({batch, g.in_channels, g.in_height, g.in_width}, 3);
  const auto w = random_tensor({g.out_channels, g.in_channels, g.kernel, g.kernel}, 4);
  const auto b = random_tensor({g.out_channels}, 5);
  Tensor wg(w.shape());
  Tensor bg(b.shape());
  for (auto _ : state) {
    if constexpr (Reference) {
      const auto y = reference::conv2d_forward(x, w, b, g);
      benchmark::DoNotOptimize(reference::conv2d_backward(x, w, y, g, wg, bg).data());
    } else {
      const auto y = kernels::conv2d_forward(x, w, b, g);
      benchmark::DoNotOptimize(kernels::conv2d_backward(x, w, y, g, wg, bg).data());
    }
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_Conv2d<false>)->Name("conv2d_fwd_bwd/omp")->Arg(32);
BENCHMARK(BM_Conv2d<true>)->Name("conv2d_fwd_bwd/reference")->Arg(32);

// Guidance decoder upsampling: 4x8x8 -> 8x16x16, 4x4, stride 2, pad 1.
kernels::TransposedGeometry transposed_geometry() { return {4, 8, 8, 8, 4, 2, 1, 0}; }

template <bool Reference>
void BM_ConvTranspose2d(benchmark::State& state) {
  const auto g = transposed_geometry();
  const int batch = static_cast<int>(state.range(0));
  const auto x = random_tensor({batch, g.in_channels, g.in_height, g.in_width}, 6);
  const auto w = random_tensor({g.in_channels, g.out_channels, g.kernel, g.kernel}, 7);
  const auto b = random_tensor({g.out_channels}, 8);
  Tensor wg(w.shape());
  Tensor bg(b.shape());
  for (auto _ : state) {
    if constexpr (Reference) {
      const auto y = reference::conv_transpose2d_forward(x, w, b, g);
      benchmark::DoNotOptimize(reference::conv_transpose2d_backward(x, w, y, g, wg, bg).data());
    } else {
      const auto y = kernels::conv_transpose2d_forward(x, w, b, g);
      benchmark::DoNotOptimize(kernels::conv_transpose2d_backward(x, w, y, g, wg, bg).data());
    }
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_ConvTranspose2d<false>)->Name("conv_transpose2d_fwd_bwd/omp")->Arg(32);
BENCHMARK(BM_ConvTranspose2d<true>)->Name("conv_transpose2d_fwd_bwd/reference")->Arg(32);

template <bool Reference>
void BM_Dense(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  const auto x = random_tensor({batch, 512}, 9);
  const auto w = random_tensor({62, 512}, 10);
  const auto b = random_tensor({62}, 11);
  Tensor wg(w.shape());
  Tensor bg(b.shape());
  for (auto _ : state) {
    if constexpr (Reference) {
      const auto y = reference::dense_forward(x, w, b);
      benchmark::DoNotOptimize(reference::dense_backward(x, w, y, wg, bg).data());
    } else {
      const auto y = kernels::dense_forward(x, w, b);
      benchmark::DoNotOptimize(kernels::dense_backward(x, w, y, wg, bg).data());
    }
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_Dense<false>)->Name("dense_fwd_bwd/omp")->Arg(256);
BENCHMARK(BM_Dense<true>)->Name("dense_fwd_bwd/reference")->Arg(256);

// One client minibatch step of the EMNIST classifier (OpenMP kernels only).
void BM_ClientStep(benchmark::State& state) {
  const auto arch = make_architecture(ArchFamily::kEmnist, 62);
  auto model = arch.make_classifier();
  model.initialize(1);
  const int batch = static_cast<int>(state.range(0));
  Shape raw_shape{batch};
  raw_shape.insert(raw_shape.end(), arch.image_shape.begin(), arch.image_shape.end());
  Shape feat_shape{batch};
  feat_shape.insert(feat_shape.end(), arch.feature_shape.begin(), arch.feature_shape.end());
  auto raw = random_tensor(raw_shape, 12);
  auto enc = random_tensor(feat_shape, 13);
  for (auto& v : enc.values()) v = std::abs(v);
  std::vector<int> labels(static_cast<std::size_t>(batch));
  for (int i = 0; i < batch; ++i) labels[static_cast<std::size_t>(i)] = i % 62;
  const auto y = one_hot(labels, 62);
  for (auto _ : state) {
    model.zero_grad();
    benchmark::DoNotOptimize(loss_client_avail(model, raw, enc, y));
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_ClientStep)->Name("emnist_client_minibatch")->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
