#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "feddig/nn/losses.hpp"
#include "feddig/nn/models.hpp"
#include "oracles/gradient_check.hpp"
#include "support.hpp"

namespace feddig {
namespace {

using namespace nn;
using kernels::ConvGeometry;
using kernels::TransposedGeometry;
using testing::flat_grads;
using testing::numeric_gradient;
using testing::random_tensor;
using testing::relative_error;

TEST(Losses, PerfectPredictionHasNearZeroLoss) {
  Tensor logits({2, 3}, std::vector<Real>{50, 0, 0, 0, 0, 50});
  const std::vector<int> labels{0, 2};
  EXPECT_LT(soft_cross_entropy(logits, one_hot(labels, 3)).loss, 1e-12);
}

TEST(Losses, UniformLogitsGiveLogK) {
  const int k = 62;
  Tensor logits({3, k}, 0.0);
  const std::vector<int> labels{0, 17, 61};
  EXPECT_NEAR(soft_cross_entropy(logits, one_hot(labels, k)).loss, std::log(62.0), 1e-12);
  EXPECT_NEAR(std::log(62.0), 4.127, 5e-4);
  Tensor uniform({3, k}, 1.0 / k);
  EXPECT_NEAR(soft_cross_entropy(logits, uniform).loss, std::log(62.0), 1e-12);
}

TEST(Losses, OneHotSoftLabelsReduceToHardCrossEntropy) {
  std::mt19937_64 rng(1);
  const auto logits = random_tensor({4, 5}, rng, -3, 3);
  const std::vector<int> labels{0, 3, 4, 1};
  Real expected = 0.0;
  for (int r = 0; r < 4; ++r) {
    Real mx = -1e300;
    for (int c = 0; c < 5; ++c) mx = std::max(mx, logits[static_cast<std::size_t>(r * 5 + c)]);
    Real z = 0.0;
    for (int c = 0; c < 5; ++c) z += std::exp(logits[static_cast<std::size_t>(r * 5 + c)] - mx);
    expected += -(logits[static_cast<std::size_t>(r * 5 + labels[static_cast<std::size_t>(r)])] - mx - std::log(z));
  }
  EXPECT_NEAR(soft_cross_entropy(logits, one_hot(labels, 5)).loss, expected / 4, 1e-12);
}

TEST(Losses, SoftCrossEntropyGradientIsSoftmaxMinusTarget) {
  std::mt19937_64 rng(2);
  const auto logits = random_tensor({3, 4}, rng, -2, 2);
  const auto targets = testing::soft_targets(3, 4, rng);
  const auto r = soft_cross_entropy(logits, targets);
  for (int i = 0; i < 3; ++i) {
    Real z = 0.0;
    for (int c = 0; c < 4; ++c) z += std::exp(logits[static_cast<std::size_t>(i * 4 + c)]);
    for (int c = 0; c < 4; ++c) {
      const auto at = static_cast<std::size_t>(i * 4 + c);
      EXPECT_NEAR(r.grad[at], (std::exp(logits[at]) / z - targets[at]) / 3.0, 1e-12);
    }
  }
}

TEST(Losses, MeanSquaredErrorGradient) {
  std::mt19937_64 rng(4);
  auto p = random_tensor({2, 3}, rng);
  const auto t = random_tensor({2, 3}, rng);
  const auto r = mean_squared_error(p, t);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Real saved = p[i];
    p[i] = saved + 1e-6;
    const Real up = mean_squared_error(p, t).loss;
    p[i] = saved - 1e-6;
    const Real down = mean_squared_error(p, t).loss;
    p[i] = saved;
    EXPECT_NEAR(r.grad[i], (up - down) / 2e-6, 1e-8);
  }
}

TEST(Losses, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto g = testing::check_gradients(seed);
    EXPECT_LE(g.parameters, 500u);
    EXPECT_LT(g.client_avail, 1e-4);
    EXPECT_LT(g.client_absent, 1e-4);
    EXPECT_EQ(g.absent_guidance_grad, 0.0);
    EXPECT_LT(g.server, 1e-4);
    EXPECT_LT(g.logit_identity, 1e-12);
  }
}

}  // namespace
}  // namespace feddig
