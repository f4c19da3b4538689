#include "feddig/nn/losses.hpp"

#include <algorithm>
#include <cmath>

#include "feddig/error.hpp"

namespace feddig::nn {

LossAndGrad soft_cross_entropy(const Tensor& logits, const Tensor& targets) {
  require(logits.rank() == 2 && logits.shape() == targets.shape(), ErrorCategory::kContract,
          "cross entropy expects matching (B, K) logits and targets, got " + shape_string(logits.shape()) + " and " +
              shape_string(targets.shape()));
  const int b = logits.dim(0);
  const int k = logits.dim(1);
  LossAndGrad out{0.0, Tensor(logits.shape())};
  if (b == 0) return out;
  const Real inv_b = 1.0 / static_cast<Real>(b);
  for (int i = 0; i < b; ++i) {
    const Real* z = logits.data() + static_cast<std::size_t>(i) * k;
    const Real* t = targets.data() + static_cast<std::size_t>(i) * k;
    Real* g = out.grad.data() + static_cast<std::size_t>(i) * k;
    const Real zmax = *std::max_element(z, z + k);
    Real sum = 0.0;
    for (int j = 0; j < k; ++j) sum += std::exp(z[j] - zmax);
    const Real log_sum = std::log(sum) + zmax;
    Real t_total = 0.0;
    for (int j = 0; j < k; ++j) {
      const Real log_p = z[j] - log_sum;
      out.loss -= t[j] * log_p;
      t_total += t[j];
      g[j] = std::exp(log_p);
    }
    // d/dz of -sum t log softmax(z) = softmax(z) * sum(t) - t
    for (int j = 0; j < k; ++j) g[j] = (g[j] * t_total - t[j]) * inv_b;
  }
  out.loss *= inv_b;
  return out;
}

LossAndGrad mean_squared_error(const Tensor& prediction, const Tensor& target) {
  require(prediction.shape() == target.shape(), ErrorCategory::kContract, "mse shape mismatch");
  LossAndGrad out{0.0, Tensor(prediction.shape())};
  const std::size_t n = prediction.size();
  if (n == 0) return out;
  const Real inv = 1.0 / static_cast<Real>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Real d = prediction[i] - target[i];
    out.loss += d * d;
    out.grad[i] = 2.0 * d * inv;
  }
  out.loss *= inv;
  return out;
}

Tensor one_hot(std::span<const int> labels, int num_classes) {
  Tensor t({static_cast<int>(labels.size()), num_classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < num_classes, ErrorCategory::kContract, "label out of range");
    t[i * static_cast<std::size_t>(num_classes) + static_cast<std::size_t>(labels[i])] = 1.0;
  }
  return t;
}

Real loss_client_avail(DualBranchClassifier& model, const Tensor& raw, const Tensor& encoded, const Tensor& targets) {
  const Tensor logits = model.forward(raw, encoded);
  auto ce = soft_cross_entropy(logits, targets);
  model.backward(ce.grad);
  return ce.loss;
}

Real loss_client_absent(DualBranchClassifier& model, const Sequential& guidance, const Tensor& digests,
                        const Tensor& soft_labels) {
  const Tensor g = guidance.infer(digests);
  const Tensor logits = model.forward(g, digests);
  auto ce = soft_cross_entropy(logits, soft_labels);
  model.backward(ce.grad);
  return ce.loss;
}

Real loss_server(DualBranchClassifier& model, Sequential& guidance, const Tensor& digests, const Tensor& soft_labels) {
  const Tensor g = guidance.forward(digests);
  const Tensor logits = model.forward(g, digests);
  auto ce = soft_cross_entropy(logits, soft_labels);
  auto input_grads = model.backward(ce.grad);
  guidance.backward(input_grads.raw);
  return ce.loss;
}

}  // namespace feddig::nn
