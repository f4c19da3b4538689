#pragma once

#include <span>

#include "feddig/nn/layers.hpp"
#include "feddig/nn/models.hpp"
#include "feddig/nn/tensor.hpp"

namespace feddig::nn {

struct LossAndGrad {
  Real loss = 0.0;
  Tensor grad;  // gradient w.r.t. the first argument
};

// Mean over the batch of -sum_k target[k] * log softmax(logits)[k]. Targets
// are probability vectors (one-hot rows give the usual hard-label loss).
LossAndGrad soft_cross_entropy(const Tensor& logits, const Tensor& targets);

// Mean squared error over all elements.
LossAndGrad mean_squared_error(const Tensor& prediction, const Tensor& target);

Tensor one_hot(std::span<const int> labels, int num_classes);

// The three training losses. Each runs forward and backward and accumulates
// parameter gradients (callers zero them); the returned value is the loss.

// Live client: model(raw, encoded) against hard labels.
Real loss_client_avail(DualBranchClassifier& model, const Tensor& raw, const Tensor& encoded, const Tensor& targets);

// Replacement client: model(guidance(D_R), D_R) against D_y. Gradients reach
// the model only; the guidance producer is evaluated, never updated.
Real loss_client_absent(DualBranchClassifier& model, const Sequential& guidance, const Tensor& digests,
                        const Tensor& soft_labels);

// Moderator step: same form as loss_client_absent, but gradients also flow
// through the guidance producer.
Real loss_server(DualBranchClassifier& model, Sequential& guidance, const Tensor& digests, const Tensor& soft_labels);

}  // namespace feddig::nn
