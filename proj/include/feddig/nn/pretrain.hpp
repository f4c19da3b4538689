#pragma once

#include <cstdint>
#include <vector>

#include "feddig/nn/layers.hpp"
#include "feddig/nn/models.hpp"
#include "feddig/nn/tensor.hpp"

namespace feddig::nn {

struct PretrainOptions {
  int epochs = 5;
  int batch_size = 64;
  Real learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

struct Autoencoder {
  Sequential encoder;  // the digest producer; frozen from here on
  Sequential decoder;  // kept for the pseudo-inverse attack
  std::vector<Real> epoch_losses;
};

// Trains encoder + decoder with Adam on reconstruction MSE. `images` is
// (N, C, H, W) in [0, 1]. A non-finite loss aborts with a numeric error.
Autoencoder pretrain_producer(const Architecture& arch, const Tensor& images, const PretrainOptions& options);

// Trains a decoder for a fixed encoder (the attacker's pseudo-inverse when
// the original decoder is not at hand).
Sequential train_decoder(const Architecture& arch, const Sequential& encoder, const Tensor& images,
                         const PretrainOptions& options, std::vector<Real>* epoch_losses = nullptr);

}  // namespace feddig::nn
