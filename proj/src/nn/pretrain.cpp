#include "feddig/nn/pretrain.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "feddig/error.hpp"
#include "feddig/nn/losses.hpp"
#include "feddig/nn/optim.hpp"
#include "feddig/util/rng.hpp"

namespace feddig::nn {

namespace {

// One pass of minibatch training. `train_encoder` decides whether the encoder
// is updated or only evaluated.
Real run_epoch(Sequential& encoder, Sequential& decoder, bool train_encoder, const Tensor& images,
               std::vector<int>& order, util::Rng& rng, int batch_size, Adam& enc_opt, Adam& dec_opt, int epoch) {
  std::shuffle(order.begin(), order.end(), rng);
  Real total = 0.0;
  std::size_t seen = 0;
  for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(batch_size)) {
    const auto end = std::min(order.size(), begin + static_cast<std::size_t>(batch_size));
    const std::span<const int> rows(order.data() + begin, end - begin);
    const Tensor x = gather_rows(images, rows);
    decoder.zero_grad();
    Tensor recon;
    if (train_encoder) {
      encoder.zero_grad();
      recon = decoder.forward(encoder.forward(x));
    } else {
      recon = decoder.forward(encoder.infer(x));
    }
    const auto mse = mean_squared_error(recon, x);
    if (!std::isfinite(mse.loss)) {
      throw Error(ErrorCategory::kNumeric,
                  fmt::format("non-finite reconstruction loss in pretraining epoch {} at batch offset {}", epoch, begin));
    }
    const Tensor g = decoder.backward(mse.grad);
    dec_opt.step(decoder.parameters());
    if (train_encoder) {
      encoder.backward(g);
      enc_opt.step(encoder.parameters());
    }
    total += mse.loss * static_cast<Real>(rows.size());
    seen += rows.size();
  }
  return total / static_cast<Real>(seen);
}

}  // namespace

Autoencoder pretrain_producer(const Architecture& arch, const Tensor& images, const PretrainOptions& options) {
  require(images.rank() == 4 && images.dim(0) > 0, ErrorCategory::kData, "pretraining needs a non-empty image set");
  Autoencoder ae{arch.make_encoder(), arch.make_decoder("decoder"), {}};
  ae.encoder.initialize(util::derive_seed(options.seed, {static_cast<std::uint64_t>(util::Stream::kPretrain), 1}));
  ae.decoder.initialize(util::derive_seed(options.seed, {static_cast<std::uint64_t>(util::Stream::kPretrain), 2}));
  Adam enc_opt(options.learning_rate);
  Adam dec_opt(options.learning_rate);
  auto rng = util::make_rng(options.seed, util::Stream::kPretrain, {3});
  std::vector<int> order(static_cast<std::size_t>(images.dim(0)));
  std::iota(order.begin(), order.end(), 0);
  for (int e = 0; e < options.epochs; ++e) {
    const Real loss =
        run_epoch(ae.encoder, ae.decoder, true, images, order, rng, options.batch_size, enc_opt, dec_opt, e);
    ae.epoch_losses.push_back(loss);
    spdlog::debug("pretrain epoch {} mse {:.6f}", e, loss);
  }
  return ae;
}

Sequential train_decoder(const Architecture& arch, const Sequential& encoder, const Tensor& images,
                         const PretrainOptions& options, std::vector<Real>* epoch_losses) {
  require(images.rank() == 4 && images.dim(0) > 0, ErrorCategory::kData, "decoder training needs images");
  Sequential enc = encoder;
  Sequential dec = arch.make_decoder("inverse");
  dec.initialize(util::derive_seed(options.seed, {static_cast<std::uint64_t>(util::Stream::kPretrain), 4}));
  Adam unused(options.learning_rate);
  Adam dec_opt(options.learning_rate);
  auto rng = util::make_rng(options.seed, util::Stream::kPretrain, {5});
  std::vector<int> order(static_cast<std::size_t>(images.dim(0)));
  std::iota(order.begin(), order.end(), 0);
  for (int e = 0; e < options.epochs; ++e) {
    const Real loss = run_epoch(enc, dec, false, images, order, rng, options.batch_size, unused, dec_opt, e);
    if (epoch_losses) epoch_losses->push_back(loss);
  }
  return dec;
}

}  // namespace feddig::nn
