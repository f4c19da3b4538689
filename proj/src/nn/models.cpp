#include "feddig/nn/models.hpp"

#include "feddig/error.hpp"
#include "feddig/util/rng.hpp"

namespace feddig::nn {

using kernels::ConvGeometry;
using kernels::TransposedGeometry;

DualBranchClassifier::DualBranchClassifier(Sequential raw_branch, Sequential digest_branch, Sequential head)
    : raw_(std::move(raw_branch)), digest_(std::move(digest_branch)), head_(std::move(head)) {
  require(raw_.output_shape().size() == 1 && digest_.output_shape().size() == 1, ErrorCategory::kContract,
          "branches must end in flat latents");
  raw_latent_ = raw_.output_shape()[0];
  require(head_.sample_shape() == Shape{raw_latent_ + digest_.output_shape()[0]}, ErrorCategory::kContract,
          "head input width must equal the concatenated latent width");
}

Tensor DualBranchClassifier::forward(const Tensor& raw, const Tensor& digest) {
  require(raw.dim(0) == digest.dim(0), ErrorCategory::kContract, "branch inputs have different batch sizes");
  return head_.forward(concat_features(raw_.forward(raw), digest_.forward(digest)));
}

Tensor DualBranchClassifier::infer(const Tensor& raw, const Tensor& digest) const {
  require(raw.dim(0) == digest.dim(0), ErrorCategory::kContract, "branch inputs have different batch sizes");
  return head_.infer(concat_features(raw_.infer(raw), digest_.infer(digest)));
}

DualBranchClassifier::InputGrads DualBranchClassifier::backward(const Tensor& grad_logits) {
  const Tensor g = head_.backward(grad_logits);
  const int n = g.dim(0);
  const int width = g.dim(1);
  const int dw = width - raw_latent_;
  Tensor g_raw({n, raw_latent_});
  Tensor g_dig({n, dw});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < raw_latent_; ++j) g_raw[static_cast<std::size_t>(i) * raw_latent_ + j] = g[static_cast<std::size_t>(i) * width + j];
    for (int j = 0; j < dw; ++j) g_dig[static_cast<std::size_t>(i) * dw + j] = g[static_cast<std::size_t>(i) * width + raw_latent_ + j];
  }
  return {raw_.backward(g_raw), digest_.backward(g_dig)};
}

void DualBranchClassifier::initialize(std::uint64_t seed) {
  raw_.initialize(util::derive_seed(seed, {1}));
  digest_.initialize(util::derive_seed(seed, {2}));
  head_.initialize(util::derive_seed(seed, {3}));
}

void DualBranchClassifier::zero_grad() {
  raw_.zero_grad();
  digest_.zero_grad();
  head_.zero_grad();
}

std::vector<Parameter*> DualBranchClassifier::parameters() {
  auto out = raw_.parameters();
  for (auto* p : digest_.parameters()) out.push_back(p);
  for (auto* p : head_.parameters()) out.push_back(p);
  return out;
}

std::vector<const Parameter*> DualBranchClassifier::parameters() const {
  auto params = const_cast<DualBranchClassifier*>(this)->parameters();
  return {params.begin(), params.end()};
}

std::size_t DualBranchClassifier::parameter_count() const {
  return raw_.parameter_count() + digest_.parameter_count() + head_.parameter_count();
}

std::string DualBranchClassifier::signature() const {
  return raw_.signature() + digest_.signature() + head_.signature();
}

// ----------------------------------------------------------- architectures

Architecture make_architecture(ArchFamily family, int num_classes) {
  require(num_classes >= 2, ErrorCategory::kConfig, "need at least two classes");
  Architecture a;
  a.family = family;
  a.num_classes = num_classes;
  switch (family) {
    case ArchFamily::kEmnist:
      a.image_shape = {1, 28, 28};
      a.feature_shape = {4, 8, 8};
      break;
    case ArchFamily::kCifar:
      a.image_shape = {3, 32, 32};
      a.feature_shape = {8, 8, 8};
      break;
    case ArchFamily::kSynthetic:
      a.image_shape = {1, 8, 8};
      a.feature_shape = {4, 4, 4};
      break;
  }
  return a;
}

Sequential Architecture::make_encoder() const {
  const int c = image_shape[0];
  const int h = image_shape[1];
  const int w = image_shape[2];
  std::vector<Layer> layers;
  switch (family) {
    case ArchFamily::kEmnist:
      // 28 -> 14 -> 8 (extra padding on the second stride-2 conv).
      layers = {Conv2d(ConvGeometry{c, h, w, 8, 3, 2, 1}), Relu{}, Conv2d(ConvGeometry{8, 14, 14, 4, 3, 2, 2}),
                Relu{}};
      break;
    case ArchFamily::kCifar:
      layers = {Conv2d(ConvGeometry{c, h, w, 16, 3, 2, 1}), Relu{}, Conv2d(ConvGeometry{16, 16, 16, 8, 3, 2, 1}),
                Relu{}};
      break;
    case ArchFamily::kSynthetic:
      layers = {Conv2d(ConvGeometry{c, h, w, 8, 3, 2, 1}), Relu{}, Conv2d(ConvGeometry{8, 4, 4, 4, 3, 1, 1}), Relu{}};
      break;
  }
  return Sequential("producer", image_shape, std::move(layers));
}

Sequential Architecture::make_decoder(const std::string& name) const {
  const int fc = feature_shape[0];
  std::vector<Layer> layers;
  switch (family) {
    case ArchFamily::kEmnist:
      layers = {ConvTranspose2d(TransposedGeometry{fc, 8, 8, 2, 6, 2, 3, 0}), Relu{},
                ConvTranspose2d(TransposedGeometry{2, 14, 14, 1, 6, 2, 2, 0}), Sigmoid{}};
      break;
    case ArchFamily::kCifar:
      layers = {ConvTranspose2d(TransposedGeometry{fc, 8, 8, 8, 4, 2, 1, 0}), Relu{},
                ConvTranspose2d(TransposedGeometry{8, 16, 16, 4, 3, 1, 1, 0}), Relu{},
                ConvTranspose2d(TransposedGeometry{4, 16, 16, image_shape[0], 4, 2, 1, 0}), Sigmoid{}};
      break;
    case ArchFamily::kSynthetic:
      layers = {ConvTranspose2d(TransposedGeometry{fc, 4, 4, 2, 3, 1, 1, 0}), Relu{},
                ConvTranspose2d(TransposedGeometry{2, 4, 4, 1, 4, 2, 1, 0}), Sigmoid{}};
      break;
  }
  Sequential s(name, feature_shape, std::move(layers));
  require(s.output_shape() == image_shape, ErrorCategory::kContract, "decoder does not reach the image shape");
  return s;
}

DualBranchClassifier Architecture::make_classifier() const {
  const int c = image_shape[0];
  const int h = image_shape[1];
  const int w = image_shape[2];
  const int fc = feature_shape[0];
  const int fh = feature_shape[1];
  const int fw = feature_shape[2];
  std::vector<Layer> raw;
  std::vector<Layer> digest;
  int raw_latent = 128;
  int digest_latent = 64;
  int hidden = 256;
  switch (family) {
    case ArchFamily::kEmnist:
      raw = {Conv2d(ConvGeometry{c, h, w, 32, 3, 1, 1}),
             Relu{},
             MaxPool2d{},
             Conv2d(ConvGeometry{32, h / 2, w / 2, 192, 3, 1, 1}),
             Relu{},
             MaxPool2d{},
             Flatten{},
             Dense(192 * (h / 4) * (w / 4), raw_latent),
             Relu{}};
      digest = {Conv2d(ConvGeometry{fc, fh, fw, 48, 3, 1, 1}), Relu{}, Flatten{}, Dense(48 * fh * fw, digest_latent),
                Relu{}};
      break;
    case ArchFamily::kCifar:
      raw = {Conv2d(ConvGeometry{c, h, w, 32, 3, 1, 1}),
             Relu{},
             MaxPool2d{},
             Conv2d(ConvGeometry{32, h / 2, w / 2, 64, 3, 1, 1}),
             Relu{},
             MaxPool2d{},
             Flatten{},
             Dense(64 * (h / 4) * (w / 4), raw_latent),
             Relu{}};
      digest = {Conv2d(ConvGeometry{fc, fh, fw, 16, 3, 1, 1}), Relu{}, Flatten{}, Dense(16 * fh * fw, digest_latent),
                Relu{}};
      break;
    case ArchFamily::kSynthetic:
      raw_latent = 32;
      digest_latent = 16;
      hidden = 32;
      raw = {Conv2d(ConvGeometry{c, h, w, 8, 3, 1, 1}), Relu{}, MaxPool2d{}, Flatten{},
             Dense(8 * (h / 2) * (w / 2), raw_latent), Relu{}};
      digest = {Conv2d(ConvGeometry{fc, fh, fw, 8, 3, 1, 1}), Relu{}, Flatten{}, Dense(8 * fh * fw, digest_latent),
                Relu{}};
      break;
  }
  std::vector<Layer> head = {Dense(raw_latent + digest_latent, hidden), Relu{}, Dense(hidden, num_classes)};
  return DualBranchClassifier(Sequential("raw", image_shape, std::move(raw)),
                              Sequential("digest", feature_shape, std::move(digest)),
                              Sequential("head", {raw_latent + digest_latent}, std::move(head)));
}

}  // namespace feddig::nn
