#pragma once

#include <cstdint>
#include <string>

#include "feddig/nn/layers.hpp"
#include "feddig/nn/params.hpp"

namespace feddig::nn {

// Classifier with two feature extractors whose latents are concatenated and
// classified by a shared head: raw_branch sees an image (raw data or
// guidance), digest_branch sees an encoded feature or digest tensor.
class DualBranchClassifier {
 public:
  DualBranchClassifier() = default;
  DualBranchClassifier(Sequential raw_branch, Sequential digest_branch, Sequential head);

  Tensor forward(const Tensor& raw, const Tensor& digest);
  Tensor infer(const Tensor& raw, const Tensor& digest) const;

  struct InputGrads {
    Tensor raw;
    Tensor digest;
  };
  InputGrads backward(const Tensor& grad_logits);

  void initialize(std::uint64_t seed);
  void zero_grad();
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  ParamSet snapshot() const { return ParamSet::capture(parameters()); }
  void load(const ParamSet& params) { params.assign_to(parameters()); }

  std::size_t parameter_count() const;
  std::string signature() const;
  int num_classes() const { return head_.output_shape().at(0); }
  const Shape& raw_shape() const { return raw_.sample_shape(); }
  const Shape& digest_shape() const { return digest_.sample_shape(); }

 private:
  Sequential raw_;
  Sequential digest_;
  Sequential head_;
  int raw_latent_ = 0;
};

enum class ArchFamily { kEmnist, kCifar, kSynthetic };

// Network shapes for one dataset family: the digest producer (encoder),
// the guidance-producer / decoder structure, and the classifier.
struct Architecture {
  ArchFamily family = ArchFamily::kSynthetic;
  Shape image_shape;    // (C, H, W)
  Shape feature_shape;  // (C', H', W')
  int num_classes = 2;

  int feature_length() const { return static_cast<int>(shape_size(feature_shape)); }

  Sequential make_encoder() const;
  // Maps a feature tensor back to image space with a sigmoid output. Used
  // for both the guidance producer and the autoencoder decoder.
  Sequential make_decoder(const std::string& name) const;
  DualBranchClassifier make_classifier() const;
};

Architecture make_architecture(ArchFamily family, int num_classes);

}  // namespace feddig::nn
