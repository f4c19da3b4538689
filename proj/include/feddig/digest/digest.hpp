#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "feddig/data/dataset.hpp"
#include "feddig/nn/layers.hpp"
#include "feddig/nn/tensor.hpp"
#include "feddig/util/rng.hpp"

namespace feddig::digest {

using nn::Real;

struct EncodedFeature {
  std::span<const Real> values;  // flattened (C', H', W'), all entries >= 0
  int source_index = -1;
  int label = 0;
};

// Encoded features of one client's samples, one row per sample.
struct FeatureSet {
  nn::Tensor values;  // (S, l)
  std::vector<int> labels;
  std::vector<int> source_indices;
  int num_classes = 0;

  int size() const { return static_cast<int>(labels.size()); }
  int length() const { return values.rank() == 2 ? values.dim(1) : 0; }
  EncodedFeature feature(int row) const;
};

// Runs the frozen producer on a (B, C, H, W) batch; returns (B, C', H', W').
nn::Tensor encode(const nn::Sequential& producer, const nn::Tensor& images);

// Encodes the selected samples of `images` in batches of `batch_size`.
FeatureSet encode_samples(const nn::Sequential& producer, const data::ImageSet& images, std::span<const int> indices,
                          int num_classes, int batch_size = 256);

struct Digest {
  std::vector<Real> mixed_feature;  // D_R
  std::vector<Real> mixed_label;    // D_y
  std::vector<Real> weights;
  // Client-side only; never serialized.
  std::vector<int> members;

  int member_count() const { return static_cast<int>(weights.size()); }
};

// D_R = sum_k w_k d_k and D_y = sum_k w_k y_k.
Digest mix(std::span<const EncodedFeature> features, std::span<const Real> weights, int num_classes);

enum class MixStrategy { kRandom, kWithinClass };

std::string_view to_string(MixStrategy s);
MixStrategy parse_mix_strategy(std::string_view text);

struct MixOptions {
  int samples_per_digest = 4;
  MixStrategy strategy = MixStrategy::kRandom;
  // Explicit mixing weights (length samples_per_digest, summing to 1);
  // empty means equal weights.
  std::vector<Real> weights;
  std::uint64_t seed = 0;
};

// Groups samples without replacement into floor(s / SpD) digests after a
// seeded shuffle. Leftover samples are dropped. Within-class grouping drops
// each class's leftovers and records a warning for classes with fewer than
// SpD samples.
std::vector<Digest> build_digests(const FeatureSet& features, const MixOptions& options,
                                  std::vector<std::string>* warnings = nullptr);

enum class TauPolicy {
  kMaxValue,          // tau = max feature value over the client's features
  kMaxValueOverCount  // tau = max feature value / sample count
};

// One sample of Laplace(0, scale).
Real laplace_sample(Real scale, util::Rng& rng);

// One digest per feature: D_R = max(0, d + Lap(0, tau / epsilon)), D_y = y.
std::vector<Digest> laplace_digests(const FeatureSet& features, Real epsilon, TauPolicy policy, std::uint64_t seed);

}  // namespace feddig::digest
