#include "feddig/digest/digest.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "feddig/error.hpp"

namespace feddig::digest {

EncodedFeature FeatureSet::feature(int row) const {
  return {values.slice0(row), source_indices[static_cast<std::size_t>(row)], labels[static_cast<std::size_t>(row)]};
}

nn::Tensor encode(const nn::Sequential& producer, const nn::Tensor& images) {
  require(images.rank() == 4, ErrorCategory::kContract, "encode expects a (B, C, H, W) batch");
  return producer.infer(images);
}

FeatureSet encode_samples(const nn::Sequential& producer, const data::ImageSet& images, std::span<const int> indices,
                          int num_classes, int batch_size) {
  FeatureSet fs;
  fs.num_classes = num_classes;
  const int ell = static_cast<int>(nn::shape_size(producer.output_shape()));
  fs.values = nn::Tensor({static_cast<int>(indices.size()), ell});
  fs.labels.reserve(indices.size());
  fs.source_indices.assign(indices.begin(), indices.end());
  for (std::size_t begin = 0; begin < indices.size(); begin += static_cast<std::size_t>(batch_size)) {
    const auto end = std::min(indices.size(), begin + static_cast<std::size_t>(batch_size));
    const auto chunk = indices.subspan(begin, end - begin);
    const nn::Tensor out = encode(producer, images.batch(chunk));
    std::copy(out.values().begin(), out.values().end(), fs.values.data() + begin * static_cast<std::size_t>(ell));
  }
  for (int idx : indices) fs.labels.push_back(images.labels[static_cast<std::size_t>(idx)]);
  return fs;
}

Digest mix(std::span<const EncodedFeature> features, std::span<const Real> weights, int num_classes) {
  require(!features.empty() && features.size() == weights.size(), ErrorCategory::kContract,
          "mix needs one weight per feature");
  Real total = 0.0;
  for (Real w : weights) {
    require(w >= 0.0, ErrorCategory::kContract, "mixing weights must be non-negative");
    total += w;
  }
  require(std::abs(total - 1.0) < 1e-9, ErrorCategory::kContract, "mixing weights must sum to 1");
  const std::size_t ell = features[0].values.size();
  std::unordered_set<int> seen;
  Digest d;
  d.mixed_feature.assign(ell, 0.0);
  d.mixed_label.assign(static_cast<std::size_t>(num_classes), 0.0);
  d.weights.assign(weights.begin(), weights.end());
  for (std::size_t k = 0; k < features.size(); ++k) {
    const auto& f = features[k];
    require(f.values.size() == ell, ErrorCategory::kContract, "features of different lengths");
    require(seen.insert(f.source_index).second, ErrorCategory::kContract,
            fmt::format("sample {} would be mixed twice", f.source_index));
    require(f.label >= 0 && f.label < num_classes, ErrorCategory::kContract, "label out of range");
    for (std::size_t i = 0; i < ell; ++i) d.mixed_feature[i] += weights[k] * f.values[i];
    d.mixed_label[static_cast<std::size_t>(f.label)] += weights[k];
    d.members.push_back(f.source_index);
  }
  return d;
}

std::string_view to_string(MixStrategy s) { return s == MixStrategy::kRandom ? "random" : "within_class"; }

MixStrategy parse_mix_strategy(std::string_view text) {
  if (text == "random") return MixStrategy::kRandom;
  if (text == "within_class" || text == "within-class") return MixStrategy::kWithinClass;
  throw Error(ErrorCategory::kConfig, "unknown mixing strategy '" + std::string(text) + "'");
}

std::vector<Digest> build_digests(const FeatureSet& features, const MixOptions& options,
                                  std::vector<std::string>* warnings) {
  const int spd = options.samples_per_digest;
  require(spd >= 1, ErrorCategory::kConfig, "samples per digest must be at least 1");
  std::vector<Real> weights = options.weights;
  if (weights.empty()) weights.assign(static_cast<std::size_t>(spd), 1.0 / spd);
  require(static_cast<int>(weights.size()) == spd, ErrorCategory::kConfig, "need one mixing weight per sample");

  auto rng = util::make_rng(options.seed, util::Stream::kDigestGrouping);
  std::vector<std::vector<int>> pools;
  if (options.strategy == MixStrategy::kRandom) {
    require(features.size() >= spd, ErrorCategory::kContract,
            fmt::format("client has {} samples, fewer than SpD={}", features.size(), spd));
    pools.emplace_back(static_cast<std::size_t>(features.size()));
    std::iota(pools[0].begin(), pools[0].end(), 0);
  } else {
    pools.resize(static_cast<std::size_t>(features.num_classes));
    for (int r = 0; r < features.size(); ++r) pools[static_cast<std::size_t>(features.labels[static_cast<std::size_t>(r)])].push_back(r);
  }

  std::vector<Digest> out;
  std::vector<EncodedFeature> group(static_cast<std::size_t>(spd));
  for (std::size_t c = 0; c < pools.size(); ++c) {
    auto& pool = pools[c];
    if (pool.empty()) continue;
    if (static_cast<int>(pool.size()) < spd) {
      const auto msg = fmt::format("class {} has {} samples, fewer than SpD={}; no digests for it", c, pool.size(), spd);
      spdlog::warn(msg);
      if (warnings) warnings->push_back(msg);
      continue;
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::size_t groups = pool.size() / static_cast<std::size_t>(spd);
    for (std::size_t g = 0; g < groups; ++g) {
      for (int k = 0; k < spd; ++k) group[static_cast<std::size_t>(k)] = features.feature(pool[g * spd + static_cast<std::size_t>(k)]);
      out.push_back(mix(group, weights, features.num_classes));
    }
  }
  return out;
}

Real laplace_sample(Real scale, util::Rng& rng) {
  if (scale == 0.0) return 0.0;
  std::uniform_real_distribution<Real> u(-0.5, 0.5);
  Real x = u(rng);
  while (std::abs(x) == 0.5) x = u(rng);
  return -scale * std::copysign(1.0, x) * std::log(1.0 - 2.0 * std::abs(x));
}

std::vector<Digest> laplace_digests(const FeatureSet& features, Real epsilon, TauPolicy policy, std::uint64_t seed) {
  require(epsilon > 0.0, ErrorCategory::kConfig, "epsilon must be positive");
  Real tau = 0.0;
  for (Real v : features.values.values()) tau = std::max(tau, v);
  if (policy == TauPolicy::kMaxValueOverCount && features.size() > 0) tau /= features.size();
  const Real scale = std::isinf(epsilon) ? 0.0 : tau / epsilon;
  auto rng = util::make_rng(seed, util::Stream::kLaplace);
  std::vector<Digest> out;
  out.reserve(static_cast<std::size_t>(features.size()));
  for (int r = 0; r < features.size(); ++r) {
    const auto f = features.feature(r);
    Digest d;
    d.mixed_feature.resize(f.values.size());
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      d.mixed_feature[i] = std::max<Real>(0.0, f.values[i] + laplace_sample(scale, rng));
    }
    d.mixed_label.assign(static_cast<std::size_t>(features.num_classes), 0.0);
    d.mixed_label[static_cast<std::size_t>(f.label)] = 1.0;
    d.weights = {1.0};
    d.members = {f.source_index};
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace feddig::digest
