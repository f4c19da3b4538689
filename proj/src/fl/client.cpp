#include "feddig/fl/client.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "feddig/error.hpp"
#include "feddig/nn/losses.hpp"
#include "feddig/util/rng.hpp"

namespace feddig::fl {

ClientState::ClientState(int id, const data::ImageSet& images, std::vector<int> shard, int num_classes)
    : id_(id), images_(&images), shard_(std::move(shard)), num_classes_(num_classes) {}

void ClientState::guard() const {
  require(present_, ErrorCategory::kContract, fmt::format("raw shard of absent client {} was accessed", id_));
}

nn::Tensor ClientState::raw_batch(std::span<const int> rows) {
  guard();
  ++raw_reads_;
  std::vector<int> idx(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) idx[i] = shard_.at(static_cast<std::size_t>(rows[i]));
  return images_->batch(idx);
}

const digest::FeatureSet& ClientState::features(const nn::Sequential& producer) {
  if (!features_) {
    guard();
    ++raw_reads_;
    features_ = digest::encode_samples(producer, *images_, shard_, num_classes_);
  }
  return *features_;
}

nn::Tensor ClientState::label_batch(std::span<const int> rows) {
  require(features_.has_value(), ErrorCategory::kContract, "labels requested before encoding");
  std::vector<int> labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = features_->labels.at(static_cast<std::size_t>(rows[i]));
  return nn::one_hot(labels, num_classes_);
}

digest::DigestStore ClientState::make_digests(const nn::Sequential& producer, const DigestConfig& config,
                                              std::uint64_t seed, int iteration) {
  const auto& fs = features(producer);
  const auto client_seed = util::derive_seed(seed, {static_cast<std::uint64_t>(id_)});
  int spd = 1;
  digest::DigestKind kind = digest::DigestKind::kMixed;
  if (config.mode == DigestMode::kMixed) {
    auto options = config.mix;
    options.seed = client_seed;
    spd = options.samples_per_digest;
    if (fs.size() < spd) {
      spdlog::warn("client {} has {} samples, fewer than SpD={}; it uploads no digests", id_, fs.size(), spd);
      digests_.clear();
    } else {
      digests_ = digest::build_digests(fs, options);
    }
  } else {
    kind = digest::DigestKind::kLaplace;
    digests_ = digest::laplace_digests(fs, config.epsilon, config.tau_policy, client_seed);
  }
  return digest::make_store(digests_, digest::producer_fingerprint(producer), kind, spd, fs.length(), num_classes_,
                            iteration);
}

}  // namespace feddig::fl
