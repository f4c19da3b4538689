#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "feddig/data/dataset.hpp"
#include "feddig/digest/digest.hpp"
#include "feddig/digest/store.hpp"
#include "feddig/nn/layers.hpp"
#include "feddig/nn/tensor.hpp"

namespace feddig::fl {

enum class DigestMode { kMixed, kLaplace };

struct DigestConfig {
  DigestMode mode = DigestMode::kMixed;
  digest::MixOptions mix;  // its seed is replaced per client
  nn::Real epsilon = 10.0;
  digest::TauPolicy tau_policy = digest::TauPolicy::kMaxValue;
};

// A client's private side: raw shard, encoded features, and its digests.
// Raw data can only be read while the client is present; any read during
// absence throws a contract error.
class ClientState {
 public:
  ClientState(int id, const data::ImageSet& images, std::vector<int> shard, int num_classes);

  int id() const { return id_; }
  std::size_t sample_count() const { return shard_.size(); }
  int num_classes() const { return num_classes_; }

  void set_present(bool present) { present_ = present; }
  bool present() const { return present_; }

  // Number of raw-shard reads so far (for absence-isolation checks).
  std::uint64_t raw_reads() const { return raw_reads_; }

  // Images for shard rows `rows` as a (B, C, H, W) batch.
  nn::Tensor raw_batch(std::span<const int> rows);
  // Encoded features of all shard rows; computed from raw data on first use.
  const digest::FeatureSet& features(const nn::Sequential& producer);
  // Labels of shard rows (labels travel with features, not raw pixels).
  nn::Tensor label_batch(std::span<const int> rows);

  // Builds this client's digests. Member indices stay in `last_digests()`.
  digest::DigestStore make_digests(const nn::Sequential& producer, const DigestConfig& config, std::uint64_t seed,
                                   int iteration);
  const std::vector<digest::Digest>& last_digests() const { return digests_; }

 private:
  void guard() const;

  int id_;
  const data::ImageSet* images_;
  std::vector<int> shard_;
  int num_classes_;
  bool present_ = true;
  std::uint64_t raw_reads_ = 0;
  std::optional<digest::FeatureSet> features_;
  std::vector<digest::Digest> digests_;
};

}  // namespace feddig::fl
