#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "feddig/data/dataset.hpp"
#include "feddig/data/partitioner.hpp"
#include "feddig/digest/store.hpp"
#include "feddig/fl/client.hpp"
#include "feddig/fl/training.hpp"
#include "feddig/nn/models.hpp"
#include "feddig/scenario/schedule.hpp"

namespace feddig::fl {

struct RunOptions {
  bool feddig = true;  // false: plain baseline aggregation, no digests
  AggregationConfig aggregation;
  nn::OptimizerConfig optimizer;
  DigestConfig digests;
  std::uint64_t seed = 0;
  bool parallel_clients = false;
  int test_limit = 0;     // evaluate on a fixed subset of this many test samples; 0 = all
  int monitor_limit = 0;  // same for the monitor split
  std::filesystem::path digest_dir;  // where uploaded stores are written; empty = memory only
};

struct IterationMetrics {
  int iteration = 0;
  double test_accuracy = 0.0;
  double monitor_accuracy = 0.0;
  std::vector<bool> presence;
  std::uint64_t bytes_cumulative = 0;
  double seconds_elapsed = 0.0;
  double iteration_seconds = 0.0;
  int live_updates = 0;
  int synthetic_updates = 0;
  double server_loss = 0.0;
  std::vector<double> client_losses;  // NaN where a client produced no update
};

// Runs the training loop one iteration at a time: live client updates,
// digest uploads at first presence, replacement updates for absent clients,
// aggregation, and the moderator's joint step. Broadcast models are kept at
// 32-bit precision so that a run resumed from a checkpoint is bit-identical.
class Simulation {
 public:
  Simulation(const data::Dataset& dataset, const data::Splits& splits, const data::ClientShards& shards,
             scenario::AvailabilitySchedule schedule, const nn::Architecture& arch, nn::Sequential producer,
             RunOptions options);

  int next_iteration() const { return next_; }
  bool done() const { return next_ >= schedule_.iterations(); }
  IterationMetrics step();

  const nn::DualBranchClassifier& model() const { return model_; }
  const nn::Sequential& guidance() const { return guidance_; }
  const nn::Sequential& producer() const { return producer_; }
  const digest::DigestRegistry& registry() const { return registry_; }
  const scenario::AvailabilitySchedule& schedule() const { return schedule_; }
  std::vector<ClientState>& clients() { return clients_; }
  std::size_t gradient_bytes() const { return model_.parameter_count() * sizeof(float); }

  // Writes model.ckpt, guidance.ckpt and state.txt into `dir`.
  void save_checkpoint(const std::filesystem::path& dir) const;
  // Restores a checkpoint; uploaded digest stores are re-read from digest_dir.
  void restore_checkpoint(const std::filesystem::path& dir);

 private:
  double accuracy(const std::vector<int>& indices, const data::ImageSet& images) const;

  const data::Dataset* dataset_;
  scenario::AvailabilitySchedule schedule_;
  nn::Shape feature_shape_;
  nn::Sequential producer_;
  nn::Sequential guidance_;
  nn::DualBranchClassifier model_;
  nn::DualBranchClassifier workspace_;
  RunOptions options_;
  std::vector<ClientState> clients_;
  std::vector<int> test_indices_;
  std::vector<int> monitor_indices_;
  digest::DigestRegistry registry_;
  int next_ = 0;
  std::uint64_t bytes_ = 0;
  double elapsed_ = 0.0;
};

}  // namespace feddig::fl
