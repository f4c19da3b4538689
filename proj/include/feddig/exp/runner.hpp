#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "feddig/data/dataset.hpp"
#include "feddig/data/partitioner.hpp"
#include "feddig/exp/comm.hpp"
#include "feddig/exp/config.hpp"
#include "feddig/exp/record.hpp"
#include "feddig/fl/simulation.hpp"
#include "feddig/nn/models.hpp"
#include "feddig/nn/pretrain.hpp"
#include "feddig/scenario/schedule.hpp"

namespace feddig::exp {

// Source revision baked in at build time.
std::string revision();

data::Dataset load_configured_dataset(const RunConfig& config);
scenario::AvailabilitySchedule make_schedule(const RunConfig& config, const data::ClientShards& shards);

// Reads producer.ckpt (and decoder.ckpt) from `dir` into the architecture.
nn::Autoencoder load_producer(const nn::Architecture& arch, const std::filesystem::path& dir);
void save_producer(const nn::Autoencoder& ae, const std::filesystem::path& dir);

// Dataset, splits, shards, schedule and producer for one configuration.
struct PreparedRun {
  data::Dataset dataset;
  data::Splits splits;
  data::ClientShards shards;
  scenario::AvailabilitySchedule schedule;
  nn::Architecture arch;
  nn::Autoencoder producer;
};

// Pretrains the producer unless config.producer_path names a directory
// holding one.
PreparedRun prepare_run(const RunConfig& config);

struct RunSummary {
  std::string name;
  std::string config_hash;
  int iterations = 0;
  double final_test_accuracy = 0.0;
  std::pair<int, int> pre_window{0, 0};
  std::pair<int, int> post_window{0, 0};
  double pre_accuracy = 0.0;
  double post_accuracy = 0.0;
  CommModel comm;
  TimingSummary timing;
};

struct ExecuteOptions {
  bool resume = false;
  int stop_after = -1;  // stop once this many iterations are complete (testing interruption)
  std::function<void(const fl::IterationMetrics&)> on_iteration;
};

// Runs one configuration in `dir`, producing config.txt, schedule.txt,
// shards.txt, producer.ckpt, decoder.ckpt, digests/, checkpoints/,
// metrics.csv and run.json. With resume, continues from the latest
// checkpoint in `dir` using its stored config.
RunSummary execute_run(const RunConfig& config, const std::filesystem::path& dir, const ExecuteOptions& options = {});

// Recomputes a summary from a finished run directory.
RunSummary summarize_run(const std::filesystem::path& dir);

// Runs every variant x seed of a preset under root/<variant>/seed_<k>.
// Producers are pretrained once per seed under root/producers/.
std::vector<RunSummary> execute_preset(const Preset& preset, const std::filesystem::path& root, int seeds,
                                       const std::vector<std::pair<std::string, std::string>>& overrides = {});

}  // namespace feddig::exp
