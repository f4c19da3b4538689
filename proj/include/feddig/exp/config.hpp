#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "feddig/fl/simulation.hpp"

namespace feddig::exp {

// Everything needed to reproduce one run. Serialized as "key = value" lines.
struct RunConfig {
  std::string name = "custom";
  std::string dataset = "synthetic-small";
  int sample_budget = 0;  // 0 = whole training partition
  int synthetic_train = 2000;
  int synthetic_test = 800;
  std::uint64_t synthetic_seed = 0x5eed;

  int clients = 4;
  double mu = 0.1;
  std::uint64_t split_seed = 0;
  std::uint64_t partition_seed = 0;

  bool feddig = true;
  std::string algorithm = "fedavg";
  double fedprox_mu = 0.01;

  std::string digest_mode = "mixed";  // mixed | laplace
  int spd = 4;
  std::string strategy = "random";
  std::vector<double> mix_weights;  // empty = equal
  double epsilon = 10.0;

  int iterations = 300;
  double learning_rate = 0.001;
  double momentum = 0.9;
  int batch_size = 256;
  int local_epochs = 1;
  std::uint64_t seed = 0;

  // none | temporary | permanent | sequential | group | file
  std::string scenario = "none";
  int scenario_at = -1;        // leave / switch iteration; -1 = scenario default
  int scenario_until = -1;     // rejoin iteration for temporary; -1 = default
  std::string schedule_file;  // for scenario = file

  int pretrain_epochs = 5;
  double pretrain_lr = 1e-3;
  int pretrain_batch = 64;
  std::uint64_t pretrain_seed = 0;
  std::string producer_path;  // reuse a pretrained producer checkpoint directory

  int checkpoint_every = 10;  // 0 = never
  bool parallel_clients = false;
  int test_limit = 0;
  int monitor_limit = 0;
  std::string data_root;  // empty = $FEDDIG_DATA_ROOT or ./data

  // Accuracy windows (inclusive) reported in the run summary; -1 = derived
  // from the schedule length.
  int pre_window_start = -1;
  int post_window_start = -1;
  int window_length = 5;

  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  std::string serialize() const;
  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  // Short hex digest of the serialized configuration.
  std::string hash() const;
  void validate() const;

  fl::RunOptions run_options() const;
  std::pair<int, int> pre_window() const;
  std::pair<int, int> post_window() const;
};

const std::vector<std::string>& config_keys();

struct Variant {
  std::string name;
  std::vector<std::pair<std::string, std::string>> overrides;
};

struct Preset {
  std::string name;
  RunConfig base;
  std::vector<Variant> variants;
  int seeds = 5;

  RunConfig resolve(const Variant& variant, int seed_index) const;
};

const std::vector<std::string>& preset_names();
Preset preset(std::string_view name);

}  // namespace feddig::exp
