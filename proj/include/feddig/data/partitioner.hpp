#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "feddig/data/dataset.hpp"

namespace feddig::data {

struct SplitPlan {
  double train_frac = 0.8;
  double val_frac = 0.1;
  double monitor_frac = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

// train/val/monitor index into Dataset::train; test indexes Dataset::test
// and is always the full original test partition. Each set is sorted.
struct Splits {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> monitor;
  std::vector<int> test;
};

Splits make_splits(const Dataset& dataset, const SplitPlan& plan);

struct ClientShards {
  double mu = 0.1;
  std::uint64_t seed = 0;
  std::vector<std::vector<int>> clients;  // sorted sample indices per client

  int num_clients() const { return static_cast<int>(clients.size()); }
  std::size_t total() const;
  int largest_client() const;
  bool operator==(const ClientShards&) const = default;
};

// Per-class Dirichlet(mu * 1_n) label skew. `labels` is indexed by sample
// index (i.e. Dataset::train.labels).
ClientShards dirichlet_dispatch(std::span<const int> train, std::span<const int> labels, int num_classes,
                                int num_clients, double mu, std::uint64_t seed);

// counts[client][class]
std::vector<std::vector<int>> class_histogram(const ClientShards& shards, std::span<const int> labels,
                                              int num_classes);

// One line per client: "<client> <mu> <seed> <count> <idx> <idx> ...",
// preceded by a single comment header line.
void write_shards(const std::filesystem::path& path, const ClientShards& shards);
ClientShards read_shards(const std::filesystem::path& path);

}  // namespace feddig::data
