#include "feddig/fl/simulation.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "feddig/error.hpp"
#include "feddig/exp/evaluate.hpp"
#include "feddig/util/rng.hpp"

namespace feddig::fl {

namespace fs = std::filesystem;

namespace {

std::vector<int> fixed_subset(const std::vector<int>& indices, int limit, std::uint64_t seed, std::uint64_t tag) {
  if (limit <= 0 || static_cast<std::size_t>(limit) >= indices.size()) return indices;
  std::vector<int> out = indices;
  auto rng = util::make_rng(seed, util::Stream::kSplit, {tag});
  std::shuffle(out.begin(), out.end(), rng);
  out.resize(static_cast<std::size_t>(limit));
  std::sort(out.begin(), out.end());
  return out;
}

void round_model(nn::DualBranchClassifier& model) {
  auto p = model.snapshot();
  nn::round_to_f32(p);
  model.load(p);
}

void round_sequential(nn::Sequential& s) {
  auto p = nn::ParamSet::capture(std::as_const(s).parameters());
  nn::round_to_f32(p);
  p.assign_to(s.parameters());
}

fs::path store_path(const fs::path& dir, int client) { return dir / fmt::format("client_{}.bin", client); }

}  // namespace

Simulation::Simulation(const data::Dataset& dataset, const data::Splits& splits, const data::ClientShards& shards,
                       scenario::AvailabilitySchedule schedule, const nn::Architecture& arch, nn::Sequential producer,
                       RunOptions options)
    : dataset_(&dataset),
      schedule_(std::move(schedule)),
      feature_shape_(arch.feature_shape),
      producer_(std::move(producer)),
      guidance_(arch.make_decoder("guidance")),
      model_(arch.make_classifier()),
      options_(std::move(options)) {
  require(schedule_.num_clients() == shards.num_clients(), ErrorCategory::kConfig,
          fmt::format("schedule has {} clients but there are {} shards", schedule_.num_clients(), shards.num_clients()));
  require(producer_.output_shape() == feature_shape_, ErrorCategory::kContract,
          "producer output does not match the architecture's feature shape");
  options_.aggregation.validate();
  require(options_.optimizer.batch_size >= 1 && options_.optimizer.local_epochs >= 0 &&
              options_.optimizer.learning_rate >= 0.0,
          ErrorCategory::kConfig, "invalid optimizer configuration");
  model_.initialize(util::derive_seed(options_.seed, {static_cast<std::uint64_t>(util::Stream::kInit), 1}));
  guidance_.initialize(util::derive_seed(options_.seed, {static_cast<std::uint64_t>(util::Stream::kInit), 2}));
  round_model(model_);
  round_sequential(guidance_);
  workspace_ = model_;
  for (int c = 0; c < shards.num_clients(); ++c) {
    require(!shards.clients[static_cast<std::size_t>(c)].empty(), ErrorCategory::kContract, "empty client shard");
    clients_.emplace_back(c, dataset.train, shards.clients[static_cast<std::size_t>(c)], arch.num_classes);
  }
  test_indices_ = fixed_subset(splits.test, options_.test_limit, options_.seed, 1);
  monitor_indices_ = fixed_subset(splits.monitor, options_.monitor_limit, options_.seed, 2);
  if (!options_.digest_dir.empty()) fs::create_directories(options_.digest_dir);
}

double Simulation::accuracy(const std::vector<int>& indices, const data::ImageSet& images) const {
  return exp::evaluate(model_, producer_, images, indices);
}

IterationMetrics Simulation::step() {
  require(!done(), ErrorCategory::kContract, "simulation already finished");
  const auto start = std::chrono::steady_clock::now();
  const int t = next_;
  const int n = static_cast<int>(clients_.size());
  IterationMetrics m;
  m.iteration = t;
  m.presence = schedule_.presence_row(t);
  m.client_losses.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN());
  for (int c = 0; c < n; ++c) clients_[static_cast<std::size_t>(c)].set_present(m.presence[static_cast<std::size_t>(c)]);

  // Digest upload at each client's first present iteration.
  if (options_.feddig) {
    for (auto& client : clients_) {
      if (!client.present() || registry_.contains(client.id())) continue;
      auto store = client.make_digests(producer_, options_.digests, options_.seed, t);
      bytes_ += digest::store_file_bytes(store);
      if (!options_.digest_dir.empty()) digest::write_store(store_path(options_.digest_dir, client.id()), store);
      registry_.add(client.id(), std::move(store));
    }
  }

  const nn::ParamSet server = model_.snapshot();
  const StepSeeds seeds{options_.seed, t};
  std::vector<std::optional<ClientUpdate>> live(static_cast<std::size_t>(n));
  std::vector<std::optional<ClientUpdate>> synthetic(static_cast<std::size_t>(n));
  auto run_client = [&](int c, nn::DualBranchClassifier& ws) {
    auto& client = clients_[static_cast<std::size_t>(c)];
    if (client.present()) {
      live[static_cast<std::size_t>(c)] =
          client_step(server, ws, client, producer_, options_.optimizer, options_.aggregation, seeds);
    } else if (options_.feddig && registry_.contains(c)) {
      synthetic[static_cast<std::size_t>(c)] = replacement_step(server, ws, c, registry_.at(c), guidance_, feature_shape_,
                                                                options_.optimizer, options_.aggregation, seeds);
    }
  };
  if (options_.parallel_clients && n > 1) {
    std::vector<std::optional<Error>> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1)
    for (int c = 0; c < n; ++c) {
      try {
        nn::DualBranchClassifier ws = model_;
        run_client(c, ws);
      } catch (const Error& e) {
        errors[static_cast<std::size_t>(c)] = e;
      }
    }
    for (auto& e : errors) {
      if (e) throw *e;
    }
  } else {
    for (int c = 0; c < n; ++c) run_client(c, workspace_);
  }

  // Live updates first, then replacements, each in client order.
  std::vector<ClientUpdate> updates;
  for (auto* group : {&live, &synthetic}) {
    for (auto& u : *group) {
      if (!u) continue;
      m.client_losses[static_cast<std::size_t>(u->client)] = u->loss;
      if (u->synthetic) {
        ++m.synthetic_updates;
      } else {
        ++m.live_updates;
        bytes_ += gradient_bytes();
      }
      updates.push_back(std::move(*u));
    }
  }
  Aggregate agg = aggregate(server, updates, options_.aggregation);
  nn::ParamSet next_model = std::move(agg.model);
  if (options_.feddig) {
    auto result = server_step(next_model, workspace_, guidance_, registry_, feature_shape_, options_.optimizer, seeds);
    next_model = std::move(result.model);
    m.server_loss = result.loss;
  }
  nn::round_to_f32(next_model);
  model_.load(next_model);
  round_sequential(guidance_);

  m.test_accuracy = accuracy(test_indices_, dataset_->test);
  m.monitor_accuracy = accuracy(monitor_indices_, dataset_->train);
  m.iteration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  elapsed_ += m.iteration_seconds;
  m.seconds_elapsed = elapsed_;
  m.bytes_cumulative = bytes_;
  ++next_;
  return m;
}

void Simulation::save_checkpoint(const fs::path& dir) const {
  fs::create_directories(dir);
  nn::save_checkpoint(dir / "model.ckpt", model_.snapshot());
  nn::save_checkpoint(dir / "guidance.ckpt", nn::ParamSet::capture(guidance_.parameters()));
  std::ofstream out(dir / "state.txt");
  require(static_cast<bool>(out), ErrorCategory::kIo, "cannot write checkpoint state in " + dir.string());
  out << fmt::format("next_iteration {}\nbytes {}\nelapsed {}\n", next_, bytes_, elapsed_);
}

void Simulation::restore_checkpoint(const fs::path& dir) {
  std::ifstream in(dir / "state.txt");
  require(static_cast<bool>(in), ErrorCategory::kIo, "missing checkpoint state in " + dir.string());
  std::string key;
  int next = 0;
  std::uint64_t bytes = 0;
  double elapsed = 0.0;
  in >> key >> next >> key >> bytes >> key >> elapsed;
  require(static_cast<bool>(in) && next >= 0 && next <= schedule_.iterations(), ErrorCategory::kIo,
          "malformed checkpoint state in " + dir.string());
  const auto model = nn::load_checkpoint(dir / "model.ckpt");
  const auto guidance = nn::load_checkpoint(dir / "guidance.ckpt");
  require(model.same_layout(model_.snapshot()), ErrorCategory::kIo, "checkpoint model does not match the architecture");
  model_.load(model);
  guidance.assign_to(guidance_.parameters());
  registry_ = {};
  if (options_.feddig) {
    for (auto& client : clients_) {
      const auto first = schedule_.first_present(client.id());
      if (!first || *first >= next) continue;
      require(!options_.digest_dir.empty(), ErrorCategory::kIo, "resuming a digest run needs its digest directory");
      registry_.add(client.id(), digest::read_store(store_path(options_.digest_dir, client.id())));
    }
  }
  next_ = next;
  bytes_ = bytes;
  elapsed_ = elapsed;
}

}  // namespace feddig::fl
