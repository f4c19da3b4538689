#include "feddig/fl/training.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "feddig/error.hpp"
#include "feddig/nn/losses.hpp"
#include "feddig/util/rng.hpp"

namespace feddig::fl {

namespace {

using Clock = std::chrono::steady_clock;

std::vector<int> shuffled_rows(std::size_t count, util::Rng& rng) {
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

template <typename Batch>
void for_each_batch(const std::vector<int>& order, int batch_size, Batch&& fn) {
  for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(batch_size)) {
    const auto end = std::min(order.size(), begin + static_cast<std::size_t>(batch_size));
    fn(std::span<const int>(order.data() + begin, end - begin));
  }
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kFedAvg:
      return "fedavg";
    case Algorithm::kFedProx:
      return "fedprox";
    case Algorithm::kFedNova:
      return "fednova";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view text) {
  if (text == "fedavg") return Algorithm::kFedAvg;
  if (text == "fedprox") return Algorithm::kFedProx;
  if (text == "fednova") return Algorithm::kFedNova;
  throw Error(ErrorCategory::kConfig, "unknown aggregation algorithm '" + std::string(text) + "'");
}

void AggregationConfig::validate() const {
  require(fedprox_mu >= 0.0, ErrorCategory::kConfig, "fedprox_mu must be non-negative");
}

std::optional<ClientUpdate> client_step(const nn::ParamSet& server, nn::DualBranchClassifier& workspace,
                                        ClientState& client, const nn::Sequential& producer,
                                        const nn::OptimizerConfig& optimizer, const AggregationConfig& aggregation,
                                        StepSeeds seeds) {
  const auto start = Clock::now();
  workspace.load(server);
  const auto& features = client.features(producer);
  const auto& feature_shape = producer.output_shape();
  nn::SgdMomentum sgd(optimizer.learning_rate, optimizer.momentum);
  const bool prox = aggregation.algorithm == Algorithm::kFedProx;
  auto params = workspace.parameters();
  ClientUpdate u;
  u.client = client.id();
  u.sample_count = static_cast<Real>(client.sample_count());
  Real loss_sum = 0.0;
  for (int epoch = 0; epoch < optimizer.local_epochs; ++epoch) {
    auto rng = util::make_rng(seeds.base, util::Stream::kClientShuffle,
                              {static_cast<std::uint64_t>(seeds.iteration), static_cast<std::uint64_t>(client.id()),
                               static_cast<std::uint64_t>(epoch)});
    const auto order = shuffled_rows(client.sample_count(), rng);
    for_each_batch(order, optimizer.batch_size, [&](std::span<const int> rows) {
      const nn::Tensor raw = client.raw_batch(rows);
      nn::Shape shape{static_cast<int>(rows.size())};
      shape.insert(shape.end(), feature_shape.begin(), feature_shape.end());
      const nn::Tensor encoded = nn::gather_rows(features.values, rows).reshaped(shape);
      workspace.zero_grad();
      Real loss = nn::loss_client_avail(workspace, raw, encoded, client.label_batch(rows));
      if (prox) {
        loss += nn::proximal_penalty(params, server, aggregation.fedprox_mu);
        nn::add_proximal_gradient(params, server, aggregation.fedprox_mu);
      }
      sgd.step(params);
      loss_sum += loss;
      ++u.local_steps;
    });
  }
  u.loss = u.local_steps ? loss_sum / u.local_steps : 0.0;
  u.delta = nn::subtract(workspace.snapshot(), server);
  u.seconds = seconds_since(start);
  if (!std::isfinite(u.loss) || !nn::all_finite(u.delta)) {
    spdlog::warn("client {} produced a non-finite update at iteration {}; skipped", client.id(), seeds.iteration);
    return std::nullopt;
  }
  return u;
}

std::optional<ClientUpdate> replacement_step(const nn::ParamSet& server, nn::DualBranchClassifier& workspace,
                                             int client, const digest::DigestStore& store,
                                             const nn::Sequential& guidance, const nn::Shape& feature_shape,
                                             const nn::OptimizerConfig& optimizer,
                                             const AggregationConfig& aggregation, StepSeeds seeds) {
  if (store.empty()) return std::nullopt;
  const auto start = Clock::now();
  workspace.load(server);
  nn::SgdMomentum sgd(optimizer.learning_rate, optimizer.momentum);
  const bool prox = aggregation.algorithm == Algorithm::kFedProx;
  auto params = workspace.parameters();
  ClientUpdate u;
  u.client = client;
  u.synthetic = true;
  u.sample_count = static_cast<Real>(store.samples_per_digest) * static_cast<Real>(store.count());
  Real loss_sum = 0.0;
  for (int epoch = 0; epoch < optimizer.local_epochs; ++epoch) {
    auto rng = util::make_rng(seeds.base, util::Stream::kReplacementShuffle,
                              {static_cast<std::uint64_t>(seeds.iteration), static_cast<std::uint64_t>(client),
                               static_cast<std::uint64_t>(epoch)});
    const auto order = shuffled_rows(store.count(), rng);
    for_each_batch(order, optimizer.batch_size, [&](std::span<const int> rows) {
      workspace.zero_grad();
      Real loss = nn::loss_client_absent(workspace, guidance, store.feature_batch(rows, feature_shape),
                                         store.label_batch(rows));
      if (prox) {
        loss += nn::proximal_penalty(params, server, aggregation.fedprox_mu);
        nn::add_proximal_gradient(params, server, aggregation.fedprox_mu);
      }
      sgd.step(params);
      loss_sum += loss;
      ++u.local_steps;
    });
  }
  u.loss = u.local_steps ? loss_sum / u.local_steps : 0.0;
  u.delta = nn::subtract(workspace.snapshot(), server);
  u.seconds = seconds_since(start);
  if (!std::isfinite(u.loss) || !nn::all_finite(u.delta)) {
    spdlog::warn("replacement for client {} is non-finite at iteration {}; skipped", client, seeds.iteration);
    return std::nullopt;
  }
  return u;
}

Aggregate aggregate(const nn::ParamSet& server, std::span<const ClientUpdate> updates,
                    const AggregationConfig& config) {
  config.validate();
  Aggregate out{server, {}};
  if (updates.empty()) {
    spdlog::debug("no client updates this iteration; model unchanged");
    return out;
  }
  Real total = 0.0;
  for (const auto& u : updates) {
    require(u.delta.same_layout(server), ErrorCategory::kContract,
            fmt::format("update from client {} does not match the server model", u.client));
    require(u.sample_count > 0.0, ErrorCategory::kContract, "update with zero sample count");
    total += u.sample_count;
  }
  for (const auto& u : updates) out.weights.push_back(u.sample_count / total);

  if (config.algorithm == Algorithm::kFedNova) {
    Real tau_eff = 0.0;
    for (std::size_t i = 0; i < updates.size(); ++i) tau_eff += out.weights[i] * std::max(1, updates[i].local_steps);
    for (std::size_t i = 0; i < updates.size(); ++i) {
      const Real tau = std::max(1, updates[i].local_steps);
      nn::axpy(tau_eff * out.weights[i] / tau, updates[i].delta, out.model);
    }
  } else {
    for (std::size_t i = 0; i < updates.size(); ++i) nn::axpy(out.weights[i], updates[i].delta, out.model);
  }
  return out;
}

ServerResult server_step(const nn::ParamSet& aggregated, nn::DualBranchClassifier& workspace,
                         nn::Sequential& guidance, const digest::DigestRegistry& registry,
                         const nn::Shape& feature_shape, const nn::OptimizerConfig& optimizer, StepSeeds seeds) {
  const nn::ParamSet guidance_before = nn::ParamSet::capture(std::as_const(guidance).parameters());
  ServerResult r{aggregated, guidance_before, 0.0, 0, false};
  if (registry.empty()) {
    spdlog::debug("digest store empty; server step skipped");
    return r;
  }
  workspace.load(aggregated);
  // Flat index over every (client, row) pair, clients in id order.
  std::vector<std::pair<int, int>> entries;
  for (const auto& [client, store] : registry.stores()) {
    for (std::size_t row = 0; row < store.count(); ++row) entries.emplace_back(client, static_cast<int>(row));
  }
  auto rng = util::make_rng(seeds.base, util::Stream::kServerShuffle, {static_cast<std::uint64_t>(seeds.iteration)});
  const auto order = shuffled_rows(entries.size(), rng);
  auto params = workspace.parameters();
  for (auto* p : guidance.parameters()) params.push_back(p);
  nn::SgdMomentum sgd(optimizer.learning_rate, optimizer.momentum);

  const int k = registry.stores().begin()->second.num_classes;
  const int ell = registry.stores().begin()->second.feature_length;
  Real loss_sum = 0.0;
  for_each_batch(order, optimizer.batch_size, [&](std::span<const int> rows) {
    nn::Shape shape{static_cast<int>(rows.size())};
    shape.insert(shape.end(), feature_shape.begin(), feature_shape.end());
    nn::Tensor digests(shape);
    nn::Tensor labels({static_cast<int>(rows.size()), k});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto [client, row] = entries[static_cast<std::size_t>(rows[i])];
      const auto& store = registry.at(client);
      const float* f = store.features.data() + static_cast<std::size_t>(row) * ell;
      const float* y = store.labels.data() + static_cast<std::size_t>(row) * k;
      std::copy(f, f + ell, digests.data() + i * ell);
      std::copy(y, y + k, labels.data() + i * k);
    }
    workspace.zero_grad();
    guidance.zero_grad();
    loss_sum += nn::loss_server(workspace, guidance, digests, labels);
    sgd.step(params);
    ++r.steps;
  });
  r.loss = loss_sum / r.steps;
  r.model = workspace.snapshot();
  r.guidance = nn::ParamSet::capture(std::as_const(guidance).parameters());
  if (!std::isfinite(r.loss) || !nn::all_finite(r.model) || !nn::all_finite(r.guidance)) {
    spdlog::warn("non-finite server loss at iteration {}; reverting to the aggregate", seeds.iteration);
    guidance_before.assign_to(guidance.parameters());
    r.model = aggregated;
    r.guidance = guidance_before;
    r.reverted = true;
  }
  return r;
}

}  // namespace feddig::fl
