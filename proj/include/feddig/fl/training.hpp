#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "feddig/digest/store.hpp"
#include "feddig/fl/client.hpp"
#include "feddig/nn/models.hpp"
#include "feddig/nn/optim.hpp"
#include "feddig/nn/params.hpp"

namespace feddig::fl {

using nn::Real;

enum class Algorithm { kFedAvg, kFedProx, kFedNova };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view text);

struct AggregationConfig {
  Algorithm algorithm = Algorithm::kFedAvg;
  Real fedprox_mu = 0.01;

  void validate() const;
};

struct ClientUpdate {
  int client = -1;
  nn::ParamSet delta;  // trained - received
  Real sample_count = 0.0;
  int local_steps = 0;
  Real loss = 0.0;  // mean minibatch loss over the epoch
  double seconds = 0.0;
  bool synthetic = false;
};

// Seeds for one iteration's per-client randomness.
struct StepSeeds {
  std::uint64_t base = 0;
  int iteration = 0;
};

// One local epoch of SGD on the live client's raw data and features. Returns
// nullopt when the loss or the delta is non-finite.
std::optional<ClientUpdate> client_step(const nn::ParamSet& server, nn::DualBranchClassifier& workspace,
                                        ClientState& client, const nn::Sequential& producer,
                                        const nn::OptimizerConfig& optimizer, const AggregationConfig& aggregation,
                                        StepSeeds seeds);

// One epoch over an absent client's stored digests, starting from the server
// model. Returns nullopt for an empty store or a non-finite result.
std::optional<ClientUpdate> replacement_step(const nn::ParamSet& server, nn::DualBranchClassifier& workspace,
                                             int client, const digest::DigestStore& store,
                                             const nn::Sequential& guidance, const nn::Shape& feature_shape,
                                             const nn::OptimizerConfig& optimizer,
                                             const AggregationConfig& aggregation, StepSeeds seeds);

struct Aggregate {
  nn::ParamSet model;
  std::vector<Real> weights;  // one per update, summing to 1
};

// A = M + sum_i w_i * delta_i with w proportional to sample counts (FedNova:
// normalized deltas rescaled by the effective step count). An empty update
// list returns M.
Aggregate aggregate(const nn::ParamSet& server, std::span<const ClientUpdate> updates,
                    const AggregationConfig& config);

struct ServerResult {
  nn::ParamSet model;
  nn::ParamSet guidance;
  Real loss = 0.0;
  int steps = 0;
  bool reverted = false;
};

// One epoch of joint SGD on L_server over every stored digest, updating the
// aggregated model and the guidance producer. An empty registry is a no-op.
ServerResult server_step(const nn::ParamSet& aggregated, nn::DualBranchClassifier& workspace,
                         nn::Sequential& guidance, const digest::DigestRegistry& registry,
                         const nn::Shape& feature_shape, const nn::OptimizerConfig& optimizer, StepSeeds seeds);

}  // namespace feddig::fl
