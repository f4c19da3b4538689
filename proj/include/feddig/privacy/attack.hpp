#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "feddig/data/dataset.hpp"
#include "feddig/digest/store.hpp"
#include "feddig/nn/layers.hpp"

namespace feddig::privacy {

struct AttackOptions {
  int max_digests = 256;  // digests attacked (taken in store order)
  int grid_columns = 16;
  std::filesystem::path grid_dir;  // empty: no images written
};

struct ReconstructionScore {
  std::vector<double> mse;  // per digest, against the best-matching true member
  double mean_mse = 0.0;
  double identification_rate = 0.0;
};

struct AttackReport {
  ReconstructionScore inverse;   // decoded by the pseudo-inverse
  ReconstructionScore guidance;  // decoded by P_G (when given)
  int attacked = 0;
  std::vector<std::filesystem::path> grids;
};

// Decodes stored digests with the pseudo-inverse decoder (and P_G when
// given) and scores each reconstruction against its true members. Member
// lists and the owning shard are scoring-only inputs: the decoders never
// see them.
AttackReport mount_pseudo_inverse_attack(const nn::Sequential& inverse, const nn::Sequential* guidance,
                                         const digest::DigestStore& store, const nn::Shape& feature_shape,
                                         std::span<const std::vector<int>> members, const data::ImageSet& images,
                                         std::span<const int> shard, const AttackOptions& options = {});

}  // namespace feddig::privacy
