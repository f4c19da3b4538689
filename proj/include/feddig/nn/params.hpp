#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "feddig/nn/layers.hpp"
#include "feddig/nn/tensor.hpp"

namespace feddig::nn {

struct NamedTensor {
  std::string name;
  Tensor value;

  bool operator==(const NamedTensor&) const = default;
};

// Value snapshot of a parameter list. Model deltas, aggregation inputs, and
// checkpoints are all ParamSets.
struct ParamSet {
  std::vector<NamedTensor> tensors;

  static ParamSet capture(const std::vector<const Parameter*>& params);
  void assign_to(const std::vector<Parameter*>& params) const;

  std::size_t element_count() const;
  std::string signature() const;
  bool same_layout(const ParamSet& other) const;
  bool operator==(const ParamSet&) const = default;
};

ParamSet zeros_like(const ParamSet& p);
ParamSet subtract(const ParamSet& a, const ParamSet& b);
// y += alpha * x
void axpy(Real alpha, const ParamSet& x, ParamSet& y);
void scale(ParamSet& p, Real alpha);
Real l2_norm(const ParamSet& p);
Real l2_distance(const ParamSet& a, const ParamSet& b);
bool all_finite(const ParamSet& p);
// Rounds every element to the nearest 32-bit float (the wire precision).
void round_to_f32(ParamSet& p);

// Checkpoint file: "FDGC", u32 version, u32 tensor count, then per tensor
// a length-prefixed name, u32 rank, u32 dims, and f32 little-endian values.
std::string serialize_checkpoint(const ParamSet& params);
ParamSet deserialize_checkpoint(const std::string& bytes);
void save_checkpoint(const std::filesystem::path& path, const ParamSet& params);
ParamSet load_checkpoint(const std::filesystem::path& path);

}  // namespace feddig::nn
