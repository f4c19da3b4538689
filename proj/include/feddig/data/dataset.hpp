#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "feddig/nn/models.hpp"
#include "feddig/nn/tensor.hpp"

namespace feddig::data {

enum class DatasetName { kEmnistByClass, kCifar10, kCifar100, kSyntheticSmall };

std::string_view to_string(DatasetName name);
DatasetName parse_dataset_name(std::string_view text);

struct DatasetSpec {
  DatasetName name = DatasetName::kSyntheticSmall;
  int height = 8;
  int width = 8;
  int channels = 1;
  int num_classes = 4;
  // Cap on the number of original training samples used (desk-scale runs).
  std::optional<int> sample_budget;

  nn::ArchFamily arch_family() const;
  void validate() const;
};

DatasetSpec dataset_spec(DatasetName name, std::optional<int> sample_budget = std::nullopt);

// Images stored as 8-bit CHW planes, converted to [0, 1] reals on demand.
struct ImageSet {
  int channels = 1;
  int height = 1;
  int width = 1;
  std::vector<std::uint8_t> pixels;
  std::vector<int> labels;

  int size() const { return static_cast<int>(labels.size()); }
  std::size_t image_size() const { return static_cast<std::size_t>(channels) * height * width; }
  // (B, C, H, W) tensor of the selected images scaled to [0, 1].
  nn::Tensor batch(std::span<const int> indices) const;
};

struct Dataset {
  DatasetSpec spec;
  ImageSet train;  // the original training partition
  ImageSet test;   // the original test partition
};

struct SyntheticOptions {
  int train_samples = 2000;
  int test_samples = 800;
  std::uint64_t seed = 0x5eed;
};

// Four-class 8x8 images: one Gaussian blob per image whose center is jittered
// around a class-specific quadrant location, plus pixel noise.
Dataset make_synthetic_small(const SyntheticOptions& options = {});

// Loads a dataset from disk (EMNIST IDX files, CIFAR binary batches) or
// generates the synthetic one. Missing files raise a data error naming the
// expected path.
Dataset load_dataset(const DatasetSpec& spec, const std::filesystem::path& data_root,
                     const SyntheticOptions& synthetic = {});

// Data root from $FEDDIG_DATA_ROOT, falling back to ./data.
std::filesystem::path default_data_root();

}  // namespace feddig::data
