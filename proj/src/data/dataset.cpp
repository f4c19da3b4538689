#include "feddig/data/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <memory>

#include "feddig/error.hpp"
#include "feddig/util/rng.hpp"

namespace feddig::data {

namespace fs = std::filesystem;

std::string_view to_string(DatasetName name) {
  switch (name) {
    case DatasetName::kEmnistByClass:
      return "EMNIST-ByClass";
    case DatasetName::kCifar10:
      return "CIFAR-10";
    case DatasetName::kCifar100:
      return "CIFAR-100";
    case DatasetName::kSyntheticSmall:
      return "synthetic-small";
  }
  return "?";
}

DatasetName parse_dataset_name(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "emnist-byclass" || s == "emnist") return DatasetName::kEmnistByClass;
  if (s == "cifar-10" || s == "cifar10") return DatasetName::kCifar10;
  if (s == "cifar-100" || s == "cifar100") return DatasetName::kCifar100;
  if (s == "synthetic-small" || s == "synthetic") return DatasetName::kSyntheticSmall;
  throw Error(ErrorCategory::kConfig, "unknown dataset '" + std::string(text) + "'");
}

nn::ArchFamily DatasetSpec::arch_family() const {
  switch (name) {
    case DatasetName::kEmnistByClass:
      return nn::ArchFamily::kEmnist;
    case DatasetName::kCifar10:
    case DatasetName::kCifar100:
      return nn::ArchFamily::kCifar;
    case DatasetName::kSyntheticSmall:
      return nn::ArchFamily::kSynthetic;
  }
  return nn::ArchFamily::kSynthetic;
}

void DatasetSpec::validate() const {
  require(num_classes >= 2, ErrorCategory::kConfig, "num_classes must be at least 2");
  require(height >= 1 && width >= 1 && channels >= 1, ErrorCategory::kConfig, "image dimensions must be positive");
  require(!sample_budget || *sample_budget >= 1, ErrorCategory::kConfig, "sample_budget must be positive");
}

DatasetSpec dataset_spec(DatasetName name, std::optional<int> sample_budget) {
  DatasetSpec s;
  s.name = name;
  s.sample_budget = sample_budget;
  switch (name) {
    case DatasetName::kEmnistByClass:
      s.height = s.width = 28;
      s.channels = 1;
      s.num_classes = 62;
      break;
    case DatasetName::kCifar10:
      s.height = s.width = 32;
      s.channels = 3;
      s.num_classes = 10;
      break;
    case DatasetName::kCifar100:
      s.height = s.width = 32;
      s.channels = 3;
      s.num_classes = 100;
      break;
    case DatasetName::kSyntheticSmall:
      s.height = s.width = 8;
      s.channels = 1;
      s.num_classes = 4;
      break;
  }
  s.validate();
  return s;
}

nn::Tensor ImageSet::batch(std::span<const int> indices) const {
  nn::Tensor t({static_cast<int>(indices.size()), channels, height, width});
  const std::size_t stride = image_size();
  constexpr nn::Real kScale = 1.0 / 255.0;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    require(indices[i] >= 0 && indices[i] < size(), ErrorCategory::kContract, "image index out of range");
    const std::uint8_t* src = pixels.data() + static_cast<std::size_t>(indices[i]) * stride;
    nn::Real* dst = t.data() + i * stride;
    for (std::size_t j = 0; j < stride; ++j) dst[j] = src[j] * kScale;
  }
  return t;
}

// -------------------------------------------------------------- synthetic

Dataset make_synthetic_small(const SyntheticOptions& options) {
  Dataset d;
  d.spec = dataset_spec(DatasetName::kSyntheticSmall);
  constexpr double kCenters[4][2] = {{2.0, 2.0}, {2.0, 5.0}, {5.0, 2.0}, {5.0, 5.0}};
  auto render = [&](ImageSet& set, int count, util::Rng rng) {
    set.channels = 1;
    set.height = 8;
    set.width = 8;
    set.pixels.resize(static_cast<std::size_t>(count) * 64);
    set.labels.resize(static_cast<std::size_t>(count));
    std::normal_distribution<double> jitter(0.0, 0.9);
    std::normal_distribution<double> noise(0.0, 0.1);
    std::uniform_real_distribution<double> width(0.9, 1.4);
    std::uniform_real_distribution<double> amplitude(0.6, 1.0);
    for (int i = 0; i < count; ++i) {
      const int label = i % 4;
      set.labels[static_cast<std::size_t>(i)] = label;
      const double cy = kCenters[label][0] + jitter(rng);
      const double cx = kCenters[label][1] + jitter(rng);
      const double sigma = width(rng);
      const double amp = amplitude(rng);
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
          const double r2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
          double v = amp * std::exp(-r2 / (2.0 * sigma * sigma)) + noise(rng);
          v = std::clamp(v, 0.0, 1.0);
          set.pixels[static_cast<std::size_t>(i) * 64 + y * 8 + x] = static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
      }
    }
  };
  render(d.train, options.train_samples, util::make_rng(options.seed, util::Stream::kSynthetic, {0}));
  render(d.test, options.test_samples, util::make_rng(options.seed, util::Stream::kSynthetic, {1}));
  return d;
}

// ----------------------------------------------------------------- loaders

namespace {

struct GzCloser {
  void operator()(gzFile f) const {
    if (f) gzclose(f);
  }
};
using GzHandle = std::unique_ptr<std::remove_pointer_t<gzFile>, GzCloser>;

fs::path find_file(const fs::path& dir, const std::string& base) {
  for (const auto& candidate : {dir / base, dir / (base + ".gz")}) {
    if (fs::exists(candidate)) return candidate;
  }
  throw Error(ErrorCategory::kData, "dataset file not found: " + (dir / base).string() + "[.gz]");
}

std::vector<std::uint8_t> read_all(const fs::path& path) {
  // gzread passes uncompressed files through unchanged.
  GzHandle f(gzopen(path.string().c_str(), "rb"));
  require(f != nullptr, ErrorCategory::kData, "cannot open " + path.string());
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> chunk(1 << 20);
  for (;;) {
    const int n = gzread(f.get(), chunk.data(), static_cast<unsigned>(chunk.size()));
    require(n >= 0, ErrorCategory::kData, "read error in " + path.string());
    if (n == 0) break;
    out.insert(out.end(), chunk.begin(), chunk.begin() + n);
  }
  return out;
}

std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

ImageSet read_idx_pair(const fs::path& images_path, const fs::path& labels_path, bool transpose) {
  const auto img = read_all(images_path);
  const auto lab = read_all(labels_path);
  require(img.size() >= 16 && be32(img.data()) == 0x00000803, ErrorCategory::kData,
          "bad IDX image header in " + images_path.string());
  require(lab.size() >= 8 && be32(lab.data()) == 0x00000801, ErrorCategory::kData,
          "bad IDX label header in " + labels_path.string());
  const auto count = be32(img.data() + 4);
  const auto rows = static_cast<int>(be32(img.data() + 8));
  const auto cols = static_cast<int>(be32(img.data() + 12));
  require(be32(lab.data() + 4) == count, ErrorCategory::kData, "IDX image/label counts differ");
  require(img.size() == 16 + static_cast<std::size_t>(count) * rows * cols && lab.size() == 8 + count,
          ErrorCategory::kData, "truncated IDX file");
  ImageSet set;
  set.channels = 1;
  set.height = rows;
  set.width = cols;
  set.pixels.resize(static_cast<std::size_t>(count) * rows * cols);
  set.labels.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint8_t* src = img.data() + 16 + static_cast<std::size_t>(i) * rows * cols;
    std::uint8_t* dst = set.pixels.data() + static_cast<std::size_t>(i) * rows * cols;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) dst[r * cols + c] = transpose ? src[c * rows + r] : src[r * cols + c];
    }
    set.labels[i] = lab[8 + i];
  }
  return set;
}

void append_cifar(ImageSet& set, const fs::path& path, int label_bytes, int label_offset) {
  const auto bytes = read_all(path);
  const std::size_t record = static_cast<std::size_t>(label_bytes) + 3072;
  require(bytes.size() % record == 0, ErrorCategory::kData, "truncated CIFAR batch " + path.string());
  set.channels = 3;
  set.height = set.width = 32;
  for (std::size_t off = 0; off < bytes.size(); off += record) {
    set.labels.push_back(bytes[off + static_cast<std::size_t>(label_offset)]);
    set.pixels.insert(set.pixels.end(), bytes.begin() + static_cast<std::ptrdiff_t>(off + label_bytes),
                      bytes.begin() + static_cast<std::ptrdiff_t>(off + record));
  }
}

fs::path dataset_dir(const fs::path& root, const std::string& sub) {
  return fs::exists(root / sub) ? root / sub : root;
}

}  // namespace

Dataset load_dataset(const DatasetSpec& spec, const fs::path& data_root, const SyntheticOptions& synthetic) {
  spec.validate();
  Dataset d;
  switch (spec.name) {
    case DatasetName::kSyntheticSmall:
      d = make_synthetic_small(synthetic);
      break;
    case DatasetName::kEmnistByClass: {
      const auto dir = dataset_dir(data_root, "emnist");
      // EMNIST stores images column-major relative to MNIST.
      d.train = read_idx_pair(find_file(dir, "emnist-byclass-train-images-idx3-ubyte"),
                              find_file(dir, "emnist-byclass-train-labels-idx1-ubyte"), true);
      d.test = read_idx_pair(find_file(dir, "emnist-byclass-test-images-idx3-ubyte"),
                             find_file(dir, "emnist-byclass-test-labels-idx1-ubyte"), true);
      break;
    }
    case DatasetName::kCifar10: {
      const auto dir = dataset_dir(data_root, "cifar-10-batches-bin");
      for (int b = 1; b <= 5; ++b) append_cifar(d.train, find_file(dir, "data_batch_" + std::to_string(b) + ".bin"), 1, 0);
      append_cifar(d.test, find_file(dir, "test_batch.bin"), 1, 0);
      break;
    }
    case DatasetName::kCifar100: {
      const auto dir = dataset_dir(data_root, "cifar-100-binary");
      append_cifar(d.train, find_file(dir, "train.bin"), 2, 1);
      append_cifar(d.test, find_file(dir, "test.bin"), 2, 1);
      break;
    }
  }
  d.spec = spec;
  if (spec.sample_budget) {
    require(*spec.sample_budget <= d.train.size(), ErrorCategory::kConfig,
            "sample_budget exceeds the dataset's training partition");
  }
  for (const auto* set : {&d.train, &d.test}) {
    for (int label : set->labels) {
      require(label >= 0 && label < spec.num_classes, ErrorCategory::kData, "label out of range in dataset");
    }
  }
  return d;
}

fs::path default_data_root() {
  if (const char* env = std::getenv("FEDDIG_DATA_ROOT"); env && *env) return env;
  return "data";
}

}  // namespace feddig::data
