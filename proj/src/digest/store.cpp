#include "feddig/digest/store.hpp"

#include <fmt/format.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "feddig/error.hpp"
#include "feddig/nn/params.hpp"
#include "feddig/util/binary_io.hpp"

namespace feddig::digest {

namespace {
constexpr char kMagic[4] = {'F', 'D', 'G', 'S'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

util::Sha256Digest producer_fingerprint(const nn::Sequential& producer) {
  return util::sha256(nn::serialize_checkpoint(nn::ParamSet::capture(producer.parameters())));
}

nn::Tensor DigestStore::feature_batch(std::span<const int> rows, const nn::Shape& feature_shape) const {
  require(static_cast<int>(nn::shape_size(feature_shape)) == feature_length, ErrorCategory::kContract,
          "feature shape does not match the store");
  nn::Shape shape{static_cast<int>(rows.size())};
  shape.insert(shape.end(), feature_shape.begin(), feature_shape.end());
  nn::Tensor t(shape);
  const auto l = static_cast<std::size_t>(feature_length);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const float* src = features.data() + static_cast<std::size_t>(rows[i]) * l;
    std::copy(src, src + l, t.data() + i * l);
  }
  return t;
}

nn::Tensor DigestStore::label_batch(std::span<const int> rows) const {
  nn::Tensor t({static_cast<int>(rows.size()), num_classes});
  const auto k = static_cast<std::size_t>(num_classes);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const float* src = labels.data() + static_cast<std::size_t>(rows[i]) * k;
    std::copy(src, src + k, t.data() + i * k);
  }
  return t;
}

DigestStore make_store(std::span<const Digest> digests, const util::Sha256Digest& fingerprint, DigestKind kind,
                       int samples_per_digest, int feature_length, int num_classes, int creation_iteration) {
  DigestStore s;
  s.fingerprint = fingerprint;
  s.kind = kind;
  s.samples_per_digest = samples_per_digest;
  s.feature_length = feature_length;
  s.num_classes = num_classes;
  s.creation_iteration = creation_iteration;
  s.features.reserve(digests.size() * static_cast<std::size_t>(feature_length));
  s.labels.reserve(digests.size() * static_cast<std::size_t>(num_classes));
  for (const auto& d : digests) {
    require(static_cast<int>(d.mixed_feature.size()) == feature_length &&
                static_cast<int>(d.mixed_label.size()) == num_classes,
            ErrorCategory::kContract, "digest does not match the store layout");
    for (auto v : d.mixed_feature) s.features.push_back(static_cast<float>(v));
    for (auto v : d.mixed_label) s.labels.push_back(static_cast<float>(v));
  }
  return s;
}

std::size_t store_file_bytes(const DigestStore& s) {
  return kStoreHeaderBytes + (s.features.size() + s.labels.size()) * sizeof(float);
}

std::string serialize_store(const DigestStore& s) {
  std::ostringstream out(std::ios::binary);
  out.write(kMagic, 4);
  util::write_le<std::uint32_t>(out, kVersion);
  util::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.kind));
  out.write(reinterpret_cast<const char*>(s.fingerprint.data()), static_cast<std::streamsize>(s.fingerprint.size()));
  util::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.samples_per_digest));
  util::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.feature_length));
  util::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.num_classes));
  util::write_le<std::int32_t>(out, s.creation_iteration);
  util::write_le<std::uint64_t>(out, s.count());
  const auto l = static_cast<std::size_t>(s.feature_length);
  const auto k = static_cast<std::size_t>(s.num_classes);
  for (std::size_t r = 0; r < s.count(); ++r) {
    util::write_f32_span(out, std::span<const float>(s.features.data() + r * l, l));
    util::write_f32_span(out, std::span<const float>(s.labels.data() + r * k, k));
  }
  return std::move(out).str();
}

DigestStore deserialize_store(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  require(static_cast<bool>(in) && std::memcmp(magic, kMagic, 4) == 0, ErrorCategory::kIo, "not a digest store");
  require(util::read_le<std::uint32_t>(in) == kVersion, ErrorCategory::kIo, "unsupported digest store version");
  DigestStore s;
  const auto kind = util::read_le<std::uint32_t>(in);
  require(kind <= 1, ErrorCategory::kIo, "unknown digest kind");
  s.kind = static_cast<DigestKind>(kind);
  in.read(reinterpret_cast<char*>(s.fingerprint.data()), static_cast<std::streamsize>(s.fingerprint.size()));
  s.samples_per_digest = static_cast<int>(util::read_le<std::uint32_t>(in));
  s.feature_length = static_cast<int>(util::read_le<std::uint32_t>(in));
  s.num_classes = static_cast<int>(util::read_le<std::uint32_t>(in));
  s.creation_iteration = util::read_le<std::int32_t>(in);
  const auto count = util::read_le<std::uint64_t>(in);
  const auto l = static_cast<std::size_t>(s.feature_length);
  const auto k = static_cast<std::size_t>(s.num_classes);
  require(bytes.size() == kStoreHeaderBytes + count * (l + k) * sizeof(float), ErrorCategory::kIo,
          "digest store size does not match its header");
  s.features.resize(count * l);
  s.labels.resize(count * k);
  for (std::size_t r = 0; r < count; ++r) {
    util::read_f32_span(in, std::span<float>(s.features.data() + r * l, l));
    util::read_f32_span(in, std::span<float>(s.labels.data() + r * k, k));
  }
  return s;
}

void write_store(const std::filesystem::path& path, const DigestStore& store) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCategory::kIo, "cannot write " + path.string());
  const auto bytes = serialize_store(store);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCategory::kIo, "write failed for " + path.string());
}

DigestStore read_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCategory::kIo, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_store(buf.str());
}

void DigestRegistry::add(int client, DigestStore store) {
  require(!stores_.contains(client), ErrorCategory::kContract,
          fmt::format("client {} already uploaded its digests", client));
  if (!stores_.empty()) {
    require(stores_.begin()->second.fingerprint == store.fingerprint, ErrorCategory::kContract,
            "digests produced by a different producer");
  }
  stores_.emplace(client, std::move(store));
}

const DigestStore& DigestRegistry::at(int client) const {
  const auto it = stores_.find(client);
  require(it != stores_.end(), ErrorCategory::kContract, fmt::format("no digests for client {}", client));
  return it->second;
}

std::size_t DigestRegistry::total_count() const {
  std::size_t n = 0;
  for (const auto& [c, s] : stores_) n += s.count();
  return n;
}

}  // namespace feddig::digest
