#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "feddig/digest/digest.hpp"
#include "feddig/nn/layers.hpp"
#include "feddig/nn/tensor.hpp"
#include "feddig/util/hash.hpp"

namespace feddig::digest {

enum class DigestKind : std::uint32_t { kMixed = 0, kLaplace = 1 };

// Fingerprint of a producer: SHA-256 of its serialized checkpoint bytes.
util::Sha256Digest producer_fingerprint(const nn::Sequential& producer);

// One client's uploaded digests as the moderator sees them: only (D_R, D_y)
// pairs at wire precision. Member indices never get here.
struct DigestStore {
  util::Sha256Digest fingerprint{};
  DigestKind kind = DigestKind::kMixed;
  int samples_per_digest = 1;
  int feature_length = 0;
  int num_classes = 0;
  int creation_iteration = 0;
  std::vector<float> features;  // count x feature_length
  std::vector<float> labels;    // count x num_classes

  std::size_t count() const { return feature_length ? features.size() / static_cast<std::size_t>(feature_length) : 0; }
  bool empty() const { return count() == 0; }

  // (rows, C', H', W') batch of D_R.
  nn::Tensor feature_batch(std::span<const int> rows, const nn::Shape& feature_shape) const;
  // (rows, K) batch of D_y.
  nn::Tensor label_batch(std::span<const int> rows) const;

  bool operator==(const DigestStore&) const = default;
};

DigestStore make_store(std::span<const Digest> digests, const util::Sha256Digest& fingerprint, DigestKind kind,
                       int samples_per_digest, int feature_length, int num_classes, int creation_iteration);

// File layout, little-endian:
//   "FDGS" u32 version u32 kind, 32-byte fingerprint,
//   u32 SpD u32 l u32 K i32 creation_iteration u64 count,
//   then count records of l f32 (D_R) followed by K f32 (D_y).
constexpr std::size_t kStoreHeaderBytes = 68;

std::size_t store_file_bytes(const DigestStore& store);
std::string serialize_store(const DigestStore& store);
DigestStore deserialize_store(const std::string& bytes);
void write_store(const std::filesystem::path& path, const DigestStore& store);
DigestStore read_store(const std::filesystem::path& path);

// The moderator's collection. Each client's store is written once.
class DigestRegistry {
 public:
  void add(int client, DigestStore store);
  bool contains(int client) const { return stores_.contains(client); }
  const DigestStore& at(int client) const;
  const std::map<int, DigestStore>& stores() const { return stores_; }
  std::size_t total_count() const;
  bool empty() const { return total_count() == 0; }

 private:
  std::map<int, DigestStore> stores_;
};

}  // namespace feddig::digest
