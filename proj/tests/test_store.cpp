#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "feddig/digest/store.hpp"
#include "feddig/error.hpp"
#include "feddig/nn/models.hpp"

namespace feddig {
namespace {

using namespace digest;
namespace fs = std::filesystem;

DigestStore sample_store(int count, int ell, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Digest> ds;
  for (int i = 0; i < count; ++i) {
    Digest d;
    for (int j = 0; j < ell; ++j) d.mixed_feature.push_back(std::uniform_real_distribution<double>(0, 2)(rng));
    d.mixed_label.assign(static_cast<std::size_t>(k), 1.0 / k);
    d.weights = {0.5, 0.5};
    d.members = {2 * i, 2 * i + 1};
    ds.push_back(d);
  }
  util::Sha256Digest fp{};
  fp[0] = static_cast<std::uint8_t>(seed);
  return make_store(ds, fp, DigestKind::kMixed, 2, ell, k, 3);
}

TEST(Store, SerializationRoundTripsAndSizesMatch) {
  const auto dir = fs::temp_directory_path() / "feddig_store_test";
  fs::create_directories(dir);
  for (int count : {0, 1, 17}) {
    const auto s = sample_store(count, 6, 4, 1);
    const auto path = dir / ("s" + std::to_string(count) + ".bin");
    write_store(path, s);
    EXPECT_EQ(fs::file_size(path), store_file_bytes(s));
    EXPECT_EQ(store_file_bytes(s), kStoreHeaderBytes + static_cast<std::size_t>(count) * (6 + 4) * 4);
    EXPECT_EQ(read_store(path), s);
  }
  fs::remove_all(dir);
}

TEST(Store, TruncatedOrForeignBytesAreRejected) {
  auto bytes = serialize_store(sample_store(3, 4, 2, 2));
  EXPECT_THROW(deserialize_store(bytes.substr(0, bytes.size() - 1)), Error);
  bytes[0] = 'X';
  EXPECT_THROW(deserialize_store(bytes), Error);
}

TEST(Store, BatchesExposeOnlyFeaturesAndLabels) {
  const auto s = sample_store(5, 8, 3, 3);
  const std::vector<int> rows{4, 1};
  const auto f = s.feature_batch(rows, {2, 2, 2});
  EXPECT_EQ(f.shape(), (nn::Shape{2, 2, 2, 2}));
  EXPECT_EQ(f[0], static_cast<double>(s.features[4 * 8]));
  EXPECT_EQ(s.label_batch(rows).shape(), (nn::Shape{2, 3}));
}

TEST(Registry, WriteOnceAndSharedFingerprint) {
  DigestRegistry r;
  r.add(0, sample_store(3, 4, 2, 7));
  EXPECT_THROW(r.add(0, sample_store(3, 4, 2, 7)), Error);
  EXPECT_THROW(r.add(1, sample_store(3, 4, 2, 8)), Error);
  r.add(2, sample_store(5, 4, 2, 7));
  EXPECT_EQ(r.total_count(), 8u);
}

TEST(Store, FingerprintTracksProducerWeights) {
  const auto arch = nn::make_architecture(nn::ArchFamily::kSynthetic, 4);
  auto a = arch.make_encoder();
  a.initialize(1);
  auto b = a;
  EXPECT_EQ(producer_fingerprint(a), producer_fingerprint(b));
  b.parameters()[0]->value[0] += 1e-3;
  EXPECT_NE(producer_fingerprint(a), producer_fingerprint(b));
}

}  // namespace
}  // namespace feddig
