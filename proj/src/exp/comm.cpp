#include "feddig/exp/comm.hpp"

namespace feddig::exp {

StoreShape shape_of(const digest::DigestStore& store) {
  return {store.count(), store.feature_length, store.num_classes};
}

std::uint64_t CommModel::total_bytes(int iterations, int clients) const {
  return static_cast<std::uint64_t>(iterations) * static_cast<std::uint64_t>(clients) * gradient_bytes +
         digest_payload_bytes();
}

CommModel comm_account(std::size_t parameter_count, std::span<const StoreShape> stores) {
  CommModel m;
  m.gradient_bytes = parameter_count * sizeof(float);
  for (const auto& s : stores) {
    m.digest_count += s.count;
    m.feature_bytes += s.count * static_cast<std::uint64_t>(s.feature_length) * sizeof(float);
    m.label_bytes += s.count * static_cast<std::uint64_t>(s.num_classes) * sizeof(float);
    m.header_bytes += digest::kStoreHeaderBytes;
  }
  return m;
}

}  // namespace feddig::exp
