#pragma once

#include <cstdint>
#include <span>

#include "feddig/digest/store.hpp"

namespace feddig::exp {

// Layout of one client's digest store, enough to price it.
struct StoreShape {
  std::uint64_t count = 0;
  int feature_length = 0;
  int num_classes = 0;
};

StoreShape shape_of(const digest::DigestStore& store);

struct CommModel {
  std::uint64_t gradient_bytes = 0;  // one model push: parameter count x 4
  std::uint64_t digest_count = 0;
  std::uint64_t feature_bytes = 0;  // D_R payload over all clients
  std::uint64_t label_bytes = 0;    // D_y payload over all clients
  std::uint64_t header_bytes = 0;   // per-store file headers
  std::uint64_t digest_payload_bytes() const { return feature_bytes + label_bytes; }
  // Equals the summed sizes of the serialized store files.
  std::uint64_t digest_wire_bytes() const { return digest_payload_bytes() + header_bytes; }
  // iterations x clients gradient pushes plus the one-time digest payload.
  std::uint64_t total_bytes(int iterations, int clients) const;
};

CommModel comm_account(std::size_t parameter_count, std::span<const StoreShape> stores);

constexpr double to_mb(std::uint64_t bytes) { return static_cast<double>(bytes) / 1e6; }

}  // namespace feddig::exp
