#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace feddig::util {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream seed for a (base, tag, ...) coordinate. Every random draw in the
// simulator goes through this so that runs are reproducible per iteration
// and per client, independent of execution order.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> coords) {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t c : coords) {
    h = splitmix64(h ^ splitmix64(c + 0x632be59bd9b4e019ULL));
  }
  return h;
}

// Stream tags.
enum class Stream : std::uint64_t {
  kSplit = 1,
  kDirichlet = 2,
  kInit = 3,
  kClientShuffle = 4,
  kReplacementShuffle = 5,
  kServerShuffle = 6,
  kDigestGrouping = 7,
  kLaplace = 8,
  kPretrain = 9,
  kSchedule = 10,
  kSynthetic = 11,
};

inline Rng make_rng(std::uint64_t base, Stream stream, std::initializer_list<std::uint64_t> coords = {}) {
  std::uint64_t h = derive_seed(base, {static_cast<std::uint64_t>(stream)});
  for (std::uint64_t c : coords) {
    h = splitmix64(h ^ splitmix64(c + 0x632be59bd9b4e019ULL));
  }
  return Rng(h);
}

}  // namespace feddig::util
