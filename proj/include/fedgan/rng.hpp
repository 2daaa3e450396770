#pragma once

#include <cstdint>
#include <random>

namespace fedgan {

// splitmix64; used to derive independent seed streams from one master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (0x9e3779b97f4a7c15ULL + b));
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                              std::uint64_t d) {
  return mix_seed(mix_seed(a, b, c), d);
}

// Stream tags keeping the per-purpose seed streams disjoint. Client
// parallelism cannot reorder draws because every consumer gets its own
// pre-derived seed.
enum SeedStream : std::uint64_t {
  kStreamModelInit = 0x01,
  kStreamClientTrain = 0x02,
  kStreamServerFake = 0x03,
  kStreamEval = 0x04,
  kStreamScenario = 0x05,
  kStreamIndividual = 0x06,
  kStreamCentralized = 0x07,
};

}  // namespace fedgan
