#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace nnsid {

/// SplitMix64 finalizer, used to decorrelate derived seeds.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed for a named substream of a master seed. All randomness in the
/// project flows from one master seed through these named substreams.
inline std::uint64_t substream_seed(std::uint64_t master, std::string_view name,
                                    std::uint64_t index = 0) {
  return splitmix64(splitmix64(master ^ fnv1a(name)) + index);
}

inline std::mt19937_64 substream_rng(std::uint64_t master, std::string_view name,
                                     std::uint64_t index = 0) {
  return std::mt19937_64(substream_seed(master, name, index));
}

}  // namespace nnsid
