#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "contraseg/common.hpp"

namespace contraseg {

using RandomState = std::mt19937_64;

// splitmix64 finalizer; decorrelates seeds that differ in a few bits.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a master seed and a purpose tag.
// Every consumer of randomness names its stream so that adding a new one
// never shifts the draws of existing ones.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
  return mix64(master ^ fnv1a64(tag));
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t index) {
  return mix64(derive_seed(master, tag) ^ mix64(index));
}

inline RandomState make_rng(std::uint64_t seed) { return RandomState(seed); }

}  // namespace contraseg
