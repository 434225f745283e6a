#pragma once

#include <cstdint>
#include <random>

namespace spml {

using Seed = std::uint64_t;
using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent child seeds from a parent.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr Seed derive_seed(Seed parent, std::uint64_t stream) noexcept {
  return mix_seed(parent ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(Seed seed) { return Rng(mix_seed(seed)); }

}  // namespace spml
