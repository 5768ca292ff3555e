#pragma once

#include <cstdint>
#include <random>

namespace xgrasp {

using Rng = std::mt19937_64;

// splitmix64 finalizer; decorrelates derived seeds.
inline std::uint64_t mix_bits(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent substream seed for (seed, stream index) pairs, so parallel
// work items draw from unrelated sequences regardless of evaluation order.
inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix_bits(mix_bits(seed) ^ (stream + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(mix_bits(seed)); }

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(sub_seed(seed, stream));
}

}  // namespace xgrasp
