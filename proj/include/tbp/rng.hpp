#pragma once

#include <cstdint>
#include <random>

namespace tbp {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent seed for item `index` of stream `stream`; depends on nothing
/// else, so parallel work reproduces the serial result.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) + index);
}

// Stream tags.
inline constexpr std::uint64_t kStreamSolver = 0x736f6c76;    // sign draws of the manifold solver
inline constexpr std::uint64_t kStreamFixed = 0x66697864;     // random fixed values
inline constexpr std::uint64_t kStreamSample = 0x73616d70;    // per-sample solver seeds
inline constexpr std::uint64_t kStreamNoise = 0x6e6f6973;     // Langevin forcing
inline constexpr std::uint64_t kStreamReference = 0x72656665; // reference ensemble forcing

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace tbp
