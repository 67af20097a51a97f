#ifndef SVRHMC_RANDOM_HPP
#define SVRHMC_RANDOM_HPP

#include <cstdint>
#include <random>

namespace svrhmc {

// Every sampler in the library draws from this engine. Standard normals come
// from std::normal_distribution (libstdc++: Marsaglia polar method), which is
// deterministic for a fixed engine state.
using Engine = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based seed derivation: the seed for (master, chain, repeat) does not
// depend on how many other chains or repeats exist.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t chain,
                                    std::uint64_t repeat = 0,
                                    std::uint64_t stream = 0) noexcept {
  std::uint64_t s = mix64(master);
  s = mix64(s ^ mix64(chain + 0x1000));
  s = mix64(s ^ mix64(repeat + 0x2000));
  return mix64(s ^ mix64(stream + 0x3000));
}

// Per-chain streams: injected Gaussian noise, and component/minibatch indices.
struct ChainStreams {
  Engine noise;
  Engine index;

  explicit ChainStreams(std::uint64_t seed)
      : noise(derive_seed(seed, 0, 0, 1)), index(derive_seed(seed, 0, 0, 2)) {}
};

}  // namespace svrhmc

#endif  // SVRHMC_RANDOM_HPP
