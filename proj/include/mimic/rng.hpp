#pragma once

#include <cstdint>
#include <random>

namespace mimic {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Independent per-particle substream: the master seed and the stream index are
// mixed through splitmix64, so stream i is the same no matter how many worker
// threads run or in which order particles are processed.
//
// Draw order within a substream: latent variable first (if the scenario has
// one), then per step: d Gaussians, Poisson jump count (only when the step's
// jump rate is positive), then one mark draw per jump.
inline std::mt19937_64 substream(std::uint64_t master_seed, std::uint64_t stream_index) {
    std::uint64_t s = master_seed;
    (void)splitmix64(s);
    s ^= 0x9e3779b97f4a7c15ULL * (stream_index + 1);
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace mimic
