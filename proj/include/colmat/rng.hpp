#pragma once

#include <cstdint>
#include <random>

namespace colmat {

using Rng = std::mt19937_64;

// splitmix64 finalizer; bijective on 64-bit values.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Independent deterministic stream for (seed, stream). Chunked computations
// seed chunk c with derive_seed(seed, c) and combine results in chunk order,
// which makes them bitwise-reproducible for a fixed (seed, chunk count)
// regardless of thread scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix64(seed ^ mix64(stream ^ 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

} // namespace colmat
