#pragma once

#include <cstdint>
#include <random>

namespace mfpart {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Seed for replicate/member k: a pure function of (master, k), so work items
/// can run in any order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t k) {
    return splitmix64(splitmix64(master) ^ splitmix64(k + 0x632BE59BD9B4E019ull));
}

using Rng = std::mt19937_64;

}  // namespace mfpart
