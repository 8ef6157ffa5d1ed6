#pragma once

#include <cstdint>
#include <random>

namespace ehrx {

/// Engine used by every simulation path. Runs are reproducible given the
/// 64-bit seed handed to the engine.
using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of the run with index `run_index` under `master_seed`:
///   splitmix64(master_seed + (run_index + 1) * 0x9E3779B97F4A7C15)
/// Distinct indices give statistically independent streams.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t run_index) noexcept {
    return splitmix64(master_seed + (run_index + 1) * 0x9E3779B97F4A7C15ULL);
}

/// Uniform double in [0, 1) from the top 53 bits of one 64-bit draw.
/// Unlike std::uniform_real_distribution this is identical on every
/// standard library.
template <class Rng>
inline double uniform01(Rng& rng) {
    static_assert(Rng::max() - Rng::min() == ~std::uint64_t{0}, "needs a full 64-bit engine");
    return static_cast<double>((rng() - Rng::min()) >> 11) * 0x1.0p-53;
}

}  // namespace ehrx
