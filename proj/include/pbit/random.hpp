#ifndef PBIT_RANDOM_HPP
#define PBIT_RANDOM_HPP

#include <cstdint>
#include <random>

namespace pbit {

/// The only engine used by the simulators. Its output sequence is fixed by
/// the standard, so seeded runs are reproducible across platforms.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed for sweep point / chain `index` of a run seeded with `seed`:
/// splitmix64(seed ^ splitmix64(index)). Results never depend on the order
/// in which points are executed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return splitmix64(seed ^ splitmix64(index));
}

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
/// std::uniform_real_distribution is not bit-identical across standard
/// libraries, so it is not used anywhere in the simulation path.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

inline std::uint64_t entropy_seed() {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace pbit

#endif  // PBIT_RANDOM_HPP
