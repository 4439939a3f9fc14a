#pragma once

#include <cstdint>

namespace dynrisk {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Child seed for stream `index` of `master`: mix64(mix64(master) ^ mix64(index + salt)).
///
/// Every random stream in the library (trees, LOO iterations, synthetic
/// subjects) is derived this way, so results never depend on scheduling.
/// `salt` separates unrelated consumers of the same master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                    std::uint64_t salt = 0) noexcept {
    return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL * (salt + 1)));
}

namespace salt {
inline constexpr std::uint64_t tree = 1;
inline constexpr std::uint64_t loo_iteration = 2;
inline constexpr std::uint64_t synth_subject = 3;
inline constexpr std::uint64_t synth_pilot = 4;
inline constexpr std::uint64_t ci_resample = 5;
inline constexpr std::uint64_t holdout = 6;
} // namespace salt

} // namespace dynrisk
