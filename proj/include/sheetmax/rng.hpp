#pragma once

#include <cstdint>
#include <limits>

namespace sheetmax {

/// splitmix64 output finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Stream key of replication `index` under `master_seed`:
/// mix64(mix64(master_seed) + 0x9E3779B97F4A7C15 * (index + 1)).
/// Distinct indices give distinct keys for a fixed master seed.
constexpr std::uint64_t stream_key(std::uint64_t master_seed, std::uint64_t index) noexcept {
    return mix64(mix64(master_seed) + 0x9E3779B97F4A7C15ULL * (index + 1));
}

/// Wichura's AS241 (PPND16) standard normal quantile, |relative error| ~ 1e-16.
double normal_quantile(double p);

/// xoshiro256** seeded from a 64-bit key through splitmix64.
///
/// Normal variates use the inverse CDF of one 53-bit uniform each, so a
/// stream consumes exactly one 64-bit word per normal.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t key) noexcept;

    static Rng for_replication(std::uint64_t master_seed, std::uint64_t index) noexcept {
        return Rng(stream_key(master_seed, index));
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return next(); }

    result_type next() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

    double normal() noexcept { return normal_quantile(uniform()); }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

}  // namespace sheetmax
