#pragma once

#include <cstdint>
#include <random>

namespace kexp {

/// Seeded random source. Wraps mt19937_64, whose output sequence is fixed by
/// the standard, and derives doubles and indices by hand so that sequences are
/// reproducible across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform index in [0, n). n must be positive.
    std::size_t index(std::size_t n) {
        // Rejection sampling removes modulo bias.
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return static_cast<std::size_t>(x % bound);
    }

    /// Standard exponential variate.
    double exponential();

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to derive independent per-trial seeds.
std::uint64_t split_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace kexp
