#pragma once

#include "seqcmc/core/types.hpp"

#include <cstdint>
#include <random>
#include <span>

namespace seqcmc {

/// Seeded random stream. The engine is std::mt19937_64 (its output sequence
/// is fixed by the standard) and every derived variate is computed here rather
/// than through <random> distributions, whose algorithms are
/// implementation-defined. Identical seed gives a bit-identical draw sequence
/// on every platform.
///
/// Streams are split by key: `substream(seed, key)` is a pure function, and
/// `derive(key)` consumes exactly one draw from the parent.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed);

    [[nodiscard]] static RngStream substream(std::uint64_t seed, std::uint64_t key);
    [[nodiscard]] RngStream derive(std::uint64_t key);

    [[nodiscard]] std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform on (0, 1).
    double uniform_open();
    double normal();
    double exponential();
    Vector normal_vector(Index n);
    std::uint64_t poisson(double mean);
    /// Index drawn from unnormalized nonnegative probabilities.
    Index categorical(std::span<const double> probabilities);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

/// splitmix64 finalizer, used to decorrelate derived seeds.
[[nodiscard]] std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key);

} // namespace seqcmc
