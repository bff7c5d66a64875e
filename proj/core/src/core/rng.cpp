#include "seqcmc/core/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace seqcmc {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key) {
    return splitmix64(splitmix64(seed) ^ splitmix64(key + 0x632be59bd9b4e019ULL));
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

RngStream RngStream::substream(std::uint64_t seed, std::uint64_t key) {
    return RngStream(mix_seed(seed, key));
}

RngStream RngStream::derive(std::uint64_t key) {
    return RngStream(mix_seed(next_u64(), key));
}

double RngStream::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open() {
    return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52;
}

double RngStream::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    // Marsaglia polar method
    double u = 0.0;
    double v = 0.0;
    double s = 0.0;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    cached_normal_ = v * factor;
    has_cached_normal_ = true;
    return u * factor;
}

double RngStream::exponential() {
    return -std::log(uniform_open());
}

Vector RngStream::normal_vector(Index n) {
    Vector out(n);
    for (Index i = 0; i < n; ++i) out(i) = normal();
    return out;
}

std::uint64_t RngStream::poisson(double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) {
        throw std::invalid_argument("poisson mean must be finite and nonnegative");
    }
    // Split large means into chunks small enough for Knuth's product method.
    constexpr double chunk = 30.0;
    std::uint64_t total = 0;
    double remaining = mean;
    while (remaining > 0.0) {
        const double lambda = std::min(remaining, chunk);
        remaining -= lambda;
        const double limit = std::exp(-lambda);
        double product = uniform_open();
        while (product > limit) {
            ++total;
            product *= uniform_open();
        }
    }
    return total;
}

Index RngStream::categorical(std::span<const double> probabilities) {
    if (probabilities.empty()) throw std::invalid_argument("categorical: empty probabilities");
    const double total = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
    if (!(total > 0.0)) throw DegenerateWeights("categorical: zero total probability");
    const double target = uniform() * total;
    double running = 0.0;
    Index last_positive = 0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        if (probabilities[i] <= 0.0) continue;
        running += probabilities[i];
        last_positive = static_cast<Index>(i);
        if (target < running) return last_positive;
    }
    return last_positive;
}

} // namespace seqcmc
