#include "seqcmc/core/particles.hpp"

#include "seqcmc/core/weights.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace seqcmc {

void WeightedParticleSet::validate() const {
    if (particles.cols() < 1) throw std::invalid_argument("particle set is empty");
    if (static_cast<Index>(weights.size()) != particles.cols()) {
        throw std::invalid_argument("particle and weight counts differ");
    }
    double sum = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) throw std::invalid_argument("invalid particle weight");
        sum += w;
    }
    if (normalized && std::abs(sum - 1.0) > 1e-12 * static_cast<double>(weights.size())) {
        throw std::invalid_argument("normalized particle weights do not sum to 1");
    }
}

WeightedParticleSet WeightedParticleSet::uniform(Matrix particles) {
    const auto n = particles.cols();
    if (n < 1) throw std::invalid_argument("particle set is empty");
    WeightedParticleSet set;
    set.weights.assign(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
    set.particles = std::move(particles);
    return set;
}

ResampleScheme parse_resample_scheme(std::string_view name) {
    if (name == "multinomial") return ResampleScheme::multinomial;
    if (name == "systematic") return ResampleScheme::systematic;
    throw std::invalid_argument("unknown resampling scheme '" + std::string(name) + "'");
}

std::string_view to_string(ResampleScheme scheme) {
    return scheme == ResampleScheme::multinomial ? "multinomial" : "systematic";
}

std::vector<Index> resample_indices(std::span<const double> weights, Index n_out, RngStream& rng,
                                    ResampleScheme scheme) {
    if (n_out <= 0) throw std::invalid_argument("resample: n_out must be positive");
    if (weights.empty() || !is_normalized(weights)) {
        throw std::invalid_argument("resample: weights are not normalized");
    }
    const auto n_in = weights.size();
    std::vector<Index> out(static_cast<std::size_t>(n_out));

    // Sorted points on (0, 1); walk the weight CDF once.
    std::vector<double> points(static_cast<std::size_t>(n_out));
    if (scheme == ResampleScheme::systematic) {
        const double step = 1.0 / static_cast<double>(n_out);
        const double offset = rng.uniform() * step;
        for (Index k = 0; k < n_out; ++k) points[static_cast<std::size_t>(k)] = offset + step * static_cast<double>(k);
    } else {
        // Normalized partial sums of n_out + 1 exponentials are the order
        // statistics of n_out i.i.d. uniforms.
        double running = 0.0;
        for (auto& p : points) {
            running += rng.exponential();
            p = running;
        }
        const double total = running + rng.exponential();
        for (auto& p : points) p /= total;
    }

    std::size_t i = 0;
    double cdf = weights[0];
    for (std::size_t k = 0; k < points.size(); ++k) {
        while (points[k] >= cdf && i + 1 < n_in) {
            ++i;
            cdf += weights[i];
        }
        // Never select a zero-weight particle, even at a floating-point edge.
        std::size_t chosen = i;
        while (weights[chosen] <= 0.0 && chosen > 0) --chosen;
        out[k] = static_cast<Index>(chosen);
    }
    return out;
}

WeightedParticleSet resample(const WeightedParticleSet& set, Index n_out, RngStream& rng,
                             ResampleScheme scheme) {
    const auto idx = resample_indices(set.weights, n_out, rng, scheme);
    Matrix particles(set.dim(), n_out);
    for (Index k = 0; k < n_out; ++k) particles.col(k) = set.particles.col(idx[static_cast<std::size_t>(k)]);
    return WeightedParticleSet::uniform(std::move(particles));
}

} // namespace seqcmc
