#pragma once

#include "seqcmc/core/rng.hpp"
#include "seqcmc/core/types.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace seqcmc {

/// Dirac-mixture approximation of a distribution: one particle per column.
struct WeightedParticleSet {
    Matrix particles;            // state_dim x N
    std::vector<double> weights; // N
    bool normalized = true;

    [[nodiscard]] Index size() const { return particles.cols(); }
    [[nodiscard]] Index dim() const { return particles.rows(); }

    /// Checks the set invariants; throws std::invalid_argument on violation.
    void validate() const;

    [[nodiscard]] static WeightedParticleSet uniform(Matrix particles);
};

enum class ResampleScheme { multinomial, systematic };

ResampleScheme parse_resample_scheme(std::string_view name);
std::string_view to_string(ResampleScheme scheme);

/// Ancestor indices drawn from normalized weights. Multinomial draws are
/// i.i.d. from the weights (generated as sorted uniforms, O(N)); systematic
/// uses a single uniform offset. Both are unbiased: the expected number of
/// copies of particle i is n_out * w_i.
std::vector<Index> resample_indices(std::span<const double> weights, Index n_out,
                                    RngStream& rng, ResampleScheme scheme);

WeightedParticleSet resample(const WeightedParticleSet& set, Index n_out, RngStream& rng,
                             ResampleScheme scheme = ResampleScheme::multinomial);

/// Resample when ess < ess_threshold * N.
struct ResamplePolicy {
    ResampleScheme scheme = ResampleScheme::multinomial;
    double ess_threshold = 0.5;

    [[nodiscard]] bool should_resample(double effective_size, Index n) const {
        return effective_size < ess_threshold * static_cast<double>(n);
    }
    [[nodiscard]] static ResamplePolicy always(ResampleScheme s = ResampleScheme::multinomial) {
        return {s, 2.0};
    }
    [[nodiscard]] static ResamplePolicy never() { return {ResampleScheme::multinomial, 0.0}; }
};

} // namespace seqcmc
