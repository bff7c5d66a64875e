#pragma once

#include "seqcmc/core/gaussian.hpp"
#include "seqcmc/core/rng.hpp"

#include <span>

namespace seqcmc::models {

/// Hidden Markov model: prior p(x0), transition f(x_n | x_{n-1}) and
/// observation density g(y_n | x_n). Particle clouds are passed as matrices
/// with one particle per column.
class StateSpaceModel {
public:
    virtual ~StateSpaceModel() = default;

    [[nodiscard]] virtual Index state_dim() const = 0;
    [[nodiscard]] virtual Index obs_dim() const = 0;

    [[nodiscard]] virtual Vector sample_prior(RngStream& rng) const = 0;
    [[nodiscard]] virtual Vector sample_transition(const Vector& x_prev, RngStream& rng) const = 0;
    [[nodiscard]] virtual double transition_logpdf(const Vector& x, const Vector& x_prev) const = 0;
    [[nodiscard]] virtual double obs_logpdf(const Vector& y, const Vector& x) const = 0;
    [[nodiscard]] virtual Vector sample_observation(const Vector& x, RngStream& rng) const = 0;

    /// Batch forms. The defaults loop over columns; scalar models override
    /// them to avoid per-particle allocation. Overrides draw the same variates
    /// in the same order as the loop.
    virtual void sample_prior_batch(Matrix& out, Index n, RngStream& rng) const;
    virtual void sample_transition_batch(const Matrix& x_prev, Matrix& out, RngStream& rng) const;
    virtual void obs_logpdf_batch(const Vector& y, const Matrix& x, std::span<double> out) const;
};

} // namespace seqcmc::models
