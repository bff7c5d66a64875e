#pragma once

#include "seqcmc/core/particles.hpp"
#include "seqcmc/filters/proposals.hpp"
#include "seqcmc/models/moment.hpp"
#include "seqcmc/models/semi_linear.hpp"

#include <optional>

namespace seqcmc::filters {

/// Current marginal particle cloud. Trajectories are not stored: every
/// estimator here depends on the past only through (x_{n-1}, w_{n-1}).
struct FilterState {
    WeightedParticleSet set;
    Index step = 0;
    /// Weighted cloud at time n before resampling, kept for diagnostics.
    std::optional<WeightedParticleSet> last_pre_resample;
};

/// N particles from the model prior with uniform weights.
[[nodiscard]] FilterState initialize(const models::StateSpaceModel& model, Index n, RngStream& rng);

struct Estimate {
    Vector value;
    /// Monotonic wall time of the estimator-specific code path.
    double seconds = 0.0;
};

struct WeightDiagnostics {
    double ess = 0.0;
    double log_normalizer = 0.0;
    bool resampled = false;
    /// max normalized weight > 1 - 1e-9
    bool degenerate = false;
    /// max normalized weight > 0.99 (proposal misses the posterior)
    bool weight_blowup = false;
};

struct EstimatorReport {
    /// Sum_i w_i f(x_n^i) over the new samples.
    Estimate crude;
    /// Conditional-expectation estimator of the step. For sir_step the
    /// weighted sum of E[f | x_{n-1}^i, y_n]; for fa_step the average of
    /// E[f | x~_{n-1}^i, y_n] over the selected ancestors; for
    /// generic_proposal_step the approximation that keeps the importance
    /// weights of the new samples.
    std::optional<Estimate> cmc;
    /// fa_step only: the weighted sum of E[f | x_{n-1}^i, y_n] computed on
    /// the FA cloud before selection.
    std::optional<Estimate> cmc_sir;
    /// generic_proposal_step with kernel_and_predictive only: weights from
    /// the approximate predictive likelihood, new samples unused.
    std::optional<Estimate> cmc_predictive;
    WeightDiagnostics diagnostics;
};

struct StepResult {
    FilterState state;
    EstimatorReport report;
};

/// SIR with the optimal kernel: reweight by p(y | x_{n-1}), estimate, sample
/// from p(x_n | x_{n-1}, y), estimate, then resample according to `policy`.
[[nodiscard]] StepResult sir_step(const FilterState& state, const models::SemiLinearGaussianModel& model,
                                  const Vector& y, const models::MomentFunction& f,
                                  const ResamplePolicy& policy, RngStream& rng);

/// Fully adapted auxiliary filter: reweight by p(y | x_{n-1}), select
/// ancestors, sample from the optimal kernel. Output weights are uniform.
[[nodiscard]] StepResult fa_step(const FilterState& state, const models::SemiLinearGaussianModel& model,
                                 const Vector& y, const models::MomentFunction& f, RngStream& rng,
                                 ResampleScheme scheme = ResampleScheme::multinomial);

/// Bootstrap filter: propose from the transition, weight by g. Crude only.
[[nodiscard]] StepResult bootstrap_step(const FilterState& state, const models::StateSpaceModel& model,
                                        const Vector& y, const models::MomentFunction& f,
                                        const ResamplePolicy& policy, RngStream& rng);

enum class CmcMode { kernel_only, kernel_and_predictive };

/// Sequential importance sampling with an arbitrary proposal q. Weights are
/// w f g / q. The conditional moment E[f | x_{n-1}, y] is taken from
/// `approx`, which must have a Gaussian closed form for f.
[[nodiscard]] StepResult generic_proposal_step(const FilterState& state,
                                               const models::StateSpaceModel& model,
                                               const Vector& y, const models::MomentFunction& f,
                                               const Proposal& q, const KernelApproximation& approx,
                                               CmcMode mode, const ResamplePolicy& policy,
                                               RngStream& rng);

/// Weighted mean of a moment over a particle set.
[[nodiscard]] Vector weighted_moment(const WeightedParticleSet& set, const models::MomentFunction& f);

} // namespace seqcmc::filters
