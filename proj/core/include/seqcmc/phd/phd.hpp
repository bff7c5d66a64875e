#pragma once

#include "seqcmc/core/particles.hpp"
#include "seqcmc/models/moment.hpp"
#include "seqcmc/phd/types.hpp"

#include <optional>

namespace seqcmc::phd {

// --------------------------------------------------------------------------- SMC-PHD

struct SmcPhdConfig {
    Index particles_per_target = 200;
    /// Birth particles per stratum: one stratum for the birth intensity and
    /// one around each measurement.
    Index birth_particles = 20;
    ResampleScheme scheme = ResampleScheme::multinomial;
};

struct SmcPhdResult {
    /// Predicted particles carrying the updated weights (before resampling).
    PhdParticleSet updated;
    /// Resampled cloud for the next step.
    PhdParticleSet next;
    double count = 0.0;
    /// L x |Z| table p_d g(z | x_i) w_i / C(z).
    Matrix measurement_weights;
    /// C(z) = kappa(z) + p_d Sum_j g(z | x_j) w_j
    std::vector<double> denominators;
};

/// Standard SMC-PHD step. Persistent particles follow the transition and are
/// scaled by p_s. Birth particles come from a stratified defensive mixture of
/// the normalized birth intensity and, for each measurement, the
/// moment-matched birth Gaussian conditioned on that measurement; their
/// weights gamma(x) / (L_b b(x)) make the birth term unbiased.
[[nodiscard]] SmcPhdResult smc_phd_step(const PhdParticleSet& set, const PhdModelParams& params,
                                        const MeasurementSet& Z, const SmcPhdConfig& config,
                                        RngStream& rng);

/// Measurement-driven extraction: for every z with Sum_i table(i, z) > threshold,
/// the table-weighted mean of the predicted particles.
[[nodiscard]] std::vector<Vector> smc_extract(const SmcPhdResult& result, double threshold = 0.5);

// --------------------------------------------------------------------------- CMC-PHD

enum class BirthMode {
    /// Birth terms computed from the Gaussian-mixture birth intensity in closed form.
    closed_form,
    /// Birth terms estimated from samples of the birth intensity.
    sampled,
};

struct CmcPhdConfig {
    Index particles_per_target = 200;
    /// Birth samples per step in sampled mode.
    Index birth_particles = 20;
    BirthMode birth_mode = BirthMode::closed_form;
    ResampleScheme scheme = ResampleScheme::multinomial;
    /// Undetected children with particles_per_target * w1 below this value
    /// are resampled with the residual mass instead of kept one per parent.
    double min_undetected_mass = 1e-4;
};

/// Weight tables of one CMC-PHD step. Birth entries are mixture components
/// in closed-form mode and samples in sampled mode.
struct CmcPhdTables {
    std::vector<double> w1;      // L
    std::vector<double> w2;      // B
    Matrix w3;                   // L x |Z|
    Matrix w4;                   // B x |Z|
    std::vector<double> kappa;   // |Z|
    std::vector<double> b_tilde; // |Z|
};

struct CmcPhdState {
    /// Particle approximation of v_n, the input of the next step.
    PhdParticleSet persistent;
    /// Cloud v_{n-1} the tables were computed from.
    PhdParticleSet previous;
    CmcPhdTables tables;
    /// Per measurement: Sum_i w3(i, z) and Sum_i w3(i, z) E[x | x_i, z].
    std::vector<double> persistent_mass;
    std::vector<Vector> persistent_weighted_mean;
    /// Per measurement: Sum_b w4(b, z) and Sum_b w4(b, z) E[x | b, z].
    std::vector<double> birth_mass;
    std::vector<Vector> birth_weighted_mean;
};

struct CmcPhdResult {
    CmcPhdState state;
    /// Sum w1 + Sum w3 + Sum w2 + Sum w4.
    double count = 0.0;
    /// Crude and conditional estimates of the integral of f against v_n,
    /// when a moment was requested.
    std::optional<Vector> cmc_moment;
    std::optional<Vector> crude_moment;
};

/// Starting state with no persistent mass.
[[nodiscard]] CmcPhdState empty_cmc_state(Index state_dim);

/// One CMC-PHD step. The single-target model must expose the optimal kernel.
/// Closed-form birth mode requires nothing beyond the linear observation of
/// the semi-linear model. When `f` is given, the crude estimate draws one
/// state per (particle, term) pair.
[[nodiscard]] CmcPhdResult cmc_phd_step(const CmcPhdState& state, const PhdModelParams& params,
                                        const MeasurementSet& Z, const CmcPhdConfig& config,
                                        RngStream& rng,
                                        const models::MomentFunction* f = nullptr);

enum class TargetSource { persistent, birth };

struct ExtractedTarget {
    Vector state;
    TargetSource source = TargetSource::persistent;
};

/// Measurement-driven extraction from the last tables: a z emits a persistent
/// estimate when Sum_i w3(i, z) > threshold and a birth estimate when
/// Sum_b w4(b, z) > threshold.
[[nodiscard]] std::vector<ExtractedTarget> extract_targets(const CmcPhdState& state,
                                                           double threshold = 0.5);

} // namespace seqcmc::phd
