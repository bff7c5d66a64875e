#pragma once

#include "seqcmc/bench/config.hpp"
#include "seqcmc/models/jmss.hpp"
#include "seqcmc/models/moment.hpp"
#include "seqcmc/models/state_space.hpp"
#include "seqcmc/phd/types.hpp"

#include <memory>

namespace seqcmc::bench {

/// Simulated ground truth of one repetition.
///
/// Single-object scenarios index time n = 1..horizon with x_0 drawn from the
/// prior and no observation at time 0. Multi-target scenarios index scans
/// k = 0..horizon-1.
struct TruthTape {
    Vector initial_state;
    /// Per step, the states of every object alive (exactly one for single-object scenarios).
    std::vector<std::vector<Vector>> states;
    /// JMSS only: the active mode at each step.
    std::vector<Index> modes;
    /// Per step, the measurement set (a single observation for single-object scenarios).
    std::vector<phd::MeasurementSet> measurements;
};

[[nodiscard]] std::shared_ptr<const models::StateSpaceModel> make_single_model(const SingleModelConfig& config);

/// Moment tracked by single-object experiments: the state itself, or the
/// volatility beta exp(x / 2) for the stochastic volatility model.
[[nodiscard]] models::MomentFunction single_moment(const SingleModelConfig& config);

[[nodiscard]] models::LinearJmssModel make_jmss_model(const JmssModelConfig& config);

/// Position coordinates of the [px, vx, py, vy] state.
[[nodiscard]] models::MomentFunction position_moment();

/// Constant-velocity target model and PHD parameters of a multi-target scenario.
[[nodiscard]] phd::PhdModelParams make_phd_params(const PhdScenarioConfig& config);

/// Deterministic in (config, seed).
[[nodiscard]] TruthTape generate_truth(const ScenarioConfig& config, std::uint64_t seed);

} // namespace seqcmc::bench
