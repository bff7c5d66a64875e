#pragma once

#include "seqcmc/bench/config.hpp"

#include <map>
#include <string>
#include <vector>

namespace seqcmc::bench {

/// Per-step aggregates of one estimator over the retained repetitions.
/// Series that do not apply to the experiment are left empty; undefined
/// entries (e.g. efficiency of a zero-MSE estimator) are NaN.
struct EstimatorSeries {
    std::string name;
    std::vector<double> mse;
    /// Median over repetitions of the per-step cost in seconds.
    std::vector<double> cost_s;
    /// 1 / (mse cost_s) where both are positive.
    std::vector<double> efficiency;
    std::vector<double> ospa_mean;
    std::vector<double> ospa_sd;
    std::vector<double> count_mean;
    std::vector<double> count_sd;
};

struct RunMetadata {
    std::string scenario;
    ExperimentKind kind = ExperimentKind::single;
    std::vector<std::uint64_t> seeds;
    Index runs_used = 0;
    Index runs_excluded = 0;
    /// Seed and reason of each excluded repetition.
    std::vector<std::pair<std::uint64_t, std::string>> exclusions;
    bool timing = true;
    std::string git_revision;
    /// Decisions in force that affect the numbers (resampling, reference,
    /// birth placement, cost accounting).
    std::map<std::string, std::string> decisions;
};

struct RunResult {
    /// Step label of each row: time n = 1..horizon for single-object
    /// experiments, scan k = 0..horizon-1 for multi-target ones.
    std::vector<Index> steps;
    std::vector<EstimatorSeries> estimators;
    RunMetadata metadata;

    [[nodiscard]] const EstimatorSeries& series(const std::string& name) const;
    [[nodiscard]] double excluded_fraction() const;
};

struct ExperimentOptions {
    /// Worker threads; 0 picks hardware concurrency capped by SEQCMC_THREADS.
    Index threads = 0;
};

/// Runs every configured filter on every repetition and aggregates.
[[nodiscard]] RunResult run_experiment(const ScenarioConfig& config, const ExperimentOptions& options = {});

/// Mean of values[first, last) ignoring NaN; last < 0 means the end.
[[nodiscard]] double time_average(const std::vector<double>& values, Index first = 0, Index last = -1);

/// 1 / (mse cost) when both are positive, NaN otherwise.
[[nodiscard]] double efficiency(double mse, double cost);

/// Worker count from SEQCMC_THREADS and the hardware.
[[nodiscard]] Index default_thread_count();

} // namespace seqcmc::bench
