#pragma once

#include "seqcmc/phd/types.hpp"

#include <limits>

namespace seqcmc::phd {

/// Component management after each update.
struct GmPhdConfig {
    double prune_threshold = 1e-5;
    /// Squared Mahalanobis distance, measured with the heavier component's covariance.
    double merge_threshold = 4.0;
    Index max_components = 100;

    /// No pruning, merging or capping: the exact recursion.
    [[nodiscard]] static GmPhdConfig exact() {
        return {0.0, -1.0, std::numeric_limits<Index>::max()};
    }
};

struct GmPhdResult {
    /// Updated intensity after pruning and merging.
    GaussianMixture mixture;
    /// Expected number of targets before pruning.
    double count = 0.0;
};

/// Gaussian-mixture PHD recursion. Requires a linear Gaussian target model
/// and a state-independent survival probability.
[[nodiscard]] GmPhdResult gm_phd_step(const GaussianMixture& prior, const PhdModelParams& params,
                                      const MeasurementSet& Z, const GmPhdConfig& config = {});

/// Drops components below the prune threshold, merges close ones and keeps
/// at most max_components of the heaviest. Total weight of surviving
/// components is preserved by merging.
[[nodiscard]] GaussianMixture prune_and_merge(const GaussianMixture& mixture, const GmPhdConfig& config);

/// round(w) copies of the mean of every component with weight above threshold.
[[nodiscard]] std::vector<Vector> gm_extract(const GaussianMixture& mixture, double threshold = 0.5);

} // namespace seqcmc::phd
