#pragma once

#include "seqcmc/core/types.hpp"

#include <span>
#include <vector>

namespace seqcmc {

struct NormalizedWeights {
    std::vector<double> weights;
    /// log of the sum of exp(raw log weights)
    double log_normalizer = 0.0;
};

/// Normalizes log-domain weights by max subtraction.
/// Throws DegenerateWeights when every entry is -inf, or any entry is NaN/+inf.
NormalizedWeights normalize_weights(std::span<const double> log_weights);

/// log(sum(exp(values))), -inf for an all -inf input.
double log_sum_exp(std::span<const double> values);

/// Effective sample size 1 / sum(w^2). Input must be normalized.
double ess(std::span<const double> weights);

bool is_normalized(std::span<const double> weights, double tolerance = 1e-9);

} // namespace seqcmc
