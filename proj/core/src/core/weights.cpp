#include "seqcmc/core/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace seqcmc {

double log_sum_exp(std::span<const double> values) {
    double max_value = -std::numeric_limits<double>::infinity();
    for (double v : values) max_value = std::max(max_value, v);
    if (!std::isfinite(max_value)) return max_value;
    double sum = 0.0;
    for (double v : values) sum += std::exp(v - max_value);
    return max_value + std::log(sum);
}

NormalizedWeights normalize_weights(std::span<const double> log_weights) {
    if (log_weights.empty()) throw std::invalid_argument("normalize_weights: empty input");
    double max_value = -std::numeric_limits<double>::infinity();
    for (double v : log_weights) {
        if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
            throw DegenerateWeights("degenerate weights: non-finite log weight");
        }
        max_value = std::max(max_value, v);
    }
    if (max_value == -std::numeric_limits<double>::infinity()) throw DegenerateWeights();

    NormalizedWeights out;
    out.weights.resize(log_weights.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < log_weights.size(); ++i) {
        out.weights[i] = std::exp(log_weights[i] - max_value);
        sum += out.weights[i];
    }
    for (double& w : out.weights) w /= sum;
    out.log_normalizer = max_value + std::log(sum);
    return out;
}

bool is_normalized(std::span<const double> weights, double tolerance) {
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) return false;
        sum += w;
    }
    return std::abs(sum - 1.0) <= tolerance;
}

double ess(std::span<const double> weights) {
    if (weights.empty() || !is_normalized(weights)) {
        throw std::invalid_argument("ess: weights are not normalized");
    }
    double sum_sq = 0.0;
    for (double w : weights) sum_sq += w * w;
    return 1.0 / sum_sq;
}

} // namespace seqcmc
