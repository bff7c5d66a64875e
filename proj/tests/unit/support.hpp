#pragma once

#include "seqcmc/core/types.hpp"

#include <cmath>
#include <cstddef>
#include <initializer_list>

namespace seqcmc::testing {

/// Welford accumulator for scalar samples.
class RunningStats {
public:
    void add(double x) {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }
    [[nodiscard]] std::size_t count() const { return n_; }
    [[nodiscard]] double mean() const { return mean_; }
    [[nodiscard]] double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    /// Standard error of the mean.
    [[nodiscard]] double se() const { return std::sqrt(variance() / static_cast<double>(n_)); }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

inline Vector vec(std::initializer_list<double> values) {
    Vector v(static_cast<Index>(values.size()));
    Index i = 0;
    for (double x : values) v(i++) = x;
    return v;
}

inline Vector scalar(double x) { return Vector::Constant(1, x); }

} // namespace seqcmc::testing
