#pragma once

#include "seqcmc/core/gaussian.hpp"

#include <functional>
#include <optional>
#include <vector>
#include <string>

namespace seqcmc::models {

/// A moment of interest f(x), optionally with the closed form of its
/// expectation under a Gaussian N(m, P).
class MomentFunction {
public:
    using PointFn = std::function<Vector(const Vector&)>;
    using GaussianFn = std::function<Vector(const Vector& mean, const Matrix& cov)>;

    MomentFunction(std::string name, Index out_dim, PointFn point,
                   std::optional<GaussianFn> gaussian = std::nullopt);

    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] Index out_dim() const { return out_dim_; }

    [[nodiscard]] Vector operator()(const Vector& x) const { return point_(x); }

    [[nodiscard]] bool has_closed_form() const { return gaussian_.has_value(); }
    /// E[f(X)] for X ~ N(mean, cov). Throws std::logic_error without a closed form.
    [[nodiscard]] Vector expectation(const Vector& mean, const Matrix& cov) const;
    [[nodiscard]] Vector expectation(const GaussianBelief& belief) const {
        return expectation(belief.mean, belief.cov);
    }

    /// f(x) = x
    static MomentFunction identity(Index dim);
    /// f(x) = x restricted to the listed coordinates
    static MomentFunction coordinates(Index dim, std::vector<Index> indices);
    /// f(x) = c
    static MomentFunction constant(Vector value);
    /// f(x) = beta0 + beta1 x^2 (scalar state)
    static MomentFunction arch_variance(double beta0, double beta1);
    /// f(x) = beta exp(x / 2) (scalar state), using E[e^{X/2}] = e^{m/2 + P/8}
    static MomentFunction sv_stddev(double beta);

private:
    std::string name_;
    Index out_dim_;
    PointFn point_;
    std::optional<GaussianFn> gaussian_;
};

} // namespace seqcmc::models
