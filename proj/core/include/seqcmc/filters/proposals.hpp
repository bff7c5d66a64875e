#pragma once

#include "seqcmc/models/semi_linear.hpp"
#include "seqcmc/models/stochastic_volatility.hpp"

namespace seqcmc::filters {

/// Importance distribution q(x_n | x_{n-1}, y_n).
class Proposal {
public:
    virtual ~Proposal() = default;
    [[nodiscard]] virtual Vector sample(const Vector& x_prev, const Vector& y, RngStream& rng) const = 0;
    [[nodiscard]] virtual double logpdf(const Vector& x, const Vector& x_prev, const Vector& y) const = 0;
};

/// q = f(x_n | x_{n-1})
class TransitionProposal final : public Proposal {
public:
    explicit TransitionProposal(const models::StateSpaceModel& model) : model_(model) {}
    [[nodiscard]] Vector sample(const Vector& x_prev, const Vector& y, RngStream& rng) const override;
    [[nodiscard]] double logpdf(const Vector& x, const Vector& x_prev, const Vector& y) const override;

private:
    const models::StateSpaceModel& model_;
};

/// q = p(x_n | x_{n-1}, y_n) of a semi-linear model
class OptimalKernelProposal final : public Proposal {
public:
    explicit OptimalKernelProposal(const models::SemiLinearGaussianModel& model) : model_(model) {}
    [[nodiscard]] Vector sample(const Vector& x_prev, const Vector& y, RngStream& rng) const override;
    [[nodiscard]] double logpdf(const Vector& x, const Vector& x_prev, const Vector& y) const override;

private:
    const models::SemiLinearGaussianModel& model_;
};

/// q = the Gaussian kernel of the stochastic-volatility Taylor expansion
class SvTaylorProposal final : public Proposal {
public:
    explicit SvTaylorProposal(const models::StochasticVolatilityModel& model) : model_(model) {}
    [[nodiscard]] Vector sample(const Vector& x_prev, const Vector& y, RngStream& rng) const override;
    [[nodiscard]] double logpdf(const Vector& x, const Vector& x_prev, const Vector& y) const override;

private:
    const models::StochasticVolatilityModel& model_;
};

/// Gaussian approximation of p(x_n | x_{n-1}, y_n) together with an
/// approximation of log p(y_n | x_{n-1}).
class KernelApproximation {
public:
    virtual ~KernelApproximation() = default;
    [[nodiscard]] virtual models::ApproximateKernel approximate(const Vector& x_prev,
                                                                const Vector& y) const = 0;
};

/// Exact kernel of a semi-linear model (the approximation is exact).
class ExactKernel final : public KernelApproximation {
public:
    explicit ExactKernel(const models::SemiLinearGaussianModel& model) : model_(model) {}
    [[nodiscard]] models::ApproximateKernel approximate(const Vector& x_prev,
                                                        const Vector& y) const override;

private:
    const models::SemiLinearGaussianModel& model_;
};

/// Where the SV kernel moment is linearized. The predictive approximation
/// always comes from the expansion at phi x_prev.
enum class SvExpansion { transition_mean, kernel_mode };

class SvTaylorApproximation final : public KernelApproximation {
public:
    explicit SvTaylorApproximation(const models::StochasticVolatilityModel& model,
                                   SvExpansion kernel_expansion = SvExpansion::transition_mean)
        : model_(model), kernel_expansion_(kernel_expansion) {}
    [[nodiscard]] models::ApproximateKernel approximate(const Vector& x_prev,
                                                        const Vector& y) const override;

private:
    const models::StochasticVolatilityModel& model_;
    SvExpansion kernel_expansion_;
};

} // namespace seqcmc::filters
