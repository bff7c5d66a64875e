#include "seqcmc/filters/proposals.hpp"

#include <cmath>

namespace seqcmc::filters {

Vector TransitionProposal::sample(const Vector& x_prev, const Vector&, RngStream& rng) const {
    return model_.sample_transition(x_prev, rng);
}

double TransitionProposal::logpdf(const Vector& x, const Vector& x_prev, const Vector&) const {
    return model_.transition_logpdf(x, x_prev);
}

Vector OptimalKernelProposal::sample(const Vector& x_prev, const Vector& y, RngStream& rng) const {
    const GaussianBelief k = models::optimal_kernel(model_, x_prev, y);
    return k.mean + covariance_sqrt(k.cov) * rng.normal_vector(k.dim());
}

double OptimalKernelProposal::logpdf(const Vector& x, const Vector& x_prev, const Vector& y) const {
    const GaussianBelief k = models::optimal_kernel(model_, x_prev, y);
    return gaussian_logpdf(x, k.mean, k.cov);
}

Vector SvTaylorProposal::sample(const Vector& x_prev, const Vector& y, RngStream& rng) const {
    const auto k = models::sv_taylor_kernel(model_, x_prev(0), y(0));
    return Vector::Constant(1, k.kernel.mean(0) + std::sqrt(k.kernel.cov(0, 0)) * rng.normal());
}

double SvTaylorProposal::logpdf(const Vector& x, const Vector& x_prev, const Vector& y) const {
    const auto k = models::sv_taylor_kernel(model_, x_prev(0), y(0));
    return gaussian_logpdf(x(0), k.kernel.mean(0), k.kernel.cov(0, 0));
}

models::ApproximateKernel ExactKernel::approximate(const Vector& x_prev, const Vector& y) const {
    const models::KernelFactors k = model_.kernel_factors(x_prev);
    return {k.kernel(y), k.predictive_loglik(y)};
}

models::ApproximateKernel SvTaylorApproximation::approximate(const Vector& x_prev,
                                                             const Vector& y) const {
    auto out = models::sv_taylor_kernel(model_, x_prev(0), y(0));
    if (kernel_expansion_ == SvExpansion::kernel_mode) {
        out.kernel = models::sv_mode_taylor_kernel(model_, x_prev(0), y(0)).kernel;
    }
    return out;
}

} // namespace seqcmc::filters
