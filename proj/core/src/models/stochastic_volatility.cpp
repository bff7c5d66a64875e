#include "seqcmc/models/stochastic_volatility.hpp"

#include <cmath>
#include <stdexcept>

namespace seqcmc::models {

StochasticVolatilityModel::StochasticVolatilityModel(double phi, double sigma, double beta,
                                                     GaussianBelief prior)
    : phi_(phi), sigma_(sigma), beta_(beta), prior_(std::move(prior)) {
    if (!(sigma > 0.0)) throw std::invalid_argument("SV model requires sigma > 0");
    if (!(beta > 0.0)) throw std::invalid_argument("SV model requires beta > 0");
    if (prior_.dim() != 1) throw DimensionMismatch("SV model prior must be scalar");
    prior_sd_ = std::sqrt(std::max(prior_.cov(0, 0), 0.0));
}

Vector StochasticVolatilityModel::sample_prior(RngStream& rng) const {
    return Vector::Constant(1, prior_.mean(0) + prior_sd_ * rng.normal());
}

Vector StochasticVolatilityModel::sample_transition(const Vector& x_prev, RngStream& rng) const {
    return Vector::Constant(1, phi_ * x_prev(0) + sigma_ * rng.normal());
}

double StochasticVolatilityModel::transition_logpdf(const Vector& x, const Vector& x_prev) const {
    return gaussian_logpdf(x(0), phi_ * x_prev(0), sigma_ * sigma_);
}

double StochasticVolatilityModel::obs_logpdf(double y, double x) const {
    // N(y; 0, beta^2 e^x)
    return -0.5 * (kLogTwoPi + 2.0 * std::log(beta_) + x + y * y * std::exp(-x) / (beta_ * beta_));
}

double StochasticVolatilityModel::obs_logpdf(const Vector& y, const Vector& x) const {
    return obs_logpdf(y(0), x(0));
}

Vector StochasticVolatilityModel::sample_observation(const Vector& x, RngStream& rng) const {
    return Vector::Constant(1, beta_ * std::exp(0.5 * x(0)) * rng.normal());
}

void StochasticVolatilityModel::sample_prior_batch(Matrix& out, Index n, RngStream& rng) const {
    out.resize(1, n);
    for (Index i = 0; i < n; ++i) out(0, i) = prior_.mean(0) + prior_sd_ * rng.normal();
}

void StochasticVolatilityModel::sample_transition_batch(const Matrix& x_prev, Matrix& out,
                                                        RngStream& rng) const {
    out.resize(1, x_prev.cols());
    for (Index i = 0; i < x_prev.cols(); ++i) out(0, i) = phi_ * x_prev(0, i) + sigma_ * rng.normal();
}

void StochasticVolatilityModel::obs_logpdf_batch(const Vector& y, const Matrix& x,
                                                 std::span<double> out) const {
    if (static_cast<Index>(out.size()) != x.cols()) {
        throw DimensionMismatch("obs_logpdf_batch: output size mismatch");
    }
    const double yv = y(0);
    const double c = kLogTwoPi + 2.0 * std::log(beta_);
    const double s = yv * yv / (beta_ * beta_);
    for (Index i = 0; i < x.cols(); ++i) {
        const double xi = x(0, i);
        out[static_cast<std::size_t>(i)] = -0.5 * (c + xi + s * std::exp(-xi));
    }
}

ApproximateKernel sv_taylor_kernel(const StochasticVolatilityModel& model, double x_prev,
                                   double y) {
    const double xbar = model.phi() * x_prev;
    const double var = model.sigma() * model.sigma();
    const double beta2 = model.beta() * model.beta();
    const double d = -0.5 + y * y * std::exp(-xbar) / (2.0 * beta2);
    ApproximateKernel out;
    out.kernel = GaussianBelief(Vector::Constant(1, xbar + var * d), Matrix::Constant(1, 1, var));
    out.log_predictive = model.obs_logpdf(y, xbar) + 0.5 * d * d * var;
    return out;
}

ApproximateKernel sv_mode_taylor_kernel(const StochasticVolatilityModel& model, double x_prev,
                                        double y) {
    const double xbar = model.phi() * x_prev;
    const double var = model.sigma() * model.sigma();
    const double c = y * y / (2.0 * model.beta() * model.beta());
    // F(a) = a - xbar - var (-1/2 + c e^{-a}) is increasing and concave, so
    // Newton converges from any start (monotonically after the first step).
    double a = xbar;
    for (int it = 0; it < 100; ++it) {
        const double e = c * std::exp(-a);
        const double step = (a - xbar - var * (-0.5 + e)) / (1.0 + var * e);
        a -= step;
        if (std::abs(step) <= 1e-13 * (1.0 + std::abs(a))) break;
    }
    const double d = -0.5 + c * std::exp(-a);
    ApproximateKernel out;
    out.kernel = GaussianBelief(Vector::Constant(1, a), Matrix::Constant(1, 1, var));
    out.log_predictive = model.obs_logpdf(y, a) + d * (xbar - a) + 0.5 * d * d * var;
    return out;
}

} // namespace seqcmc::models
