#pragma once

#include "seqcmc/models/state_space.hpp"

namespace seqcmc::models {

/// x_n = phi x_{n-1} + sigma u_n,  y_n = beta exp(x_n / 2) v_n,
/// u_n, v_n ~ N(0, 1). The optimal kernel has no closed form.
class StochasticVolatilityModel : public StateSpaceModel {
public:
    StochasticVolatilityModel(double phi, double sigma, double beta,
                              GaussianBelief prior = GaussianBelief(Vector::Zero(1),
                                                                    Matrix::Identity(1, 1)));

    [[nodiscard]] double phi() const { return phi_; }
    [[nodiscard]] double sigma() const { return sigma_; }
    [[nodiscard]] double beta() const { return beta_; }

    [[nodiscard]] Index state_dim() const override { return 1; }
    [[nodiscard]] Index obs_dim() const override { return 1; }

    [[nodiscard]] Vector sample_prior(RngStream& rng) const override;
    [[nodiscard]] Vector sample_transition(const Vector& x_prev, RngStream& rng) const override;
    [[nodiscard]] double transition_logpdf(const Vector& x, const Vector& x_prev) const override;
    [[nodiscard]] double obs_logpdf(const Vector& y, const Vector& x) const override;
    [[nodiscard]] Vector sample_observation(const Vector& x, RngStream& rng) const override;

    void sample_prior_batch(Matrix& out, Index n, RngStream& rng) const override;
    void sample_transition_batch(const Matrix& x_prev, Matrix& out, RngStream& rng) const override;
    void obs_logpdf_batch(const Vector& y, const Matrix& x, std::span<double> out) const override;

    [[nodiscard]] double obs_logpdf(double y, double x) const;

private:
    double phi_;
    double sigma_;
    double beta_;
    GaussianBelief prior_;
    double prior_sd_;
};

struct ApproximateKernel {
    GaussianBelief kernel;
    double log_predictive = 0.0;
};

/// Replaces log g(y | x) by its first-order expansion at xbar = phi x_prev,
///   log g(y | x) ~ log g(y | xbar) + d (x - xbar),
///   d = -1/2 + y^2 exp(-xbar) / (2 beta^2).
/// Multiplying by N(x; xbar, sigma^2) and completing the square gives
///   kernel            N(xbar + sigma^2 d, sigma^2)
///   log predictive    log g(y | xbar) + d^2 sigma^2 / 2.
[[nodiscard]] ApproximateKernel sv_taylor_kernel(const StochasticVolatilityModel& model,
                                                 double x_prev, double y);

/// Same first-order expansion, taken at the point a where the resulting
/// kernel is centered on itself: a = xbar + sigma^2 d(a), i.e. the mode of
/// p(x | x_prev, y). The kernel is N(a, sigma^2) and the log predictive
///   log g(y | a) + d(a) (xbar - a) + d(a)^2 sigma^2 / 2.
/// The expansion stays accurate for large |y| where the expansion at xbar
/// overshoots.
[[nodiscard]] ApproximateKernel sv_mode_taylor_kernel(const StochasticVolatilityModel& model,
                                                      double x_prev, double y);

} // namespace seqcmc::models
