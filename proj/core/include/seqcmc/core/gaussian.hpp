#pragma once

#include "seqcmc/core/rng.hpp"
#include "seqcmc/core/types.hpp"

namespace seqcmc {

/// Mean and covariance of a (possibly degenerate) Gaussian.
struct GaussianBelief {
    Vector mean;
    Matrix cov;

    GaussianBelief() = default;
    GaussianBelief(Vector m, Matrix p);

    [[nodiscard]] Index dim() const { return mean.size(); }
};

/// Symmetrizes and clamps eigenvalues below -1e-10 up to zero, in place.
void condition_covariance(Matrix& cov);

/// log N(x; mean, cov). Throws DegenerateCovariance if cov is not positive definite.
double gaussian_logpdf(const Vector& x, const Vector& mean, const Matrix& cov);

/// log N(x; mean, var) for scalars.
double gaussian_logpdf(double x, double mean, double var);

/// A matrix A with A A^T = cov; works for positive semidefinite input.
Matrix covariance_sqrt(const Matrix& cov);

Vector sample_gaussian(const GaussianBelief& belief, RngStream& rng);
Vector sample_gaussian(const Vector& mean, const Matrix& cov_sqrt, RngStream& rng);

inline constexpr double kLogTwoPi = 1.8378770664093454836;

} // namespace seqcmc
