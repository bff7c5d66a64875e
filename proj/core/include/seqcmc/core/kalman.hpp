#pragma once

#include "seqcmc/core/gaussian.hpp"

namespace seqcmc {

/// mean <- F mean, cov <- F cov F^T + G Q G^T.
GaussianBelief kalman_predict(const GaussianBelief& belief, const Matrix& F, const Matrix& G,
                              const Matrix& Q);

struct KalmanUpdate {
    GaussianBelief posterior;
    /// log N(y; H mean, S)
    double predictive_loglik = 0.0;
    Vector predicted_obs;
    Matrix innovation_cov;
};

/// Kalman correction with observation y = H x + v, v ~ N(0, R).
/// Throws DegenerateCovariance when S = H cov H^T + R is singular.
KalmanUpdate kalman_update(const GaussianBelief& belief, const Matrix& H, const Matrix& R,
                           const Vector& y);

} // namespace seqcmc
