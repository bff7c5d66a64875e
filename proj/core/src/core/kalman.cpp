#include "seqcmc/core/kalman.hpp"

#include <cmath>

namespace seqcmc {

GaussianBelief kalman_predict(const GaussianBelief& belief, const Matrix& F, const Matrix& G,
                              const Matrix& Q) {
    const auto n = belief.dim();
    if (F.rows() != F.cols() || F.cols() != n || G.rows() != n || G.cols() != Q.rows() ||
        Q.rows() != Q.cols() || belief.cov.rows() != n) {
        throw DimensionMismatch("kalman_predict: dimension mismatch");
    }
    GaussianBelief out;
    out.mean = F * belief.mean;
    out.cov = F * belief.cov * F.transpose() + G * Q * G.transpose();
    condition_covariance(out.cov);
    return out;
}

KalmanUpdate kalman_update(const GaussianBelief& belief, const Matrix& H, const Matrix& R,
                           const Vector& y) {
    const auto n = belief.dim();
    const auto q = y.size();
    if (H.cols() != n || H.rows() != q || R.rows() != q || R.cols() != q ||
        belief.cov.rows() != n) {
        throw DimensionMismatch("kalman_update: dimension mismatch");
    }
    KalmanUpdate out;
    const Matrix PHt = belief.cov * H.transpose();
    out.predicted_obs = H * belief.mean;
    out.innovation_cov = H * PHt + R;
    out.innovation_cov = 0.5 * (out.innovation_cov + out.innovation_cov.transpose()).eval();

    Eigen::LLT<Matrix> llt(out.innovation_cov);
    if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().array() > 0.0).all()) {
        throw DegenerateCovariance();
    }
    const Vector innovation = y - out.predicted_obs;
    const Matrix gain = llt.solve(PHt.transpose()).transpose();

    out.posterior.mean = belief.mean + gain * innovation;
    // Joseph form keeps the covariance positive semidefinite.
    const Matrix I_KH = Matrix::Identity(n, n) - gain * H;
    out.posterior.cov = I_KH * belief.cov * I_KH.transpose() + gain * R * gain.transpose();
    condition_covariance(out.posterior.cov);

    const Vector z = llt.matrixL().solve(innovation);
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    out.predictive_loglik = -0.5 * (static_cast<double>(q) * kLogTwoPi + log_det + z.squaredNorm());
    return out;
}

} // namespace seqcmc
