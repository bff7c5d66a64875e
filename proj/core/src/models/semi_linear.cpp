#include "seqcmc/models/semi_linear.hpp"

#include <cmath>
#include <stdexcept>

namespace seqcmc::models {

namespace {

double llt_log_det(const Eigen::LLT<Matrix>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Eigen::LLT<Matrix> checked_llt(const Matrix& L) {
    Eigen::LLT<Matrix> llt(L);
    if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().array() > 0.0).all()) {
        throw DegenerateCovariance("degenerate predictive covariance L");
    }
    return llt;
}

void store_flat(Matrix& flat, Index i, const Matrix& m) {
    flat.col(i) = Eigen::Map<const Vector>(m.data(), m.size());
}

} // namespace

Vector KernelFactors::kernel_mean(const Vector& y) const {
    return drift + gain * (y - predicted_obs);
}

GaussianBelief KernelFactors::kernel(const Vector& y) const {
    return {kernel_mean(y), kernel_cov};
}

double KernelFactors::predictive_loglik(const Vector& y) const {
    const Vector z = innovation_llt.matrixL().solve(y - predicted_obs);
    return -0.5 * (static_cast<double>(y.size()) * kLogTwoPi + innovation_log_det + z.squaredNorm());
}

void KernelBatch::resize(Index dim, Index n) {
    log_predictive.resize(static_cast<std::size_t>(n));
    mean.resize(dim, n);
    cov.resize(dim * dim, n);
    cov_sqrt.resize(dim * dim, n);
}

SemiLinearGaussianModel::SemiLinearGaussianModel(Matrix H, Matrix R, GaussianBelief prior)
    : H_(std::move(H)), R_(std::move(R)), prior_(std::move(prior)) {
    if (H_.cols() != prior_.dim() || R_.rows() != H_.rows() || R_.cols() != H_.rows()) {
        throw DimensionMismatch("semi-linear model: H, R and prior dimensions disagree");
    }
    R_sqrt_ = covariance_sqrt(R_);
}

Matrix SemiLinearGaussianModel::process_cov(const Vector& x_prev) const {
    const Matrix K = noise_gain(x_prev);
    return K * K.transpose();
}

Vector SemiLinearGaussianModel::sample_prior(RngStream& rng) const {
    return sample_gaussian(prior_, rng);
}

Vector SemiLinearGaussianModel::sample_transition(const Vector& x_prev, RngStream& rng) const {
    const Matrix K = noise_gain(x_prev);
    return drift(x_prev) + K * rng.normal_vector(K.cols());
}

double SemiLinearGaussianModel::transition_logpdf(const Vector& x, const Vector& x_prev) const {
    return gaussian_logpdf(x, drift(x_prev), process_cov(x_prev));
}

double SemiLinearGaussianModel::obs_logpdf(const Vector& y, const Vector& x) const {
    return gaussian_logpdf(y, H_ * x, R_);
}

Vector SemiLinearGaussianModel::sample_observation(const Vector& x, RngStream& rng) const {
    return H_ * x + R_sqrt_ * rng.normal_vector(R_sqrt_.cols());
}

KernelFactors SemiLinearGaussianModel::kernel_factors(const Vector& x_prev) const {
    if (x_prev.size() != state_dim()) throw DimensionMismatch("kernel_factors: bad state size");
    KernelFactors k;
    k.drift = drift(x_prev);
    k.predicted_obs = H_ * k.drift;
    const Matrix Q = process_cov(x_prev);
    const Matrix QHt = Q * H_.transpose();
    Matrix L = H_ * QHt + R_;
    L = 0.5 * (L + L.transpose()).eval();
    k.innovation_llt = checked_llt(L);
    k.innovation_log_det = llt_log_det(k.innovation_llt);
    k.gain = k.innovation_llt.solve(QHt.transpose()).transpose();
    k.kernel_cov = Q - k.gain * QHt.transpose();
    condition_covariance(k.kernel_cov);
    return k;
}

void SemiLinearGaussianModel::kernel_batch(const Matrix& x_prev, const Vector& y,
                                           KernelBatch& out) const {
    const Index n = x_prev.cols();
    out.resize(state_dim(), n);
    for (Index i = 0; i < n; ++i) {
        const KernelFactors k = kernel_factors(x_prev.col(i));
        out.log_predictive[static_cast<std::size_t>(i)] = k.predictive_loglik(y);
        out.mean.col(i) = k.kernel_mean(y);
        store_flat(out.cov, i, k.kernel_cov);
        store_flat(out.cov_sqrt, i, covariance_sqrt(k.kernel_cov));
    }
}

GaussianBelief optimal_kernel(const SemiLinearGaussianModel& model, const Vector& x_prev,
                              const Vector& y) {
    return model.kernel_factors(x_prev).kernel(y);
}

double predictive_loglik(const SemiLinearGaussianModel& model, const Vector& x_prev,
                         const Vector& y) {
    return model.kernel_factors(x_prev).predictive_loglik(y);
}

// ---------------------------------------------------------------------------

LinearGaussianModel::LinearGaussianModel(Matrix F, Matrix Q, Matrix H, Matrix R,
                                         GaussianBelief prior)
    : SemiLinearGaussianModel(std::move(H), std::move(R), std::move(prior)),
      F_(std::move(F)), Q_(std::move(Q)) {
    const Index p = state_dim();
    if (F_.rows() != p || F_.cols() != p || Q_.rows() != p || Q_.cols() != p) {
        throw DimensionMismatch("linear model: F and Q must be p x p");
    }
    Q_sqrt_ = covariance_sqrt(Q_);
    const Matrix& Hm = obs_matrix();
    const Matrix QHt = Q_ * Hm.transpose();
    Matrix L = Hm * QHt + obs_cov();
    L = 0.5 * (L + L.transpose()).eval();
    innovation_llt_ = checked_llt(L);
    innovation_log_det_ = llt_log_det(innovation_llt_);
    gain_ = innovation_llt_.solve(QHt.transpose()).transpose();
    kernel_cov_ = Q_ - gain_ * QHt.transpose();
    condition_covariance(kernel_cov_);
    kernel_sqrt_ = covariance_sqrt(kernel_cov_);
}

LinearGaussianModel::LinearGaussianModel(double F, double Q, double H, double R)
    : LinearGaussianModel(Matrix::Constant(1, 1, F), Matrix::Constant(1, 1, Q),
                          Matrix::Constant(1, 1, H), Matrix::Constant(1, 1, R),
                          GaussianBelief(Vector::Zero(1), Matrix::Identity(1, 1))) {}

void LinearGaussianModel::kernel_batch(const Matrix& x_prev, const Vector& y,
                                       KernelBatch& out) const {
    const Index n = x_prev.cols();
    const Index p = state_dim();
    out.resize(p, n);
    const Matrix drifts = F_ * x_prev;
    const Matrix innovations = (-(obs_matrix() * drifts)).colwise() + y;
    out.mean = drifts + gain_ * innovations;
    const Matrix z = innovation_llt_.matrixL().solve(innovations);
    const double base = -0.5 * (static_cast<double>(y.size()) * kLogTwoPi + innovation_log_det_);
    const Vector flat_cov = Eigen::Map<const Vector>(kernel_cov_.data(), kernel_cov_.size());
    const Vector flat_sqrt = Eigen::Map<const Vector>(kernel_sqrt_.data(), kernel_sqrt_.size());
    for (Index i = 0; i < n; ++i) {
        out.log_predictive[static_cast<std::size_t>(i)] = base - 0.5 * z.col(i).squaredNorm();
        out.cov.col(i) = flat_cov;
        out.cov_sqrt.col(i) = flat_sqrt;
    }
}

void LinearGaussianModel::sample_transition_batch(const Matrix& x_prev, Matrix& out,
                                                  RngStream& rng) const {
    const Index p = state_dim();
    out = F_ * x_prev;
    Vector noise(p);
    for (Index i = 0; i < x_prev.cols(); ++i) {
        for (Index k = 0; k < p; ++k) noise(k) = rng.normal();
        out.col(i) += Q_sqrt_ * noise;
    }
}

// ---------------------------------------------------------------------------

ArchModel::ArchModel(double beta0, double beta1, double R, GaussianBelief prior)
    : SemiLinearGaussianModel(Matrix::Identity(1, 1), Matrix::Constant(1, 1, R), std::move(prior)),
      beta0_(beta0), beta1_(beta1), R_(R) {
    if (!(beta0 > 0.0)) throw std::invalid_argument("ARCH model requires beta0 > 0");
    if (!(beta1 >= 0.0)) throw std::invalid_argument("ARCH model requires beta1 >= 0");
    if (!(R > 0.0)) throw std::invalid_argument("ARCH model requires R > 0");
}

Vector ArchModel::drift(const Vector& x_prev) const { return Vector::Zero(x_prev.size()); }

Matrix ArchModel::noise_gain(const Vector& x_prev) const {
    return Matrix::Constant(1, 1, std::sqrt(beta0_ + beta1_ * x_prev(0) * x_prev(0)));
}

void ArchModel::kernel_batch(const Matrix& x_prev, const Vector& y, KernelBatch& out) const {
    const Index n = x_prev.cols();
    out.resize(1, n);
    const double yv = y(0);
    for (Index i = 0; i < n; ++i) {
        const double q = beta0_ + beta1_ * x_prev(0, i) * x_prev(0, i);
        const double l = q + R_;
        const double var = q * R_ / l;
        out.mean(0, i) = q / l * yv;
        out.cov(0, i) = var;
        out.cov_sqrt(0, i) = std::sqrt(var);
        out.log_predictive[static_cast<std::size_t>(i)] =
            -0.5 * (kLogTwoPi + std::log(l) + yv * yv / l);
    }
}

void ArchModel::sample_transition_batch(const Matrix& x_prev, Matrix& out, RngStream& rng) const {
    out.resize(1, x_prev.cols());
    for (Index i = 0; i < x_prev.cols(); ++i) {
        const double q = beta0_ + beta1_ * x_prev(0, i) * x_prev(0, i);
        out(0, i) = std::sqrt(q) * rng.normal();
    }
}

} // namespace seqcmc::models
