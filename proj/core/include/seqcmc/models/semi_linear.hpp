#pragma once

#include "seqcmc/models/state_space.hpp"

#include <Eigen/Cholesky>

namespace seqcmc::models {

/// Quantities of the optimal kernel that depend on x_prev only. With
/// Q = K K^T and L = H Q H^T + R:
///   p(y | x_prev)      = N(y; H f(x_prev), L)
///   p(x | x_prev, y)   = N(f + Q H^T L^{-1} (y - H f), Q - Q H^T L^{-1} H Q)
struct KernelFactors {
    Vector drift;          // f(x_prev)
    Vector predicted_obs;  // H f(x_prev)
    Matrix gain;           // Q H^T L^{-1}
    Matrix kernel_cov;     // Q - gain H Q
    Eigen::LLT<Matrix> innovation_llt;
    double innovation_log_det = 0.0;

    [[nodiscard]] Vector kernel_mean(const Vector& y) const;
    [[nodiscard]] GaussianBelief kernel(const Vector& y) const;
    [[nodiscard]] double predictive_loglik(const Vector& y) const;
};

/// Kernel means, covariances and predictive log-likelihoods for a whole cloud.
/// Covariances are stored flattened (column-major p*p per particle).
struct KernelBatch {
    std::vector<double> log_predictive;
    Matrix mean;
    Matrix cov;
    Matrix cov_sqrt;

    [[nodiscard]] Index size() const { return mean.cols(); }
    [[nodiscard]] Index dim() const { return mean.rows(); }
    [[nodiscard]] Eigen::Map<const Matrix> cov_of(Index i) const {
        return {cov.col(i).data(), dim(), dim()};
    }
    [[nodiscard]] Eigen::Map<const Matrix> sqrt_of(Index i) const {
        return {cov_sqrt.col(i).data(), dim(), dim()};
    }
    [[nodiscard]] GaussianBelief belief(Index i) const {
        return {mean.col(i), Matrix(cov_of(i))};
    }
    [[nodiscard]] Vector sample(Index i, RngStream& rng) const {
        return mean.col(i) + sqrt_of(i) * rng.normal_vector(dim());
    }
    void resize(Index dim, Index n);
};

/// x_n = f(x_{n-1}) + K(x_{n-1}) u_n,  y_n = H x_n + v_n,
/// u_n ~ N(0, I), v_n ~ N(0, R).
class SemiLinearGaussianModel : public StateSpaceModel {
public:
    SemiLinearGaussianModel(Matrix H, Matrix R, GaussianBelief prior);

    [[nodiscard]] virtual Vector drift(const Vector& x_prev) const = 0;
    [[nodiscard]] virtual Matrix noise_gain(const Vector& x_prev) const = 0;
    /// Q(x_prev) = K K^T
    [[nodiscard]] virtual Matrix process_cov(const Vector& x_prev) const;

    [[nodiscard]] const Matrix& obs_matrix() const { return H_; }
    [[nodiscard]] const Matrix& obs_cov() const { return R_; }
    [[nodiscard]] const GaussianBelief& prior() const { return prior_; }

    [[nodiscard]] Index state_dim() const override { return prior_.dim(); }
    [[nodiscard]] Index obs_dim() const override { return H_.rows(); }

    [[nodiscard]] Vector sample_prior(RngStream& rng) const override;
    [[nodiscard]] Vector sample_transition(const Vector& x_prev, RngStream& rng) const override;
    [[nodiscard]] double transition_logpdf(const Vector& x, const Vector& x_prev) const override;
    [[nodiscard]] double obs_logpdf(const Vector& y, const Vector& x) const override;
    [[nodiscard]] Vector sample_observation(const Vector& x, RngStream& rng) const override;

    /// Throws DegenerateCovariance if L(x_prev) is singular.
    [[nodiscard]] KernelFactors kernel_factors(const Vector& x_prev) const;
    virtual void kernel_batch(const Matrix& x_prev, const Vector& y, KernelBatch& out) const;

private:
    Matrix H_;
    Matrix R_;
    Matrix R_sqrt_;
    GaussianBelief prior_;
};

[[nodiscard]] GaussianBelief optimal_kernel(const SemiLinearGaussianModel& model,
                                            const Vector& x_prev, const Vector& y);
[[nodiscard]] double predictive_loglik(const SemiLinearGaussianModel& model, const Vector& x_prev,
                                       const Vector& y);

/// x_n = F x_{n-1} + u_n, u_n ~ N(0, Q)
class LinearGaussianModel : public SemiLinearGaussianModel {
public:
    LinearGaussianModel(Matrix F, Matrix Q, Matrix H, Matrix R, GaussianBelief prior);
    /// Scalar convenience form with prior N(0, 1).
    LinearGaussianModel(double F, double Q, double H, double R);

    [[nodiscard]] const Matrix& transition_matrix() const { return F_; }
    [[nodiscard]] const Matrix& transition_cov() const { return Q_; }

    [[nodiscard]] Vector drift(const Vector& x_prev) const override { return F_ * x_prev; }
    [[nodiscard]] Matrix noise_gain(const Vector&) const override { return Q_sqrt_; }
    [[nodiscard]] Matrix process_cov(const Vector&) const override { return Q_; }

    void kernel_batch(const Matrix& x_prev, const Vector& y, KernelBatch& out) const override;
    void sample_transition_batch(const Matrix& x_prev, Matrix& out, RngStream& rng) const override;

private:
    Matrix F_;
    Matrix Q_;
    Matrix Q_sqrt_;
    // x-independent kernel quantities
    Matrix gain_;
    Matrix kernel_cov_;
    Matrix kernel_sqrt_;
    Eigen::LLT<Matrix> innovation_llt_;
    double innovation_log_det_ = 0.0;
};

/// Scalar ARCH model: x_n = sqrt(beta0 + beta1 x_{n-1}^2) u_n, y_n = x_n + v_n,
/// v_n ~ N(0, R).
class ArchModel : public SemiLinearGaussianModel {
public:
    ArchModel(double beta0, double beta1, double R,
              GaussianBelief prior = GaussianBelief(Vector::Zero(1), Matrix::Identity(1, 1)));

    [[nodiscard]] double beta0() const { return beta0_; }
    [[nodiscard]] double beta1() const { return beta1_; }

    [[nodiscard]] Vector drift(const Vector& x_prev) const override;
    [[nodiscard]] Matrix noise_gain(const Vector& x_prev) const override;

    void kernel_batch(const Matrix& x_prev, const Vector& y, KernelBatch& out) const override;
    void sample_transition_batch(const Matrix& x_prev, Matrix& out, RngStream& rng) const override;

private:
    double beta0_;
    double beta1_;
    double R_;
};

} // namespace seqcmc::models
