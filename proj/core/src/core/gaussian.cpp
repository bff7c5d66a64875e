#include "seqcmc/core/gaussian.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace seqcmc {

GaussianBelief::GaussianBelief(Vector m, Matrix p) : mean(std::move(m)), cov(std::move(p)) {
    if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
        throw DimensionMismatch("GaussianBelief: covariance does not match mean dimension");
    }
}

void condition_covariance(Matrix& cov) {
    if (cov.rows() != cov.cols()) throw DimensionMismatch("covariance must be square");
    if (cov.rows() == 1) {
        if (cov(0, 0) < 0.0) cov(0, 0) = 0.0;
        return;
    }
    cov = 0.5 * (cov + cov.transpose()).eval();
    Eigen::LDLT<Matrix> ldlt(cov);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        (ldlt.vectorD().array() >= -1e-10).all()) {
        return;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    Vector values = eig.eigenvalues().cwiseMax(0.0);
    cov = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
    cov = 0.5 * (cov + cov.transpose()).eval();
}

double gaussian_logpdf(double x, double mean, double var) {
    if (!(var > 0.0)) throw DegenerateCovariance();
    const double d = x - mean;
    return -0.5 * (kLogTwoPi + std::log(var) + d * d / var);
}

double gaussian_logpdf(const Vector& x, const Vector& mean, const Matrix& cov) {
    const auto n = x.size();
    if (mean.size() != n || cov.rows() != n || cov.cols() != n) {
        throw DimensionMismatch("gaussian_logpdf: dimension mismatch");
    }
    if (n == 1) return gaussian_logpdf(x(0), mean(0), cov(0, 0));
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) throw DegenerateCovariance();
    const Vector z = llt.matrixL().solve(x - mean);
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return -0.5 * (static_cast<double>(n) * kLogTwoPi + log_det + z.squaredNorm());
}

Matrix covariance_sqrt(const Matrix& cov) {
    if (cov.rows() != cov.cols()) throw DimensionMismatch("covariance must be square");
    if (cov.rows() == 1) {
        Matrix out(1, 1);
        out(0, 0) = std::sqrt(std::max(cov(0, 0), 0.0));
        return out;
    }
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (cov + cov.transpose()));
    return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Vector sample_gaussian(const Vector& mean, const Matrix& cov_sqrt, RngStream& rng) {
    return mean + cov_sqrt * rng.normal_vector(cov_sqrt.cols());
}

Vector sample_gaussian(const GaussianBelief& belief, RngStream& rng) {
    return sample_gaussian(belief.mean, covariance_sqrt(belief.cov), rng);
}

} // namespace seqcmc
