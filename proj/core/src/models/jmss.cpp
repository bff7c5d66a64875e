#include "seqcmc/models/jmss.hpp"

#include <cmath>
#include <stdexcept>

namespace seqcmc::models {

ModeChain::ModeChain(Matrix transition, std::optional<Vector> initial) : P_(std::move(transition)) {
    const Index K = P_.rows();
    if (K < 1 || P_.cols() != K) throw std::invalid_argument("mode transition must be K x K, K >= 1");
    for (Index r = 0; r < K; ++r) {
        if ((P_.row(r).array() < 0.0).any() || !P_.row(r).allFinite()) {
            throw std::invalid_argument("mode transition entries must be finite and nonnegative");
        }
        if (std::abs(P_.row(r).sum() - 1.0) > 1e-12) {
            throw std::invalid_argument("mode transition rows must sum to 1");
        }
    }
    initial_ = initial ? *initial : Vector::Constant(K, 1.0 / static_cast<double>(K));
    if (initial_.size() != K || std::abs(initial_.sum() - 1.0) > 1e-12 || (initial_.array() < 0.0).any()) {
        throw std::invalid_argument("initial mode law must be a probability vector of size K");
    }
}

ModeChain ModeChain::symmetric(Index n_modes, double stay) {
    if (n_modes < 1) throw std::invalid_argument("need at least one mode");
    if (n_modes == 1) return ModeChain(Matrix::Ones(1, 1));
    if (!(stay >= 0.0 && stay <= 1.0)) throw std::invalid_argument("stay probability must be in [0,1]");
    const double other = (1.0 - stay) / static_cast<double>(n_modes - 1);
    Matrix P = Matrix::Constant(n_modes, n_modes, other);
    P.diagonal().setConstant(stay);
    // Repair rounding so rows sum to 1 to machine precision.
    for (Index r = 0; r < n_modes; ++r) P(r, r) = 1.0 - (P.row(r).sum() - P(r, r));
    return ModeChain(std::move(P));
}

Index ModeChain::sample_initial(RngStream& rng) const {
    return rng.categorical(std::span<const double>(initial_.data(), static_cast<std::size_t>(initial_.size())));
}

Index ModeChain::sample_next(Index from, RngStream& rng) const {
    const Vector row = P_.row(from).transpose();
    return rng.categorical(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
}

// ---------------------------------------------------------------------------

LinearJmssModel::LinearJmssModel(ModeChain chain, std::vector<LinearMode> modes, Matrix Q, Matrix R,
                                 GaussianBelief prior)
    : chain_(std::move(chain)), modes_(std::move(modes)), Q_(std::move(Q)), R_(std::move(R)),
      prior_(std::move(prior)) {
    if (static_cast<Index>(modes_.size()) != chain_.n_modes()) {
        throw std::invalid_argument("number of mode parameter sets must equal K");
    }
    const Index p = prior_.dim();
    for (const auto& m : modes_) {
        if (m.F.rows() != p || m.F.cols() != p || m.G.rows() != p || m.G.cols() != Q_.rows() ||
            m.H.cols() != p || m.L.rows() != m.H.rows() || m.L.cols() != R_.rows()) {
            throw DimensionMismatch("linear JMSS: mode matrices have inconsistent shapes");
        }
        Matrix pc = m.G * Q_ * m.G.transpose();
        condition_covariance(pc);
        Matrix oc = m.L * R_ * m.L.transpose();
        condition_covariance(oc);
        process_sqrt_.push_back(covariance_sqrt(pc));
        obs_sqrt_.push_back(covariance_sqrt(oc));
        process_cov_.push_back(std::move(pc));
        obs_cov_.push_back(std::move(oc));
    }
}

Vector LinearJmssModel::sample_transition(Index r, const Vector& x_prev, RngStream& rng) const {
    const auto& s = process_sqrt_.at(static_cast<std::size_t>(r));
    return mode(r).F * x_prev + s * rng.normal_vector(s.cols());
}

Vector LinearJmssModel::sample_observation(Index r, const Vector& x, RngStream& rng) const {
    const auto& s = obs_sqrt_.at(static_cast<std::size_t>(r));
    return mode(r).H * x + s * rng.normal_vector(s.cols());
}

Matrix coordinated_turn_matrix(double omega, double T) {
    Matrix F = Matrix::Identity(4, 4);
    if (std::abs(omega) < 1e-12) {
        F(0, 1) = T;
        F(2, 3) = T;
        return F;
    }
    const double s = std::sin(omega * T);
    const double c = std::cos(omega * T);
    F << 1.0, s / omega, 0.0, -(1.0 - c) / omega,
         0.0, c, 0.0, -s,
         0.0, (1.0 - c) / omega, 1.0, s / omega,
         0.0, s, 0.0, c;
    return F;
}

Matrix white_acceleration_cov(double T, double sigma_v) {
    Matrix block(2, 2);
    block << T * T * T / 3.0, T * T / 2.0, T * T / 2.0, T;
    Matrix Q = Matrix::Zero(4, 4);
    Q.block(0, 0, 2, 2) = block;
    Q.block(2, 2, 2, 2) = block;
    return sigma_v * sigma_v * Q;
}

LinearJmssModel LinearJmssModel::coordinated_turn(const std::vector<double>& omegas, double T,
                                                  double sigma_v, double sigma_xy, ModeChain chain,
                                                  GaussianBelief prior) {
    Matrix H = Matrix::Zero(2, 4);
    H(0, 0) = 1.0;
    H(1, 2) = 1.0;
    std::vector<LinearMode> modes;
    for (double w : omegas) {
        modes.push_back({coordinated_turn_matrix(w, T), Matrix::Identity(4, 4), H, Matrix::Identity(2, 2)});
    }
    return LinearJmssModel(std::move(chain), std::move(modes), white_acceleration_cov(T, sigma_v),
                           sigma_xy * sigma_xy * Matrix::Identity(2, 2), std::move(prior));
}

// ---------------------------------------------------------------------------

SemiLinearJmssModel::SemiLinearJmssModel(
    ModeChain chain, std::vector<std::shared_ptr<const SemiLinearGaussianModel>> modes)
    : chain_(std::move(chain)), modes_(std::move(modes)) {
    if (static_cast<Index>(modes_.size()) != chain_.n_modes()) {
        throw std::invalid_argument("number of mode models must equal K");
    }
    for (const auto& m : modes_) {
        if (!m) throw std::invalid_argument("null mode model");
        if (m->state_dim() != modes_.front()->state_dim() || m->obs_dim() != modes_.front()->obs_dim()) {
            throw DimensionMismatch("mode models must share state and observation dimensions");
        }
    }
}

} // namespace seqcmc::models
