#pragma once

#include "seqcmc/models/semi_linear.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace seqcmc::models {

/// Discrete Markov chain on modes {0, ..., K-1}.
class ModeChain {
public:
    /// Rows of `transition` must be stochastic within 1e-12. The initial law
    /// defaults to uniform.
    explicit ModeChain(Matrix transition, std::optional<Vector> initial = std::nullopt);

    /// Self-transition probability `stay`, the rest spread evenly.
    static ModeChain symmetric(Index n_modes, double stay);

    [[nodiscard]] Index n_modes() const { return P_.rows(); }
    [[nodiscard]] double prob(Index from, Index to) const { return P_(from, to); }
    [[nodiscard]] const Matrix& transition() const { return P_; }
    [[nodiscard]] const Vector& initial() const { return initial_; }

    [[nodiscard]] Index sample_initial(RngStream& rng) const;
    [[nodiscard]] Index sample_next(Index from, RngStream& rng) const;

private:
    Matrix P_;
    Vector initial_;
};

/// Per-mode matrices of a linear-Gaussian jump Markov system:
///   x_n = F(r) x_{n-1} + G(r) v_n,  y_n = H(r) x_n + L(r) w_n,
///   v_n ~ N(0, Q), w_n ~ N(0, R).
struct LinearMode {
    Matrix F;
    Matrix G;
    Matrix H;
    Matrix L;
};

class LinearJmssModel {
public:
    LinearJmssModel(ModeChain chain, std::vector<LinearMode> modes, Matrix Q, Matrix R,
                    GaussianBelief prior);

    [[nodiscard]] const ModeChain& chain() const { return chain_; }
    [[nodiscard]] Index n_modes() const { return chain_.n_modes(); }
    [[nodiscard]] const LinearMode& mode(Index r) const { return modes_.at(static_cast<std::size_t>(r)); }
    [[nodiscard]] const Matrix& Q() const { return Q_; }
    [[nodiscard]] const Matrix& R() const { return R_; }
    [[nodiscard]] const GaussianBelief& prior() const { return prior_; }
    [[nodiscard]] Index state_dim() const { return prior_.dim(); }
    [[nodiscard]] Index obs_dim() const { return R_.rows(); }

    /// L(r) R L(r)^T
    [[nodiscard]] const Matrix& obs_cov(Index r) const { return obs_cov_.at(static_cast<std::size_t>(r)); }
    /// G(r) Q G(r)^T
    [[nodiscard]] const Matrix& process_cov(Index r) const { return process_cov_.at(static_cast<std::size_t>(r)); }

    [[nodiscard]] Vector sample_transition(Index r, const Vector& x_prev, RngStream& rng) const;
    [[nodiscard]] Vector sample_observation(Index r, const Vector& x, RngStream& rng) const;

    /// Coordinated-turn model with state [px, vx, py, vy], turn rates
    /// `omegas` (rad/s, one per mode), sampling period T, acceleration noise
    /// sigma_v and position measurement noise sigma_xy.
    static LinearJmssModel coordinated_turn(const std::vector<double>& omegas, double T,
                                            double sigma_v, double sigma_xy, ModeChain chain,
                                            GaussianBelief prior);

private:
    ModeChain chain_;
    std::vector<LinearMode> modes_;
    Matrix Q_;
    Matrix R_;
    GaussianBelief prior_;
    std::vector<Matrix> obs_cov_;
    std::vector<Matrix> process_cov_;
    std::vector<Matrix> process_sqrt_;
    std::vector<Matrix> obs_sqrt_;
};

/// Coordinated-turn transition matrix for turn rate omega (omega = 0 gives
/// constant velocity).
[[nodiscard]] Matrix coordinated_turn_matrix(double omega, double T);
/// Discretized white-acceleration covariance for [p, v, p, v].
[[nodiscard]] Matrix white_acceleration_cov(double T, double sigma_v);

/// Jump Markov system whose per-mode dynamics are semi-linear Gaussian.
class SemiLinearJmssModel {
public:
    SemiLinearJmssModel(ModeChain chain,
                        std::vector<std::shared_ptr<const SemiLinearGaussianModel>> modes);

    [[nodiscard]] const ModeChain& chain() const { return chain_; }
    [[nodiscard]] Index n_modes() const { return chain_.n_modes(); }
    [[nodiscard]] const SemiLinearGaussianModel& mode(Index r) const {
        return *modes_.at(static_cast<std::size_t>(r));
    }
    [[nodiscard]] Index state_dim() const { return modes_.front()->state_dim(); }

private:
    ModeChain chain_;
    std::vector<std::shared_ptr<const SemiLinearGaussianModel>> modes_;
};

} // namespace seqcmc::models
