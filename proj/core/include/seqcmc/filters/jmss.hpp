#pragma once

#include "seqcmc/core/particles.hpp"
#include "seqcmc/filters/single.hpp"
#include "seqcmc/models/jmss.hpp"
#include "seqcmc/models/moment.hpp"

#include <vector>

namespace seqcmc::filters {

/// Rao-Blackwellized particle: current mode plus the Gaussian law of the
/// state given the particle's mode history.
struct JumpParticle {
    double weight = 0.0;
    Index mode = 0;
    GaussianBelief belief;
};

/// Modes from the initial law, beliefs from the model prior, uniform weights.
[[nodiscard]] std::vector<JumpParticle> initialize_rbpf(const models::LinearJmssModel& model, Index n,
                                                        RngStream& rng);

struct RbpfStepResult {
    std::vector<JumpParticle> particles;
    /// Sum_i w_i E[phi | y, r_{0:n-1}^i, r_n^i] with r_n^i sampled.
    Estimate crude;
    /// Sum_i w_i Sum_r p(r | y, r_{0:n-1}^i) E[phi | y, r_{0:n-1}^i, r].
    Estimate cmc;
    /// N x K, rows sum to 1.
    Matrix mode_posterior;
    WeightDiagnostics diagnostics;
};

/// One step of the RB-PF for a linear-Gaussian JMSS. The K Kalman updates per
/// particle are shared by both estimators; only the estimator sums are timed.
/// The mode sampled for the crude estimator is the one used to propagate.
/// `phi` must have a Gaussian closed form.
[[nodiscard]] RbpfStepResult rbpf_step(const std::vector<JumpParticle>& particles,
                                       const models::LinearJmssModel& model, const Vector& y,
                                       const models::MomentFunction& phi,
                                       const ResamplePolicy& policy, RngStream& rng);

/// Particle of a general JMSS filter.
struct HybridParticle {
    double weight = 0.0;
    Index mode = 0;
    Vector state;
};

[[nodiscard]] std::vector<HybridParticle> initialize_hybrid(const models::SemiLinearJmssModel& model,
                                                            Index n, RngStream& rng);

/// N x K matrix of w(i, r) proportional to w_i p(r | r_i) p(y | x_i, r).
/// Row sums are the predictive weights w~_i; the matrix sums to 1.
struct ModeMarginalWeights {
    Matrix values;
    double log_normalizer = 0.0;

    [[nodiscard]] Vector row_sums() const { return values.rowwise().sum(); }
};

[[nodiscard]] ModeMarginalWeights mode_marginal_weights(const std::vector<HybridParticle>& particles,
                                                        const models::SemiLinearJmssModel& model,
                                                        const Vector& y);

struct GeneralJmssStepResult {
    std::vector<HybridParticle> particles;
    /// Sample (r, x) from the optimal pair kernel, weighted average of phi(x).
    Estimate crude;
    /// Sample r only; conditional moments given the sampled mode.
    Estimate cmc_xn;
    /// No sampling; sum over particles and modes.
    Estimate cmc_xn_rn;
    ModeMarginalWeights mode_weights;
    WeightDiagnostics diagnostics;
};

/// Optimal-kernel SIR step for a JMSS with semi-linear modes, returning the
/// three estimators. The sampled (r, x) pairs advance the particles.
[[nodiscard]] GeneralJmssStepResult general_jmss_step(const std::vector<HybridParticle>& particles,
                                                      const models::SemiLinearJmssModel& model,
                                                      const Vector& y,
                                                      const models::MomentFunction& phi,
                                                      const ResamplePolicy& policy, RngStream& rng);

/// Mode-conditional proposal q(x_n | x_{n-1}, r_n, y_n).
class ModeConditionalProposal {
public:
    virtual ~ModeConditionalProposal() = default;
    [[nodiscard]] virtual Vector sample(const Vector& x_prev, Index r, const Vector& y,
                                        RngStream& rng) const = 0;
    [[nodiscard]] virtual double logpdf(const Vector& x, const Vector& x_prev, Index r,
                                        const Vector& y) const = 0;
};

/// q = f(x_n | x_{n-1}, r_n)
class ModeTransitionProposal final : public ModeConditionalProposal {
public:
    explicit ModeTransitionProposal(const models::SemiLinearJmssModel& model) : model_(model) {}
    [[nodiscard]] Vector sample(const Vector& x_prev, Index r, const Vector& y, RngStream& rng) const override;
    [[nodiscard]] double logpdf(const Vector& x, const Vector& x_prev, Index r, const Vector& y) const override;

private:
    const models::SemiLinearJmssModel& model_;
};

/// q = p(x_n | x_{n-1}, r_n, y_n)
class ModeOptimalProposal final : public ModeConditionalProposal {
public:
    explicit ModeOptimalProposal(const models::SemiLinearJmssModel& model) : model_(model) {}
    [[nodiscard]] Vector sample(const Vector& x_prev, Index r, const Vector& y, RngStream& rng) const override;
    [[nodiscard]] double logpdf(const Vector& x, const Vector& x_prev, Index r, const Vector& y) const override;

private:
    const models::SemiLinearJmssModel& model_;
};

struct JmssEstimateResult {
    std::vector<HybridParticle> particles;
    Estimate estimate;
    WeightDiagnostics diagnostics;
};

/// IS approximation that enumerates the modes: one draw x^{r,i} per particle
/// and mode (N K proposals), estimate = Sum u_ir phi(x^{r,i}) / Sum u_ir with
/// u_ir = w_i p(r | r_i) f g / q. The next cloud keeps one draw per particle,
/// chosen with probability proportional to u_ir, weighted by Sum_r u_ir.
[[nodiscard]] JmssEstimateResult jmss_is_marginal_step(const std::vector<HybridParticle>& particles,
                                                       const models::SemiLinearJmssModel& model,
                                                       const Vector& y,
                                                       const models::MomentFunction& phi,
                                                       const ModeConditionalProposal& q,
                                                       const ResamplePolicy& policy, RngStream& rng);

/// Mode proposal q(r_n | x_{n-1}, r_{n-1}).
class ModeProposal {
public:
    virtual ~ModeProposal() = default;
    /// Probabilities over the K modes (sum to 1).
    [[nodiscard]] virtual Vector probabilities(const Vector& x_prev, Index r_prev) const = 0;
};

/// q(r | r_prev) = p(r | r_prev)
class PriorModeProposal final : public ModeProposal {
public:
    explicit PriorModeProposal(const models::ModeChain& chain) : chain_(chain) {}
    [[nodiscard]] Vector probabilities(const Vector& x_prev, Index r_prev) const override;

private:
    const models::ModeChain& chain_;
};

/// Point mass at a fixed mode.
class FixedModeProposal final : public ModeProposal {
public:
    FixedModeProposal(Index n_modes, Index mode);
    [[nodiscard]] Vector probabilities(const Vector& x_prev, Index r_prev) const override;

private:
    Index n_modes_;
    Index mode_;
};

class UniformModeProposal final : public ModeProposal {
public:
    explicit UniformModeProposal(Index n_modes) : n_modes_(n_modes) {}
    [[nodiscard]] Vector probabilities(const Vector& x_prev, Index r_prev) const override;

private:
    Index n_modes_;
};

struct MixtureProposalResult {
    std::vector<HybridParticle> particles;
    /// Estimate with the Rao-Blackwellized weights.
    Estimate estimate;
    /// Estimate with the plain IS weights of the same draws.
    Estimate plain_estimate;
    /// Unnormalized weights (including w_{n-1}) of both schemes.
    std::vector<double> rb_weights;
    std::vector<double> plain_weights;
    WeightDiagnostics diagnostics;
};

/// Draw r_i ~ q(r | x_{n-1}^i, r_{n-1}^i), x_i ~ q(x | x_{n-1}^i, r_i). The
/// plain weight is w p(r_i | r_{n-1}) f g / (q(r_i) q(x_i | r_i)). The
/// Rao-Blackwellized weight is its conditional expectation given x_i,
///   w Sum_{r in S} p(r | r_{n-1}) f(x_i | r) g(y | x_i, r) / Sum_r q(r) q(x_i | r),
/// where S is the set of modes with q(r) q(x_i | r) > 0. The new mode of each
/// particle is drawn from p(r | x_i, x_{n-1}^i, r_{n-1}^i, y) restricted to S.
[[nodiscard]] MixtureProposalResult jmss_mixture_proposal_step(
    const std::vector<HybridParticle>& particles, const models::SemiLinearJmssModel& model,
    const Vector& y, const models::MomentFunction& phi, const ModeProposal& q_mode,
    const ModeConditionalProposal& q_state, const ResamplePolicy& policy, RngStream& rng);

} // namespace seqcmc::filters
