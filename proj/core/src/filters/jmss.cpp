#include "seqcmc/filters/jmss.hpp"

#include "seqcmc/core/kalman.hpp"
#include "seqcmc/core/stopwatch.hpp"
#include "seqcmc/core/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace seqcmc::filters {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

WeightDiagnostics diagnose(const std::vector<double>& weights, double log_normalizer) {
    WeightDiagnostics d;
    d.ess = ess(weights);
    d.log_normalizer = log_normalizer;
    const double max_w = *std::max_element(weights.begin(), weights.end());
    d.degenerate = max_w > 1.0 - 1e-9;
    d.weight_blowup = max_w > 0.99;
    return d;
}

template <typename Particle>
bool resample_particles(std::vector<Particle>& particles, const ResamplePolicy& policy,
                        double effective_size, RngStream& sel) {
    const auto n = static_cast<Index>(particles.size());
    if (!policy.should_resample(effective_size, n)) return false;
    std::vector<double> w(particles.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = particles[i].weight;
    const auto idx = resample_indices(w, n, sel, policy.scheme);
    std::vector<Particle> out;
    out.reserve(particles.size());
    for (Index a : idx) {
        out.push_back(particles[static_cast<std::size_t>(a)]);
        out.back().weight = 1.0 / static_cast<double>(n);
    }
    particles = std::move(out);
    return true;
}

std::vector<double> weights_of(const auto& particles) {
    std::vector<double> w(particles.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = particles[i].weight;
    return w;
}

void check_nonempty(std::size_t n) {
    if (n == 0) throw std::invalid_argument("particle list is empty");
}

/// Row r of exp(values - max) restricted to the finite entries.
Index sample_from_logs(const std::vector<double>& logs, RngStream& rng) {
    double max_v = kNegInf;
    for (double v : logs) max_v = std::max(max_v, v);
    if (!std::isfinite(max_v)) throw DegenerateWeights("degenerate weights: no admissible mode");
    std::vector<double> p(logs.size());
    for (std::size_t k = 0; k < logs.size(); ++k) p[k] = std::exp(logs[k] - max_v);
    return rng.categorical(p);
}

} // namespace

// --------------------------------------------------------------------------- RB-PF

std::vector<JumpParticle> initialize_rbpf(const models::LinearJmssModel& model, Index n, RngStream& rng) {
    if (n < 1) throw std::invalid_argument("particle count must be positive");
    std::vector<JumpParticle> out(static_cast<std::size_t>(n));
    for (auto& p : out) {
        p.weight = 1.0 / static_cast<double>(n);
        p.mode = model.chain().sample_initial(rng);
        p.belief = model.prior();
    }
    return out;
}

RbpfStepResult rbpf_step(const std::vector<JumpParticle>& particles, const models::LinearJmssModel& model,
                         const Vector& y, const models::MomentFunction& phi,
                         const ResamplePolicy& policy, RngStream& rng) {
    check_nonempty(particles.size());
    RngStream prop = rng.derive(0);
    RngStream sel = rng.derive(1);
    const auto N = static_cast<Index>(particles.size());
    const Index K = model.n_modes();

    std::vector<GaussianBelief> posts(static_cast<std::size_t>(N * K));
    Matrix logp(N, K);
    std::vector<double> logw(static_cast<std::size_t>(N));
    std::vector<double> row(static_cast<std::size_t>(K));
    for (Index i = 0; i < N; ++i) {
        const auto& p = particles[static_cast<std::size_t>(i)];
        for (Index r = 0; r < K; ++r) {
            const double prior = model.chain().prob(p.mode, r);
            if (prior <= 0.0 || p.weight <= 0.0) {
                logp(i, r) = kNegInf;
                continue;
            }
            const auto& m = model.mode(r);
            GaussianBelief pred;
            pred.mean = m.F * p.belief.mean;
            pred.cov = m.F * p.belief.cov * m.F.transpose() + model.process_cov(r);
            KalmanUpdate upd = kalman_update(pred, m.H, model.obs_cov(r), y);
            logp(i, r) = std::log(prior) + upd.predictive_loglik;
            posts[static_cast<std::size_t>(i * K + r)] = std::move(upd.posterior);
        }
        for (Index r = 0; r < K; ++r) row[static_cast<std::size_t>(r)] = logp(i, r);
        const double lse = log_sum_exp(row);
        logw[static_cast<std::size_t>(i)] = safe_log(p.weight) + lse;
        for (Index r = 0; r < K; ++r) logp(i, r) = std::isfinite(lse) ? logp(i, r) - lse : kNegInf;
    }
    const NormalizedWeights nw = normalize_weights(logw);

    RbpfStepResult out;
    out.mode_posterior = logp.array().exp().matrix();
    for (Index i = 0; i < N; ++i) {
        // Particles with zero weight keep a valid (prior-transition) row.
        if (!(out.mode_posterior.row(i).sum() > 0.0)) {
            out.mode_posterior.row(i) = model.chain().transition().row(particles[static_cast<std::size_t>(i)].mode);
        }
    }

    Stopwatch clock;
    Vector cmc = Vector::Zero(phi.out_dim());
    for (Index i = 0; i < N; ++i) {
        const double w = nw.weights[static_cast<std::size_t>(i)];
        if (w <= 0.0) continue;
        for (Index r = 0; r < K; ++r) {
            const double rho = out.mode_posterior(i, r);
            if (rho > 0.0) cmc += (w * rho) * phi.expectation(posts[static_cast<std::size_t>(i * K + r)]);
        }
    }
    out.cmc = Estimate{std::move(cmc), clock.seconds()};

    clock.restart();
    std::vector<Index> modes(static_cast<std::size_t>(N));
    Vector crude = Vector::Zero(phi.out_dim());
    for (Index i = 0; i < N; ++i) {
        const Vector prob = out.mode_posterior.row(i).transpose();
        const Index r = prop.categorical(std::span<const double>(prob.data(), static_cast<std::size_t>(K)));
        modes[static_cast<std::size_t>(i)] = r;
        const double w = nw.weights[static_cast<std::size_t>(i)];
        if (w > 0.0) crude += w * phi.expectation(posts[static_cast<std::size_t>(i * K + r)]);
    }
    out.crude = Estimate{std::move(crude), clock.seconds()};

    out.particles.resize(static_cast<std::size_t>(N));
    for (Index i = 0; i < N; ++i) {
        auto& p = out.particles[static_cast<std::size_t>(i)];
        const Index r = modes[static_cast<std::size_t>(i)];
        p.weight = nw.weights[static_cast<std::size_t>(i)];
        p.mode = r;
        auto& post = posts[static_cast<std::size_t>(i * K + r)];
        p.belief = post.mean.size() > 0 ? std::move(post) : particles[static_cast<std::size_t>(i)].belief;
    }
    out.diagnostics = diagnose(nw.weights, nw.log_normalizer);
    out.diagnostics.resampled = resample_particles(out.particles, policy, out.diagnostics.ess, sel);
    return out;
}

// --------------------------------------------------------------------------- general JMSS

std::vector<HybridParticle> initialize_hybrid(const models::SemiLinearJmssModel& model, Index n,
                                              RngStream& rng) {
    if (n < 1) throw std::invalid_argument("particle count must be positive");
    std::vector<HybridParticle> out(static_cast<std::size_t>(n));
    for (auto& p : out) {
        p.weight = 1.0 / static_cast<double>(n);
        p.mode = model.chain().sample_initial(rng);
        p.state = model.mode(p.mode).sample_prior(rng);
    }
    return out;
}

namespace {

struct PairKernels {
    std::vector<GaussianBelief> kernels;  // index i*K + r
    Matrix log_u;                         // unnormalized log w(i, r)
};

PairKernels pair_kernels(const std::vector<HybridParticle>& particles,
                         const models::SemiLinearJmssModel& model, const Vector& y) {
    const auto N = static_cast<Index>(particles.size());
    const Index K = model.n_modes();
    PairKernels out;
    out.kernels.resize(static_cast<std::size_t>(N * K));
    out.log_u.resize(N, K);
    for (Index i = 0; i < N; ++i) {
        const auto& p = particles[static_cast<std::size_t>(i)];
        for (Index r = 0; r < K; ++r) {
            const double prior = model.chain().prob(p.mode, r);
            if (prior <= 0.0 || p.weight <= 0.0) {
                out.log_u(i, r) = kNegInf;
                continue;
            }
            const models::KernelFactors kf = model.mode(r).kernel_factors(p.state);
            out.log_u(i, r) = std::log(p.weight) + std::log(prior) + kf.predictive_loglik(y);
            out.kernels[static_cast<std::size_t>(i * K + r)] = kf.kernel(y);
        }
    }
    return out;
}

ModeMarginalWeights normalize_pairs(const Matrix& log_u) {
    std::vector<double> flat(static_cast<std::size_t>(log_u.size()));
    const Index N = log_u.rows();
    const Index K = log_u.cols();
    for (Index i = 0; i < N; ++i)
        for (Index r = 0; r < K; ++r) flat[static_cast<std::size_t>(i * K + r)] = log_u(i, r);
    const NormalizedWeights nw = normalize_weights(flat);
    ModeMarginalWeights out;
    out.values.resize(N, K);
    for (Index i = 0; i < N; ++i)
        for (Index r = 0; r < K; ++r) out.values(i, r) = nw.weights[static_cast<std::size_t>(i * K + r)];
    out.log_normalizer = nw.log_normalizer;
    return out;
}

} // namespace

ModeMarginalWeights mode_marginal_weights(const std::vector<HybridParticle>& particles,
                                          const models::SemiLinearJmssModel& model, const Vector& y) {
    check_nonempty(particles.size());
    return normalize_pairs(pair_kernels(particles, model, y).log_u);
}

GeneralJmssStepResult general_jmss_step(const std::vector<HybridParticle>& particles,
                                        const models::SemiLinearJmssModel& model, const Vector& y,
                                        const models::MomentFunction& phi,
                                        const ResamplePolicy& policy, RngStream& rng) {
    check_nonempty(particles.size());
    RngStream prop = rng.derive(0);
    RngStream sel = rng.derive(1);
    const auto N = static_cast<Index>(particles.size());
    const Index K = model.n_modes();

    const PairKernels pk = pair_kernels(particles, model, y);
    GeneralJmssStepResult out;
    out.mode_weights = normalize_pairs(pk.log_u);
    const Matrix& wbar = out.mode_weights.values;
    const Vector wtilde = out.mode_weights.row_sums();

    Stopwatch clock;
    Vector both = Vector::Zero(phi.out_dim());
    for (Index i = 0; i < N; ++i)
        for (Index r = 0; r < K; ++r)
            if (wbar(i, r) > 0.0) both += wbar(i, r) * phi.expectation(pk.kernels[static_cast<std::size_t>(i * K + r)]);
    out.cmc_xn_rn = Estimate{std::move(both), clock.seconds()};

    clock.restart();
    std::vector<Index> modes(static_cast<std::size_t>(N));
    Vector given_mode = Vector::Zero(phi.out_dim());
    for (Index i = 0; i < N; ++i) {
        const Vector prob = wbar.row(i).transpose();
        Index r = particles[static_cast<std::size_t>(i)].mode;
        if (wtilde(i) > 0.0) {
            r = prop.categorical(std::span<const double>(prob.data(), static_cast<std::size_t>(K)));
            given_mode += wtilde(i) * phi.expectation(pk.kernels[static_cast<std::size_t>(i * K + r)]);
        }
        modes[static_cast<std::size_t>(i)] = r;
    }
    out.cmc_xn = Estimate{std::move(given_mode), clock.seconds()};

    out.particles.resize(static_cast<std::size_t>(N));
    for (Index i = 0; i < N; ++i) {
        auto& p = out.particles[static_cast<std::size_t>(i)];
        p.mode = modes[static_cast<std::size_t>(i)];
        p.weight = wtilde(i);
        if (p.weight > 0.0) {
            const GaussianBelief& k = pk.kernels[static_cast<std::size_t>(i * K + p.mode)];
            p.state = k.mean + covariance_sqrt(k.cov) * prop.normal_vector(k.dim());
        } else {
            p.state = particles[static_cast<std::size_t>(i)].state;
        }
    }
    clock.restart();
    Vector crude = Vector::Zero(phi.out_dim());
    for (const auto& p : out.particles)
        if (p.weight > 0.0) crude += p.weight * phi(p.state);
    out.crude = Estimate{std::move(crude), clock.seconds()};

    std::vector<double> w(wtilde.data(), wtilde.data() + wtilde.size());
    // Row sums of a normalized matrix; renormalize against rounding.
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& v : w) v /= total;
    for (Index i = 0; i < N; ++i) out.particles[static_cast<std::size_t>(i)].weight = w[static_cast<std::size_t>(i)];
    out.diagnostics = diagnose(w, out.mode_weights.log_normalizer);
    out.diagnostics.resampled = resample_particles(out.particles, policy, out.diagnostics.ess, sel);
    return out;
}

// --------------------------------------------------------------------------- proposals

Vector ModeTransitionProposal::sample(const Vector& x_prev, Index r, const Vector&, RngStream& rng) const {
    return model_.mode(r).sample_transition(x_prev, rng);
}

double ModeTransitionProposal::logpdf(const Vector& x, const Vector& x_prev, Index r, const Vector&) const {
    return model_.mode(r).transition_logpdf(x, x_prev);
}

Vector ModeOptimalProposal::sample(const Vector& x_prev, Index r, const Vector& y, RngStream& rng) const {
    const GaussianBelief k = models::optimal_kernel(model_.mode(r), x_prev, y);
    return k.mean + covariance_sqrt(k.cov) * rng.normal_vector(k.dim());
}

double ModeOptimalProposal::logpdf(const Vector& x, const Vector& x_prev, Index r, const Vector& y) const {
    const GaussianBelief k = models::optimal_kernel(model_.mode(r), x_prev, y);
    return gaussian_logpdf(x, k.mean, k.cov);
}

Vector PriorModeProposal::probabilities(const Vector&, Index r_prev) const {
    return chain_.transition().row(r_prev).transpose();
}

FixedModeProposal::FixedModeProposal(Index n_modes, Index mode) : n_modes_(n_modes), mode_(mode) {
    if (mode < 0 || mode >= n_modes) throw std::invalid_argument("fixed mode out of range");
}

Vector FixedModeProposal::probabilities(const Vector&, Index) const {
    Vector p = Vector::Zero(n_modes_);
    p(mode_) = 1.0;
    return p;
}

Vector UniformModeProposal::probabilities(const Vector&, Index) const {
    return Vector::Constant(n_modes_, 1.0 / static_cast<double>(n_modes_));
}

// --------------------------------------------------------------------------- IS approximations

JmssEstimateResult jmss_is_marginal_step(const std::vector<HybridParticle>& particles,
                                         const models::SemiLinearJmssModel& model, const Vector& y,
                                         const models::MomentFunction& phi,
                                         const ModeConditionalProposal& q, const ResamplePolicy& policy,
                                         RngStream& rng) {
    check_nonempty(particles.size());
    RngStream prop = rng.derive(0);
    RngStream sel = rng.derive(1);
    const auto N = static_cast<Index>(particles.size());
    const Index K = model.n_modes();

    std::vector<Vector> draws(static_cast<std::size_t>(N * K));
    std::vector<double> logu(static_cast<std::size_t>(N * K));
    for (Index i = 0; i < N; ++i) {
        const auto& p = particles[static_cast<std::size_t>(i)];
        for (Index r = 0; r < K; ++r) {
            const auto k = static_cast<std::size_t>(i * K + r);
            draws[k] = q.sample(p.state, r, y, prop);
            const double prior = model.chain().prob(p.mode, r);
            if (prior <= 0.0 || p.weight <= 0.0) {
                logu[k] = kNegInf;
                continue;
            }
            const auto& m = model.mode(r);
            logu[k] = std::log(p.weight) + std::log(prior) + m.transition_logpdf(draws[k], p.state) +
                      m.obs_logpdf(y, draws[k]) - q.logpdf(draws[k], p.state, r, y);
        }
    }
    const NormalizedWeights nw = normalize_weights(logu);

    JmssEstimateResult out;
    Stopwatch clock;
    Vector est = Vector::Zero(phi.out_dim());
    for (std::size_t k = 0; k < draws.size(); ++k)
        if (nw.weights[k] > 0.0) est += nw.weights[k] * phi(draws[k]);
    out.estimate = Estimate{std::move(est), clock.seconds()};

    out.particles.resize(static_cast<std::size_t>(N));
    std::vector<double> w(static_cast<std::size_t>(N));
    for (Index i = 0; i < N; ++i) {
        const auto begin = nw.weights.begin() + i * K;
        const std::span<const double> row(&*begin, static_cast<std::size_t>(K));
        const double total = std::accumulate(row.begin(), row.end(), 0.0);
        auto& p = out.particles[static_cast<std::size_t>(i)];
        if (total > 0.0) {
            p.mode = prop.categorical(row);
            p.state = draws[static_cast<std::size_t>(i * K + p.mode)];
        } else {
            p.mode = particles[static_cast<std::size_t>(i)].mode;
            p.state = particles[static_cast<std::size_t>(i)].state;
        }
        w[static_cast<std::size_t>(i)] = total;
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (Index i = 0; i < N; ++i) out.particles[static_cast<std::size_t>(i)].weight = w[static_cast<std::size_t>(i)] / total;
    out.diagnostics = diagnose(weights_of(out.particles), nw.log_normalizer);
    out.diagnostics.resampled = resample_particles(out.particles, policy, out.diagnostics.ess, sel);
    return out;
}

MixtureProposalResult jmss_mixture_proposal_step(const std::vector<HybridParticle>& particles,
                                                 const models::SemiLinearJmssModel& model,
                                                 const Vector& y, const models::MomentFunction& phi,
                                                 const ModeProposal& q_mode,
                                                 const ModeConditionalProposal& q_state,
                                                 const ResamplePolicy& policy, RngStream& rng) {
    check_nonempty(particles.size());
    RngStream prop = rng.derive(0);
    RngStream sel = rng.derive(1);
    const auto N = static_cast<Index>(particles.size());
    const Index K = model.n_modes();

    std::vector<double> log_rb(static_cast<std::size_t>(N));
    std::vector<double> log_plain(static_cast<std::size_t>(N));
    MixtureProposalResult out;
    out.particles.resize(static_cast<std::size_t>(N));
    std::vector<double> a(static_cast<std::size_t>(K));
    std::vector<double> b(static_cast<std::size_t>(K));
    for (Index i = 0; i < N; ++i) {
        const auto& p = particles[static_cast<std::size_t>(i)];
        const Vector qr = q_mode.probabilities(p.state, p.mode);
        if (qr.size() != K) throw DimensionMismatch("mode proposal must return K probabilities");
        const Index drawn = prop.categorical(std::span<const double>(qr.data(), static_cast<std::size_t>(K)));
        Vector x = q_state.sample(p.state, drawn, y, prop);

        for (Index r = 0; r < K; ++r) {
            const auto k = static_cast<std::size_t>(r);
            a[k] = qr(r) > 0.0 ? std::log(qr(r)) + q_state.logpdf(x, p.state, r, y) : kNegInf;
            const double prior = model.chain().prob(p.mode, r);
            if (std::isfinite(a[k]) && prior > 0.0) {
                const auto& m = model.mode(r);
                b[k] = std::log(prior) + m.transition_logpdf(x, p.state) + m.obs_logpdf(y, x);
            } else {
                b[k] = kNegInf;
            }
        }
        const double lw = safe_log(p.weight);
        log_plain[static_cast<std::size_t>(i)] = lw + b[static_cast<std::size_t>(drawn)] - a[static_cast<std::size_t>(drawn)];
        log_rb[static_cast<std::size_t>(i)] = lw + log_sum_exp(b) - log_sum_exp(a);

        auto& np = out.particles[static_cast<std::size_t>(i)];
        np.state = std::move(x);
        const bool admissible = std::any_of(b.begin(), b.end(), [](double v) { return std::isfinite(v); });
        np.mode = admissible ? sample_from_logs(b, prop) : drawn;
    }
    const NormalizedWeights rb = normalize_weights(log_rb);
    const NormalizedWeights plain = normalize_weights(log_plain);
    out.rb_weights.resize(static_cast<std::size_t>(N));
    out.plain_weights.resize(static_cast<std::size_t>(N));
    for (std::size_t i = 0; i < out.rb_weights.size(); ++i) {
        out.rb_weights[i] = std::exp(log_rb[i]);
        out.plain_weights[i] = std::exp(log_plain[i]);
    }

    Stopwatch clock;
    Vector est = Vector::Zero(phi.out_dim());
    Vector est_plain = Vector::Zero(phi.out_dim());
    for (Index i = 0; i < N; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const Vector v = phi(out.particles[k].state);
        if (rb.weights[k] > 0.0) est += rb.weights[k] * v;
        if (plain.weights[k] > 0.0) est_plain += plain.weights[k] * v;
    }
    out.estimate = Estimate{std::move(est), clock.seconds()};
    out.plain_estimate = Estimate{std::move(est_plain), 0.0};

    for (Index i = 0; i < N; ++i) out.particles[static_cast<std::size_t>(i)].weight = rb.weights[static_cast<std::size_t>(i)];
    out.diagnostics = diagnose(rb.weights, rb.log_normalizer);
    out.diagnostics.resampled = resample_particles(out.particles, policy, out.diagnostics.ess, sel);
    return out;
}

} // namespace seqcmc::filters
