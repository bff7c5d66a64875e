#include "seqcmc/filters/single.hpp"

#include "seqcmc/core/stopwatch.hpp"
#include "seqcmc/core/weights.hpp"

#include <algorithm>
#include <cmath>

namespace seqcmc::filters {

namespace {

std::vector<double> log_of(const std::vector<double>& w) {
    std::vector<double> out(w.size());
    std::transform(w.begin(), w.end(), out.begin(), [](double v) { return std::log(v); });
    return out;
}

WeightDiagnostics diagnose(const NormalizedWeights& nw) {
    WeightDiagnostics d;
    d.ess = ess(nw.weights);
    d.log_normalizer = nw.log_normalizer;
    const double max_w = *std::max_element(nw.weights.begin(), nw.weights.end());
    d.degenerate = max_w > 1.0 - 1e-9;
    d.weight_blowup = max_w > 0.99;
    return d;
}

void check_state(const FilterState& state, Index dim) {
    if (state.set.size() < 1) throw std::invalid_argument("filter state has no particles");
    if (state.set.dim() != dim) throw DimensionMismatch("filter state dimension does not match model");
}

Vector conditional_moment(const models::MomentFunction& f, const models::KernelBatch& kb, Index i) {
    return f.expectation(Vector(kb.mean.col(i)), Matrix(kb.cov_of(i)));
}

/// Resample `set` in place according to `policy`; returns whether it did.
bool apply_policy(FilterState& next, const ResamplePolicy& policy, double effective_size, RngStream& sel) {
    if (!policy.should_resample(effective_size, next.set.size())) return false;
    next.last_pre_resample = next.set;
    next.set = resample(next.set, next.set.size(), sel, policy.scheme);
    return true;
}

} // namespace

FilterState initialize(const models::StateSpaceModel& model, Index n, RngStream& rng) {
    if (n < 1) throw std::invalid_argument("particle count must be positive");
    Matrix particles;
    model.sample_prior_batch(particles, n, rng);
    FilterState state;
    state.set = WeightedParticleSet::uniform(std::move(particles));
    return state;
}

Vector weighted_moment(const WeightedParticleSet& set, const models::MomentFunction& f) {
    Vector acc = Vector::Zero(f.out_dim());
    for (Index i = 0; i < set.size(); ++i) {
        const double w = set.weights[static_cast<std::size_t>(i)];
        if (w > 0.0) acc += w * f(set.particles.col(i));
    }
    return acc;
}

StepResult sir_step(const FilterState& state, const models::SemiLinearGaussianModel& model,
                    const Vector& y, const models::MomentFunction& f, const ResamplePolicy& policy,
                    RngStream& rng) {
    check_state(state, model.state_dim());
    RngStream prop = rng.derive(0);
    RngStream sel = rng.derive(1);
    const Index n = state.set.size();

    models::KernelBatch kb;
    model.kernel_batch(state.set.particles, y, kb);
    std::vector<double> logw = log_of(state.set.weights);
    for (Index i = 0; i < n; ++i) logw[static_cast<std::size_t>(i)] += kb.log_predictive[static_cast<std::size_t>(i)];
    const NormalizedWeights nw = normalize_weights(logw);

    StepResult out;
    Stopwatch clock;
    Vector cmc = Vector::Zero(f.out_dim());
    for (Index i = 0; i < n; ++i) {
        const double w = nw.weights[static_cast<std::size_t>(i)];
        if (w > 0.0) cmc += w * conditional_moment(f, kb, i);
    }
    out.report.cmc = Estimate{std::move(cmc), clock.seconds()};

    Matrix x(model.state_dim(), n);
    for (Index i = 0; i < n; ++i) x.col(i) = kb.sample(i, prop);

    out.state.set.particles = std::move(x);
    out.state.set.weights = nw.weights;
    clock.restart();
    Vector crude = weighted_moment(out.state.set, f);
    out.report.crude = Estimate{std::move(crude), clock.seconds()};

    out.report.diagnostics = diagnose(nw);
    out.state.step = state.step + 1;
    out.report.diagnostics.resampled = apply_policy(out.state, policy, out.report.diagnostics.ess, sel);
    return out;
}

StepResult fa_step(const FilterState& state, const models::SemiLinearGaussianModel& model,
                   const Vector& y, const models::MomentFunction& f, RngStream& rng,
                   ResampleScheme scheme) {
    check_state(state, model.state_dim());
    RngStream prop = rng.derive(0);
    RngStream sel = rng.derive(1);
    const Index n = state.set.size();

    models::KernelBatch kb;
    model.kernel_batch(state.set.particles, y, kb);
    std::vector<double> logw = log_of(state.set.weights);
    for (Index i = 0; i < n; ++i) logw[static_cast<std::size_t>(i)] += kb.log_predictive[static_cast<std::size_t>(i)];
    const NormalizedWeights nw = normalize_weights(logw);

    StepResult out;
    Stopwatch clock;
    Matrix moments(f.out_dim(), n);
    for (Index i = 0; i < n; ++i) moments.col(i) = conditional_moment(f, kb, i);
    const double moment_seconds = clock.seconds();

    clock.restart();
    Vector cmc_sir = Vector::Zero(f.out_dim());
    for (Index i = 0; i < n; ++i) {
        const double w = nw.weights[static_cast<std::size_t>(i)];
        if (w > 0.0) cmc_sir += w * moments.col(i);
    }
    out.report.cmc_sir = Estimate{std::move(cmc_sir), moment_seconds + clock.seconds()};

    const std::vector<Index> ancestors = resample_indices(nw.weights, n, sel, scheme);
    clock.restart();
    Vector cmc = Vector::Zero(f.out_dim());
    for (Index a : ancestors) cmc += moments.col(a);
    cmc /= static_cast<double>(n);
    out.report.cmc = Estimate{std::move(cmc), moment_seconds + clock.seconds()};

    Matrix x(model.state_dim(), n);
    for (Index i = 0; i < n; ++i) x.col(i) = kb.sample(ancestors[static_cast<std::size_t>(i)], prop);
    out.state.set = WeightedParticleSet::uniform(std::move(x));
    clock.restart();
    Vector crude = weighted_moment(out.state.set, f);
    out.report.crude = Estimate{std::move(crude), clock.seconds()};

    out.report.diagnostics = diagnose(nw);
    out.report.diagnostics.resampled = true;
    out.state.step = state.step + 1;
    return out;
}

StepResult bootstrap_step(const FilterState& state, const models::StateSpaceModel& model,
                          const Vector& y, const models::MomentFunction& f,
                          const ResamplePolicy& policy, RngStream& rng) {
    check_state(state, model.state_dim());
    RngStream prop = rng.derive(0);
    RngStream sel = rng.derive(1);
    const Index n = state.set.size();

    Matrix x;
    model.sample_transition_batch(state.set.particles, x, prop);
    std::vector<double> logg(static_cast<std::size_t>(n));
    model.obs_logpdf_batch(y, x, logg);
    std::vector<double> logw = log_of(state.set.weights);
    for (std::size_t i = 0; i < logw.size(); ++i) logw[i] += logg[i];
    const NormalizedWeights nw = normalize_weights(logw);

    StepResult out;
    out.state.set.particles = std::move(x);
    out.state.set.weights = nw.weights;
    Stopwatch clock;
    Vector crude = weighted_moment(out.state.set, f);
    out.report.crude = Estimate{std::move(crude), clock.seconds()};

    out.report.diagnostics = diagnose(nw);
    out.state.step = state.step + 1;
    out.report.diagnostics.resampled = apply_policy(out.state, policy, out.report.diagnostics.ess, sel);
    return out;
}

StepResult generic_proposal_step(const FilterState& state, const models::StateSpaceModel& model,
                                 const Vector& y, const models::MomentFunction& f, const Proposal& q,
                                 const KernelApproximation& approx, CmcMode mode,
                                 const ResamplePolicy& policy, RngStream& rng) {
    check_state(state, model.state_dim());
    RngStream prop = rng.derive(0);
    RngStream sel = rng.derive(1);
    const Index n = state.set.size();
    const Matrix& x_prev = state.set.particles;

    Matrix x(model.state_dim(), n);
    std::vector<double> logw = log_of(state.set.weights);
    for (Index i = 0; i < n; ++i) {
        const Vector xp = x_prev.col(i);
        const Vector xi = q.sample(xp, y, prop);
        auto& lw = logw[static_cast<std::size_t>(i)];
        if (std::isfinite(lw)) {
            lw += model.transition_logpdf(xi, xp) + model.obs_logpdf(y, xi) - q.logpdf(xi, xp, y);
        }
        x.col(i) = xi;
    }
    const NormalizedWeights nw = normalize_weights(logw);

    StepResult out;
    Stopwatch clock;
    Matrix moments(f.out_dim(), n);
    std::vector<double> log_pred(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        const models::ApproximateKernel ak = approx.approximate(x_prev.col(i), y);
        moments.col(i) = f.expectation(ak.kernel);
        log_pred[static_cast<std::size_t>(i)] = ak.log_predictive;
    }
    const double moment_seconds = clock.seconds();

    clock.restart();
    Vector cmc = Vector::Zero(f.out_dim());
    for (Index i = 0; i < n; ++i) {
        const double w = nw.weights[static_cast<std::size_t>(i)];
        if (w > 0.0) cmc += w * moments.col(i);
    }
    out.report.cmc = Estimate{std::move(cmc), moment_seconds + clock.seconds()};

    if (mode == CmcMode::kernel_and_predictive) {
        clock.restart();
        std::vector<double> logv = log_of(state.set.weights);
        for (std::size_t i = 0; i < logv.size(); ++i) logv[i] += log_pred[i];
        const NormalizedWeights pw = normalize_weights(logv);
        Vector cmc2 = Vector::Zero(f.out_dim());
        for (Index i = 0; i < n; ++i) {
            const double w = pw.weights[static_cast<std::size_t>(i)];
            if (w > 0.0) cmc2 += w * moments.col(i);
        }
        out.report.cmc_predictive = Estimate{std::move(cmc2), moment_seconds + clock.seconds()};
    }

    out.state.set.particles = std::move(x);
    out.state.set.weights = nw.weights;
    clock.restart();
    Vector crude = weighted_moment(out.state.set, f);
    out.report.crude = Estimate{std::move(crude), clock.seconds()};

    out.report.diagnostics = diagnose(nw);
    out.state.step = state.step + 1;
    out.report.diagnostics.resampled = apply_policy(out.state, policy, out.report.diagnostics.ess, sel);
    return out;
}

} // namespace seqcmc::filters
