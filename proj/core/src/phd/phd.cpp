#include "seqcmc/phd/phd.hpp"

#include "seqcmc/core/kalman.hpp"
#include "seqcmc/core/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace seqcmc::phd {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

/// Gaussian log-density with a pre-factorized covariance.
class GaussianEvaluator {
public:
    GaussianEvaluator(Vector mean, const Matrix& cov) : mean_(std::move(mean)), llt_(cov) {
        if (llt_.info() != Eigen::Success) throw DegenerateCovariance();
        log_norm_ = -0.5 * (static_cast<double>(mean_.size()) * kLogTwoPi +
                            2.0 * llt_.matrixLLT().diagonal().array().log().sum());
    }
    [[nodiscard]] double logpdf(const Vector& x) const {
        return log_norm_ - 0.5 * llt_.matrixL().solve(x - mean_).squaredNorm();
    }
    [[nodiscard]] const Vector& mean() const { return mean_; }

private:
    Vector mean_;
    Eigen::LLT<Matrix> llt_;
    double log_norm_ = 0.0;
};

/// log g(z | x) for y = H x + v with fixed R.
class ObservationDensity {
public:
    ObservationDensity(const Matrix& H, const Matrix& R) : H_(H), eval_(Vector::Zero(R.rows()), R) {}
    [[nodiscard]] double logpdf(const Vector& z, const Vector& x) const { return eval_.logpdf(z - H_ * x); }

private:
    Matrix H_;
    GaussianEvaluator eval_;
};

double log_gm_intensity(const std::vector<GaussianEvaluator>& evals, const std::vector<double>& log_w,
                        const Vector& x) {
    std::vector<double> terms(evals.size());
    for (std::size_t c = 0; c < evals.size(); ++c) terms[c] = log_w[c] + evals[c].logpdf(x);
    return log_sum_exp(terms);
}

Index target_particle_count(double mass, Index per_target) {
    const auto scaled = static_cast<Index>(std::llround(static_cast<double>(per_target) * mass));
    return std::max(per_target, scaled);
}

} // namespace

// --------------------------------------------------------------------------- types

double PhdParticleSet::total() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

void PhdParticleSet::validate() const {
    if (static_cast<Index>(weights.size()) != particles.cols()) {
        throw std::invalid_argument("PHD particle and weight counts differ");
    }
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) throw std::invalid_argument("invalid PHD particle weight");
    }
}

double GaussianMixture::total() const {
    double t = 0.0;
    for (const auto& c : components) t += c.weight;
    return t;
}

double GaussianMixture::intensity(const Vector& x) const {
    double v = 0.0;
    for (const auto& c : components) {
        if (c.weight > 0.0) v += c.weight * std::exp(gaussian_logpdf(x, c.belief.mean, c.belief.cov));
    }
    return v;
}

GaussianBelief GaussianMixture::moment_match() const {
    const double t = total();
    if (!(t > 0.0) || components.empty()) throw std::invalid_argument("moment_match: empty mixture");
    const Index p = components.front().belief.dim();
    Vector mean = Vector::Zero(p);
    for (const auto& c : components) mean += (c.weight / t) * c.belief.mean;
    Matrix cov = Matrix::Zero(p, p);
    for (const auto& c : components) {
        const Vector d = c.belief.mean - mean;
        cov += (c.weight / t) * (c.belief.cov + d * d.transpose());
    }
    condition_covariance(cov);
    return {std::move(mean), std::move(cov)};
}

Vector GaussianMixture::sample(RngStream& rng) const {
    std::vector<double> w(components.size());
    for (std::size_t c = 0; c < w.size(); ++c) w[c] = components[c].weight;
    const Index c = rng.categorical(w);
    return sample_gaussian(components[static_cast<std::size_t>(c)].belief, rng);
}

double ClutterModel::volume() const {
    if (lower.size() != upper.size() || lower.size() == 0) throw std::invalid_argument("clutter box is malformed");
    return (upper - lower).prod();
}

double ClutterModel::intensity(const Vector&) const { return rate > 0.0 ? rate / volume() : 0.0; }

MeasurementSet ClutterModel::sample(RngStream& rng) const {
    MeasurementSet out;
    if (!(rate > 0.0)) return out;
    const auto n = rng.poisson(rate);
    for (std::uint64_t k = 0; k < n; ++k) {
        Vector z(lower.size());
        for (Index d = 0; d < z.size(); ++d) z(d) = lower(d) + (upper(d) - lower(d)) * rng.uniform();
        out.push_back(std::move(z));
    }
    return out;
}

void PhdModelParams::validate() const {
    if (!(p_d >= 0.0 && p_d <= 1.0)) throw std::invalid_argument("p_d must be in [0, 1]");
    if (!(p_s >= 0.0 && p_s <= 1.0)) throw std::invalid_argument("p_s must be in [0, 1]");
    if (!target) throw std::invalid_argument("PHD parameters need a single-target model");
    if (clutter.rate < 0.0) throw std::invalid_argument("clutter rate must be nonnegative");
    for (const auto& c : birth.components) {
        if (!std::isfinite(c.weight) || c.weight < 0.0) throw std::invalid_argument("birth weights must be finite and nonnegative");
        if (c.belief.dim() != target->state_dim()) throw DimensionMismatch("birth component dimension mismatch");
    }
}

// --------------------------------------------------------------------------- SMC-PHD

SmcPhdResult smc_phd_step(const PhdParticleSet& set, const PhdModelParams& params, const MeasurementSet& Z,
                          const SmcPhdConfig& config, RngStream& rng) {
    params.validate();
    set.validate();
    RngStream prop = rng.derive(0);
    RngStream sel = rng.derive(1);
    const auto& model = *params.target;
    const Index p = model.state_dim();
    const Index L = set.size();
    const auto nz = static_cast<Index>(Z.size());

    // Persistent prediction.
    Matrix persistent(p, L);
    if (L > 0) model.sample_transition_batch(set.particles, persistent, prop);
    std::vector<double> log_w;
    log_w.reserve(static_cast<std::size_t>(L));
    for (Index i = 0; i < L; ++i) {
        log_w.push_back(safe_log(params.survival_prob(set.particles.col(i))) +
                        safe_log(set.weights[static_cast<std::size_t>(i)]));
    }

    // Births from a stratified defensive mixture.
    Matrix births(p, 0);
    const double birth_total = params.birth.total();
    if (birth_total > 0.0 && config.birth_particles > 0) {
        std::vector<GaussianEvaluator> gamma_evals;
        std::vector<double> gamma_log_w;
        for (const auto& c : params.birth.components) {
            if (c.weight <= 0.0) continue;
            gamma_evals.emplace_back(c.belief.mean, c.belief.cov);
            gamma_log_w.push_back(std::log(c.weight));
        }
        const GaussianBelief matched = params.birth.moment_match();
        std::vector<GaussianBelief> around;
        std::vector<GaussianEvaluator> around_evals;
        for (const auto& z : Z) {
            GaussianBelief post = kalman_update(matched, model.obs_matrix(), model.obs_cov(), z).posterior;
            around_evals.emplace_back(post.mean, post.cov);
            around.push_back(std::move(post));
        }
        const Index strata = nz + 1;
        const Index Lb = config.birth_particles * strata;
        births.resize(p, Lb);
        Index k = 0;
        for (Index b = 0; b < config.birth_particles; ++b) births.col(k++) = params.birth.sample(prop);
        for (Index j = 0; j < nz; ++j) {
            const Matrix root = covariance_sqrt(around[static_cast<std::size_t>(j)].cov);
            for (Index b = 0; b < config.birth_particles; ++b) {
                births.col(k++) = sample_gaussian(around[static_cast<std::size_t>(j)].mean, root, prop);
            }
        }
        const double log_gamma_total = std::log(birth_total);
        const double log_strata = std::log(static_cast<double>(strata));
        const double log_Lb = std::log(static_cast<double>(Lb));
        std::vector<double> mix_terms(static_cast<std::size_t>(strata));
        for (Index b = 0; b < Lb; ++b) {
            const Vector x = births.col(b);
            const double log_gamma = log_gm_intensity(gamma_evals, gamma_log_w, x);
            mix_terms[0] = log_gamma - log_gamma_total;
            for (Index j = 0; j < nz; ++j) mix_terms[static_cast<std::size_t>(j + 1)] = around_evals[static_cast<std::size_t>(j)].logpdf(x);
            const double log_mix = log_sum_exp(mix_terms) - log_strata;
            log_w.push_back(log_gamma - log_Lb - log_mix);
        }
    }

    const Index total = L + births.cols();
    SmcPhdResult out;
    out.updated.particles.resize(p, total);
    if (L > 0) out.updated.particles.leftCols(L) = persistent;
    if (births.cols() > 0) out.updated.particles.rightCols(births.cols()) = births;

    // Update.
    const ObservationDensity g(model.obs_matrix(), model.obs_cov());
    out.measurement_weights = Matrix::Zero(total, nz);
    out.denominators.resize(static_cast<std::size_t>(nz));
    const double log_pd = safe_log(params.p_d);
    std::vector<double> terms(static_cast<std::size_t>(total + 1));
    for (Index j = 0; j < nz; ++j) {
        const Vector& z = Z[static_cast<std::size_t>(j)];
        terms[0] = safe_log(params.clutter.intensity(z));
        for (Index i = 0; i < total; ++i) {
            const double lw = log_w[static_cast<std::size_t>(i)];
            terms[static_cast<std::size_t>(i + 1)] =
                std::isfinite(lw) && std::isfinite(log_pd) ? log_pd + lw + g.logpdf(z, out.updated.particles.col(i)) : kNegInf;
        }
        const double log_c = log_sum_exp(terms);
        out.denominators[static_cast<std::size_t>(j)] = std::exp(log_c);
        if (!std::isfinite(log_c)) continue;
        for (Index i = 0; i < total; ++i) {
            out.measurement_weights(i, j) = std::exp(terms[static_cast<std::size_t>(i + 1)] - log_c);
        }
    }
    out.updated.weights.resize(static_cast<std::size_t>(total));
    for (Index i = 0; i < total; ++i) {
        const double w = std::exp(log_w[static_cast<std::size_t>(i)]);
        out.updated.weights[static_cast<std::size_t>(i)] = (1.0 - params.p_d) * w + out.measurement_weights.row(i).sum();
    }
    out.count = out.updated.total();

    // Resample to particles_per_target per expected target.
    out.next.particles.resize(p, 0);
    if (out.count > 0.0 && total > 0) {
        std::vector<double> norm(out.updated.weights);
        for (double& v : norm) v /= out.count;
        const Index n_out = target_particle_count(out.count, config.particles_per_target);
        const auto idx = resample_indices(norm, n_out, sel, config.scheme);
        out.next.particles.resize(p, n_out);
        for (Index k = 0; k < n_out; ++k) out.next.particles.col(k) = out.updated.particles.col(idx[static_cast<std::size_t>(k)]);
        out.next.weights.assign(static_cast<std::size_t>(n_out), out.count / static_cast<double>(n_out));
    }
    return out;
}

std::vector<Vector> smc_extract(const SmcPhdResult& result, double threshold) {
    std::vector<Vector> out;
    for (Index j = 0; j < result.measurement_weights.cols(); ++j) {
        const double mass = result.measurement_weights.col(j).sum();
        if (mass <= threshold) continue;
        out.push_back(result.updated.particles * result.measurement_weights.col(j) / mass);
    }
    return out;
}

// --------------------------------------------------------------------------- CMC-PHD

CmcPhdState empty_cmc_state(Index state_dim) {
    CmcPhdState s;
    s.persistent.particles.resize(state_dim, 0);
    s.previous.particles.resize(state_dim, 0);
    return s;
}

namespace {

struct BirthEntry {
    double weight = 0.0;     // w_gamma
    GaussianBelief belief;   // closed-form mode: component; sampled mode: point mass (zero cov)
};

} // namespace

CmcPhdResult cmc_phd_step(const CmcPhdState& state, const PhdModelParams& params, const MeasurementSet& Z,
                          const CmcPhdConfig& config, RngStream& rng, const models::MomentFunction* f) {
    params.validate();
    state.persistent.validate();
    RngStream prop = rng.derive(0);
    RngStream sel = rng.derive(1);
    RngStream crude_rng = rng.derive(2);
    const auto& model = *params.target;
    const Index p = model.state_dim();
    const Matrix& H = model.obs_matrix();
    const Matrix& R = model.obs_cov();
    const PhdParticleSet& prev = state.persistent;
    const Index L = prev.size();
    const auto nz = static_cast<Index>(Z.size());
    const double pd = params.p_d;
    const double log_pd = safe_log(pd);

    CmcPhdResult out;
    CmcPhdTables& t = out.state.tables;

    // Persistent terms.
    std::vector<models::KernelFactors> kf;
    kf.reserve(static_cast<std::size_t>(L));
    std::vector<double> log_sw(static_cast<std::size_t>(L));  // log p_s(x_i) w_i
    t.w1.resize(static_cast<std::size_t>(L));
    for (Index i = 0; i < L; ++i) {
        const Vector x = prev.particles.col(i);
        kf.push_back(model.kernel_factors(x));
        const double sw = params.survival_prob(x) * prev.weights[static_cast<std::size_t>(i)];
        log_sw[static_cast<std::size_t>(i)] = safe_log(sw);
        t.w1[static_cast<std::size_t>(i)] = (1.0 - pd) * sw;
    }

    // Birth entries.
    std::vector<BirthEntry> birth;
    if (config.birth_mode == BirthMode::closed_form) {
        for (const auto& c : params.birth.components) {
            if (c.weight > 0.0) birth.push_back({c.weight, c.belief});
        }
    } else if (params.birth.total() > 0.0 && config.birth_particles > 0) {
        const double w = params.birth.total() / static_cast<double>(config.birth_particles);
        for (Index b = 0; b < config.birth_particles; ++b) {
            birth.push_back({w, GaussianBelief(params.birth.sample(prop), Matrix::Zero(p, p))});
        }
    }
    const auto B = static_cast<Index>(birth.size());
    t.w2.resize(static_cast<std::size_t>(B));
    for (Index b = 0; b < B; ++b) t.w2[static_cast<std::size_t>(b)] = (1.0 - pd) * birth[static_cast<std::size_t>(b)].weight;

    // Birth predictive evaluators: N(z; H m, H P H^T + R).
    std::vector<GaussianEvaluator> birth_pred;
    for (const auto& e : birth) birth_pred.emplace_back(H * e.belief.mean, H * e.belief.cov * H.transpose() + R);

    // Tables.
    t.w3 = Matrix::Zero(L, nz);
    t.w4 = Matrix::Zero(B, nz);
    t.kappa.resize(static_cast<std::size_t>(nz));
    t.b_tilde.resize(static_cast<std::size_t>(nz));
    std::vector<double> terms(static_cast<std::size_t>(1 + L + B));
    for (Index j = 0; j < nz; ++j) {
        const Vector& z = Z[static_cast<std::size_t>(j)];
        t.kappa[static_cast<std::size_t>(j)] = params.clutter.intensity(z);
        terms[0] = safe_log(t.kappa[static_cast<std::size_t>(j)]);
        for (Index i = 0; i < L; ++i) {
            const double base = log_pd + log_sw[static_cast<std::size_t>(i)];
            terms[static_cast<std::size_t>(1 + i)] =
                std::isfinite(base) ? base + kf[static_cast<std::size_t>(i)].predictive_loglik(z) : kNegInf;
        }
        for (Index b = 0; b < B; ++b) {
            terms[static_cast<std::size_t>(1 + L + b)] =
                log_pd + std::log(birth[static_cast<std::size_t>(b)].weight) + birth_pred[static_cast<std::size_t>(b)].logpdf(z);
        }
        const double log_b = log_sum_exp(terms);
        if (!std::isfinite(log_b)) throw std::domain_error("CMC-PHD: B~(z) vanished for a measurement");
        t.b_tilde[static_cast<std::size_t>(j)] = std::exp(log_b);
        for (Index i = 0; i < L; ++i) t.w3(i, j) = std::exp(terms[static_cast<std::size_t>(1 + i)] - log_b);
        for (Index b = 0; b < B; ++b) t.w4(b, j) = std::exp(terms[static_cast<std::size_t>(1 + L + b)] - log_b);
    }

    const double sum_w1 = std::accumulate(t.w1.begin(), t.w1.end(), 0.0);
    const double sum_w2 = std::accumulate(t.w2.begin(), t.w2.end(), 0.0);
    out.count = sum_w1 + t.w3.sum() + sum_w2 + t.w4.sum();

    // Birth posteriors given each measurement (closed-form mode).
    std::vector<GaussianBelief> birth_post(static_cast<std::size_t>(B * nz));
    for (Index b = 0; b < B; ++b) {
        for (Index j = 0; j < nz; ++j) {
            if (config.birth_mode == BirthMode::closed_form) {
                birth_post[static_cast<std::size_t>(b * nz + j)] =
                    kalman_update(birth[static_cast<std::size_t>(b)].belief, H, R, Z[static_cast<std::size_t>(j)]).posterior;
            } else {
                birth_post[static_cast<std::size_t>(b * nz + j)] = birth[static_cast<std::size_t>(b)].belief;
            }
        }
    }

    // Per-measurement extraction sums.
    out.state.persistent_mass.assign(static_cast<std::size_t>(nz), 0.0);
    out.state.persistent_weighted_mean.assign(static_cast<std::size_t>(nz), Vector::Zero(p));
    out.state.birth_mass.assign(static_cast<std::size_t>(nz), 0.0);
    out.state.birth_weighted_mean.assign(static_cast<std::size_t>(nz), Vector::Zero(p));
    for (Index j = 0; j < nz; ++j) {
        const Vector& z = Z[static_cast<std::size_t>(j)];
        for (Index i = 0; i < L; ++i) {
            const double w = t.w3(i, j);
            if (w <= 0.0) continue;
            out.state.persistent_mass[static_cast<std::size_t>(j)] += w;
            out.state.persistent_weighted_mean[static_cast<std::size_t>(j)] += w * kf[static_cast<std::size_t>(i)].kernel_mean(z);
        }
        for (Index b = 0; b < B; ++b) {
            const double w = t.w4(b, j);
            if (w <= 0.0) continue;
            out.state.birth_mass[static_cast<std::size_t>(j)] += w;
            out.state.birth_weighted_mean[static_cast<std::size_t>(j)] += w * birth_post[static_cast<std::size_t>(b * nz + j)].mean;
        }
    }

    // Moments of f.
    if (f != nullptr) {
        Vector cmc = Vector::Zero(f->out_dim());
        Vector crude = Vector::Zero(f->out_dim());
        for (Index i = 0; i < L; ++i) {
            const auto& k = kf[static_cast<std::size_t>(i)];
            const Vector x = prev.particles.col(i);
            const double w1 = t.w1[static_cast<std::size_t>(i)];
            const Matrix Q = model.process_cov(x);
            if (w1 > 0.0) {
                cmc += w1 * f->expectation(k.drift, Q);
            }
            const Vector draw = model.sample_transition(x, crude_rng);
            if (w1 > 0.0) crude += w1 * (*f)(draw);
            const Matrix root = covariance_sqrt(k.kernel_cov);
            for (Index j = 0; j < nz; ++j) {
                const Vector& z = Z[static_cast<std::size_t>(j)];
                const Vector m = k.kernel_mean(z);
                const Vector xz = sample_gaussian(m, root, crude_rng);
                const double w3 = t.w3(i, j);
                if (w3 <= 0.0) continue;
                cmc += w3 * f->expectation(m, k.kernel_cov);
                crude += w3 * (*f)(xz);
            }
        }
        // Birth terms are shared by both estimators.
        Vector birth_part = Vector::Zero(f->out_dim());
        for (Index b = 0; b < B; ++b) {
            const auto& e = birth[static_cast<std::size_t>(b)];
            if (t.w2[static_cast<std::size_t>(b)] > 0.0) birth_part += t.w2[static_cast<std::size_t>(b)] * f->expectation(e.belief);
            for (Index j = 0; j < nz; ++j) {
                const double w4 = t.w4(b, j);
                if (w4 > 0.0) birth_part += w4 * f->expectation(birth_post[static_cast<std::size_t>(b * nz + j)]);
            }
        }
        out.cmc_moment = cmc + birth_part;
        out.crude_moment = crude + birth_part;
    }

    // Next cloud. Each persistent particle keeps one child for its undetected
    // term, weighted w1, so that a target missed once or twice keeps a full
    // cloud; children lighter than min_undetected_mass / N go to the residual
    // group. The detected terms are resampled within one group per
    // measurement (persistent and birth entries detected by z), with
    // round(N m) particles of weight m / n for a group of mass m. The
    // undetected birth term is sampled directly, and the residual group
    // collects every group too light to hold one particle.
    out.state.previous = prev;
    out.state.persistent.particles.resize(p, 0);
    out.state.persistent.weights.clear();
    if (out.count > 0.0) {
        struct Entry {
            Index source;  // persistent particle, or L + birth entry
            Index term;    // 0 undetected, 1 + j detected by z_j
            double mass;
        };
        const auto n_per = static_cast<double>(config.particles_per_target);
        std::vector<std::vector<Entry>> groups(static_cast<std::size_t>(nz + 1));
        auto& residual = groups[static_cast<std::size_t>(nz)];
        std::vector<Index> kept_undetected;
        std::vector<Index> undetected_birth;
        for (Index i = 0; i < L; ++i) {
            const double w1 = t.w1[static_cast<std::size_t>(i)];
            if (w1 > 0.0) {
                if (n_per * w1 >= config.min_undetected_mass) kept_undetected.push_back(i);
                else residual.push_back({i, 0, w1});
            }
            for (Index j = 0; j < nz; ++j) {
                if (t.w3(i, j) > 0.0) groups[static_cast<std::size_t>(j)].push_back({i, 1 + j, t.w3(i, j)});
            }
        }
        for (Index b = 0; b < B; ++b) {
            if (t.w2[static_cast<std::size_t>(b)] > 0.0) undetected_birth.push_back(b);
            for (Index j = 0; j < nz; ++j) {
                if (t.w4(b, j) > 0.0) groups[static_cast<std::size_t>(j)].push_back({L + b, 1 + j, t.w4(b, j)});
            }
        }
        auto group_mass = [](const std::vector<Entry>& g) {
            double m = 0.0;
            for (const auto& e : g) m += e.mass;
            return m;
        };
        auto allocation = [&](double m) { return static_cast<Index>(std::llround(n_per * m)); };
        for (std::size_t g = 0; g + 1 < groups.size(); ++g) {
            if (allocation(group_mass(groups[g])) < 1) {
                residual.insert(residual.end(), groups[g].begin(), groups[g].end());
                groups[g].clear();
            }
        }

        Matrix next(p, static_cast<Index>(kept_undetected.size()));
        std::vector<double> weights;
        weights.reserve(kept_undetected.size());
        for (std::size_t k = 0; k < kept_undetected.size(); ++k) {
            const Index i = kept_undetected[k];
            next.col(static_cast<Index>(k)) = model.sample_transition(prev.particles.col(i), prop);
            weights.push_back(t.w1[static_cast<std::size_t>(i)]);
        }
        // A closed-form birth component spreads its undetected mass over a
        // full target cloud; a sampled birth particle keeps a single child.
        const Index birth_children = config.birth_mode == BirthMode::closed_form ? config.particles_per_target : 1;
        for (const Index b : undetected_birth) {
            const double w2 = t.w2[static_cast<std::size_t>(b)];
            const Index offset = next.cols();
            next.conservativeResize(p, offset + birth_children);
            weights.insert(weights.end(), static_cast<std::size_t>(birth_children),
                           w2 / static_cast<double>(birth_children));
            for (Index k = 0; k < birth_children; ++k) {
                next.col(offset + k) = sample_gaussian(birth[static_cast<std::size_t>(b)].belief, prop);
            }
        }
        std::vector<double> norm;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const auto& group = groups[g];
            const double m = group_mass(group);
            if (group.empty() || !(m > 0.0)) continue;
            const Index n = std::max<Index>(1, allocation(m));
            norm.resize(group.size());
            for (std::size_t e = 0; e < group.size(); ++e) norm[e] = group[e].mass / m;
            const auto idx = resample_indices(norm, n, sel, config.scheme);
            const Index offset = next.cols();
            next.conservativeResize(p, offset + n);
            weights.insert(weights.end(), static_cast<std::size_t>(n), m / static_cast<double>(n));
            for (Index k = 0; k < n; ++k) {
                const Entry& e = group[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
                if (e.source < L) {
                    const Vector x = prev.particles.col(e.source);
                    if (e.term == 0) {
                        next.col(offset + k) = model.sample_transition(x, prop);
                    } else {
                        const auto& kk = kf[static_cast<std::size_t>(e.source)];
                        next.col(offset + k) = sample_gaussian(kk.kernel_mean(Z[static_cast<std::size_t>(e.term - 1)]),
                                                               covariance_sqrt(kk.kernel_cov), prop);
                    }
                } else {
                    const Index b = e.source - L;
                    const GaussianBelief& belief = e.term == 0 ? birth[static_cast<std::size_t>(b)].belief
                                                               : birth_post[static_cast<std::size_t>(b * nz + e.term - 1)];
                    next.col(offset + k) = sample_gaussian(belief, prop);
                }
            }
        }
        out.state.persistent.particles = std::move(next);
        out.state.persistent.weights = std::move(weights);
    }
    return out;
}

std::vector<ExtractedTarget> extract_targets(const CmcPhdState& state, double threshold) {
    std::vector<ExtractedTarget> out;
    for (std::size_t j = 0; j < state.persistent_mass.size(); ++j) {
        const double m3 = state.persistent_mass[j];
        if (m3 > threshold) out.push_back({state.persistent_weighted_mean[j] / m3, TargetSource::persistent});
        const double m4 = state.birth_mass[j];
        if (m4 > threshold) out.push_back({state.birth_weighted_mean[j] / m4, TargetSource::birth});
    }
    return out;
}

} // namespace seqcmc::phd
