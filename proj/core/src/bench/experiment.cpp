#include "seqcmc/bench/experiment.hpp"

#include "seqcmc/bench/truth.hpp"
#include "seqcmc/core/kalman.hpp"
#include "seqcmc/core/stopwatch.hpp"
#include "seqcmc/filters/jmss.hpp"
#include "seqcmc/filters/single.hpp"
#include "seqcmc/models/semi_linear.hpp"
#include "seqcmc/models/stochastic_volatility.hpp"
#include "seqcmc/phd/gm_phd.hpp"
#include "seqcmc/phd/ospa.hpp"
#include "seqcmc/phd/phd.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#ifndef SEQCMC_GIT_REVISION
#define SEQCMC_GIT_REVISION "unknown"
#endif

namespace seqcmc::bench {

namespace {

constexpr std::uint64_t kReferenceStream = 2;
constexpr std::uint64_t kFilterStreamBase = 100;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One repetition: per estimator, per step.
struct Trace {
    std::vector<std::vector<double>> sq_err;
    std::vector<std::vector<double>> seconds;
    std::vector<std::vector<double>> ospa;
    std::vector<std::vector<double>> count;
};

struct EstimatorSlot {
    std::string name;
    bool has_mse = false;
    bool has_phd = false;
};

RngStream filter_stream(std::uint64_t seed, std::size_t group) {
    return RngStream::substream(seed, kFilterStreamBase + static_cast<std::uint64_t>(group));
}

std::vector<EstimatorSlot> estimator_slots(const ScenarioConfig& config) {
    std::vector<EstimatorSlot> out;
    auto add = [&](const std::string& group, std::initializer_list<const char*> suffixes) {
        for (const char* s : suffixes) out.push_back({group + "." + s, true, false});
    };
    switch (config.kind) {
    case ExperimentKind::single:
        for (const auto& f : config.single_filters) {
            switch (f.algorithm) {
            case SingleAlgorithm::kalman: out.push_back({f.name, true, false}); break;
            case SingleAlgorithm::sir: add(f.name, {"crude", "cmc"}); break;
            case SingleAlgorithm::fa: add(f.name, {"crude", "cmc_sir", "cmc"}); break;
            case SingleAlgorithm::bootstrap: add(f.name, {"crude"}); break;
            case SingleAlgorithm::sv_taylor: add(f.name, {"crude", "cmc_kernel", "cmc_predictive"}); break;
            }
        }
        break;
    case ExperimentKind::jmss:
        for (const auto& f : config.jmss_filters) {
            if (f.algorithm == JmssAlgorithm::rbpf) add(f.name, {"crude", "cmc"});
            else add(f.name, {"crude", "cmc_xn", "cmc_xn_rn"});
        }
        break;
    case ExperimentKind::phd:
        for (const auto& f : config.phd_filters) out.push_back({f.name, false, true});
        break;
    }
    return out;
}

Trace empty_trace(std::size_t n_estimators, Index horizon) {
    const auto h = static_cast<std::size_t>(horizon);
    Trace t;
    t.sq_err.assign(n_estimators, std::vector<double>(h, kNaN));
    t.seconds.assign(n_estimators, std::vector<double>(h, kNaN));
    t.ospa.assign(n_estimators, std::vector<double>(h, kNaN));
    t.count.assign(n_estimators, std::vector<double>(h, kNaN));
    return t;
}

/// Records one estimate against the reference.
void record(Trace& trace, std::size_t slot, std::size_t step, const filters::Estimate& e, const Vector& reference) {
    trace.sq_err[slot][step] = (e.value - reference).squaredNorm();
    trace.seconds[slot][step] = e.seconds;
}

// --------------------------------------------------------------------------- single object

std::vector<Vector> single_reference(const ScenarioConfig& config, const models::StateSpaceModel& model,
                                     const models::MomentFunction& f, const TruthTape& tape, std::uint64_t seed) {
    std::vector<Vector> ref;
    if (const auto* lin = dynamic_cast<const models::LinearGaussianModel*>(&model)) {
        GaussianBelief b = lin->prior();
        const Matrix G = Matrix::Identity(lin->state_dim(), lin->state_dim());
        for (const auto& Z : tape.measurements) {
            b = kalman_update(kalman_predict(b, lin->transition_matrix(), G, lin->transition_cov()), lin->obs_matrix(),
                              lin->obs_cov(), Z.front())
                    .posterior;
            ref.push_back(f.expectation(b));
        }
        return ref;
    }
    RngStream rng = RngStream::substream(seed, kReferenceStream);
    auto state = filters::initialize(model, config.reference_particles, rng);
    for (const auto& Z : tape.measurements) {
        auto step = filters::bootstrap_step(state, model, Z.front(), f, config.resampling, rng);
        ref.push_back(step.report.crude.value);
        state = std::move(step.state);
    }
    return ref;
}

Trace run_single(const ScenarioConfig& config, const TruthTape& tape, std::uint64_t seed, std::size_t n_slots) {
    const auto model = make_single_model(config.single_model);
    const auto f = single_moment(config.single_model);
    const auto ref = single_reference(config, *model, f, tape, seed);
    const auto* semi = dynamic_cast<const models::SemiLinearGaussianModel*>(model.get());
    Trace trace = empty_trace(n_slots, config.horizon);
    std::size_t slot = 0;
    for (std::size_t g = 0; g < config.single_filters.size(); ++g) {
        const auto& fc = config.single_filters[g];
        RngStream rng = filter_stream(seed, g);
        switch (fc.algorithm) {
        case SingleAlgorithm::kalman: {
            const auto& lin = dynamic_cast<const models::LinearGaussianModel&>(*model);
            const Matrix G = Matrix::Identity(lin.state_dim(), lin.state_dim());
            GaussianBelief b = lin.prior();
            for (std::size_t n = 0; n < tape.measurements.size(); ++n) {
                const Stopwatch sw;
                b = kalman_update(kalman_predict(b, lin.transition_matrix(), G, lin.transition_cov()),
                                  lin.obs_matrix(), lin.obs_cov(), tape.measurements[n].front())
                        .posterior;
                const Vector value = f.expectation(b);
                record(trace, slot, n, {value, sw.seconds()}, ref[n]);
            }
            slot += 1;
            break;
        }
        case SingleAlgorithm::sir: {
            auto state = filters::initialize(*model, fc.particles, rng);
            for (std::size_t n = 0; n < tape.measurements.size(); ++n) {
                auto step = filters::sir_step(state, *semi, tape.measurements[n].front(), f, config.resampling, rng);
                record(trace, slot, n, step.report.crude, ref[n]);
                record(trace, slot + 1, n, *step.report.cmc, ref[n]);
                state = std::move(step.state);
            }
            slot += 2;
            break;
        }
        case SingleAlgorithm::fa: {
            auto state = filters::initialize(*model, fc.particles, rng);
            for (std::size_t n = 0; n < tape.measurements.size(); ++n) {
                auto step = filters::fa_step(state, *semi, tape.measurements[n].front(), f, rng, config.resampling.scheme);
                record(trace, slot, n, step.report.crude, ref[n]);
                record(trace, slot + 1, n, *step.report.cmc_sir, ref[n]);
                record(trace, slot + 2, n, *step.report.cmc, ref[n]);
                state = std::move(step.state);
            }
            slot += 3;
            break;
        }
        case SingleAlgorithm::bootstrap: {
            auto state = filters::initialize(*model, fc.particles, rng);
            for (std::size_t n = 0; n < tape.measurements.size(); ++n) {
                auto step = filters::bootstrap_step(state, *model, tape.measurements[n].front(), f, config.resampling, rng);
                record(trace, slot, n, step.report.crude, ref[n]);
                state = std::move(step.state);
            }
            slot += 1;
            break;
        }
        case SingleAlgorithm::sv_taylor: {
            const auto& sv = dynamic_cast<const models::StochasticVolatilityModel&>(*model);
            const filters::TransitionProposal transition(sv);
            const filters::SvTaylorProposal taylor(sv);
            const filters::Proposal& q = fc.proposal == SvProposal::taylor
                                             ? static_cast<const filters::Proposal&>(taylor)
                                             : static_cast<const filters::Proposal&>(transition);
            const filters::SvTaylorApproximation approx(
                sv, fc.mode_expansion ? filters::SvExpansion::kernel_mode : filters::SvExpansion::transition_mean);
            auto state = filters::initialize(*model, fc.particles, rng);
            for (std::size_t n = 0; n < tape.measurements.size(); ++n) {
                auto step = filters::generic_proposal_step(state, sv, tape.measurements[n].front(), f, q, approx,
                                                           filters::CmcMode::kernel_and_predictive,
                                                           config.resampling, rng);
                record(trace, slot, n, step.report.crude, ref[n]);
                record(trace, slot + 1, n, *step.report.cmc, ref[n]);
                record(trace, slot + 2, n, *step.report.cmc_predictive, ref[n]);
                state = std::move(step.state);
            }
            slot += 3;
            break;
        }
        }
    }
    return trace;
}

// --------------------------------------------------------------------------- JMSS

models::SemiLinearJmssModel as_semi_linear(const models::LinearJmssModel& m) {
    std::vector<std::shared_ptr<const models::SemiLinearGaussianModel>> modes;
    for (Index r = 0; r < m.n_modes(); ++r) {
        modes.push_back(std::make_shared<models::LinearGaussianModel>(m.mode(r).F, m.process_cov(r), m.mode(r).H,
                                                                      m.obs_cov(r), m.prior()));
    }
    return {m.chain(), std::move(modes)};
}

Trace run_jmss(const ScenarioConfig& config, const TruthTape& tape, std::uint64_t seed, std::size_t n_slots) {
    const auto model = make_jmss_model(config.jmss_model);
    const auto phi = position_moment();
    std::vector<Vector> ref;
    {
        RngStream rng = RngStream::substream(seed, kReferenceStream);
        auto particles = filters::initialize_rbpf(model, config.reference_particles, rng);
        for (const auto& Z : tape.measurements) {
            auto step = filters::rbpf_step(particles, model, Z.front(), phi, config.resampling, rng);
            ref.push_back(step.cmc.value);
            particles = std::move(step.particles);
        }
    }
    Trace trace = empty_trace(n_slots, config.horizon);
    std::size_t slot = 0;
    for (std::size_t g = 0; g < config.jmss_filters.size(); ++g) {
        const auto& fc = config.jmss_filters[g];
        RngStream rng = filter_stream(seed, g);
        if (fc.algorithm == JmssAlgorithm::rbpf) {
            auto particles = filters::initialize_rbpf(model, fc.particles, rng);
            for (std::size_t n = 0; n < tape.measurements.size(); ++n) {
                auto step = filters::rbpf_step(particles, model, tape.measurements[n].front(), phi, config.resampling, rng);
                record(trace, slot, n, step.crude, ref[n]);
                record(trace, slot + 1, n, step.cmc, ref[n]);
                particles = std::move(step.particles);
            }
            slot += 2;
        } else {
            const auto semi = as_semi_linear(model);
            auto particles = filters::initialize_hybrid(semi, fc.particles, rng);
            for (std::size_t n = 0; n < tape.measurements.size(); ++n) {
                auto step = filters::general_jmss_step(particles, semi, tape.measurements[n].front(), phi,
                                                       config.resampling, rng);
                record(trace, slot, n, step.crude, ref[n]);
                record(trace, slot + 1, n, step.cmc_xn, ref[n]);
                record(trace, slot + 2, n, step.cmc_xn_rn, ref[n]);
                particles = std::move(step.particles);
            }
            slot += 3;
        }
    }
    return trace;
}

// --------------------------------------------------------------------------- PHD

std::vector<Vector> positions(const std::vector<Vector>& states) {
    std::vector<Vector> out;
    out.reserve(states.size());
    for (const auto& x : states) out.push_back(Vector{{x(0), x(2)}});
    return out;
}

Trace run_phd(const ScenarioConfig& config, const TruthTape& tape, std::uint64_t seed, std::size_t n_slots) {
    const auto params = make_phd_params(config.phd_model);
    Trace trace = empty_trace(n_slots, config.horizon);
    for (std::size_t g = 0; g < config.phd_filters.size(); ++g) {
        const auto& fc = config.phd_filters[g];
        RngStream rng = filter_stream(seed, g);
        phd::PhdParticleSet smc;
        smc.particles.resize(4, 0);
        phd::CmcPhdState cmc = phd::empty_cmc_state(4);
        phd::GaussianMixture gm;
        const phd::SmcPhdConfig smc_cfg{fc.particles_per_target, fc.birth_particles, config.resampling.scheme};
        const phd::CmcPhdConfig cmc_cfg{fc.particles_per_target, fc.birth_particles,
                                        fc.closed_form_birth ? phd::BirthMode::closed_form : phd::BirthMode::sampled,
                                        config.resampling.scheme};
        const phd::GmPhdConfig gm_cfg{fc.prune_threshold, fc.merge_threshold, fc.max_components};
        for (std::size_t k = 0; k < tape.measurements.size(); ++k) {
            const auto& Z = tape.measurements[k];
            std::vector<Vector> estimates;
            double count = 0.0;
            const Stopwatch sw;
            switch (fc.algorithm) {
            case PhdAlgorithm::smc: {
                auto res = phd::smc_phd_step(smc, params, Z, smc_cfg, rng);
                estimates = phd::smc_extract(res, fc.extraction_threshold);
                count = res.count;
                smc = std::move(res.next);
                break;
            }
            case PhdAlgorithm::cmc: {
                auto res = phd::cmc_phd_step(cmc, params, Z, cmc_cfg, rng);
                for (auto& t : phd::extract_targets(res.state, fc.extraction_threshold)) estimates.push_back(std::move(t.state));
                count = res.count;
                cmc = std::move(res.state);
                break;
            }
            case PhdAlgorithm::gm: {
                auto res = phd::gm_phd_step(gm, params, Z, gm_cfg);
                estimates = phd::gm_extract(res.mixture, fc.extraction_threshold);
                count = res.count;
                gm = std::move(res.mixture);
                break;
            }
            }
            trace.seconds[g][k] = sw.seconds();
            trace.count[g][k] = count;
            trace.ospa[g][k] = phd::ospa(positions(estimates), positions(tape.states[k]), config.ospa.c, config.ospa.p);
        }
    }
    return trace;
}

Trace run_once(const ScenarioConfig& config, std::uint64_t seed, std::size_t n_slots) {
    const TruthTape tape = generate_truth(config, seed);
    switch (config.kind) {
    case ExperimentKind::single: return run_single(config, tape, seed, n_slots);
    case ExperimentKind::jmss: return run_jmss(config, tape, seed, n_slots);
    case ExperimentKind::phd: return run_phd(config, tape, seed, n_slots);
    }
    throw ConfigError("unknown experiment kind");
}

// --------------------------------------------------------------------------- aggregation

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return kNaN;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
    if (v.empty()) return kNaN;
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double median_of(std::vector<double> v) {
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    const auto h = v.size() / 2;
    return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::string format_double(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

std::map<std::string, std::string> decisions_for(const ScenarioConfig& config) {
    std::map<std::string, std::string> d;
    d["resampling"] = std::string(to_string(config.resampling.scheme)) +
                      ", ess_threshold=" + format_double(config.resampling.ess_threshold);
    d["cost"] = config.timing ? "median over repetitions of the per-step wall time of the estimator code path; "
                                "one warm-up repetition discarded"
                              : "disabled";
    d["rng_streams"] = "truth=1, reference=2, filter g=100+g";
    switch (config.kind) {
    case ExperimentKind::single:
        d["moment"] = single_moment(config.single_model).name();
        d["reference"] = config.single_model.type == SingleModelType::linear_gaussian
                             ? "Kalman posterior mean"
                             : "bootstrap filter with " + std::to_string(config.reference_particles) + " particles";
        break;
    case ExperimentKind::jmss:
        d["moment"] = "position (px, py)";
        d["reference"] = "RB-PF conditional estimate with " + std::to_string(config.reference_particles) + " particles";
        break;
    case ExperimentKind::phd:
        d["ospa"] = "p=" + format_double(config.ospa.p) + ", c=" + format_double(config.ospa.c) + ", positions";
        for (const auto& f : config.phd_filters) {
            std::string placement;
            switch (f.algorithm) {
            case PhdAlgorithm::smc:
                placement = "birth particles from a stratified mixture of the birth intensity and the birth "
                            "Gaussian conditioned on each measurement";
                break;
            case PhdAlgorithm::cmc:
                placement = f.closed_form_birth ? "closed-form Gaussian-mixture birth at fixed sites"
                                                : "birth particles sampled from the fixed-site birth intensity";
                break;
            case PhdAlgorithm::gm: placement = "Gaussian-mixture birth at fixed sites"; break;
            }
            d["birth_placement." + f.name] = placement;
        }
        break;
    }
    return d;
}

} // namespace

const EstimatorSeries& RunResult::series(const std::string& name) const {
    for (const auto& s : estimators) {
        if (s.name == name) return s;
    }
    throw std::out_of_range("no estimator named '" + name + "'");
}

double RunResult::excluded_fraction() const {
    const auto total = metadata.runs_used + metadata.runs_excluded;
    return total == 0 ? 0.0 : static_cast<double>(metadata.runs_excluded) / static_cast<double>(total);
}

double time_average(const std::vector<double>& values, Index first, Index last) {
    const auto end = last < 0 ? static_cast<Index>(values.size()) : std::min<Index>(last, static_cast<Index>(values.size()));
    double s = 0.0;
    Index n = 0;
    for (Index i = std::max<Index>(first, 0); i < end; ++i) {
        const double v = values[static_cast<std::size_t>(i)];
        if (std::isnan(v)) continue;
        s += v;
        ++n;
    }
    return n == 0 ? kNaN : s / static_cast<double>(n);
}

double efficiency(double mse, double cost) {
    return mse > 0.0 && cost > 0.0 ? 1.0 / (mse * cost) : kNaN;
}

Index default_thread_count() {
    Index n = static_cast<Index>(std::max(1U, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("SEQCMC_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && cap >= 1) n = std::min<Index>(n, cap);
    }
    return n;
}

RunResult run_experiment(const ScenarioConfig& config, const ExperimentOptions& options) {
    config.validate();
    const auto slots = estimator_slots(config);
    const auto R = config.seeds.size();

    if (config.timing) {
        // Warm-up repetition: caches, page faults and lazy initialization.
        try {
            (void)run_once(config, config.seeds.front(), slots.size());
        } catch (const DegenerateWeights&) {
        } catch (const DegenerateCovariance&) {
        }
    }

    std::vector<std::optional<Trace>> traces(R);
    std::vector<std::string> failures(R);
    std::exception_ptr fatal;
    std::mutex fatal_mutex;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < R; i = next++) {
            try {
                traces[i] = run_once(config, config.seeds[i], slots.size());
            } catch (const DegenerateWeights& e) {
                failures[i] = e.what();
            } catch (const DegenerateCovariance& e) {
                failures[i] = e.what();
            } catch (...) {
                const std::lock_guard lock(fatal_mutex);
                if (!fatal) fatal = std::current_exception();
            }
        }
    };
    const Index threads = std::min<Index>(options.threads > 0 ? options.threads : default_thread_count(),
                                          static_cast<Index>(R));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (Index t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (fatal) std::rethrow_exception(fatal);

    RunResult result;
    auto& meta = result.metadata;
    meta.scenario = config.name;
    meta.kind = config.kind;
    meta.seeds = config.seeds;
    meta.timing = config.timing;
    meta.git_revision = SEQCMC_GIT_REVISION;
    meta.decisions = decisions_for(config);
    std::vector<const Trace*> used;
    for (std::size_t i = 0; i < R; ++i) {
        if (traces[i]) {
            used.push_back(&*traces[i]);
        } else {
            meta.exclusions.emplace_back(config.seeds[i], failures[i]);
        }
    }
    meta.runs_used = static_cast<Index>(used.size());
    meta.runs_excluded = static_cast<Index>(meta.exclusions.size());

    const auto H = static_cast<std::size_t>(config.horizon);
    for (Index k = 0; k < config.horizon; ++k) result.steps.push_back(config.kind == ExperimentKind::phd ? k : k + 1);
    std::vector<double> column;
    column.reserve(used.size());
    auto gather = [&](const std::vector<std::vector<double>> Trace::*field, std::size_t e, std::size_t n) {
        column.clear();
        for (const Trace* t : used) column.push_back(((*t).*field)[e][n]);
        return column;
    };
    for (std::size_t e = 0; e < slots.size(); ++e) {
        EstimatorSeries s;
        s.name = slots[e].name;
        for (std::size_t n = 0; n < H; ++n) {
            if (slots[e].has_mse) s.mse.push_back(mean_of(gather(&Trace::sq_err, e, n)));
            if (slots[e].has_phd) {
                s.ospa_mean.push_back(mean_of(gather(&Trace::ospa, e, n)));
                s.ospa_sd.push_back(sd_of(column));
                s.count_mean.push_back(mean_of(gather(&Trace::count, e, n)));
                s.count_sd.push_back(sd_of(column));
            }
            if (config.timing) {
                s.cost_s.push_back(median_of(gather(&Trace::seconds, e, n)));
                if (slots[e].has_mse) s.efficiency.push_back(efficiency(s.mse.back(), s.cost_s.back()));
            }
        }
        result.estimators.push_back(std::move(s));
    }
    return result;
}

} // namespace seqcmc::bench
