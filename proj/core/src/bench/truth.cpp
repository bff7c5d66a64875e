#include "seqcmc/bench/truth.hpp"

#include "seqcmc/core/gaussian.hpp"
#include "seqcmc/models/semi_linear.hpp"
#include "seqcmc/models/stochastic_volatility.hpp"

namespace seqcmc::bench {

namespace {

/// Substream key of the truth simulation.
constexpr std::uint64_t kTruthStream = 1;

GaussianBelief scalar_prior(const SingleModelConfig& c) {
    return {Vector::Constant(1, c.prior_mean), Matrix::Constant(1, 1, c.prior_var)};
}

TruthTape single_truth(const ScenarioConfig& config, RngStream& rng) {
    const auto model = make_single_model(config.single_model);
    TruthTape tape;
    tape.initial_state = model->sample_prior(rng);
    Vector x = tape.initial_state;
    for (Index n = 1; n <= config.horizon; ++n) {
        x = model->sample_transition(x, rng);
        tape.states.push_back({x});
        tape.measurements.push_back({model->sample_observation(x, rng)});
    }
    return tape;
}

TruthTape jmss_truth(const ScenarioConfig& config, RngStream& rng) {
    const auto model = make_jmss_model(config.jmss_model);
    TruthTape tape;
    tape.initial_state = sample_gaussian(model.prior(), rng);
    Index r = model.chain().sample_initial(rng);
    Vector x = tape.initial_state;
    for (Index n = 1; n <= config.horizon; ++n) {
        r = model.chain().sample_next(r, rng);
        x = model.sample_transition(r, x, rng);
        tape.modes.push_back(r);
        tape.states.push_back({x});
        tape.measurements.push_back({model.sample_observation(r, x, rng)});
    }
    return tape;
}

TruthTape phd_truth(const ScenarioConfig& config, RngStream& rng) {
    const auto& sc = config.phd_model;
    const auto params = make_phd_params(sc);
    const auto& target = *params.target;
    TruthTape tape;
    const auto n_targets = sc.targets.size();
    std::vector<std::optional<Vector>> alive(n_targets);
    for (Index k = 0; k < config.horizon; ++k) {
        std::vector<Vector> states;
        for (std::size_t t = 0; t < n_targets; ++t) {
            const auto& s = sc.targets[t];
            const bool live = k >= s.birth_step && (!s.death_step || k < *s.death_step);
            if (!live) {
                alive[t].reset();
                continue;
            }
            if (k == s.birth_step) {
                alive[t] = sample_gaussian(sc.birth.components[static_cast<std::size_t>(s.site)].belief, rng);
            } else {
                alive[t] = target.sample_transition(*alive[t], rng);
            }
            states.push_back(*alive[t]);
        }
        phd::MeasurementSet Z;
        for (const auto& x : states) {
            if (rng.uniform() < sc.p_d) Z.push_back(target.sample_observation(x, rng));
        }
        for (auto& z : params.clutter.sample(rng)) Z.push_back(std::move(z));
        tape.states.push_back(std::move(states));
        tape.measurements.push_back(std::move(Z));
    }
    return tape;
}

} // namespace

std::shared_ptr<const models::StateSpaceModel> make_single_model(const SingleModelConfig& c) {
    switch (c.type) {
    case SingleModelType::linear_gaussian:
        return std::make_shared<models::LinearGaussianModel>(Matrix::Constant(1, 1, c.F), Matrix::Constant(1, 1, c.Q),
                                                             Matrix::Constant(1, 1, c.H), Matrix::Constant(1, 1, c.R),
                                                             scalar_prior(c));
    case SingleModelType::arch:
        return std::make_shared<models::ArchModel>(c.beta0, c.beta1, c.R, scalar_prior(c));
    case SingleModelType::stochastic_volatility:
        return std::make_shared<models::StochasticVolatilityModel>(c.phi, c.sigma, c.beta, scalar_prior(c));
    }
    throw ConfigError("unknown single-target model");
}

models::MomentFunction single_moment(const SingleModelConfig& c) {
    if (c.type == SingleModelType::stochastic_volatility) return models::MomentFunction::sv_stddev(c.beta);
    return models::MomentFunction::identity(1);
}

models::LinearJmssModel make_jmss_model(const JmssModelConfig& c) {
    const auto K = static_cast<Index>(c.omegas.size());
    const auto chain = K == 1 ? models::ModeChain(Matrix::Ones(1, 1)) : models::ModeChain::symmetric(K, c.stay);
    GaussianBelief prior(c.prior_mean, c.prior_sd.array().square().matrix().asDiagonal());
    return models::LinearJmssModel::coordinated_turn(c.omegas, c.T, c.sigma_v, c.sigma_xy, chain, std::move(prior));
}

models::MomentFunction position_moment() { return models::MomentFunction::coordinates(4, {0, 2}); }

phd::PhdModelParams make_phd_params(const PhdScenarioConfig& c) {
    Matrix H = Matrix::Zero(2, 4);
    H(0, 0) = 1.0;
    H(1, 2) = 1.0;
    const Matrix R = c.sigma_xy * c.sigma_xy * Matrix::Identity(2, 2);
    // The prior is unused by the PHD recursions; births come from the birth intensity.
    GaussianBelief unused(Vector::Zero(4), Matrix::Identity(4, 4));
    phd::PhdModelParams p;
    p.p_d = c.p_d;
    p.p_s = c.p_s;
    p.clutter = {c.clutter_rate, c.region_lower, c.region_upper};
    p.birth = c.birth;
    p.target = std::make_shared<models::LinearGaussianModel>(models::coordinated_turn_matrix(0.0, c.T),
                                                             models::white_acceleration_cov(c.T, c.sigma_v), H, R,
                                                             std::move(unused));
    p.validate();
    return p;
}

TruthTape generate_truth(const ScenarioConfig& config, std::uint64_t seed) {
    RngStream rng = RngStream::substream(seed, kTruthStream);
    switch (config.kind) {
    case ExperimentKind::single: return single_truth(config, rng);
    case ExperimentKind::jmss: return jmss_truth(config, rng);
    case ExperimentKind::phd: return phd_truth(config, rng);
    }
    throw ConfigError("unknown experiment kind");
}

} // namespace seqcmc::bench
