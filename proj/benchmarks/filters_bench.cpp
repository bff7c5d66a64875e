#include "seqcmc/bench/config.hpp"
#include "seqcmc/bench/truth.hpp"
#include "seqcmc/core/kalman.hpp"
#include "seqcmc/filters/jmss.hpp"
#include "seqcmc/filters/single.hpp"
#include "seqcmc/models/semi_linear.hpp"
#include "seqcmc/phd/gm_phd.hpp"
#include "seqcmc/phd/ospa.hpp"
#include "seqcmc/phd/phd.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace seqcmc;

void BM_Resample(benchmark::State& state) {
    const auto n = static_cast<Index>(state.range(0));
    RngStream rng(7);
    std::vector<double> w(static_cast<std::size_t>(n));
    for (auto& v : w) v = rng.uniform() + 0.01;
    double total = 0.0;
    for (double v : w) total += v;
    for (auto& v : w) v /= total;
    for (auto _ : state) {
        benchmark::DoNotOptimize(resample_indices(w, n, rng, ResampleScheme::multinomial));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Resample)->Arg(1000)->Arg(100000);

void BM_KalmanStep4d(benchmark::State& state) {
    const Matrix F = models::coordinated_turn_matrix(0.05, 2.0);
    const Matrix Q = models::white_acceleration_cov(2.0, 3.0);
    Matrix H = Matrix::Zero(2, 4);
    H(0, 0) = 1.0;
    H(1, 2) = 1.0;
    const Matrix R = 100.0 * Matrix::Identity(2, 2);
    const Matrix G = Matrix::Identity(4, 4);
    GaussianBelief b(Vector::Zero(4), Matrix::Identity(4, 4));
    const Vector y = Vector::Ones(2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(kalman_update(kalman_predict(b, F, G, Q), H, R, y));
    }
}
BENCHMARK(BM_KalmanStep4d);

void BM_SirStep(benchmark::State& state) {
    const models::LinearGaussianModel model(0.9, 10.0, 1.0, 1.0);
    const auto f = models::MomentFunction::identity(1);
    RngStream rng(11);
    auto fs = filters::initialize(model, static_cast<Index>(state.range(0)), rng);
    const Vector y = Vector::Constant(1, 0.5);
    for (auto _ : state) {
        auto step = filters::sir_step(fs, model, y, f, ResamplePolicy{}, rng);
        fs = std::move(step.state);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SirStep)->Arg(1000);

void BM_FaStep(benchmark::State& state) {
    const models::LinearGaussianModel model(0.9, 10.0, 1.0, 1.0);
    const auto f = models::MomentFunction::identity(1);
    RngStream rng(12);
    auto fs = filters::initialize(model, static_cast<Index>(state.range(0)), rng);
    const Vector y = Vector::Constant(1, 0.5);
    for (auto _ : state) {
        auto step = filters::fa_step(fs, model, y, f, rng);
        fs = std::move(step.state);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FaStep)->Arg(1000);

void BM_RbpfStep(benchmark::State& state) {
    bench::JmssModelConfig cfg;
    cfg.prior_mean = Vector{{0.0, 50.0, 0.0, 0.0}};
    cfg.prior_sd = Vector{{10.0, 5.0, 10.0, 5.0}};
    const auto model = bench::make_jmss_model(cfg);
    const auto phi = bench::position_moment();
    RngStream rng(13);
    auto particles = filters::initialize_rbpf(model, static_cast<Index>(state.range(0)), rng);
    const Vector y = Vector{{10.0, 5.0}};
    for (auto _ : state) {
        auto step = filters::rbpf_step(particles, model, y, phi, ResamplePolicy{}, rng);
        benchmark::DoNotOptimize(step.cmc.value);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RbpfStep)->Arg(1000);

bench::ScenarioConfig phd_bench_config() {
    bench::ScenarioConfig c;
    c.kind = bench::ExperimentKind::phd;
    c.horizon = 30;
    c.seeds = {1};
    auto& m = c.phd_model;
    m.region_lower = Vector{{-4000.0, -4000.0}};
    m.region_upper = Vector{{4000.0, 4000.0}};
    m.birth.components.push_back({0.05, GaussianBelief(Vector{{-800.0, 0.0, -800.0, 0.0}},
                                                       Vector{{100.0, 25.0, 100.0, 25.0}}.asDiagonal())});
    m.birth.components.push_back({0.05, GaussianBelief(Vector{{800.0, 0.0, -600.0, 0.0}},
                                                       Vector{{100.0, 25.0, 100.0, 25.0}}.asDiagonal())});
    m.targets = {{0, std::nullopt, 0}, {0, std::nullopt, 1}};
    return c;
}

template <phd::BirthMode Mode>
void BM_CmcPhdStep(benchmark::State& state) {
    const auto c = phd_bench_config();
    const auto params = bench::make_phd_params(c.phd_model);
    const auto tape = bench::generate_truth(c, 1);
    RngStream rng(14);
    auto s = phd::empty_cmc_state(4);
    const phd::CmcPhdConfig cfg{200, 20, Mode, ResampleScheme::multinomial};
    for (std::size_t k = 0; k + 1 < tape.measurements.size(); ++k) s = phd::cmc_phd_step(s, params, tape.measurements[k], cfg, rng).state;
    const auto& Z = tape.measurements.back();
    for (auto _ : state) {
        benchmark::DoNotOptimize(phd::cmc_phd_step(s, params, Z, cfg, rng).count);
    }
}
BENCHMARK(BM_CmcPhdStep<phd::BirthMode::closed_form>);
BENCHMARK(BM_CmcPhdStep<phd::BirthMode::sampled>);

void BM_SmcPhdStep(benchmark::State& state) {
    const auto c = phd_bench_config();
    const auto params = bench::make_phd_params(c.phd_model);
    const auto tape = bench::generate_truth(c, 1);
    RngStream rng(15);
    phd::PhdParticleSet s;
    s.particles.resize(4, 0);
    const phd::SmcPhdConfig cfg{};
    for (std::size_t k = 0; k + 1 < tape.measurements.size(); ++k) s = phd::smc_phd_step(s, params, tape.measurements[k], cfg, rng).next;
    const auto& Z = tape.measurements.back();
    for (auto _ : state) {
        benchmark::DoNotOptimize(phd::smc_phd_step(s, params, Z, cfg, rng).count);
    }
}
BENCHMARK(BM_SmcPhdStep);

void BM_GmPhdStep(benchmark::State& state) {
    const auto c = phd_bench_config();
    const auto params = bench::make_phd_params(c.phd_model);
    const auto tape = bench::generate_truth(c, 1);
    phd::GaussianMixture mix;
    for (std::size_t k = 0; k + 1 < tape.measurements.size(); ++k) mix = phd::gm_phd_step(mix, params, tape.measurements[k]).mixture;
    const auto& Z = tape.measurements.back();
    for (auto _ : state) {
        benchmark::DoNotOptimize(phd::gm_phd_step(mix, params, Z).count);
    }
}
BENCHMARK(BM_GmPhdStep);

void BM_Ospa(benchmark::State& state) {
    RngStream rng(16);
    const auto n = static_cast<std::size_t>(state.range(0));
    std::vector<Vector> X;
    std::vector<Vector> Y;
    for (std::size_t i = 0; i < n; ++i) X.push_back(100.0 * rng.normal_vector(2));
    for (std::size_t i = 0; i + 2 < n; ++i) Y.push_back(100.0 * rng.normal_vector(2));
    for (auto _ : state) benchmark::DoNotOptimize(phd::ospa(X, Y, 100.0, 1.0));
}
BENCHMARK(BM_Ospa)->Arg(12)->Arg(50);

} // namespace

BENCHMARK_MAIN();
