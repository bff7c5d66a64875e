#include "support.hpp"

#include "seqcmc/core/gaussian.hpp"
#include "seqcmc/core/rng.hpp"
#include "seqcmc/models/jmss.hpp"
#include "seqcmc/models/moment.hpp"
#include "seqcmc/models/semi_linear.hpp"
#include "seqcmc/models/stochastic_volatility.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <vector>

using namespace seqcmc;
using namespace seqcmc::models;
using seqcmc::testing::RunningStats;
using seqcmc::testing::scalar;
using seqcmc::testing::vec;

namespace {

/// Trapezoid rule on [a, b] with n intervals.
double integrate(const std::function<double(double)>& fn, double a, double b, int n = 40000) {
    const double h = (b - a) / n;
    double sum = 0.5 * (fn(a) + fn(b));
    for (int i = 1; i < n; ++i) sum += fn(a + h * i);
    return sum * h;
}

/// Exact p(y | x_prev) of the SV model by quadrature.
double sv_predictive(const StochasticVolatilityModel& m, double x_prev, double y) {
    const double mean = m.phi() * x_prev;
    const double sd = m.sigma();
    return integrate(
        [&](double x) { return std::exp(m.obs_logpdf(y, x) + gaussian_logpdf(x, mean, sd * sd)); },
        mean - 12 * sd, mean + 12 * sd);
}

/// Exact E[X | x_prev, y] of the SV model by quadrature.
double sv_kernel_mean(const StochasticVolatilityModel& m, double x_prev, double y) {
    const double mean = m.phi() * x_prev;
    const double sd = m.sigma();
    auto density = [&](double x) { return std::exp(m.obs_logpdf(y, x) + gaussian_logpdf(x, mean, sd * sd)); };
    const double z = integrate(density, mean - 12 * sd, mean + 12 * sd);
    return integrate([&](double x) { return x * density(x); }, mean - 12 * sd, mean + 12 * sd) / z;
}

class ZeroNoiseModel final : public SemiLinearGaussianModel {
public:
    explicit ZeroNoiseModel(double R = 1.0)
        : SemiLinearGaussianModel(Matrix::Identity(1, 1), Matrix::Constant(1, 1, R),
                                  GaussianBelief(Vector::Zero(1), Matrix::Identity(1, 1))) {}
    [[nodiscard]] Vector drift(const Vector& x) const override { return Vector::Constant(1, std::sin(x(0)) + 2.0); }
    [[nodiscard]] Matrix noise_gain(const Vector&) const override { return Matrix::Zero(1, 1); }
};

/// Two-dimensional semi-linear model with state-dependent noise.
class Wobble final : public SemiLinearGaussianModel {
public:
    Wobble()
        : SemiLinearGaussianModel((Matrix(1, 2) << 1.0, -0.5).finished(), Matrix::Constant(1, 1, 0.7),
                                  GaussianBelief(Vector::Zero(2), Matrix::Identity(2, 2))) {}
    [[nodiscard]] Vector drift(const Vector& x) const override {
        return vec({0.5 * x(0) + std::cos(x(1)), 0.9 * x(1) - 0.1 * x(0) * x(0)});
    }
    [[nodiscard]] Matrix noise_gain(const Vector& x) const override {
        Matrix K(2, 2);
        K << 1.0 + 0.2 * x(1) * x(1), 0.0, 0.3 * x(0), 0.8;
        return K;
    }
};

const LinearGaussianModel& linear_scalar() {
    static const LinearGaussianModel m(0.9, 10.0, 1.0, 1.0);
    return m;
}

} // namespace

TEST_SUITE("models") {

TEST_CASE("optimal kernel of the scalar linear model by hand") {
    const auto& m = linear_scalar();
    const auto k = optimal_kernel(m, scalar(0.0), scalar(1.1));
    CHECK(k.mean(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(k.mean(0) - 1.0) < 1e-12);
    CHECK(std::abs(k.cov(0, 0) - 10.0 / 11.0) < 1e-12);

    // L = Q + R = 11
    CHECK(std::abs(predictive_loglik(m, scalar(0.0), scalar(0.0)) - (-2.117886169603858)) < 1e-12);
    CHECK(std::abs(predictive_loglik(m, scalar(0.0), scalar(0.0)) - gaussian_logpdf(0.0, 0.0, 11.0)) < 1e-15);

    // x_prev = 2: drift 1.8
    const auto k2 = optimal_kernel(m, scalar(2.0), scalar(-0.4));
    CHECK(std::abs(k2.mean(0) - (1.8 + 10.0 / 11.0 * (-0.4 - 1.8))) < 1e-12);
    CHECK(std::abs(predictive_loglik(m, scalar(2.0), scalar(-0.4)) - gaussian_logpdf(-0.4, 1.8, 11.0)) < 1e-12);
}

TEST_CASE("zero process noise gives the drift with zero variance") {
    const ZeroNoiseModel m;
    const auto k = optimal_kernel(m, scalar(0.3), scalar(5.0));
    CHECK(std::abs(k.mean(0) - (std::sin(0.3) + 2.0)) < 1e-15);
    CHECK(k.cov(0, 0) == 0.0);
    // R = 1, Q = 0, y = f(x_prev) is a centered unit Gaussian
    CHECK(std::abs(predictive_loglik(m, scalar(0.3), scalar(std::sin(0.3) + 2.0)) - (-0.5 * kLogTwoPi)) < 1e-15);
}

TEST_CASE("ARCH with beta1 = 0 has a constant kernel variance") {
    const ArchModel m(2.0, 0.0, 3.0);
    for (double x : {-4.0, 0.0, 0.5, 10.0}) {
        const auto k = optimal_kernel(m, scalar(x), scalar(1.0));
        CHECK(std::abs(k.cov(0, 0) - 2.0 * 3.0 / 5.0) < 1e-14);
        CHECK(std::abs(k.mean(0) - 2.0 / 5.0) < 1e-14);
    }
    const ArchModel m1(1.0, 0.1, 3.0);
    const auto k = optimal_kernel(m1, scalar(2.0), scalar(1.0));
    CHECK(std::abs(k.cov(0, 0) - 1.4 * 3.0 / 4.4) < 1e-14);
    CHECK_THROWS_AS(ArchModel(0.0, 0.1, 3.0), std::invalid_argument);
    CHECK_THROWS_AS(ArchModel(1.0, -0.1, 3.0), std::invalid_argument);
    CHECK_THROWS_AS(ArchModel(1.0, 0.1, 0.0), std::invalid_argument);
}

TEST_CASE("singular innovation covariance throws") {
    const ZeroNoiseModel exact_obs(0.0);
    CHECK_THROWS_AS((void)optimal_kernel(exact_obs, scalar(0.0), scalar(1.0)), DegenerateCovariance);
    CHECK_THROWS_AS((void)predictive_loglik(exact_obs, scalar(0.0), scalar(1.0)), DegenerateCovariance);
    CHECK_THROWS_AS(LinearGaussianModel(1.0, 0.0, 1.0, 0.0), DegenerateCovariance);
}

TEST_CASE("Bayes identity f g = p(x | x_prev, y) p(y | x_prev)") {
    RngStream rng(3);
    const Wobble wobble;
    const ArchModel arch(1.0, 0.1, 3.0);
    const LinearGaussianModel lin2((Matrix(2, 2) << 1.0, 2.0, 0.0, 1.0).finished(),
                                   (Matrix(2, 2) << 4.0 / 3.0, 2.0, 2.0, 4.0).finished(),
                                   (Matrix(1, 2) << 1.0, 0.0).finished(), Matrix::Constant(1, 1, 10.0),
                                   GaussianBelief(Vector::Zero(2), Matrix::Identity(2, 2)));
    const std::vector<const SemiLinearGaussianModel*> models{&linear_scalar(), &arch, &wobble, &lin2};
    for (const auto* m : models) {
        for (int trial = 0; trial < 200; ++trial) {
            const Vector x_prev = 2.0 * rng.normal_vector(m->state_dim());
            const Vector x = m->drift(x_prev) + rng.normal_vector(m->state_dim());
            const Vector y = m->obs_matrix() * x + rng.normal_vector(m->obs_dim());
            const double lhs = m->transition_logpdf(x, x_prev) + m->obs_logpdf(y, x);
            const auto k = optimal_kernel(*m, x_prev, y);
            const double rhs = gaussian_logpdf(x, k.mean, k.cov) + predictive_loglik(*m, x_prev, y);
            REQUIRE(std::abs(lhs - rhs) < 1e-9);
        }
    }
}

TEST_CASE("kernel batch matches the per-particle kernel") {
    RngStream rng(8);
    const ArchModel arch(1.0, 0.1, 3.0);
    const Wobble wobble;
    const std::vector<const SemiLinearGaussianModel*> models{&linear_scalar(), &arch, &wobble};
    for (const auto* m : models) {
        Matrix x_prev(m->state_dim(), 50);
        for (Index i = 0; i < x_prev.cols(); ++i) x_prev.col(i) = 3.0 * rng.normal_vector(m->state_dim());
        const Vector y = rng.normal_vector(m->obs_dim());
        KernelBatch batch;
        m->kernel_batch(x_prev, y, batch);
        REQUIRE(batch.size() == 50);
        for (Index i = 0; i < x_prev.cols(); ++i) {
            const auto k = optimal_kernel(*m, x_prev.col(i), y);
            CHECK((batch.mean.col(i) - k.mean).norm() < 1e-12);
            CHECK((Matrix(batch.cov_of(i)) - k.cov).norm() < 1e-12);
            CHECK((batch.sqrt_of(i) * batch.sqrt_of(i).transpose() - k.cov).norm() < 1e-10);
            CHECK(std::abs(batch.log_predictive[static_cast<std::size_t>(i)] - predictive_loglik(*m, x_prev.col(i), y)) < 1e-12);
        }
    }
}

TEST_CASE("predictive likelihood agrees with a Monte Carlo integral") {
    const ArchModel arch(1.0, 0.1, 3.0);
    const std::vector<std::pair<const SemiLinearGaussianModel*, double>> cases{{&linear_scalar(), 1.5}, {&arch, -2.0}};
    RngStream rng(11);
    for (const auto& [m, x_prev] : cases) {
        const Vector xp = scalar(x_prev);
        const Vector y = scalar(1.7);
        RunningStats s;
        for (int i = 0; i < 1000000; ++i) {
            const Vector x = m->sample_transition(xp, rng);
            s.add(std::exp(m->obs_logpdf(y, x)));
        }
        const double exact = std::exp(predictive_loglik(*m, xp, y));
        CHECK(std::abs(s.mean() - exact) < 3.0 * s.se());
    }
}

TEST_CASE("transition densities integrate to one") {
    const ArchModel arch(1.0, 0.1, 3.0);
    const StochasticVolatilityModel sv(0.8, 0.18, 0.6);
    const std::vector<const StateSpaceModel*> models{&linear_scalar(), &arch, &sv};
    for (const auto* m : models) {
        for (double x_prev : {-3.0, 0.0, 1.2}) {
            const double mass = integrate(
                [&](double x) { return std::exp(m->transition_logpdf(scalar(x), scalar(x_prev))); }, -60.0, 60.0,
                200000);
            CHECK(std::abs(mass - 1.0) < 1e-3);
        }
    }
}

TEST_CASE("transition sampler matches drift and process covariance") {
    const Wobble m;
    const Vector x_prev = vec({0.7, -1.1});
    const Vector f = m.drift(x_prev);
    const Matrix Q = m.process_cov(x_prev);
    RngStream rng(21);
    const int n = 100000;
    std::vector<RunningStats> first(2);
    std::vector<RunningStats> second(3);  // (0,0), (1,1), (0,1)
    for (int i = 0; i < n; ++i) {
        const Vector d = m.sample_transition(x_prev, rng) - f;
        first[0].add(d(0));
        first[1].add(d(1));
        second[0].add(d(0) * d(0));
        second[1].add(d(1) * d(1));
        second[2].add(d(0) * d(1));
    }
    CHECK(std::abs(first[0].mean()) < 3 * first[0].se());
    CHECK(std::abs(first[1].mean()) < 3 * first[1].se());
    CHECK(std::abs(second[0].mean() - Q(0, 0)) < 3 * second[0].se());
    CHECK(std::abs(second[1].mean() - Q(1, 1)) < 3 * second[1].se());
    CHECK(std::abs(second[2].mean() - Q(0, 1)) < 3 * second[2].se());
    // Q = K K^T is positive semidefinite on a grid of states.
    for (double a = -3; a <= 3; a += 0.5) {
        for (double b = -3; b <= 3; b += 0.5) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(m.process_cov(vec({a, b})));
            REQUIRE(es.eigenvalues().minCoeff() >= -1e-12);
        }
    }
}

TEST_CASE("batch samplers draw the same variates as the loop") {
    const ArchModel arch(1.0, 0.1, 3.0);
    const StochasticVolatilityModel sv(0.8, 0.4, 0.6);
    const std::vector<const StateSpaceModel*> models{&linear_scalar(), &arch, &sv};
    for (const auto* m : models) {
        Matrix x_prev(1, 20);
        for (Index i = 0; i < 20; ++i) x_prev(0, i) = 0.3 * static_cast<double>(i) - 3.0;
        RngStream a(5);
        RngStream b(5);
        Matrix batch;
        m->sample_transition_batch(x_prev, batch, a);
        for (Index i = 0; i < 20; ++i) CHECK(batch(0, i) == m->sample_transition(x_prev.col(i), b)(0));
        Matrix prior;
        m->sample_prior_batch(prior, 20, a);
        for (Index i = 0; i < 20; ++i) CHECK(prior(0, i) == m->sample_prior(b)(0));
        std::vector<double> lp(20);
        m->obs_logpdf_batch(scalar(0.4), x_prev, lp);
        for (Index i = 0; i < 20; ++i) CHECK(std::abs(lp[static_cast<std::size_t>(i)] - m->obs_logpdf(scalar(0.4), x_prev.col(i))) < 1e-14);
    }
}

TEST_CASE("moment closed forms match Monte Carlo") {
    RngStream rng(2);
    const double mean = 0.4;
    const double var = 0.7;
    const std::vector<MomentFunction> moments{MomentFunction::identity(1), MomentFunction::arch_variance(1.0, 0.1),
                                              MomentFunction::sv_stddev(0.6)};
    for (const auto& f : moments) {
        RunningStats s;
        for (int i = 0; i < 200000; ++i) s.add(f(scalar(mean + std::sqrt(var) * rng.normal()))(0));
        const double exact = f.expectation(scalar(mean), Matrix::Constant(1, 1, var))(0);
        CHECK(std::abs(s.mean() - exact) < 3 * s.se());
    }
    // exact values
    CHECK(MomentFunction::arch_variance(1.0, 0.1).expectation(scalar(2.0), Matrix::Constant(1, 1, 3.0))(0) ==
          doctest::Approx(1.0 + 0.1 * 7.0).epsilon(1e-15));
    CHECK(std::abs(MomentFunction::sv_stddev(0.6).expectation(scalar(0.4), Matrix::Constant(1, 1, 0.8))(0) -
                   0.6 * std::exp(0.2 + 0.1)) < 1e-15);
    const auto c = MomentFunction::constant(vec({1.0, -2.0}));
    CHECK(c.expectation(vec({5.0}), Matrix::Identity(1, 1)) == vec({1.0, -2.0}));
    const auto sel = MomentFunction::coordinates(4, {0, 2});
    CHECK(sel(vec({1, 2, 3, 4})) == vec({1, 3}));
    CHECK(sel.expectation(vec({1, 2, 3, 4}), Matrix::Identity(4, 4)) == vec({1, 3}));
    const MomentFunction open("open", 1, [](const Vector& x) { return x; });
    CHECK_FALSE(open.has_closed_form());
    CHECK_THROWS_AS((void)open.expectation(scalar(0.0), Matrix::Identity(1, 1)), std::logic_error);
}

TEST_CASE("SV Taylor kernel") {
    const StochasticVolatilityModel m(0.8, 0.18, 0.6);

    SUBCASE("kernel variance never exceeds sigma^2") {
        for (double y : {-3.0, -0.5, 0.0, 0.1, 2.0, 5.0}) {
            for (double xp : {-2.0, 0.0, 1.0}) {
                CHECK(sv_taylor_kernel(m, xp, y).kernel.cov(0, 0) <= 0.18 * 0.18 + 1e-18);
                CHECK(sv_mode_taylor_kernel(m, xp, y).kernel.cov(0, 0) <= 0.18 * 0.18 + 1e-18);
            }
        }
    }

    SUBCASE("vanishing sigma gives log g at phi x_prev") {
        for (double sigma : {1e-3, 1e-5}) {
            const StochasticVolatilityModel tiny(0.8, sigma, 0.6);
            const auto k = sv_taylor_kernel(tiny, 0.5, 1.3);
            CHECK(std::abs(k.log_predictive - tiny.obs_logpdf(1.3, 0.4)) < 10 * sigma);
        }
    }

    SUBCASE("predictive approximation within 5% for moderate |y|") {
        for (double xp : {-0.25, 0.0, 0.25}) {
            for (double y = -1.2; y <= 1.2 + 1e-9; y += 0.2) {
                const double exact = sv_predictive(m, xp, y);
                const double approx = std::exp(sv_taylor_kernel(m, xp, y).log_predictive);
                CHECK(std::abs(approx - exact) / exact < 0.05);
            }
        }
    }

    SUBCASE("mode expansion keeps the kernel mean accurate for large |y|") {
        const StochasticVolatilityModel wide(0.8, 0.4, 0.6);
        for (double xp : {-0.5, 0.0, 0.5}) {
            for (double y : {-3.0, -2.0, 0.05, 1.0, 2.5}) {
                const double exact = sv_kernel_mean(wide, xp, y);
                const double approx = sv_mode_taylor_kernel(wide, xp, y).kernel.mean(0);
                const double plain = sv_taylor_kernel(wide, xp, y).kernel.mean(0);
                CHECK(std::abs(approx - exact) < 0.025);
                if (std::abs(y) >= 2.0) CHECK(std::abs(approx - exact) < std::abs(plain - exact));
            }
        }
        // the mode is a fixed point of a = phi x_prev + sigma^2 d(a)
        const double xp = 0.3;
        const double y = 2.2;
        const double a = sv_mode_taylor_kernel(wide, xp, y).kernel.mean(0);
        const double d = -0.5 + y * y * std::exp(-a) / (2 * 0.36);
        CHECK(std::abs(a - (0.8 * xp + 0.16 * d)) < 1e-10);
    }

    CHECK_THROWS_AS(StochasticVolatilityModel(0.8, 0.0, 0.6), std::invalid_argument);
    CHECK_THROWS_AS(StochasticVolatilityModel(0.8, 0.2, -1.0), std::invalid_argument);
}

TEST_CASE("mode chain validation") {
    CHECK_THROWS_AS(ModeChain((Matrix(2, 2) << 0.5, 0.5, 0.3, 0.6).finished()), std::invalid_argument);
    CHECK_THROWS_AS(ModeChain((Matrix(2, 2) << 1.2, -0.2, 0.3, 0.7).finished()), std::invalid_argument);
    CHECK_THROWS_AS(ModeChain(Matrix::Identity(2, 3)), std::invalid_argument);
    CHECK_NOTHROW(ModeChain((Matrix(2, 2) << 0.5, 0.5 + 5e-13, 0.3, 0.7).finished()));

    const auto chain = ModeChain::symmetric(3, 0.4);
    for (Index r = 0; r < 3; ++r) {
        CHECK(std::abs(chain.transition().row(r).sum() - 1.0) < 1e-12);
        CHECK(chain.prob(r, r) == 0.4);
        CHECK(chain.prob(r, (r + 1) % 3) == doctest::Approx(0.3));
    }
    CHECK(chain.initial().isApprox(Vector::Constant(3, 1.0 / 3.0)));

    RngStream rng(4);
    std::vector<int> counts(3, 0);
    for (int i = 0; i < 30000; ++i) ++counts[static_cast<std::size_t>(chain.sample_next(1, rng))];
    CHECK(std::abs(counts[1] / 30000.0 - 0.4) < 3 * std::sqrt(0.4 * 0.6 / 30000));
}

TEST_CASE("coordinated-turn matrices") {
    const double T = 2.0;
    const Matrix cv = coordinated_turn_matrix(0.0, T);
    Matrix expected = Matrix::Identity(4, 4);
    expected(0, 1) = T;
    expected(2, 3) = T;
    CHECK((cv - expected).norm() == 0.0);

    // Small turn rates approach constant velocity.
    CHECK((coordinated_turn_matrix(1e-9, T) - expected).norm() < 1e-8);

    // A turn by omega T rotates the velocity.
    const double w = 3.0 * std::numbers::pi / 180.0;
    const Matrix F = coordinated_turn_matrix(w, T);
    const Vector x = vec({0, 10, 0, 0});
    const Vector x1 = F * x;
    CHECK(std::abs(x1(1) - 10 * std::cos(w * T)) < 1e-12);
    CHECK(std::abs(x1(3) - 10 * std::sin(w * T)) < 1e-12);
    CHECK(std::abs(std::hypot(x1(1), x1(3)) - 10.0) < 1e-12);
    // Opposite rates are inverse rotations of the velocity.
    const Matrix back = coordinated_turn_matrix(-w, T);
    const Vector v = (back * F * vec({0, 3, 0, 4}));
    CHECK(std::abs(v(1) - 3) < 1e-12);
    CHECK(std::abs(v(3) - 4) < 1e-12);

    const Matrix Q = white_acceleration_cov(T, 3.0);
    CHECK(std::abs(Q(0, 0) - 9.0 * 8.0 / 3.0) < 1e-12);
    CHECK(std::abs(Q(0, 1) - 9.0 * 2.0) < 1e-12);
    CHECK(std::abs(Q(1, 1) - 9.0 * 2.0) < 1e-12);
    CHECK(Q(0, 2) == 0.0);
    CHECK((Q - Q.transpose()).norm() == 0.0);
}

TEST_CASE("noiseless kinematics follow matrix powers") {
    const auto chain = ModeChain::symmetric(1, 1.0);
    const auto m = LinearJmssModel::coordinated_turn({0.05}, 2.0, 0.0, 10.0, chain,
                                                     GaussianBelief(vec({1, 2, 3, 4}), Matrix::Zero(4, 4)));
    RngStream rng(1);
    Vector x = vec({1, 2, 3, 4});
    const Matrix F = coordinated_turn_matrix(0.05, 2.0);
    Matrix Fk = Matrix::Identity(4, 4);
    for (int k = 1; k <= 20; ++k) {
        x = m.sample_transition(0, x, rng);
        Fk = F * Fk;
        CHECK((x - Fk * vec({1, 2, 3, 4})).norm() < 1e-9);
    }
}

TEST_CASE("single-mode JMSS reduces to its linear model") {
    const Matrix F = coordinated_turn_matrix(0.02, 2.0);
    const Matrix Q = white_acceleration_cov(2.0, 3.0);
    Matrix H = Matrix::Zero(2, 4);
    H(0, 0) = 1;
    H(1, 2) = 1;
    const Matrix R = 100.0 * Matrix::Identity(2, 2);
    const GaussianBelief prior(Vector::Zero(4), Matrix::Identity(4, 4));
    const LinearJmssModel jm(ModeChain::symmetric(1, 1.0), {LinearMode{F, Matrix::Identity(4, 4), H, Matrix::Identity(2, 2)}}, Q, R,
                             prior);
    const LinearGaussianModel lm(F, Q, H, R, prior);
    RngStream a(9);
    RngStream b(9);
    const Vector x_prev = vec({100, 5, -20, 3});
    for (int i = 0; i < 50; ++i) {
        CHECK((jm.sample_transition(0, x_prev, a) - lm.sample_transition(x_prev, b)).norm() < 1e-12);
        CHECK((jm.sample_observation(0, x_prev, a) - lm.sample_observation(x_prev, b)).norm() < 1e-12);
    }
    CHECK((jm.process_cov(0) - Q).norm() < 1e-12);
    CHECK((jm.obs_cov(0) - R).norm() < 1e-12);

    auto shared = std::make_shared<LinearGaussianModel>(F, Q, H, R, prior);
    const SemiLinearJmssModel sm(ModeChain::symmetric(1, 1.0), {shared});
    CHECK(&sm.mode(0) == shared.get());
    CHECK(sm.state_dim() == 4);
    CHECK_THROWS_AS(SemiLinearJmssModel(ModeChain::symmetric(2, 0.5), {shared}), std::invalid_argument);
}

} // TEST_SUITE
