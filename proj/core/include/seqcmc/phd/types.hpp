#pragma once

#include "seqcmc/core/gaussian.hpp"
#include "seqcmc/core/rng.hpp"
#include "seqcmc/models/semi_linear.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace seqcmc::phd {

using MeasurementSet = std::vector<Vector>;

/// Weighted particles whose total weight is the expected number of targets.
struct PhdParticleSet {
    Matrix particles;  // p x L
    std::vector<double> weights;

    [[nodiscard]] Index size() const { return particles.cols(); }
    [[nodiscard]] double total() const;
    void validate() const;
};

struct GaussianComponent {
    double weight = 0.0;
    GaussianBelief belief;
};

/// Intensity given by a weighted sum of Gaussians.
struct GaussianMixture {
    std::vector<GaussianComponent> components;

    [[nodiscard]] double total() const;
    [[nodiscard]] double intensity(const Vector& x) const;
    /// Single Gaussian with the mixture's normalized mean and covariance.
    [[nodiscard]] GaussianBelief moment_match() const;
    /// A draw from the normalized mixture.
    [[nodiscard]] Vector sample(RngStream& rng) const;
};

/// Poisson clutter, uniform over an axis-aligned box of measurement space.
struct ClutterModel {
    double rate = 0.0;
    Vector lower;
    Vector upper;

    [[nodiscard]] double volume() const;
    /// kappa(z) = rate / volume. The intensity is taken constant over the
    /// whole measurement space so that it stays positive for targets that
    /// leave the box.
    [[nodiscard]] double intensity(const Vector& z) const;
    [[nodiscard]] MeasurementSet sample(RngStream& rng) const;
};

struct PhdModelParams {
    double p_d = 1.0;
    double p_s = 1.0;
    /// Optional state-dependent survival; overrides p_s when set.
    std::function<double(const Vector&)> survival;
    ClutterModel clutter;
    GaussianMixture birth;
    std::shared_ptr<const models::SemiLinearGaussianModel> target;

    [[nodiscard]] double survival_prob(const Vector& x_prev) const {
        return survival ? survival(x_prev) : p_s;
    }
    /// Throws std::invalid_argument when parameters are out of range.
    void validate() const;
};

} // namespace seqcmc::phd
