#include "seqcmc/models/moment.hpp"

#include <cmath>
#include <stdexcept>

namespace seqcmc::models {

MomentFunction::MomentFunction(std::string name, Index out_dim, PointFn point,
                               std::optional<GaussianFn> gaussian)
    : name_(std::move(name)), out_dim_(out_dim), point_(std::move(point)),
      gaussian_(std::move(gaussian)) {
    if (out_dim_ < 1) throw std::invalid_argument("moment output dimension must be positive");
}

Vector MomentFunction::expectation(const Vector& mean, const Matrix& cov) const {
    if (!gaussian_) throw std::logic_error("moment '" + name_ + "' has no Gaussian closed form");
    return (*gaussian_)(mean, cov);
}

MomentFunction MomentFunction::identity(Index dim) {
    return MomentFunction(
        "identity", dim, [](const Vector& x) { return x; },
        [](const Vector& m, const Matrix&) { return m; });
}

MomentFunction MomentFunction::coordinates(Index dim, std::vector<Index> indices) {
    for (Index i : indices) {
        if (i < 0 || i >= dim) throw std::invalid_argument("moment coordinate out of range");
    }
    auto pick = [indices](const Vector& x) {
        Vector out(static_cast<Index>(indices.size()));
        for (std::size_t k = 0; k < indices.size(); ++k) out(static_cast<Index>(k)) = x(indices[k]);
        return out;
    };
    return MomentFunction(
        "coordinates", static_cast<Index>(indices.size()), pick,
        [pick](const Vector& m, const Matrix&) { return pick(m); });
}

MomentFunction MomentFunction::constant(Vector value) {
    const Index dim = value.size();
    return MomentFunction(
        "constant", dim, [value](const Vector&) { return value; },
        [value](const Vector&, const Matrix&) { return value; });
}

MomentFunction MomentFunction::arch_variance(double beta0, double beta1) {
    return MomentFunction(
        "arch_variance", 1,
        [beta0, beta1](const Vector& x) {
            return Vector::Constant(1, beta0 + beta1 * x(0) * x(0));
        },
        [beta0, beta1](const Vector& m, const Matrix& P) {
            return Vector::Constant(1, beta0 + beta1 * (m(0) * m(0) + P(0, 0)));
        });
}

MomentFunction MomentFunction::sv_stddev(double beta) {
    return MomentFunction(
        "sv_stddev", 1,
        [beta](const Vector& x) { return Vector::Constant(1, beta * std::exp(0.5 * x(0))); },
        [beta](const Vector& m, const Matrix& P) {
            return Vector::Constant(1, beta * std::exp(0.5 * m(0) + 0.125 * P(0, 0)));
        });
}

} // namespace seqcmc::models
