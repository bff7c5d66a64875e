#include "seqcmc/models/state_space.hpp"

namespace seqcmc::models {

void StateSpaceModel::sample_prior_batch(Matrix& out, Index n, RngStream& rng) const {
    out.resize(state_dim(), n);
    for (Index i = 0; i < n; ++i) out.col(i) = sample_prior(rng);
}

void StateSpaceModel::sample_transition_batch(const Matrix& x_prev, Matrix& out,
                                              RngStream& rng) const {
    out.resize(state_dim(), x_prev.cols());
    for (Index i = 0; i < x_prev.cols(); ++i) out.col(i) = sample_transition(x_prev.col(i), rng);
}

void StateSpaceModel::obs_logpdf_batch(const Vector& y, const Matrix& x,
                                       std::span<double> out) const {
    if (static_cast<Index>(out.size()) != x.cols()) {
        throw DimensionMismatch("obs_logpdf_batch: output size mismatch");
    }
    for (Index i = 0; i < x.cols(); ++i) out[static_cast<std::size_t>(i)] = obs_logpdf(y, x.col(i));
}

} // namespace seqcmc::models
