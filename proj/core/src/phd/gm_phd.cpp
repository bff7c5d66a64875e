#include "seqcmc/phd/gm_phd.hpp"

#include "seqcmc/core/kalman.hpp"
#include "seqcmc/core/weights.hpp"
#include "seqcmc/models/semi_linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace seqcmc::phd {

GmPhdResult gm_phd_step(const GaussianMixture& prior, const PhdModelParams& params, const MeasurementSet& Z,
                        const GmPhdConfig& config) {
    params.validate();
    if (params.survival) throw std::invalid_argument("GM-PHD needs a constant survival probability");
    const auto* linear = dynamic_cast<const models::LinearGaussianModel*>(params.target.get());
    if (linear == nullptr) throw std::invalid_argument("GM-PHD needs a linear Gaussian target model");
    const Matrix& F = linear->transition_matrix();
    const Matrix& Q = linear->transition_cov();
    const Matrix& H = linear->obs_matrix();
    const Matrix& R = linear->obs_cov();
    const Matrix G = Matrix::Identity(F.rows(), F.rows());

    // Prediction.
    std::vector<GaussianComponent> predicted;
    predicted.reserve(prior.components.size() + params.birth.components.size());
    for (const auto& c : prior.components) {
        predicted.push_back({params.p_s * c.weight, kalman_predict(c.belief, F, G, Q)});
    }
    for (const auto& c : params.birth.components) predicted.push_back(c);

    // Update.
    GmPhdResult out;
    auto& comps = out.mixture.components;
    for (const auto& c : predicted) comps.push_back({(1.0 - params.p_d) * c.weight, c.belief});
    const double log_pd = params.p_d > 0.0 ? std::log(params.p_d) : -std::numeric_limits<double>::infinity();
    std::vector<KalmanUpdate> updates;
    std::vector<double> terms(predicted.size() + 1);
    for (const auto& z : Z) {
        updates.clear();
        const double kappa = params.clutter.intensity(z);
        terms[0] = kappa > 0.0 ? std::log(kappa) : -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < predicted.size(); ++j) {
            updates.push_back(kalman_update(predicted[j].belief, H, R, z));
            const double w = predicted[j].weight;
            terms[j + 1] = w > 0.0 ? log_pd + std::log(w) + updates.back().predictive_loglik
                                   : -std::numeric_limits<double>::infinity();
        }
        const double log_c = log_sum_exp(terms);
        if (!std::isfinite(log_c)) continue;
        for (std::size_t j = 0; j < predicted.size(); ++j) {
            comps.push_back({std::exp(terms[j + 1] - log_c), updates[j].posterior});
        }
    }
    out.count = out.mixture.total();
    out.mixture = prune_and_merge(out.mixture, config);
    return out;
}

GaussianMixture prune_and_merge(const GaussianMixture& mixture, const GmPhdConfig& config) {
    std::vector<GaussianComponent> pool;
    for (const auto& c : mixture.components) {
        if (c.weight > config.prune_threshold) pool.push_back(c);
    }
    GaussianMixture out;
    if (config.merge_threshold < 0.0) {
        out.components = std::move(pool);
    } else {
        std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.weight > b.weight; });
        std::vector<bool> taken(pool.size(), false);
        for (std::size_t j = 0; j < pool.size(); ++j) {
            if (taken[j]) continue;
            const auto& head = pool[j];
            const Eigen::LLT<Matrix> llt(head.belief.cov);
            if (llt.info() != Eigen::Success) throw DegenerateCovariance();
            std::vector<std::size_t> group;
            for (std::size_t i = j; i < pool.size(); ++i) {
                if (taken[i]) continue;
                const Vector d = pool[i].belief.mean - head.belief.mean;
                if (llt.matrixL().solve(d).squaredNorm() <= config.merge_threshold) group.push_back(i);
            }
            double w = 0.0;
            Vector mean = Vector::Zero(head.belief.dim());
            for (auto i : group) {
                taken[i] = true;
                w += pool[i].weight;
                mean += pool[i].weight * pool[i].belief.mean;
            }
            mean /= w;
            Matrix cov = Matrix::Zero(head.belief.dim(), head.belief.dim());
            for (auto i : group) {
                const Vector d = pool[i].belief.mean - mean;
                cov += pool[i].weight * (pool[i].belief.cov + d * d.transpose());
            }
            cov /= w;
            condition_covariance(cov);
            out.components.push_back({w, GaussianBelief(std::move(mean), std::move(cov))});
        }
    }
    if (static_cast<Index>(out.components.size()) > config.max_components) {
        std::sort(out.components.begin(), out.components.end(),
                  [](const auto& a, const auto& b) { return a.weight > b.weight; });
        out.components.resize(static_cast<std::size_t>(config.max_components));
    }
    return out;
}

std::vector<Vector> gm_extract(const GaussianMixture& mixture, double threshold) {
    std::vector<Vector> out;
    for (const auto& c : mixture.components) {
        if (c.weight <= threshold) continue;
        const auto copies = std::max<long long>(1, std::llround(c.weight));
        for (long long k = 0; k < copies; ++k) out.push_back(c.belief.mean);
    }
    return out;
}

} // namespace seqcmc::phd
