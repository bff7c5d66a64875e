#include "seqcmc/phd/ospa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace seqcmc::phd {

std::vector<Index> hungarian_assignment(const Matrix& cost) {
    const Index n = cost.rows();
    const Index m = cost.cols();
    if (n > m) throw std::invalid_argument("hungarian_assignment: more rows than columns");
    if (!cost.allFinite()) throw std::invalid_argument("hungarian_assignment: non-finite cost");
    constexpr double inf = std::numeric_limits<double>::infinity();
    // Potentials method, 1-based with a virtual column 0.
    std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<double> v(static_cast<std::size_t>(m + 1), 0.0);
    std::vector<Index> match(static_cast<std::size_t>(m + 1), 0);  // row matched to column
    std::vector<Index> way(static_cast<std::size_t>(m + 1), 0);
    for (Index i = 1; i <= n; ++i) {
        match[0] = i;
        Index j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(m + 1), inf);
        std::vector<bool> used(static_cast<std::size_t>(m + 1), false);
        do {
            used[static_cast<std::size_t>(j0)] = true;
            const Index i0 = match[static_cast<std::size_t>(j0)];
            double delta = inf;
            Index j1 = 0;
            for (Index j = 1; j <= m; ++j) {
                const auto js = static_cast<std::size_t>(j);
                if (used[js]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[js];
                if (cur < minv[js]) {
                    minv[js] = cur;
                    way[js] = j0;
                }
                if (minv[js] < delta) {
                    delta = minv[js];
                    j1 = j;
                }
            }
            for (Index j = 0; j <= m; ++j) {
                const auto js = static_cast<std::size_t>(j);
                if (used[js]) {
                    u[static_cast<std::size_t>(match[js])] += delta;
                    v[js] -= delta;
                } else {
                    minv[js] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        do {
            const Index j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<Index> out(static_cast<std::size_t>(n), -1);
    for (Index j = 1; j <= m; ++j) {
        const Index i = match[static_cast<std::size_t>(j)];
        if (i > 0) out[static_cast<std::size_t>(i - 1)] = j - 1;
    }
    return out;
}

double ospa(const std::vector<Vector>& X, const std::vector<Vector>& Y, double c, double p) {
    if (!(c > 0.0) || !(p >= 1.0)) throw std::invalid_argument("ospa: need c > 0 and p >= 1");
    if (X.empty() && Y.empty()) return 0.0;
    if (X.empty() || Y.empty()) return c;
    const auto& small = X.size() <= Y.size() ? X : Y;
    const auto& large = X.size() <= Y.size() ? Y : X;
    const auto m = static_cast<Index>(small.size());
    const auto n = static_cast<Index>(large.size());
    Matrix cost(m, n);
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < n; ++j) {
            const double d = std::min(c, (small[static_cast<std::size_t>(i)] - large[static_cast<std::size_t>(j)]).norm());
            cost(i, j) = std::pow(d, p);
        }
    }
    const auto assign = hungarian_assignment(cost);
    double total = 0.0;
    for (Index i = 0; i < m; ++i) total += cost(i, assign[static_cast<std::size_t>(i)]);
    total += std::pow(c, p) * static_cast<double>(n - m);
    return std::pow(total / static_cast<double>(n), 1.0 / p);
}

} // namespace seqcmc::phd
