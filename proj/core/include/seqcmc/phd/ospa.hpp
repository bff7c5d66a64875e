#pragma once

#include "seqcmc/core/types.hpp"

#include <vector>

namespace seqcmc::phd {

/// Minimum-cost assignment of rows to columns for a rows <= cols cost matrix.
/// Returns the column assigned to each row.
[[nodiscard]] std::vector<Index> hungarian_assignment(const Matrix& cost);

/// OSPA distance of order p with cutoff c between two finite point sets.
/// Zero when both sets are empty; c when exactly one is.
[[nodiscard]] double ospa(const std::vector<Vector>& X, const std::vector<Vector>& Y, double c, double p);

} // namespace seqcmc::phd
