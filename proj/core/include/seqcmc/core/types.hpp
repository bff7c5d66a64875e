#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace seqcmc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Every normalized weight vanished (all log weights are -inf), i.e. total
/// particle depletion.
class DegenerateWeights : public std::runtime_error {
public:
    explicit DegenerateWeights(const std::string& what = "degenerate weights")
        : std::runtime_error(what) {}
};

/// A covariance that must be positive definite (innovation or predictive
/// covariance) could not be factorized.
class DegenerateCovariance : public std::runtime_error {
public:
    explicit DegenerateCovariance(const std::string& what = "degenerate innovation covariance")
        : std::runtime_error(what) {}
};

class DimensionMismatch : public std::invalid_argument {
public:
    explicit DimensionMismatch(const std::string& what) : std::invalid_argument(what) {}
};

} // namespace seqcmc
