#pragma once

#include <Eigen/Dense>

#include <vector>

namespace pmsm {

/// Relative singular-value threshold used for numeric rank decisions.
inline constexpr double kRankRelativeTolerance = 1e-9;
/// Absolute floor applied when the largest singular value is zero.
inline constexpr double kRankAbsoluteFloor = 1e-12;

/// Singular values in non-increasing order.
std::vector<double> singular_values(const Eigen::MatrixXd& m);

/// Number of singular values above eps * sigma_max (or the absolute floor when
/// sigma_max is zero).
int numeric_rank(const std::vector<double>& sorted_singular_values,
                 double relative_tolerance = kRankRelativeTolerance);

int numeric_rank(const Eigen::MatrixXd& m, double relative_tolerance = kRankRelativeTolerance);

}  // namespace pmsm
