#include "pmsm/linalg.hpp"

#include <Eigen/SVD>

namespace pmsm {

std::vector<double> singular_values(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return {};
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();  // already sorted, non-increasing
    return {s.data(), s.data() + s.size()};
}

int numeric_rank(const std::vector<double>& sv, double relative_tolerance) {
    if (sv.empty()) return 0;
    const double sigma_max = sv.front();
    const double threshold = sigma_max > 0.0 ? relative_tolerance * sigma_max : kRankAbsoluteFloor;
    int rank = 0;
    for (double s : sv)
        if (s > threshold) ++rank;
    return rank;
}

int numeric_rank(const Eigen::MatrixXd& m, double relative_tolerance) {
    return numeric_rank(singular_values(m), relative_tolerance);
}

}  // namespace pmsm
