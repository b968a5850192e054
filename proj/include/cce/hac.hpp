#pragma once

// Bartlett-kernel time sums used by the bias and variance estimators.

#include <cstdlib>

#include <Eigen/Dense>

#include "cce/error.hpp"

namespace cce {

/// k(lag / L) with k(x) = (1 - |x|) 1{|x| <= 1}; L = 0 keeps lag 0 only.
inline double bartlett_weight(int lag, int L) {
    if (L < 0) throw InvalidInput("bandwidth must be >= 0");
    if (L == 0) return lag == 0 ? 1.0 : 0.0;
    const double x = std::abs(static_cast<double>(lag)) / static_cast<double>(L);
    return x <= 1.0 ? 1.0 - x : 0.0;
}

/// Row t of the result is sum_s k((t - s) / L) v_s' for the T x m input v.
/// Only lags |t - s| < L carry weight, so the cost is O(T L m).
inline Eigen::MatrixXd bartlett_smooth(const Eigen::MatrixXd& v, int L) {
    if (L < 0) throw InvalidInput("bandwidth must be >= 0");
    Eigen::MatrixXd h = v;
    const auto T = v.rows();
    for (int lag = 1; lag < L && lag < T; ++lag) {
        const double w = bartlett_weight(lag, L);
        const auto n = T - lag;
        h.topRows(n) += w * v.bottomRows(n);
        h.bottomRows(n) += w * v.topRows(n);
    }
    return h;
}

/// sum_t sum_s k((t - s) / L) a_t b_s' for T x m inputs a and b.
inline Eigen::MatrixXd bartlett_cross(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int L) {
    return a.transpose() * bartlett_smooth(b, L);
}

} // namespace cce
