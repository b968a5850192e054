#pragma once

// HAC sandwich variances for the coefficient and APE estimators, and normal
// confidence intervals.

#include <cmath>
#include <optional>
#include <utility>

#include <boost/math/distributions/normal.hpp>
#include <Eigen/Dense>

#include "cce/bias_correction.hpp"
#include "cce/error.hpp"
#include "cce/hac.hpp"

namespace cce {

struct Interval {
    double lower = 0.0;
    double upper = 0.0;

    [[nodiscard]] bool contains(double v) const { return lower <= v && v <= upper; }
};

struct InferenceResult {
    MatrixXd omega;       // k x k
    MatrixXd covariance;  // Delta^{-1} Omega Delta^{-1} / (N T)
    VectorXd std_errors;
    VectorXd ci_lower;
    VectorXd ci_upper;
    std::optional<double> ape_variance;  // sigma^2 / (N T)
    int L = 0;
    double level = 0.95;
};

/// z_{(1 + level) / 2}
inline double normal_quantile_two_sided(double level) {
    if (!(level > 0.0 && level < 1.0)) throw InvalidInput("confidence level must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 * (1.0 + level));
}

inline Interval confidence_interval(double point, double std_error, double level) {
    const double z = normal_quantile_two_sided(level);
    return {point - z * std_error, point + z * std_error};
}

inline std::pair<VectorXd, VectorXd> confidence_intervals(const VectorXd& point, const VectorXd& std_errors,
                                                          double level) {
    if (point.size() != std_errors.size()) throw InvalidInput("confidence_intervals: size mismatch");
    const double z = normal_quantile_two_sided(level);
    return {point - z * std_errors, point + z * std_errors};
}

/// w_it = l^(1) xdot_it + C_t Upsilon e_hat_it, as a T x k block for unit i.
inline MatrixXd influence_terms(const BetaBiasComponents& bias, std::size_t i) {
    const auto T = bias.xdot[i].rows();
    MatrixXd w = bias.l1.row(static_cast<Eigen::Index>(i)).transpose().asDiagonal() * bias.xdot[i];
    for (Eigen::Index t = 0; t < T; ++t)
        w.row(t) += (bias.C[static_cast<std::size_t>(t)] * bias.factor_noise[i].row(t).transpose()).transpose();
    return w;
}

/// (NT)^{-1} sum_i sum_t sum_s w_it w_is' k((t - s) / L), symmetrized.
inline MatrixXd long_run_omega(const BetaBiasComponents& bias, int L) {
    const auto N = bias.xdot.size();
    const auto T = bias.xdot.front().rows();
    const auto k = bias.xdot.front().cols();
    MatrixXd omega = MatrixXd::Zero(k, k);
    for (std::size_t i = 0; i < N; ++i) {
        const MatrixXd w = influence_terms(bias, i);
        omega.noalias() += bartlett_cross(w, w, L);
    }
    omega /= static_cast<double>(N) * static_cast<double>(T);
    return symmetrized(omega);
}

/// Sandwich covariance of beta_hat; intervals are centered on `point` (beta_hat when absent).
inline InferenceResult beta_covariance(const CceFit& fit, const BetaBiasComponents& bias, int L,
                                       double level = 0.95, const std::optional<VectorXd>& point = std::nullopt) {
    if (L < 0) throw InvalidInput("bandwidth must be >= 0");
    detail::check_conditioning(bias.Delta, "Delta");
    const double nt = static_cast<double>(bias.xdot.size()) * static_cast<double>(bias.xdot.front().rows());
    InferenceResult out;
    out.L = L;
    out.level = level;
    out.omega = long_run_omega(bias, L);
    const MatrixXd Dinv = bias.Delta.inverse();
    out.covariance = Dinv * out.omega * Dinv / nt;
    out.covariance = symmetrized(out.covariance);
    out.std_errors = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    auto [lo, hi] = confidence_intervals(point.value_or(fit.beta), out.std_errors, level);
    out.ci_lower = std::move(lo);
    out.ci_upper = std::move(hi);
    return out;
}

/// Overload matching the full pipeline signature; panel, factors and family are
/// already folded into the bias components.
inline InferenceResult beta_covariance(const Panel& panel, const CceFit& fit, const FactorEstimate& factors,
                                       Family family, const BetaBiasComponents& bias, int L, double level = 0.95,
                                       const std::optional<VectorXd>& point = std::nullopt) {
    (void)family;
    if (bias.xdot.size() != panel.n_units() || factors.factors.rows() != bias.xdot.front().rows())
        throw InvalidInput("beta_covariance: bias components do not match the panel");
    return beta_covariance(fit, bias, L, level, point);
}

/// v_it = gamma'Delta^{-1} w_it + (R_t f_t - gamma_t)'Upsilon e_hat_it + l^(1) gamma_i'A_i^{-1} f_t, T x 1 for unit i.
inline VectorXd ape_influence_terms(const FactorEstimate& factors, const BetaBiasComponents& bias,
                                    const ApeBiasComponents& ape_bias, std::size_t i) {
    const MatrixXd& F = factors.factors;
    const auto T = F.rows();
    const VectorXd Dg = bias.Delta.partialPivLu().solve(ape_bias.gamma);  // Delta symmetric
    const MatrixXd w = influence_terms(bias, i);
    VectorXd v = w * Dg;
    const VectorXd Ainv_gamma = bias.A_inv[i] * ape_bias.gamma_i[i];
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto tu = static_cast<std::size_t>(t);
        const VectorXd ft = F.row(t).transpose();
        const VectorXd m = ape_bias.R[tu] * ft - ape_bias.gamma_t[tu];
        v(t) += m.dot(bias.factor_noise[i].row(t).transpose()) +
                bias.l1(static_cast<Eigen::Index>(i), t) * Ainv_gamma.dot(ft);
    }
    return v;
}

/// sigma^2 = (NT)^{-1} sum_i sum_t sum_s v_it v_is k((t - s) / L). The APE standard error is sqrt(sigma^2 / (NT)).
inline double ape_variance(const Panel& panel, const CceFit& fit, const FactorEstimate& factors, Family family,
                           const BetaBiasComponents& bias, const ApeBiasComponents& ape_bias, int L) {
    (void)fit;
    (void)family;
    if (L < 0) throw InvalidInput("bandwidth must be >= 0");
    detail::check_conditioning(bias.Delta, "Delta");
    const auto N = panel.n_units();
    const auto T = panel.n_periods();
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const VectorXd v = ape_influence_terms(factors, bias, ape_bias, i);
        s += bartlett_cross(v, v, L)(0, 0);
    }
    return std::max(s / (static_cast<double>(N) * static_cast<double>(T)), 0.0);
}

inline double ape_standard_error(double sigma2, std::size_t n_units, std::size_t n_periods) {
    return std::sqrt(sigma2 / (static_cast<double>(n_units) * static_cast<double>(n_periods)));
}

} // namespace cce
