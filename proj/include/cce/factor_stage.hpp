#pragma once

// First estimation step: factors from the eigendecomposition of the second
// moment of the cross-sectional covariate averages, and the number of factors.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "cce/error.hpp"
#include "cce/panel.hpp"

namespace cce {

struct FactorEstimate {
    MatrixXd factors;        // T x r, row t is f_t' = (Psi' xbar_t)'
    MatrixXd eigenvectors;   // k x r (Psi)
    VectorXd eigenvalues;    // length k, non-increasing
    MatrixXd second_moment;  // k x k
    int r = 0;

    [[nodiscard]] std::size_t n_periods() const { return static_cast<std::size_t>(factors.rows()); }
    /// Upsilon = Psi', maps idiosyncratic covariate noise into factor estimation error.
    [[nodiscard]] MatrixXd upsilon() const { return eigenvectors.transpose(); }
};

/// T x k matrix whose row t is N^{-1} sum_i x_it'.
inline MatrixXd cross_sectional_means(const Panel& panel) {
    const auto& x = panel.covariates();
    MatrixXd xbar = MatrixXd::Zero(x.front().rows(), x.front().cols());
    for (const auto& xi : x) xbar += xi;
    xbar /= static_cast<double>(x.size());
    return xbar;
}

/// T^{-1} sum_t xbar_t xbar_t' (raw second moment, not demeaned).
inline MatrixXd second_moment_matrix(const MatrixXd& xbar) {
    if (xbar.rows() < 1) throw InvalidInput("second_moment_matrix: need T >= 1");
    MatrixXd s = xbar.transpose() * xbar / static_cast<double>(xbar.rows());
    return symmetrized(s);
}

namespace detail {

struct SortedEigen {
    VectorXd values;   // descending
    MatrixXd vectors;  // columns match values
};

inline SortedEigen sorted_eigen(const MatrixXd& sym) {
    if (sym.cwiseAbs().maxCoeff() == 0.0)
        throw InvalidInput("covariate averages are identically zero; factors are not identified");
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigendecomposition failed");
    const auto k = sym.rows();
    SortedEigen out{VectorXd(k), MatrixXd(k, k)};
    for (Eigen::Index j = 0; j < k; ++j) {
        out.values(j) = solver.eigenvalues()(k - 1 - j);
        Eigen::VectorXd v = solver.eigenvectors().col(k - 1 - j);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        out.vectors.col(j) = v;
    }
    return out;
}

} // namespace detail

/// Eigenvalues of the second moment of the covariate averages, descending.
inline VectorXd covariate_spectrum(const Panel& panel) {
    return detail::sorted_eigen(second_moment_matrix(cross_sectional_means(panel))).values;
}

inline FactorEstimate estimate_factors(const Panel& panel, int r) {
    const auto k = static_cast<int>(panel.n_covariates());
    if (r < 1 || r > k)
        throw InvalidInput("estimate_factors: need 1 <= r <= k, got r = " + std::to_string(r) +
                           ", k = " + std::to_string(k));
    FactorEstimate fe;
    const MatrixXd xbar = cross_sectional_means(panel);
    fe.second_moment = second_moment_matrix(xbar);
    auto eig = detail::sorted_eigen(fe.second_moment);
    fe.eigenvalues = std::move(eig.values);
    fe.eigenvectors = eig.vectors.leftCols(r);
    fe.factors = xbar * fe.eigenvectors;
    fe.r = r;
    return fe;
}

/// Factors treated as observed: no first-step estimation error, so the
/// loading of covariate noise on the factors (Upsilon) is zero.
inline FactorEstimate known_factors(const MatrixXd& factors, int n_covariates) {
    FactorEstimate fe;
    fe.factors = factors;
    fe.r = static_cast<int>(factors.cols());
    fe.eigenvectors = MatrixXd::Zero(n_covariates, fe.r);
    fe.eigenvalues = VectorXd::Zero(n_covariates);
    fe.second_moment = MatrixXd::Zero(n_covariates, n_covariates);
    return fe;
}

/// Default threshold min(N, T)^{-1/3}.
inline double default_rank_threshold(std::size_t n_units, std::size_t n_periods) {
    return std::pow(static_cast<double>(std::min(n_units, n_periods)), -1.0 / 3.0);
}

/// Number of eigenvalues at or above p_nt, floored at 1.
inline int threshold_rank(const VectorXd& eigenvalues, double p_nt) {
    if (!(p_nt > 0.0)) throw InvalidInput("rank threshold must be positive");
    const auto count = (eigenvalues.array() >= p_nt).count();
    return std::max(static_cast<int>(count), 1);
}

/// argmax_{1 <= j <= k-1} rho_j / rho_{j+1} (1-based); smallest j on ties.
inline int ratio_rank(const VectorXd& eigenvalues) {
    const auto k = eigenvalues.size();
    if (k < 2) throw InvalidInput("eigenvalue-ratio rank needs k >= 2");
    int best = 1;
    double best_ratio = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j + 1 < k; ++j) {
        const double denom = eigenvalues(j + 1);
        const double ratio = denom <= 1e-15 ? std::numeric_limits<double>::infinity() : eigenvalues(j) / denom;
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best = static_cast<int>(j) + 1;
        }
    }
    return best;
}

inline int estimate_rank_threshold(const Panel& panel, double p_nt) {
    return threshold_rank(covariate_spectrum(panel), p_nt);
}

inline int estimate_rank_ratio(const Panel& panel) {
    if (panel.n_covariates() < 2) throw InvalidInput("eigenvalue-ratio rank needs k >= 2");
    return ratio_rank(covariate_spectrum(panel));
}

} // namespace cce
