#pragma once

// Plug-in estimates of the O(1/T) and O(1/N) biases of the CCE coefficient
// and APE estimators, and the analytically corrected estimators.
//
// Every quantity is evaluated once at the uncorrected fit (beta_hat, c_hat).
// Notation in comments: l^(j) = l^(j)_it at the fit, f = f_hat_t,
// u_it = Upsilon e_hat_it (r-vector), h_it = sum_s k((t-s)/L) l^(1)_is f_s.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cce/ape.hpp"
#include "cce/error.hpp"
#include "cce/factor_stage.hpp"
#include "cce/hac.hpp"
#include "cce/likelihood.hpp"
#include "cce/mle_stage.hpp"
#include "cce/panel.hpp"

namespace cce {

inline constexpr double kMaxConditionNumber = 1e10;

struct BetaBiasComponents {
    int L = 0;
    // Per-unit quantities, indexed by i.
    std::vector<MatrixXd> A;        // r x r, T^{-1} sum_t l^(2) f f'
    std::vector<MatrixXd> A_inv;    // r x r
    std::vector<MatrixXd> B;        // k x r, T^{-1} sum_t l^(2) x f'
    std::vector<MatrixXd> Q;        // r x r, kernel-weighted T^{-1} sum_t sum_s l^(1)_t l^(1)_s f_t f_s'
    std::vector<MatrixXd> Gamma;    // k x r, least-squares loadings of x on f
    std::vector<MatrixXd> xdot;     // T x k, row t = (x_it - B_i A_i^{-1} f_t)'
    std::vector<MatrixXd> e_hat;    // T x k, row t = (x_it - Gamma_i f_t)'
    std::vector<MatrixXd> factor_noise;  // T x r, row t = (Upsilon e_hat_it)'
    std::vector<MatrixXd> smoothed_score;  // T x r, row t = h_it'
    MatrixXd Delta;                 // k x k
    MatrixXd Upsilon;               // r x k
    // Per-period quantities, indexed by t (and covariate j).
    std::vector<MatrixXd> C;                  // k x r
    std::vector<std::vector<MatrixXd>> D;     // [t][j], r x r
    std::vector<std::vector<MatrixXd>> G;     // [t][j], r x r
    // Index derivatives at the fit, N x T.
    MatrixXd l1, l2, l3;
    std::vector<bool> separated;  // units with a loading at the box bound; excluded from the l-weighted sums
    VectorXd b1, b2, d1, d2;

    [[nodiscard]] VectorXd b() const { return b1 + b2; }
    [[nodiscard]] VectorXd d() const { return d1 + d2; }
    /// Delta^{-1} v
    [[nodiscard]] VectorXd delta_solve(const VectorXd& v) const { return Delta.partialPivLu().solve(v); }
};

struct ApeBiasComponents {
    VectorXd gamma;                  // k
    std::vector<VectorXd> gamma_i;   // N, r-vectors
    std::vector<VectorXd> gamma_t;   // T, r-vectors
    std::vector<MatrixXd> R;         // T, r x r
    std::vector<MatrixXd> W;         // T, r x r
    double b3 = 0.0, b4 = 0.0, d3 = 0.0, d4 = 0.0;
    MatrixXd delta_c;                // N x T
    MatrixXd delta_cc;               // N x T
    std::vector<MatrixXd> delta_beta;  // N, each T x k
};

namespace detail {

inline double condition_number(const MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    const VectorXd ev = es.eigenvalues().cwiseAbs();
    const double lo = ev.minCoeff();
    if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
    return ev.maxCoeff() / lo;
}

inline void check_conditioning(const MatrixXd& m, const std::string& name) {
    const double c = condition_number(symmetrized(m));
    if (!(c <= kMaxConditionNumber))
        throw NumericalError(name + " is singular or ill-conditioned (condition number " + std::to_string(c) + ")");
}

// l^(1..3) at z = beta'x + lambda'f for every cell, with location on domain errors.
inline void index_derivative_matrices(const Panel& panel, const MatrixXd& z, Family family, MatrixXd& l1,
                                      MatrixXd& l2, MatrixXd& l3) {
    l1.resize(z.rows(), z.cols());
    l2.resize(z.rows(), z.cols());
    l3.resize(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (Eigen::Index t = 0; t < z.cols(); ++t) {
            const double y = panel.outcomes()(i, t);
            if (!in_domain(family, y, z(i, t))) {
                try {
                    check_domain(family, y, z(i, t));
                } catch (const InvalidInput& e) {
                    throw InvalidInput(std::string(e.what()) + " at (i=" + std::to_string(i) + ", t=" +
                                       std::to_string(t) + ")");
                }
            }
            const auto d = evaluate(family, y, z(i, t), 3);
            l1(i, t) = d[1];
            l2(i, t) = d[2];
            l3(i, t) = d[3];
        }
    }
}

} // namespace detail

inline BetaBiasComponents compute_beta_bias(const Panel& panel, const CceFit& fit, const FactorEstimate& factors,
                                            Family family, int L) {
    if (L < 0) throw InvalidInput("bandwidth must be >= 0");
    const MatrixXd& F = factors.factors;
    const auto N = static_cast<Eigen::Index>(panel.n_units());
    const auto T = static_cast<Eigen::Index>(panel.n_periods());
    const auto k = static_cast<Eigen::Index>(panel.n_covariates());
    const auto r = F.cols();
    if (factors.eigenvectors.rows() != k || factors.eigenvectors.cols() != r)
        throw InvalidInput("compute_beta_bias: eigenvector matrix must be k x r");
    const auto Nu = static_cast<std::size_t>(N);
    const double nt = static_cast<double>(N * T);

    BetaBiasComponents out;
    out.L = L;
    out.Upsilon = factors.upsilon();
    const MatrixXd z = index_matrix(panel, F, fit.beta, fit.loadings);
    detail::index_derivative_matrices(panel, z, family, out.l1, out.l2, out.l3);
    // Separated units (loadings at the box, or no curvature left in any period) have
    // derivatives that vanish in the limit; they are set to 0.
    out.separated.assign(Nu, false);
    for (Eigen::Index i = 0; i < N; ++i) {
        if (!fit.at_bound(i) && out.l2.row(i).cwiseAbs().maxCoeff() >= kSeparationCurvature) continue;
        out.separated[static_cast<std::size_t>(i)] = true;
        out.l1.row(i).setZero();
        out.l2.row(i).setZero();
        out.l3.row(i).setZero();
    }

    for (auto* v : {&out.A, &out.A_inv, &out.B, &out.Q, &out.Gamma, &out.xdot, &out.e_hat,
                    &out.factor_noise, &out.smoothed_score})
        v->resize(Nu);
    out.Delta = MatrixXd::Zero(k, k);
    out.b1 = VectorXd::Zero(k);
    out.b2 = VectorXd::Zero(k);
    out.d1 = VectorXd::Zero(k);
    out.d2 = VectorXd::Zero(k);

    const MatrixXd FtF = F.transpose() * F;
    Eigen::LDLT<MatrixXd> ftf(FtF);
    detail::check_conditioning(FtF, "factor cross-product F'F");

    for (Eigen::Index i = 0; i < N; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        const MatrixXd& X = panel.unit_covariates(iu);
        const VectorXd l1 = out.l1.row(i).transpose();
        const VectorXd l2 = out.l2.row(i).transpose();
        const VectorXd l3 = out.l3.row(i).transpose();
        const VectorXd lam = fit.loadings.row(i).transpose();

        const MatrixXd l2F = l2.asDiagonal() * F;
        out.A[iu] = F.transpose() * l2F / static_cast<double>(T);
        out.A[iu] = symmetrized(out.A[iu]);
        if (out.separated[iu]) {
            out.A_inv[iu] = MatrixXd::Zero(r, r);
        } else {
            detail::check_conditioning(out.A[iu], "A_i for unit " + std::to_string(i));
            out.A_inv[iu] = out.A[iu].inverse();
        }
        out.B[iu] = X.transpose() * l2F / static_cast<double>(T);
        out.xdot[iu] = X - F * out.A_inv[iu] * out.B[iu].transpose();

        const MatrixXd l1F = l1.asDiagonal() * F;
        out.smoothed_score[iu] = bartlett_smooth(l1F, L);
        out.Q[iu] = l1F.transpose() * out.smoothed_score[iu] / static_cast<double>(T);
        out.Q[iu] = symmetrized(out.Q[iu]);

        out.Gamma[iu] = ftf.solve(F.transpose() * X).transpose();
        out.e_hat[iu] = X - F * out.Gamma[iu].transpose();
        out.factor_noise[iu] = out.e_hat[iu] * out.Upsilon.transpose();

        const MatrixXd& xd = out.xdot[iu];
        out.Delta.noalias() += xd.transpose() * l2.asDiagonal() * xd;

        const MatrixXd M = out.A_inv[iu] * out.Q[iu] * out.A_inv[iu];
        const MatrixXd FAinv = F * out.A_inv[iu];  // row t = (A^{-1} f_t)'
        VectorXd w1(T), w2(T), w3(T);
        for (Eigen::Index t = 0; t < T; ++t) {
            const VectorXd ft = F.row(t).transpose();
            w1(t) = l3(t) * ft.dot(M * ft);
            w2(t) = l2(t) * FAinv.row(t).dot(out.smoothed_score[iu].row(t));
            w3(t) = l2(t) * out.factor_noise[iu].row(t).dot(lam);
        }
        out.b1.noalias() += xd.transpose() * w1;
        out.b2.noalias() += xd.transpose() * w2;
        out.d1.noalias() -= xd.transpose() * w3;
    }
    out.Delta = symmetrized(out.Delta) / nt;
    out.b1 *= -0.5 / nt;
    out.b2 /= nt;
    out.d1 /= nt;
    detail::check_conditioning(out.Delta, "Delta");

    // Per-period reductions over units.
    out.C.assign(static_cast<std::size_t>(T), MatrixXd::Zero(k, r));
    out.D.assign(static_cast<std::size_t>(T), std::vector<MatrixXd>(static_cast<std::size_t>(k), MatrixXd::Zero(r, r)));
    out.G = out.D;
    std::vector<MatrixXd> BAinv(Nu);
    for (std::size_t i = 0; i < Nu; ++i) BAinv[i] = out.B[i] * out.A_inv[i];  // row j = B_ij A_i^{-1}
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto tu = static_cast<std::size_t>(t);
        for (Eigen::Index i = 0; i < N; ++i) {
            const auto iu = static_cast<std::size_t>(i);
            const VectorXd lam = fit.loadings.row(i).transpose();
            const VectorXd xd = out.xdot[iu].row(t).transpose();
            const double l2 = out.l2(i, t);
            const double l3 = out.l3(i, t);
            out.C[tu].noalias() += l2 * xd * lam.transpose();
            const MatrixXd lamlam = lam * lam.transpose();
            for (Eigen::Index j = 0; j < k; ++j) {
                const auto ju = static_cast<std::size_t>(j);
                out.D[tu][ju].noalias() += l2 * lam * BAinv[iu].row(j);
                out.G[tu][ju].noalias() += (l3 * xd(j)) * lamlam;
            }
        }
        out.C[tu] /= static_cast<double>(N);
        for (Eigen::Index j = 0; j < k; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            out.D[tu][ju] /= static_cast<double>(N);
            out.G[tu][ju] /= static_cast<double>(N);
            const MatrixXd Mtj = out.D[tu][ju] - 0.5 * out.G[tu][ju];
            double s = 0.0;
            for (Eigen::Index i = 0; i < N; ++i) {
                const VectorXd u = out.factor_noise[static_cast<std::size_t>(i)].row(t).transpose();
                s += u.dot(Mtj * u);
            }
            out.d2(j) += s;
        }
    }
    out.d2 /= nt;
    return out;
}

/// beta_hat - Delta^{-1} (b / T + d / N)
inline VectorXd correct_beta(const CceFit& fit, const BetaBiasComponents& bias, std::size_t n_units,
                             std::size_t n_periods) {
    detail::check_conditioning(bias.Delta, "Delta");
    const VectorXd v = bias.b() / static_cast<double>(n_periods) + bias.d() / static_cast<double>(n_units);
    return fit.beta - bias.delta_solve(v);
}

inline ApeBiasComponents compute_ape_bias(const Panel& panel, const CceFit& fit, const FactorEstimate& factors,
                                          Family family, const PolicyPair& policy,
                                          const BetaBiasComponents& beta_bias, int L) {
    if (L < 0) throw InvalidInput("bandwidth must be >= 0");
    const MatrixXd& F = factors.factors;
    const auto N = static_cast<Eigen::Index>(panel.n_units());
    const auto T = static_cast<Eigen::Index>(panel.n_periods());
    const auto k = static_cast<Eigen::Index>(panel.n_covariates());
    const auto r = F.cols();
    const double nt = static_cast<double>(N * T);
    detail::check_policy(policy, k);
    if (beta_bias.A.size() != static_cast<std::size_t>(N)) throw InvalidInput("compute_ape_bias: bias components do not match the panel");

    ApeBiasComponents out;
    const MatrixXd common = fit.common_component(F);
    out.delta_c.resize(N, T);
    out.delta_cc.resize(N, T);
    out.delta_beta.assign(static_cast<std::size_t>(N), MatrixXd(T, k));
    VectorXd mean_dbeta = VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index t = 0; t < T; ++t) {
            PartialEffectDerivs dd;
            try {
                dd = partial_effect_derivs(family, fit.beta, common(i, t), policy);
            } catch (const InvalidInput& e) {
                throw InvalidInput(std::string(e.what()) + " at (i=" + std::to_string(i) + ", t=" +
                                   std::to_string(t) + ")");
            }
            out.delta_c(i, t) = dd.d_c;
            out.delta_cc(i, t) = dd.d_cc;
            out.delta_beta[static_cast<std::size_t>(i)].row(t) = dd.d_beta.transpose();
            mean_dbeta += dd.d_beta;
        }
    }

    // gamma_i, A_i^{-1} gamma_i and a_it = gamma_i' A_i^{-1} f_t.
    out.gamma_i.resize(static_cast<std::size_t>(N));
    std::vector<VectorXd> Ainv_gamma(static_cast<std::size_t>(N));
    MatrixXd a(N, T);
    out.gamma = mean_dbeta / nt;
    for (Eigen::Index i = 0; i < N; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        out.gamma_i[iu] = F.transpose() * out.delta_c.row(i).transpose() / static_cast<double>(T);
        Ainv_gamma[iu] = beta_bias.A_inv[iu] * out.gamma_i[iu];
        a.row(i) = (F * Ainv_gamma[iu]).transpose();
        out.gamma -= beta_bias.B[iu] * Ainv_gamma[iu] / static_cast<double>(N);
    }

    out.gamma_t.assign(static_cast<std::size_t>(T), VectorXd::Zero(r));
    out.R.assign(static_cast<std::size_t>(T), MatrixXd::Zero(r, r));
    out.W.assign(static_cast<std::size_t>(T), MatrixXd::Zero(r, r));
    double b3 = 0.0, b4 = 0.0, d3 = 0.0, d4 = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        const VectorXd lam = fit.loadings.row(i).transpose();
        const MatrixXd lamlam = lam * lam.transpose();
        const MatrixXd M = beta_bias.A_inv[iu] * beta_bias.Q[iu] * beta_bias.A_inv[iu];
        const MatrixXd h = L == beta_bias.L ? beta_bias.smoothed_score[iu]
                                            : bartlett_smooth(beta_bias.l1.row(i).transpose().asDiagonal() * F, L);
        const MatrixXd FAinv = F * beta_bias.A_inv[iu];
        for (Eigen::Index t = 0; t < T; ++t) {
            const auto tu = static_cast<std::size_t>(t);
            const VectorXd ft = F.row(t).transpose();
            const double l2 = beta_bias.l2(i, t);
            const double l3 = beta_bias.l3(i, t);
            // 0.5 delta^cc: second-order Taylor term of delta in c.
            const double weight = 0.5 * out.delta_cc(i, t) - 0.5 * l3 * a(i, t);
            out.gamma_t[tu] += out.delta_c(i, t) * lam;
            out.R[tu].noalias() += l2 * lam * Ainv_gamma[iu].transpose();
            out.W[tu].noalias() += weight * lamlam;
            b3 += weight * ft.dot(M * ft);
            b4 += l2 * a(i, t) * FAinv.row(t).dot(h.row(t));
            d3 -= a(i, t) * l2 * lam.dot(beta_bias.factor_noise[iu].row(t).transpose());
        }
    }
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto tu = static_cast<std::size_t>(t);
        out.gamma_t[tu] /= static_cast<double>(N);
        out.R[tu] /= static_cast<double>(N);
        out.W[tu] /= static_cast<double>(N);
        const MatrixXd WR = out.W[tu] - out.R[tu];
        for (Eigen::Index i = 0; i < N; ++i) {
            const VectorXd u = beta_bias.factor_noise[static_cast<std::size_t>(i)].row(t).transpose();
            d4 += u.dot(WR * u);
        }
    }
    out.b3 = b3 / nt;
    out.b4 = b4 / nt;
    out.d3 = d3 / nt;
    out.d4 = d4 / nt;
    return out;
}

/// delta_hat - (gamma'Delta^{-1} b + b3 + b4) / T - (gamma'Delta^{-1} d + d3 + d4) / N
inline double correct_ape(const ApeEstimate& ape, const BetaBiasComponents& beta_bias,
                          const ApeBiasComponents& ape_bias, std::size_t n_units, std::size_t n_periods) {
    detail::check_conditioning(beta_bias.Delta, "Delta");
    const double bias_t = ape_bias.gamma.dot(beta_bias.delta_solve(beta_bias.b())) + ape_bias.b3 + ape_bias.b4;
    const double bias_n = ape_bias.gamma.dot(beta_bias.delta_solve(beta_bias.d())) + ape_bias.d3 + ape_bias.d4;
    return ape.value - bias_t / static_cast<double>(n_periods) - bias_n / static_cast<double>(n_units);
}

} // namespace cce
