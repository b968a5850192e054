#pragma once

// Second estimation step: given estimated factors, maximize the average
// log-likelihood jointly over the common coefficients and the unit loadings.
//
// The Hessian in (beta, lambda_1..lambda_N) is block-arrowhead: the loading
// blocks are r x r and decoupled across units. Newton steps are solved through
// the k x k Schur complement, so one iteration costs O(N T (k + r)^2).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cce/error.hpp"
#include "cce/factor_stage.hpp"
#include "cce/likelihood.hpp"
#include "cce/panel.hpp"

namespace cce {

/// Units whose |l^(2)| stays below this at every period have a numerically flat likelihood (separation).
inline constexpr double kSeparationCurvature = 1e-10;

struct FitOptions {
    double grad_tolerance = 1e-8;
    int max_iterations = 200;
    double loading_bound = 1e3;   // box bound on every loading entry
    int step_halving_max = 50;
};

struct CceFit {
    VectorXd beta;        // k
    MatrixXd loadings;    // N x r
    MatrixXd index;       // N x T, z_it = beta'x_it + lambda_i'f_t
    double loglik = 0.0;  // average over the N T cells
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    int bound_hits = 0;               // units with a loading at the box bound
    double loading_bound = 1e3;
    std::vector<double> loglik_trace;  // objective after each accepted step (first entry: start)

    /// Unit i has a loading at the box bound (a separated unit).
    [[nodiscard]] bool at_bound(Eigen::Index i) const {
        return (loadings.row(i).cwiseAbs().array() >= loading_bound).any();
    }

    /// c_it = lambda_i'f_t
    [[nodiscard]] MatrixXd common_component(const MatrixXd& factors) const {
        return loadings * factors.transpose();
    }
};

struct LoadingUpdate {
    VectorXd lambda;
    bool converged = false;
    bool hit_bound = false;
    int iterations = 0;
};

struct ObjectiveGradient {
    VectorXd beta;      // d objective / d beta
    MatrixXd loadings;  // N x r, row i = d objective / d lambda_i
};

namespace detail {

inline void check_fit_shapes(const Panel& panel, const MatrixXd& factors, const VectorXd& beta,
                             const MatrixXd& loadings) {
    if (static_cast<std::size_t>(factors.rows()) != panel.n_periods())
        throw InvalidInput("factor matrix has " + std::to_string(factors.rows()) + " rows, panel has T = " +
                           std::to_string(panel.n_periods()));
    if (static_cast<std::size_t>(beta.size()) != panel.n_covariates())
        throw InvalidInput("beta has length " + std::to_string(beta.size()) + ", panel has k = " +
                           std::to_string(panel.n_covariates()));
    if (static_cast<std::size_t>(loadings.rows()) != panel.n_units() || loadings.cols() != factors.cols())
        throw InvalidInput("loadings must be N x r");
}

// Sum over t of l_it at index z; nullopt when any cell leaves the domain.
inline std::optional<double> unit_loglik(Family family, const Eigen::Ref<const VectorXd>& y,
                                         const VectorXd& z) {
    double s = 0.0;
    for (Eigen::Index t = 0; t < z.size(); ++t) {
        if (!in_domain(family, y(t), z(t))) return std::nullopt;
        s += evaluate(family, y(t), z(t), 0).value;
    }
    return s;
}

inline std::optional<double> try_objective(const Panel& panel, const MatrixXd& F, Family family,
                                           const VectorXd& beta, const MatrixXd& loadings) {
    double s = 0.0;
    for (std::size_t i = 0; i < panel.n_units(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        VectorXd z = panel.unit_covariates(i) * beta + F * loadings.row(ii).transpose();
        auto li = unit_loglik(family, panel.outcomes().row(ii).transpose(), z);
        if (!li) return std::nullopt;
        s += *li;
    }
    return s / static_cast<double>(panel.n_units() * panel.n_periods());
}

inline double noise_floor(double value) { return 1e-13 * (1.0 + std::abs(value)); }

inline MatrixXd clip(MatrixXd m, double bound) { return m.cwiseMax(-bound).cwiseMin(bound); }

// The score of a separated unit underflows long before its loading reaches the box. When the unit's
// likelihood is flat, scale the loading out along its own ray to the bound if that does not lower the fit.
inline bool saturate_loading(Family family, const Eigen::Ref<const VectorXd>& y, const VectorXd& offset,
                             const MatrixXd& F, VectorXd& lambda, double bound) {
    const double size = lambda.cwiseAbs().maxCoeff();
    if (!(size > 0.0) || size >= bound) return false;
    const VectorXd z = offset + F * lambda;
    for (Eigen::Index t = 0; t < z.size(); ++t)
        if (std::abs(evaluate(family, y(t), z(t), 2)[2]) >= kSeparationCurvature) return false;
    const auto before = unit_loglik(family, y, z);
    VectorXd trial = clip(lambda * (bound / size), bound);
    const auto after = unit_loglik(family, y, offset + F * trial);
    if (!before || !after || *after < *before - noise_floor(*before)) return false;
    lambda = std::move(trial);
    return true;
}

// Solve P x = b for symmetric PSD P, adding a ridge if P is (numerically) singular.
inline VectorXd psd_solve(const MatrixXd& P, const VectorXd& b) {
    Eigen::LLT<MatrixXd> llt(P);
    double ridge = 1e-12 * std::max(1.0, P.diagonal().cwiseAbs().maxCoeff());
    MatrixXd Pr = P;
    while (llt.info() != Eigen::Success || !llt.solve(b).allFinite()) {
        Pr = P + ridge * MatrixXd::Identity(P.rows(), P.cols());
        llt.compute(Pr);
        ridge *= 100.0;
        if (ridge > 1e12) throw NumericalError("Newton system is not positive semidefinite");
    }
    return llt.solve(b);
}

inline MatrixXd psd_solve(const MatrixXd& P, const MatrixXd& B) {
    MatrixXd out(B.rows(), B.cols());
    Eigen::LLT<MatrixXd> llt(P);
    if (llt.info() == Eigen::Success) {
        out = llt.solve(B);
        if (out.allFinite()) return out;
    }
    for (Eigen::Index j = 0; j < B.cols(); ++j) out.col(j) = psd_solve(P, VectorXd(B.col(j)));
    return out;
}

// Projected sup-norm: a coordinate at the bound whose gradient points outward is stationary.
inline double projected_sup(const VectorXd& g, const VectorXd& x, double bound) {
    double m = 0.0;
    for (Eigen::Index j = 0; j < g.size(); ++j) {
        if (x(j) >= bound && g(j) > 0.0) continue;
        if (x(j) <= -bound && g(j) < 0.0) continue;
        m = std::max(m, std::abs(g(j)));
    }
    return m;
}

// Coordinates held at the box: at the bound with the gradient pointing outward.
inline std::vector<Eigen::Index> active_bounds(const VectorXd& g, const VectorXd& x, double bound) {
    std::vector<Eigen::Index> out;
    for (Eigen::Index j = 0; j < g.size(); ++j)
        if ((x(j) >= bound && g(j) >= 0.0) || (x(j) <= -bound && g(j) <= 0.0)) out.push_back(j);
    return out;
}

// Removes the active coordinates from a Newton system so their step is zero.
inline void freeze(const std::vector<Eigen::Index>& active, MatrixXd& P, VectorXd& g) {
    for (auto j : active) {
        P.row(j).setZero();
        P.col(j).setZero();
        P(j, j) = 1.0;
        g(j) = 0.0;
    }
}

} // namespace detail

inline MatrixXd index_matrix(const Panel& panel, const MatrixXd& factors, const VectorXd& beta,
                             const MatrixXd& loadings) {
    detail::check_fit_shapes(panel, factors, beta, loadings);
    MatrixXd z(panel.n_units(), panel.n_periods());
    for (std::size_t i = 0; i < panel.n_units(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        z.row(ii) = (panel.unit_covariates(i) * beta + factors * loadings.row(ii).transpose()).transpose();
    }
    return z;
}

/// (NT)^{-1} sum_i sum_t l_it(beta, lambda_i'f_t).
inline double objective(const Panel& panel, const FactorEstimate& factors, Family family, const VectorXd& beta,
                        const MatrixXd& loadings) {
    const MatrixXd z = index_matrix(panel, factors.factors, beta, loadings);
    double s = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (Eigen::Index t = 0; t < z.cols(); ++t) {
            const double y = panel.outcomes()(i, t);
            if (!detail::in_domain(family, y, z(i, t))) {
                try {
                    detail::check_domain(family, y, z(i, t));
                } catch (const InvalidInput& e) {
                    throw InvalidInput(std::string(e.what()) + " at (i=" + std::to_string(i) +
                                       ", t=" + std::to_string(t) + ")");
                }
            }
            s += detail::evaluate(family, y, z(i, t), 0).value;
        }
    }
    return s / static_cast<double>(z.size());
}

inline ObjectiveGradient objective_gradient(const Panel& panel, const FactorEstimate& factors, Family family,
                                            const VectorXd& beta, const MatrixXd& loadings) {
    const MatrixXd z = index_matrix(panel, factors.factors, beta, loadings);
    const double nt = static_cast<double>(z.size());
    ObjectiveGradient g{VectorXd::Zero(beta.size()), MatrixXd::Zero(loadings.rows(), loadings.cols())};
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        VectorXd l1(z.cols());
        for (Eigen::Index t = 0; t < z.cols(); ++t)
            l1(t) = index_derivative(family, panel.outcomes()(i, t), z(i, t), 1);
        g.beta += panel.unit_covariates(static_cast<std::size_t>(i)).transpose() * l1 / nt;
        g.loadings.row(i) = (factors.factors.transpose() * l1 / nt).transpose();
    }
    return g;
}

/// Sup-norm of the first-order conditions: (NT)^{-1} sum x l1 and, per unit, T^{-1} sum_t f_t l1.
inline double score_sup_norm(const Panel& panel, const FactorEstimate& factors, Family family, const VectorXd& beta,
                             const MatrixXd& loadings) {
    const auto g = objective_gradient(panel, factors, family, beta, loadings);
    const double n = static_cast<double>(panel.n_units());
    return std::max(g.beta.cwiseAbs().maxCoeff(), n * g.loadings.cwiseAbs().maxCoeff());
}

/// Newton ascent on one unit's loadings with beta held fixed.
inline LoadingUpdate update_loadings(const VectorXd& unit_outcomes, const MatrixXd& unit_covariates,
                                     const FactorEstimate& factors, Family family, const VectorXd& beta,
                                     const VectorXd& lambda_init, const FitOptions& opts = {}) {
    const MatrixXd& F = factors.factors;
    const auto T = F.rows();
    if (unit_outcomes.size() != T || unit_covariates.rows() != T || unit_covariates.cols() != beta.size() ||
        lambda_init.size() != F.cols())
        throw InvalidInput("update_loadings: inconsistent dimensions");
    const double bound = opts.loading_bound;
    const VectorXd offset = unit_covariates * beta;

    LoadingUpdate out;
    out.lambda = detail::clip(lambda_init, bound);
    auto value_at = [&](const VectorXd& lam) { return detail::unit_loglik(family, unit_outcomes, offset + F * lam); };
    auto current = value_at(out.lambda);
    if (!current) throw InvalidInput(std::string(family_name(family)) + ": infeasible starting loadings");

    for (int it = 0; it <= opts.max_iterations; ++it) {
        const VectorXd z = offset + F * out.lambda;
        VectorXd l1(T), w(T);
        for (Eigen::Index t = 0; t < T; ++t) {
            const auto d = detail::evaluate(family, unit_outcomes(t), z(t), 2);
            l1(t) = d[1];
            w(t) = -d[2];
        }
        const VectorXd g = F.transpose() * l1;
        const double gnorm = detail::projected_sup(g / static_cast<double>(T), out.lambda, bound);
        out.hit_bound = (out.lambda.cwiseAbs().array() >= bound).any();
        if (gnorm <= opts.grad_tolerance) {
            if (detail::saturate_loading(family, unit_outcomes, offset, F, out.lambda, bound)) out.hit_bound = true;
            out.converged = !out.hit_bound;
            return out;
        }
        if (it == opts.max_iterations) break;
        MatrixXd P = F.transpose() * w.asDiagonal() * F;
        VectorXd gf = g;
        detail::freeze(detail::active_bounds(g, out.lambda, bound), P, gf);
        const VectorXd dir = detail::psd_solve(P, gf);

        bool accepted = false;
        double alpha = 1.0;
        VectorXd next;
        double next_val = 0.0;
        for (int h = 0; h <= opts.step_halving_max; ++h, alpha *= 0.5) {
            VectorXd trial = detail::clip(out.lambda + alpha * dir, bound);
            auto v = value_at(trial);
            if (v && *v >= *current - detail::noise_floor(*current)) {
                next = std::move(trial);
                next_val = *v;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        if (alpha == 1.0) {
            // Extrapolate while the objective keeps rising: unbounded (separated) units reach the box quickly.
            for (int e = 0; e < 40; ++e) {
                alpha *= 2.0;
                VectorXd trial = detail::clip(out.lambda + alpha * dir, bound);
                auto v = value_at(trial);
                if (!v || *v <= next_val + detail::noise_floor(next_val)) break;
                next = std::move(trial);
                next_val = *v;
                if ((next.cwiseAbs().array() >= bound).any()) break;
            }
        }
        out.lambda = std::move(next);
        current = next_val;
        ++out.iterations;
    }
    out.hit_bound = (out.lambda.cwiseAbs().array() >= bound).any();
    out.converged = false;
    return out;
}

namespace detail {

// Newton ascent over beta alone with the loadings fixed. Used for the start value.
inline VectorXd pooled_beta(const Panel& panel, const MatrixXd& F, Family family, const MatrixXd& loadings,
                            const FitOptions& opts) {
    const auto k = static_cast<Eigen::Index>(panel.n_covariates());
    VectorXd beta = VectorXd::Zero(k);
    auto current = try_objective(panel, F, family, beta, loadings);
    if (!current) throw InvalidInput(std::string(family_name(family)) + ": infeasible starting values");
    const double nt = static_cast<double>(panel.n_units() * panel.n_periods());
    for (int it = 0; it < std::min(opts.max_iterations, 50); ++it) {
        VectorXd g = VectorXd::Zero(k);
        MatrixXd P = MatrixXd::Zero(k, k);
        for (std::size_t i = 0; i < panel.n_units(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const MatrixXd& X = panel.unit_covariates(i);
            const VectorXd z = X * beta + F * loadings.row(ii).transpose();
            VectorXd l1(z.size()), w(z.size());
            for (Eigen::Index t = 0; t < z.size(); ++t) {
                const auto d = evaluate(family, panel.outcomes()(ii, t), z(t), 2);
                l1(t) = d[1];
                w(t) = -d[2];
            }
            g.noalias() += X.transpose() * l1;
            P.noalias() += X.transpose() * w.asDiagonal() * X;
        }
        if (g.cwiseAbs().maxCoeff() / nt <= opts.grad_tolerance) break;
        const VectorXd dir = psd_solve(P, g);
        double alpha = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opts.step_halving_max; ++h, alpha *= 0.5) {
            const VectorXd trial = beta + alpha * dir;
            auto v = try_objective(panel, F, family, trial, loadings);
            if (v && *v >= *current - noise_floor(*current)) {
                beta = trial;
                current = v;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    return beta;
}

// Loadings with lambda_i'f_t > 0 for every t, as a Poisson start.
inline MatrixXd positive_start_loadings(const Panel& panel, const MatrixXd& F) {
    const VectorXd f1 = F.col(0);
    double sign = 0.0;
    if (f1.minCoeff() > 0.0) sign = 1.0;
    else if (f1.maxCoeff() < 0.0) sign = -1.0;
    if (sign == 0.0)
        throw InvalidInput("poisson: leading factor changes sign, cannot build a start with positive indices");
    const double scale = f1.cwiseAbs().mean();
    MatrixXd lam = MatrixXd::Zero(static_cast<Eigen::Index>(panel.n_units()), F.cols());
    for (Eigen::Index i = 0; i < lam.rows(); ++i)
        lam(i, 0) = sign * std::max(panel.outcomes().row(i).mean(), 0.5) / scale;
    return lam;
}

} // namespace detail

/// Joint maximization over (beta, Lambda) given the factors.
inline CceFit fit_cce(const Panel& panel, const FactorEstimate& factors, Family family, const FitOptions& opts = {}) {
    const MatrixXd& F = factors.factors;
    const auto N = static_cast<Eigen::Index>(panel.n_units());
    const auto T = static_cast<Eigen::Index>(panel.n_periods());
    const auto k = static_cast<Eigen::Index>(panel.n_covariates());
    const auto r = F.cols();
    if (F.rows() != T) throw InvalidInput("fit_cce: factors have " + std::to_string(F.rows()) + " rows, T = " +
                                          std::to_string(T));
    if (r < 1) throw InvalidInput("fit_cce: need at least one factor");
    // Outcome support check; z = 1 is inside every family's index domain.
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index t = 0; t < T; ++t) {
            if (detail::in_domain(family, panel.outcomes()(i, t), 1.0)) continue;
            try {
                detail::check_domain(family, panel.outcomes()(i, t), 1.0);
            } catch (const InvalidInput& e) {
                throw InvalidInput(std::string(e.what()) + " at (i=" + std::to_string(i) + ", t=" + std::to_string(t) +
                                   ")");
            }
        }
    }

    const double bound = opts.loading_bound;
    const double nt = static_cast<double>(N * T);

    CceFit fit;
    MatrixXd lam = family == Family::Poisson ? detail::positive_start_loadings(panel, F) : MatrixXd::Zero(N, r);
    fit.beta = detail::pooled_beta(panel, F, family, lam, opts);
    FitOptions unit_opts = opts;
    unit_opts.max_iterations = std::min(opts.max_iterations, 50);
    for (Eigen::Index i = 0; i < N; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        lam.row(i) = update_loadings(panel.outcomes().row(i).transpose(), panel.unit_covariates(iu), factors, family,
                                     fit.beta, lam.row(i).transpose(), unit_opts)
                         .lambda.transpose();
    }
    fit.loadings = std::move(lam);

    auto current = detail::try_objective(panel, F, family, fit.beta, fit.loadings);
    if (!current) throw InvalidInput(std::string(family_name(family)) + ": infeasible starting values");
    fit.loglik_trace.push_back(*current);

    // Negated Hessian blocks: P_bb (k x k), P_bi (k x r), P_ii (r x r); gradients g_b, g_i.
    VectorXd gb(k);
    MatrixXd Pbb(k, k), gl(N, r);
    std::vector<MatrixXd> Pbi(static_cast<std::size_t>(N)), Pii(static_cast<std::size_t>(N));

    auto assemble = [&]() {
        gb.setZero();
        Pbb.setZero();
        for (Eigen::Index i = 0; i < N; ++i) {
            const auto iu = static_cast<std::size_t>(i);
            const MatrixXd& X = panel.unit_covariates(iu);
            const VectorXd z = X * fit.beta + F * fit.loadings.row(i).transpose();
            VectorXd l1(T), w(T);
            for (Eigen::Index t = 0; t < T; ++t) {
                const auto d = detail::evaluate(family, panel.outcomes()(i, t), z(t), 2);
                l1(t) = d[1];
                w(t) = -d[2];
            }
            const MatrixXd wF = w.asDiagonal() * F;
            gb.noalias() += X.transpose() * l1;
            gl.row(i) = (F.transpose() * l1).transpose();
            Pbb.noalias() += X.transpose() * w.asDiagonal() * X;
            Pbi[iu].noalias() = X.transpose() * wF;
            Pii[iu].noalias() = F.transpose() * wF;
        }
        double g = detail::projected_sup(gb / nt, fit.beta, std::numeric_limits<double>::infinity());
        for (Eigen::Index i = 0; i < N; ++i)
            g = std::max(g, detail::projected_sup(gl.row(i).transpose() / static_cast<double>(T),
                                                  fit.loadings.row(i).transpose(), bound));
        return g;
    };

    fit.grad_norm = assemble();
    while (fit.grad_norm > opts.grad_tolerance && fit.iterations < opts.max_iterations) {
        // Schur complement on the beta block.
        MatrixXd S = Pbb;
        VectorXd rhs = gb;
        std::vector<MatrixXd> PiiInvPib(static_cast<std::size_t>(N));
        MatrixXd PiiInvG(N, r);
        for (Eigen::Index i = 0; i < N; ++i) {
            const auto iu = static_cast<std::size_t>(i);
            VectorXd gi = gl.row(i).transpose();
            const auto active = detail::active_bounds(gi, fit.loadings.row(i).transpose(), bound);
            if (!active.empty()) {
                detail::freeze(active, Pii[iu], gi);
                for (auto j : active) Pbi[iu].col(j).setZero();
            }
            PiiInvPib[iu] = detail::psd_solve(Pii[iu], MatrixXd(Pbi[iu].transpose()));
            PiiInvG.row(i) = detail::psd_solve(Pii[iu], gi).transpose();
            S.noalias() -= Pbi[iu] * PiiInvPib[iu];
            rhs.noalias() -= Pbi[iu] * PiiInvG.row(i).transpose();
        }
        S = symmetrized(S);
        const VectorXd db = detail::psd_solve(S, rhs);
        MatrixXd dl(N, r);
        for (Eigen::Index i = 0; i < N; ++i)
            dl.row(i) = PiiInvG.row(i) - (PiiInvPib[static_cast<std::size_t>(i)] * db).transpose();

        double alpha = 1.0;
        bool accepted = false;
        VectorXd next_beta;
        MatrixXd next_lam;
        double next_val = 0.0;
        for (int h = 0; h <= opts.step_halving_max; ++h, alpha *= 0.5) {
            VectorXd tb = fit.beta + alpha * db;
            MatrixXd tl = detail::clip(fit.loadings + alpha * dl, bound);
            auto v = detail::try_objective(panel, F, family, tb, tl);
            if (v && *v >= *current - detail::noise_floor(*current)) {
                next_beta = std::move(tb);
                next_lam = std::move(tl);
                next_val = *v;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        if (alpha == 1.0 && fit.iterations >= 5) {
            // Slow progress after several full Newton steps signals a diverging (separated) unit.
            for (int e = 0; e < 40; ++e) {
                alpha *= 2.0;
                VectorXd tb = fit.beta + alpha * db;
                MatrixXd tl = detail::clip(fit.loadings + alpha * dl, bound);
                auto v = detail::try_objective(panel, F, family, tb, tl);
                if (!v || *v <= next_val + detail::noise_floor(next_val)) break;
                next_beta = std::move(tb);
                next_lam = std::move(tl);
                next_val = *v;
            }
        }
        fit.beta = std::move(next_beta);
        fit.loadings = std::move(next_lam);
        current = next_val;
        fit.loglik_trace.push_back(next_val);
        ++fit.iterations;
        fit.grad_norm = assemble();
    }

    if (fit.grad_norm <= opts.grad_tolerance) {
        bool moved = false;
        for (Eigen::Index i = 0; i < N; ++i) {
            VectorXd li = fit.loadings.row(i).transpose();
            const VectorXd offset = panel.unit_covariates(static_cast<std::size_t>(i)) * fit.beta;
            if (detail::saturate_loading(family, panel.outcomes().row(i).transpose(), offset, F, li, bound)) {
                fit.loadings.row(i) = li.transpose();
                moved = true;
            }
        }
        if (moved) {
            current = detail::try_objective(panel, F, family, fit.beta, fit.loadings);
            fit.loglik_trace.push_back(*current);
            fit.grad_norm = assemble();
        }
    }

    fit.loglik = *current;
    fit.bound_hits = 0;
    for (Eigen::Index i = 0; i < N; ++i)
        if ((fit.loadings.row(i).cwiseAbs().array() >= bound).any()) ++fit.bound_hits;
    fit.converged = fit.grad_norm <= opts.grad_tolerance;
    fit.loading_bound = bound;
    fit.index = index_matrix(panel, F, fit.beta, fit.loadings);
    return fit;
}

} // namespace cce
