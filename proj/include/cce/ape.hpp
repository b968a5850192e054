#pragma once

// Average partial effects of a policy change x0 -> x1 at fixed regressor values,
// averaged over the sample's (i, t) cells.

#include <string>

#include <Eigen/Dense>

#include "cce/error.hpp"
#include "cce/factor_stage.hpp"
#include "cce/likelihood.hpp"
#include "cce/mle_stage.hpp"

namespace cce {

struct PolicyPair {
    VectorXd x0;
    VectorXd x1;

    [[nodiscard]] PolicyPair swapped() const { return {x1, x0}; }
};

struct ApeEstimate {
    double value = 0.0;
    PolicyPair policy;
};

/// Derivatives of delta(beta, c) = m(beta'x1 + c) - m(beta'x0 + c).
struct PartialEffectDerivs {
    VectorXd d_beta;       // k
    double d_c = 0.0;
    double d_cc = 0.0;
    VectorXd d_beta_c;     // k
    MatrixXd d_beta_beta;  // k x k
    double d_ccc = 0.0;
};

namespace detail {

inline void check_policy(const PolicyPair& p, Eigen::Index k) {
    if (p.x0.size() != k || p.x1.size() != k)
        throw InvalidInput("policy vectors must have length k = " + std::to_string(k));
    if (!p.x0.allFinite() || !p.x1.allFinite()) throw InvalidInput("policy vectors must be finite");
}

} // namespace detail

inline double partial_effect(Family family, const VectorXd& beta, double c, const PolicyPair& policy) {
    detail::check_policy(policy, beta.size());
    const double z1 = beta.dot(policy.x1) + c;
    const double z0 = beta.dot(policy.x0) + c;
    return mean_function(family, z1)[0] - mean_function(family, z0)[0];
}

inline PartialEffectDerivs partial_effect_derivs(Family family, const VectorXd& beta, double c,
                                                 const PolicyPair& policy) {
    detail::check_policy(policy, beta.size());
    const auto m1 = mean_function(family, beta.dot(policy.x1) + c);
    const auto m0 = mean_function(family, beta.dot(policy.x0) + c);
    PartialEffectDerivs d;
    d.d_beta = m1[1] * policy.x1 - m0[1] * policy.x0;
    d.d_c = m1[1] - m0[1];
    d.d_cc = m1[2] - m0[2];
    d.d_beta_c = m1[2] * policy.x1 - m0[2] * policy.x0;
    d.d_beta_beta = m1[2] * policy.x1 * policy.x1.transpose() - m0[2] * policy.x0 * policy.x0.transpose();
    d.d_ccc = m1[3] - m0[3];
    return d;
}

/// Average of delta over the cells of a common-component matrix c (N x T).
inline double average_partial_effect(Family family, const VectorXd& beta, const MatrixXd& common,
                                     const PolicyPair& policy) {
    detail::check_policy(policy, beta.size());
    const double b1 = beta.dot(policy.x1);
    const double b0 = beta.dot(policy.x0);
    double s = 0.0;
    for (Eigen::Index i = 0; i < common.rows(); ++i) {
        for (Eigen::Index t = 0; t < common.cols(); ++t) {
            const double c = common(i, t);
            try {
                s += mean_function(family, b1 + c)[0] - mean_function(family, b0 + c)[0];
            } catch (const InvalidInput& e) {
                throw InvalidInput(std::string(e.what()) + " at (i=" + std::to_string(i) + ", t=" +
                                   std::to_string(t) + ")");
            }
        }
    }
    return s / static_cast<double>(common.size());
}

inline ApeEstimate ape_estimate(const CceFit& fit, const FactorEstimate& factors, Family family,
                                const PolicyPair& policy) {
    if (fit.loadings.cols() != factors.factors.cols())
        throw InvalidInput("ape_estimate: fit and factors disagree on r");
    return {average_partial_effect(family, fit.beta, fit.common_component(factors.factors), policy), policy};
}

} // namespace cce
