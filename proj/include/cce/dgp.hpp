#pragma once

// Simulation design: logit outcomes with two AR(1) common factors that also
// drive the first two covariates.
//
//   y_it    = 1{ x_it1 + x_it2 + x_it3 + x_it4 + lambda_i1 f_t1 + lambda_i2 f_t2 - eps_it >= 0 }
//   f_t1    = 0.3 + 0.7 f_{t-1,1} + u_1t,   f_t2 = 0.6 + 0.4 f_{t-1,2} + u_2t
//   x_it1   = theta_1i f_t1 + f_t2 + e_it1,  x_it2 = theta_2i f_t2 + e_it2
//   x_it3   = 1.5 e_it3,                     x_it4 = e_it4
//
// eps is standard logistic, u, lambda - 1, theta - 1 are standard normal and
// e is either i.i.d. N(0,1) or AR(1) with coefficient 0.6 and N(0,1) shocks.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cce/error.hpp"
#include "cce/panel.hpp"

namespace cce {

struct DgpConfig {
    int n_units = 100;
    int n_periods = 100;
    bool serial = false;  // false: i.i.d. idiosyncratic covariate noise; true: AR(1) with coefficient 0.6
    std::uint64_t seed = 1;
    int burn_in = 100;
};

struct DgpDraw {
    Panel panel;
    VectorXd true_beta;      // (1, 1, 1, 1)
    MatrixXd true_index;     // N x T common component c_it = lambda_i'f_t
    MatrixXd true_loadings;  // N x 2
    MatrixXd true_factors;   // T x 2
};

/// SplitMix64 finalizer; used to derive independent stream seeds from counters.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline DgpDraw generate(const DgpConfig& cfg) {
    if (cfg.n_units < 4 || cfg.n_periods < 4) throw InvalidInput("dgp: need N >= 4 and T >= 4");
    if (cfg.burn_in < 1) throw InvalidInput("dgp: burn_in must be positive");
    const int N = cfg.n_units;
    const int T = cfg.n_periods;
    constexpr int k = 4;

    std::mt19937_64 rng(mix_seed(cfg.seed));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // Factors, started at their stationary means.
    MatrixXd F(T, 2);
    double f1 = 1.0, f2 = 1.0;
    for (int s = 0; s < cfg.burn_in + T; ++s) {
        f1 = 0.3 + 0.7 * f1 + normal(rng);
        f2 = 0.6 + 0.4 * f2 + normal(rng);
        if (s >= cfg.burn_in) {
            F(s - cfg.burn_in, 0) = f1;
            F(s - cfg.burn_in, 1) = f2;
        }
    }

    MatrixXd Lam(N, 2);
    VectorXd theta1(N), theta2(N);
    for (int i = 0; i < N; ++i) {
        Lam(i, 0) = 1.0 + normal(rng);
        Lam(i, 1) = 1.0 + normal(rng);
        theta1(i) = 1.0 + normal(rng);
        theta2(i) = 1.0 + normal(rng);
    }

    std::vector<MatrixXd> X(static_cast<std::size_t>(N), MatrixXd(T, k));
    MatrixXd e(T, k);
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < k; ++j) {
            if (cfg.serial) {
                double v = 0.0;
                for (int s = 0; s < cfg.burn_in + T; ++s) {
                    v = 0.6 * v + normal(rng);
                    if (s >= cfg.burn_in) e(s - cfg.burn_in, j) = v;
                }
            } else {
                for (int t = 0; t < T; ++t) e(t, j) = normal(rng);
            }
        }
        auto& x = X[static_cast<std::size_t>(i)];
        x.col(0) = theta1(i) * F.col(0) + F.col(1) + e.col(0);
        x.col(1) = theta2(i) * F.col(1) + e.col(1);
        x.col(2) = 1.5 * e.col(2);
        x.col(3) = e.col(3);
    }

    const MatrixXd C = Lam * F.transpose();
    MatrixXd Y(N, T);
    for (int i = 0; i < N; ++i) {
        const auto& x = X[static_cast<std::size_t>(i)];
        for (int t = 0; t < T; ++t) {
            double u = unif(rng);
            while (u <= 0.0) u = unif(rng);
            const double eps = std::log(u / (1.0 - u));
            const double latent = x.row(t).sum() + C(i, t) - eps;
            Y(i, t) = latent >= 0.0 ? 1.0 : 0.0;
        }
    }

    return DgpDraw{Panel(std::move(Y), std::move(X)), VectorXd::Ones(k), C, std::move(Lam), std::move(F)};
}

} // namespace cce
