#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cce/dgp.hpp"
#include "cce/factor_stage.hpp"
#include "cce/mle_stage.hpp"
#include "checks/random_instance.hpp"

namespace {

using cce::Family;
using cce::MatrixXd;
using cce::Panel;
using cce::VectorXd;

std::vector<MatrixXd> random_covariates(int N, int T, int k, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<MatrixXd> X(N);
    for (auto& x : X) x = MatrixXd::NullaryExpr(T, k, [&] { return n(rng); });
    return X;
}

TEST(Objective, GaussianZero) {
    std::mt19937_64 rng(1);
    const Panel p(MatrixXd::Zero(4, 5), random_covariates(4, 5, 2, rng));
    const auto fe = cce::estimate_factors(p, 1);
    EXPECT_EQ(cce::objective(p, fe, Family::Gaussian, VectorXd::Zero(2), MatrixXd::Zero(4, 1)), 0.0);
}

TEST(Objective, LogitSymmetry) {
    std::mt19937_64 rng(2);
    const auto ins = checks::random_instance(Family::Logit, rng);
    const Panel flipped(MatrixXd::Ones(ins.panel.outcomes().rows(), ins.panel.outcomes().cols()) - ins.panel.outcomes(),
                        ins.panel.covariates());
    const double a = cce::objective(ins.panel, ins.factors, Family::Logit, ins.fit.beta, ins.fit.loadings);
    const double b = cce::objective(flipped, ins.factors, Family::Logit, -ins.fit.beta, -ins.fit.loadings);
    EXPECT_NEAR(a, b, 1e-14);
}

TEST(Objective, PoissonDomainErrorNamesCell) {
    std::mt19937_64 rng(3);
    const Panel p(MatrixXd::Ones(3, 4), random_covariates(3, 4, 1, rng));
    const auto fe = cce::known_factors(MatrixXd::Ones(4, 1), 1);
    MatrixXd lam = MatrixXd::Constant(3, 1, 50.0);
    lam(2, 0) = -50.0;
    try {
        cce::objective(p, fe, Family::Poisson, VectorXd::Zero(1), lam);
        FAIL();
    } catch (const cce::InvalidInput& e) {
        EXPECT_NE(std::string(e.what()).find("i=2"), std::string::npos) << e.what();
    }
}

TEST(FitCce, GaussianExactFit) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    const int N = 20, T = 15, k = 3, r = 2;
    const auto X = random_covariates(N, T, k, rng);
    const MatrixXd F0 = MatrixXd::NullaryExpr(T, r, [&] { return n(rng); });
    const MatrixXd L0 = MatrixXd::NullaryExpr(N, r, [&] { return n(rng); });
    const VectorXd b0 = (VectorXd(3) << 1.0, -0.5, 2.0).finished();
    MatrixXd Y(N, T);
    for (int i = 0; i < N; ++i) Y.row(i) = (X[i] * b0 + F0 * L0.row(i).transpose()).transpose();
    const Panel p(Y, X);
    const auto fe = cce::known_factors(F0, k);
    const auto fit = cce::fit_cce(p, fe, Family::Gaussian);
    ASSERT_TRUE(fit.converged);
    EXPECT_LT((fit.beta - b0).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((fit.index - Y).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(FitCce, ConstantFactorIsWithinEstimator) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    const int N = 12, T = 9, k = 2;
    const auto X = random_covariates(N, T, k, rng);
    const MatrixXd Y = MatrixXd::NullaryExpr(N, T, [&] { return n(rng); });
    const Panel p(Y, X);
    const double c = 1.7;
    const auto fe = cce::known_factors(MatrixXd::Constant(T, 1, c), k);
    const auto fit = cce::fit_cce(p, fe, Family::Gaussian);
    ASSERT_TRUE(fit.converged);
    for (int i = 0; i < N; ++i) {
        const double resid = Y.row(i).mean() - fit.beta.dot(X[i].colwise().mean());
        EXPECT_NEAR(fit.loadings(i, 0) * c, resid, 1e-8);
    }
    // beta is the within (unit-demeaned) least-squares estimator
    MatrixXd XX = MatrixXd::Zero(k, k);
    VectorXd Xy = VectorXd::Zero(k);
    for (int i = 0; i < N; ++i) {
        const MatrixXd xd = X[i].rowwise() - X[i].colwise().mean();
        const VectorXd yd = Y.row(i).transpose().array() - Y.row(i).mean();
        XX += xd.transpose() * xd;
        Xy += xd.transpose() * yd;
    }
    EXPECT_LT((fit.beta - XX.ldlt().solve(Xy)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FitCce, SimulationDesignSingleDataset) {
    cce::DgpConfig cfg;
    cfg.n_units = cfg.n_periods = 100;
    cfg.seed = 11;
    const auto d = cce::generate(cfg);
    const auto fe = cce::estimate_factors(d.panel, 2);
    const auto fit = cce::fit_cce(d.panel, fe, Family::Logit);
    ASSERT_TRUE(fit.converged);
    EXPECT_GE(fit.beta(0), 0.894);
    EXPECT_LE(fit.beta(0), 1.230);
}

class FitInvariants : public ::testing::TestWithParam<Family> {};

TEST_P(FitInvariants, AscentFocsAndIndex) {
    const Family f = GetParam();
    std::mt19937_64 rng(6 + static_cast<int>(f));
    int checked = 0;
    for (int rep = 0; rep < 8; ++rep) {
        auto ins = checks::simulated_instance(f, 40, 25, 3, 2, 0, rng);
        const auto fit = cce::fit_cce(ins.panel, ins.factors, f);
        ASSERT_FALSE(fit.loglik_trace.empty());
        for (std::size_t s = 1; s < fit.loglik_trace.size(); ++s)
            EXPECT_GE(fit.loglik_trace[s], fit.loglik_trace[s - 1] - cce::detail::noise_floor(fit.loglik_trace[s - 1]));
        EXPECT_DOUBLE_EQ(fit.loglik, fit.loglik_trace.back());
        const MatrixXd z = cce::index_matrix(ins.panel, ins.factors.factors, fit.beta, fit.loadings);
        EXPECT_LT((z - fit.index).cwiseAbs().maxCoeff(), 1e-12);
        if (!fit.converged) continue;  // Poisson optima on the z = 0 boundary
        ++checked;
        EXPECT_LE(fit.grad_norm, 1e-8);
        const auto N = static_cast<Eigen::Index>(ins.panel.n_units());
        const double T = static_cast<double>(ins.panel.n_periods());
        VectorXd sb = VectorXd::Zero(3);
        for (Eigen::Index i = 0; i < N; ++i) {
            VectorXd l1(ins.panel.n_periods());
            for (Eigen::Index t = 0; t < l1.size(); ++t)
                l1(t) = cce::index_derivative(f, ins.panel.outcomes()(i, t), fit.index(i, t), 1);
            sb += ins.panel.unit_covariates(i).transpose() * l1;
            if (!fit.at_bound(i)) {
                EXPECT_LE((ins.factors.factors.transpose() * l1 / T).cwiseAbs().maxCoeff(), 1e-8) << "unit " << i;
            }
        }
        EXPECT_LE((sb / (static_cast<double>(N) * T)).cwiseAbs().maxCoeff(), 1e-8);
    }
    EXPECT_GT(checked, 0);
}

INSTANTIATE_TEST_SUITE_P(Families, FitInvariants, ::testing::ValuesIn(checks::kFamilies),
                         [](const auto& info) { return std::string(cce::family_name(info.param)); });

TEST(FitCce, ConcaveFamiliesIgnoreStart) {
    // Different loading boxes lead the optimizer along different paths; a concave problem has one optimum.
    std::mt19937_64 rng(12);
    for (Family f : {Family::Logit, Family::Probit, Family::Gaussian}) {
        auto ins = checks::simulated_instance(f, 30, 20, 2, 1, 0, rng);
        cce::FitOptions a;
        cce::FitOptions b = a;
        b.loading_bound = 5e3;
        const auto fa = cce::fit_cce(ins.panel, ins.factors, f, a);
        const auto fb = cce::fit_cce(ins.panel, ins.factors, f, b);
        if (fa.bound_hits > 0 || fb.bound_hits > 0) continue;
        EXPECT_LT((fa.beta - fb.beta).cwiseAbs().maxCoeff(), 1e-6) << cce::family_name(f);
    }
}

TEST(FitCce, SeparatedUnitHitsBound) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    const int N = 30, T = 20;
    // A constant factor makes an all-ones unit perfectly separated.
    MatrixXd F(T, 2);
    F.col(0).setOnes();
    F.col(1) = VectorXd::NullaryExpr(T, [&] { return n(rng); });
    const auto X = random_covariates(N, T, 2, rng);
    MatrixXd Y(N, T);
    for (int i = 0; i < N; ++i)
        for (int t = 0; t < T; ++t) Y(i, t) = X[i](t, 0) + 0.5 * F(t, 1) + n(rng) > 0.0 ? 1.0 : 0.0;
    Y.row(3).setOnes();
    const Panel p(Y, X);
    const auto fit = cce::fit_cce(p, cce::known_factors(F, 2), Family::Logit);
    EXPECT_TRUE(fit.converged);  // the projected gradient vanishes at the box
    EXPECT_TRUE(fit.at_bound(3));
    EXPECT_GE(fit.bound_hits, 1);
}

TEST(FitCce, NonConvergenceIsReported) {
    std::mt19937_64 rng(8);
    auto ins = checks::simulated_instance(Family::Logit, 30, 20, 3, 2, 0, rng);
    cce::FitOptions opts;
    opts.max_iterations = 1;
    opts.grad_tolerance = 1e-15;
    cce::CceFit fit;
    ASSERT_NO_THROW(fit = cce::fit_cce(ins.panel, ins.factors, Family::Logit, opts));
    EXPECT_FALSE(fit.converged);
    EXPECT_LE(fit.iterations, 1);
}

TEST(FitCce, PoissonInfeasibleStart) {
    std::mt19937_64 rng(9);
    const Panel p(MatrixXd::Ones(4, 6), random_covariates(4, 6, 1, rng));
    MatrixXd F(6, 1);
    F << 1.0, -1.0, 2.0, -0.5, 1.0, 0.3;
    EXPECT_THROW(cce::fit_cce(p, cce::known_factors(F, 1), Family::Poisson), cce::InvalidInput);
}

TEST(FitCce, OutcomeSupportChecked) {
    std::mt19937_64 rng(10);
    MatrixXd Y = MatrixXd::Zero(4, 6);
    Y(1, 2) = 2.0;
    const Panel p(Y, random_covariates(4, 6, 1, rng));
    EXPECT_THROW(cce::fit_cce(p, cce::known_factors(MatrixXd::Ones(6, 1), 1), Family::Probit), cce::InvalidInput);
}

TEST(UpdateLoadings, SeparatedSinglePeriod) {
    const auto fe = cce::known_factors(MatrixXd::Ones(1, 1), 1);
    const auto u = cce::update_loadings(VectorXd::Ones(1), MatrixXd::Zero(1, 1), fe, Family::Logit, VectorXd::Zero(1),
                                        VectorXd::Zero(1));
    EXPECT_TRUE(u.hit_bound);
    EXPECT_FALSE(u.converged);
    EXPECT_DOUBLE_EQ(u.lambda(0), 1e3);
}

TEST(UpdateLoadings, GaussianScalarLeastSquares) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 1.0);
    const int T = 7;
    const VectorXd y = VectorXd::NullaryExpr(T, [&] { return n(rng); });
    const MatrixXd x = MatrixXd::NullaryExpr(T, 2, [&] { return n(rng); });
    const VectorXd beta = (VectorXd(2) << 0.3, -1.1).finished();
    const auto fe = cce::known_factors(MatrixXd::Ones(T, 1), 2);
    const auto u = cce::update_loadings(y, x, fe, Family::Gaussian, beta, VectorXd::Zero(1));
    EXPECT_TRUE(u.converged);
    EXPECT_NEAR(u.lambda(0), (y - x * beta).mean(), 1e-12);
}

TEST(UpdateLoadings, LogitMatchesGridSearch) {
    const int T = 6;
    MatrixXd F(T, 2);
    F << 1.0, 0.2, 0.5, -1.0, -0.7, 0.4, 1.3, 0.9, 0.1, -0.6, -1.2, 1.1;
    const VectorXd y = (VectorXd(T) << 1, 0, 0, 1, 1, 0).finished();
    const MatrixXd x = (MatrixXd(T, 1) << 0.3, -0.2, 0.5, 0.1, -0.4, 0.2).finished();
    const VectorXd beta = VectorXd::Constant(1, 0.5);
    const auto fe = cce::known_factors(F, 1);
    const auto u = cce::update_loadings(y, x, fe, Family::Logit, beta, VectorXd::Zero(2));
    ASSERT_TRUE(u.converged);

    auto ll = [&](double a, double b) {
        double s = 0.0;
        for (int t = 0; t < T; ++t) {
            const double z = x(t, 0) * beta(0) + a * F(t, 0) + b * F(t, 1);
            s += cce::log_density(Family::Logit, y(t), z);
        }
        return s;
    };
    double best = -1e300, ba = 0.0, bb = 0.0;
    for (double a = -10.0; a <= 10.0; a += 0.01)
        for (double b = -10.0; b <= 10.0; b += 0.01)
            if (const double v = ll(a, b); v > best) best = v, ba = a, bb = b;
    const double ca = ba, cb = bb;
    for (double a = ca - 0.01; a <= ca + 0.01; a += 1e-4)
        for (double b = cb - 0.01; b <= cb + 0.01; b += 1e-4)
            if (const double v = ll(a, b); v > best) best = v, ba = a, bb = b;
    EXPECT_NEAR(u.lambda(0), ba, 1e-3);
    EXPECT_NEAR(u.lambda(1), bb, 1e-3);
}

TEST(UpdateLoadings, DimensionErrors) {
    const auto fe = cce::known_factors(MatrixXd::Ones(4, 1), 1);
    EXPECT_THROW(cce::update_loadings(VectorXd::Ones(3), MatrixXd::Zero(4, 1), fe, Family::Logit, VectorXd::Zero(1),
                                      VectorXd::Zero(1)),
                 cce::InvalidInput);
    EXPECT_THROW(cce::update_loadings(VectorXd::Ones(4), MatrixXd::Zero(4, 1), fe, Family::Logit, VectorXd::Zero(1),
                                      VectorXd::Zero(2)),
                 cce::InvalidInput);
}

} // namespace
