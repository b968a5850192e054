#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cce/dgp.hpp"
#include "cce/factor_stage.hpp"

namespace {

using cce::MatrixXd;
using cce::Panel;
using cce::VectorXd;

/// Panel with zero outcomes and covariates x(i, t) (k-vector).
template <class Fn>
Panel make_panel(int N, int T, int k, Fn&& x) {
    std::vector<MatrixXd> X(N, MatrixXd(T, k));
    for (int i = 0; i < N; ++i)
        for (int t = 0; t < T; ++t) X[i].row(t) = x(i, t).transpose();
    return Panel(MatrixXd::Zero(N, T), std::move(X));
}

Panel random_panel(int N, int T, int k, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return make_panel(N, T, k, [&](int, int) { return VectorXd(VectorXd::NullaryExpr(k, [&] { return n(rng) + 0.5; })); });
}

TEST(CrossSectionalMeans, Examples) {
    const Panel p = make_panel(2, 2, 1, [](int i, int) { return VectorXd::Constant(1, i == 0 ? 3.0 : 5.0); });
    const MatrixXd xbar = cce::cross_sectional_means(p);
    EXPECT_DOUBLE_EQ(xbar(0, 0), 4.0);
    EXPECT_DOUBLE_EQ(xbar(1, 0), 4.0);

    const VectorXd v = (VectorXd(3) << 0.5, -2.0, 7.25).finished();
    const MatrixXd c = cce::cross_sectional_means(make_panel(4, 3, 3, [&](int, int) { return v; }));
    for (int t = 0; t < 3; ++t) EXPECT_EQ(c.row(t), v.transpose());
}

TEST(CrossSectionalMeans, NaiveLoop) {
    std::mt19937_64 rng(3);
    const Panel p = random_panel(3, 4, 2, rng);
    const MatrixXd xbar = cce::cross_sectional_means(p);
    for (int t = 0; t < 4; ++t)
        for (int j = 0; j < 2; ++j) {
            double s = 0.0;
            for (int i = 0; i < 3; ++i) s += p.unit_covariates(i)(t, j);
            EXPECT_NEAR(xbar(t, j), s / 3.0, 1e-15);
        }
}

TEST(SecondMoment, Examples) {
    MatrixXd e1 = MatrixXd::Zero(5, 3);
    e1.col(0).setOnes();
    const MatrixXd S = cce::second_moment_matrix(e1);
    MatrixXd want = MatrixXd::Zero(3, 3);
    want(0, 0) = 1.0;
    EXPECT_EQ(S, want);

    const MatrixXd s1 = cce::second_moment_matrix((MatrixXd(2, 1) << 1.0, 3.0).finished());
    EXPECT_DOUBLE_EQ(s1(0, 0), 5.0);

    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0.0, 1.0);
    const MatrixXd x = MatrixXd::NullaryExpr(50, 3, [&] { return n(rng); });
    const MatrixXd s = cce::second_moment_matrix(x);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            double sum = 0.0;
            for (int t = 0; t < 50; ++t) sum += x(t, a) * x(t, b);
            EXPECT_NEAR(s(a, b), sum / 50.0, 1e-12);
        }
    EXPECT_EQ(s, s.transpose());
}

TEST(EstimateFactors, OneDimensional) {
    std::mt19937_64 rng(1);
    const Panel p = random_panel(6, 8, 1, rng);
    const auto fe = cce::estimate_factors(p, 1);
    EXPECT_EQ(fe.eigenvectors(0, 0), 1.0);
    EXPECT_EQ(fe.factors, cce::cross_sectional_means(p));
}

TEST(EstimateFactors, DiagonalSecondMoment) {
    // xbar rows (2, 1) and (2, -1): second moment diag(4, 1).
    const Panel p = make_panel(2, 2, 2, [](int, int t) { return VectorXd((VectorXd(2) << 2.0, t == 0 ? 1.0 : -1.0).finished()); });
    const auto fe = cce::estimate_factors(p, 1);
    EXPECT_NEAR(fe.eigenvalues(0), 4.0, 1e-14);
    EXPECT_NEAR(fe.eigenvalues(1), 1.0, 1e-14);
    EXPECT_NEAR(fe.eigenvectors(0, 0), 1.0, 1e-14);
    EXPECT_NEAR(fe.eigenvectors(1, 0), 0.0, 1e-14);
}

TEST(EstimateFactors, NoiselessSpan) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    const int N = 30, T = 40, k = 4, r = 2;
    const MatrixXd F0 = MatrixXd::NullaryExpr(T, r, [&] { return n(rng) + 1.0; });
    std::vector<MatrixXd> G(N);
    for (auto& g : G) g = MatrixXd::NullaryExpr(k, r, [&] { return n(rng) + 1.0; });
    const Panel p = make_panel(N, T, k, [&](int i, int t) { return VectorXd(G[i] * F0.row(t).transpose()); });
    const auto fe = cce::estimate_factors(p, r);
    const MatrixXd coef = fe.factors.colPivHouseholderQr().solve(F0);
    EXPECT_LT((F0 - fe.factors * coef).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT(fe.eigenvalues(2), 1e-10 * fe.eigenvalues(0));
}

TEST(EstimateFactors, Invariants) {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        const Panel p = random_panel(7, 12, 4, rng);
        for (int r = 1; r <= 4; ++r) {
            const auto fe = cce::estimate_factors(p, r);
            EXPECT_EQ(fe.r, r);
            EXPECT_LT((fe.eigenvectors.transpose() * fe.eigenvectors - MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff(),
                      1e-10);
            for (int j = 0; j + 1 < 4; ++j) EXPECT_GE(fe.eigenvalues(j), fe.eigenvalues(j + 1));
            EXPECT_GE(fe.eigenvalues.minCoeff(), -1e-10);
            EXPECT_EQ(fe.factors, cce::cross_sectional_means(p) * fe.eigenvectors);
            const MatrixXd recon = fe.second_moment * fe.eigenvectors -
                                   fe.eigenvectors * fe.eigenvalues.head(r).asDiagonal();
            EXPECT_LT(recon.cwiseAbs().maxCoeff(), 1e-10);
            // sign convention: largest-magnitude entry of each column is positive
            for (int a = 0; a < r; ++a) {
                Eigen::Index arg;
                fe.eigenvectors.col(a).cwiseAbs().maxCoeff(&arg);
                EXPECT_GT(fe.eigenvectors(arg, a), 0.0);
            }
        }
    }
}

TEST(EstimateFactors, ScaleEquivariance) {
    std::mt19937_64 rng(6);
    const Panel p = random_panel(8, 10, 3, rng);
    const double s = 2.5;
    std::vector<MatrixXd> X = p.covariates();
    for (auto& x : X) x *= s;
    const Panel q(p.outcomes(), X);
    const auto a = cce::estimate_factors(p, 2);
    const auto b = cce::estimate_factors(q, 2);
    EXPECT_LT((b.eigenvalues - s * s * a.eigenvalues).cwiseAbs().maxCoeff(), 1e-10 * s * s * a.eigenvalues(0));
    EXPECT_LT((b.eigenvectors - a.eigenvectors).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((b.factors - s * a.factors).cwiseAbs().maxCoeff(), 1e-10);
    const double thr = 0.5 * (a.eigenvalues(1) + a.eigenvalues(2));
    EXPECT_EQ(cce::estimate_rank_threshold(p, thr), cce::estimate_rank_threshold(q, s * s * thr));
    EXPECT_EQ(cce::estimate_rank_ratio(p), cce::estimate_rank_ratio(q));
}

TEST(EstimateFactors, OrthogonalRotationOfCovariates) {
    std::mt19937_64 rng(8);
    const Panel p = random_panel(8, 10, 3, rng);
    std::normal_distribution<double> n(0.0, 1.0);
    const MatrixXd O = MatrixXd::NullaryExpr(3, 3, [&] { return n(rng); }).householderQr().householderQ();
    std::vector<MatrixXd> X = p.covariates();
    for (auto& x : X) x = x * O.transpose();  // x_it -> O x_it
    const Panel q(p.outcomes(), X);
    const auto a = cce::estimate_factors(p, 2);
    const auto b = cce::estimate_factors(q, 2);
    EXPECT_LT((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff(), 1e-10);
    // span(Psi_b) = O span(Psi_a): the projections agree.
    const MatrixXd Pa = O * a.eigenvectors * a.eigenvectors.transpose() * O.transpose();
    const MatrixXd Pb = b.eigenvectors * b.eigenvectors.transpose();
    EXPECT_LT((Pa - Pb).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(EstimateFactors, Errors) {
    std::mt19937_64 rng(2);
    const Panel p = random_panel(4, 5, 2, rng);
    EXPECT_THROW(cce::estimate_factors(p, 3), cce::InvalidInput);
    EXPECT_THROW(cce::estimate_factors(p, 0), cce::InvalidInput);
    const Panel zero = make_panel(3, 4, 2, [](int, int) { return VectorXd(VectorXd::Zero(2)); });
    EXPECT_THROW(cce::estimate_factors(zero, 1), cce::InvalidInput);
}

TEST(Rank, ThresholdRule) {
    const VectorXd ev = (VectorXd(4) << 5.0, 3.0, 1e-4, 1e-6).finished();
    EXPECT_EQ(cce::threshold_rank(ev, 0.01), 2);
    EXPECT_EQ(cce::threshold_rank(ev, 3.0), 2);  // at-or-above
    EXPECT_EQ(cce::threshold_rank(ev, 10.0), 1);  // floor
    EXPECT_EQ(cce::threshold_rank(ev, 1e-8), 4);
    EXPECT_THROW(cce::threshold_rank(ev, 0.0), cce::InvalidInput);
    EXPECT_NEAR(cce::default_rank_threshold(200, 200), 0.1709976, 1e-7);
    EXPECT_DOUBLE_EQ(cce::default_rank_threshold(1000, 8), 0.5);
}

TEST(Rank, RatioRule) {
    EXPECT_EQ(cce::ratio_rank((VectorXd(4) << 8.0, 4.0, 0.01, 0.005).finished()), 2);
    EXPECT_EQ(cce::ratio_rank((VectorXd(2) << 6.0, 3.0).finished()), 1);
    EXPECT_EQ(cce::ratio_rank((VectorXd(3) << 8.0, 4.0, 2.0).finished()), 1);  // tie -> smallest j
    EXPECT_EQ(cce::ratio_rank((VectorXd(3) << 8.0, 4.0, 0.0).finished()), 2);  // zero denominator is +inf
    EXPECT_THROW(cce::ratio_rank((VectorXd(1) << 1.0).finished()), cce::InvalidInput);
    std::mt19937_64 rng(2);
    EXPECT_THROW(cce::estimate_rank_ratio(random_panel(4, 5, 1, rng)), cce::InvalidInput);
}

TEST(Rank, SimulationDesign) {
    int hits_threshold = 0, hits_ratio = 0;
    for (int seed = 1; seed <= 100; ++seed) {
        cce::DgpConfig cfg;
        cfg.n_units = cfg.n_periods = 200;
        cfg.seed = seed;
        const auto d = cce::generate(cfg);
        if (cce::estimate_rank_threshold(d.panel, cce::default_rank_threshold(200, 200)) == 2) ++hits_threshold;
        if (cce::estimate_rank_ratio(d.panel) == 2) ++hits_ratio;
    }
    EXPECT_GE(hits_threshold, 95);
    EXPECT_GE(hits_ratio, 90);
}

} // namespace
