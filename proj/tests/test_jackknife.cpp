#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cce/jackknife.hpp"
#include "checks/random_instance.hpp"

namespace {

using cce::Family;
using cce::MatrixXd;
using cce::Panel;
using cce::PolicyPair;
using cce::Split;
using cce::VectorXd;

cce::SpjOptions serial_options() {
    cce::SpjOptions so;
    so.parallel = false;
    return so;
}

TEST(SplitPanel, OddSizesAndContiguity) {
    std::mt19937_64 rng(1);
    const auto ins = checks::simulated_instance(Family::Logit, 7, 9, 2, 1, 0, rng);
    const Panel& p = ins.panel;
    const Panel a = cce::split_panel(p, Split::FirstUnits);
    const Panel b = cce::split_panel(p, Split::LastUnits);
    const Panel c = cce::split_panel(p, Split::FirstPeriods);
    const Panel d = cce::split_panel(p, Split::LastPeriods);
    EXPECT_EQ(a.n_units(), 4u);
    EXPECT_EQ(b.n_units(), 3u);
    EXPECT_EQ(a.n_periods(), 9u);
    EXPECT_EQ(c.n_periods(), 5u);
    EXPECT_EQ(d.n_periods(), 4u);
    EXPECT_EQ(c.n_units(), 7u);
    EXPECT_EQ(b.outcomes().row(0), p.outcomes().row(4));
    EXPECT_EQ(b.unit_covariates(2), p.unit_covariates(6));
    EXPECT_EQ(d.outcomes().col(0), p.outcomes().col(5));
    EXPECT_EQ(d.unit_covariates(3), p.unit_covariates(3).bottomRows(4));
    EXPECT_TRUE(cce::split_panel(p, Split::Full) == p);
}

TEST(Spj, CombinationIdentityOnFits) {
    std::mt19937_64 rng(2);
    for (Family f : {Family::Logit, Family::Probit, Family::Gaussian}) {
        const auto ins = checks::simulated_instance(f, 24, 20, 3, 2, 0, rng);
        const auto res = cce::spj_correct_beta(ins.panel, f, 2, serial_options());
        if (!res.valid) continue;
        const VectorXd want =
            3.0 * res.full - 0.5 * (res.half_n.first + res.half_n.second) - 0.5 * (res.half_t.first + res.half_t.second);
        EXPECT_EQ(res.corrected, want);
        // the full run is the plain two-step estimator
        const auto fe = cce::estimate_factors(ins.panel, 2);
        EXPECT_EQ(res.full, cce::fit_cce(ins.panel, fe, f).beta);
        // each half re-estimates its own factors
        const Panel sub = cce::split_panel(ins.panel, Split::FirstPeriods);
        EXPECT_EQ(res.half_t.first, cce::fit_cce(sub, cce::estimate_factors(sub, 2), f).beta);
    }
}

TEST(Spj, EqualPoliciesGiveZero) {
    std::mt19937_64 rng(3);
    const auto ins = checks::simulated_instance(Family::Logit, 20, 16, 2, 1, 0, rng);
    PolicyPair p{VectorXd::Constant(2, 0.5), VectorXd::Constant(2, 0.5)};
    const auto res = cce::spj_correct_ape(ins.panel, Family::Logit, 1, p, serial_options());
    EXPECT_EQ(res.full, 0.0);
    EXPECT_EQ(res.half_n.first, 0.0);
    EXPECT_EQ(res.half_n.second, 0.0);
    EXPECT_EQ(res.half_t.first, 0.0);
    EXPECT_EQ(res.half_t.second, 0.0);
    EXPECT_EQ(res.corrected, 0.0);
}

TEST(Spj, UnitPermutationOnlyMovesTheUnitSplit) {
    std::mt19937_64 rng(4);
    const auto ins = checks::simulated_instance(Family::Logit, 30, 20, 3, 2, 0, rng);
    std::vector<int> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    MatrixXd Y(30, 20);
    std::vector<MatrixXd> X(30);
    for (int i = 0; i < 30; ++i) {
        Y.row(i) = ins.panel.outcomes().row(perm[i]);
        X[i] = ins.panel.unit_covariates(perm[i]);
    }
    const Panel q(Y, X);
    const auto a = cce::spj_correct_beta(ins.panel, Family::Logit, 2, serial_options());
    const auto b = cce::spj_correct_beta(q, Family::Logit, 2, serial_options());
    ASSERT_TRUE(a.valid && b.valid);
    EXPECT_LT((a.full - b.full).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_LT((a.half_t.first - b.half_t.first).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_LT((a.half_t.second - b.half_t.second).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_GT((a.half_n.first - b.half_n.first).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Spj, FailedSplitsAreNamed) {
    std::mt19937_64 rng(5);
    const auto ins = checks::simulated_instance(Family::Logit, 20, 16, 2, 1, 0, rng);
    cce::SpjOptions so = serial_options();
    so.fit.max_iterations = 1;
    so.fit.grad_tolerance = 1e-300;
    const auto res = cce::spj_correct_beta(ins.panel, Family::Logit, 1, so);
    EXPECT_FALSE(res.valid);
    ASSERT_EQ(res.failed_splits.size(), 5u);
    EXPECT_EQ(res.failed_splits[0].rfind("full:", 0), 0u);
    EXPECT_NE(res.failed_splits[4].find("second_half_periods"), std::string::npos);
    EXPECT_TRUE(res.corrected.allFinite());  // estimates are still returned
}

TEST(Spj, ParallelMatchesSerial) {
    std::mt19937_64 rng(6);
    const auto ins = checks::simulated_instance(Family::Probit, 20, 16, 2, 1, 0, rng);
    cce::SpjOptions par;
    par.parallel = true;
    const auto a = cce::spj_correct_beta(ins.panel, Family::Probit, 1, par);
    const auto b = cce::spj_correct_beta(ins.panel, Family::Probit, 1, serial_options());
    EXPECT_EQ(a.corrected, b.corrected);
}

TEST(Spj, SizeChecks) {
    std::mt19937_64 rng(7);
    const auto ins = checks::simulated_instance(Family::Logit, 3, 10, 1, 1, 0, rng);
    EXPECT_THROW(cce::spj_correct_beta(ins.panel, Family::Logit, 1, serial_options()), cce::InvalidInput);
}

} // namespace
