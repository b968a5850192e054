#pragma once

// End-to-end estimation: factors, joint fit, bias correction, inference and
// APE, assembled into a JSON report.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cce/ape.hpp"
#include "cce/bias_correction.hpp"
#include "cce/error.hpp"
#include "cce/factor_stage.hpp"
#include "cce/inference.hpp"
#include "cce/jackknife.hpp"
#include "cce/likelihood.hpp"
#include "cce/mle_stage.hpp"
#include "cce/panel.hpp"

namespace cce {

inline constexpr int kReportSchemaVersion = 1;

enum class Correction { None, Analytical, Spj };

inline std::string_view correction_name(Correction c) {
    switch (c) {
    case Correction::None: return "none";
    case Correction::Analytical: return "analytical";
    case Correction::Spj: return "spj";
    }
    return "unknown";
}

inline Correction parse_correction(std::string_view s) {
    if (s == "none") return Correction::None;
    if (s == "analytical" || s == "abc") return Correction::Analytical;
    if (s == "spj") return Correction::Spj;
    throw InvalidInput("unknown correction '" + std::string(s) + "' (expected none, analytical or spj)");
}

struct EstimateConfig {
    Family family = Family::Logit;
    std::optional<int> r;                  // absent: threshold rule
    std::optional<double> rank_threshold;  // absent: min(N, T)^{-1/3}
    Correction correction = Correction::Analytical;
    int L = 1;
    double level = 0.95;
    std::optional<PolicyPair> policy;
    FitOptions fit;
    bool parallel = true;

    void validate(std::size_t n_covariates) const {
        if (L < 0) throw InvalidInput("bandwidth must be >= 0");
        if (!(level > 0.0 && level < 1.0)) throw InvalidInput("confidence level must lie in (0, 1)");
        if (r && (*r < 1 || *r > static_cast<int>(n_covariates)))
            throw InvalidInput("rank must lie in [1, k] with k = " + std::to_string(n_covariates));
        if (rank_threshold && !(*rank_threshold > 0.0)) throw InvalidInput("rank threshold must be positive");
        if (policy) detail::check_policy(*policy, static_cast<Eigen::Index>(n_covariates));
    }
};

namespace detail {

/// Prefixes errors raised inside `fn` with the stage name, keeping the error type.
template <class Fn>
auto in_stage(std::string_view stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const InvalidInput& e) {
        throw InvalidInput(std::string(stage) + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(stage) + ": " + e.what());
    }
}

inline std::vector<double> to_vector(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline nlohmann::json json_number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline nlohmann::json loadings_summary(const MatrixXd& lam) {
    nlohmann::json cols = nlohmann::json::array();
    const double n = static_cast<double>(lam.rows());
    for (Eigen::Index j = 0; j < lam.cols(); ++j) {
        const VectorXd c = lam.col(j);
        const double mean = c.mean();
        const double var = lam.rows() > 1 ? (c.array() - mean).square().sum() / (n - 1.0) : 0.0;
        cols.push_back({{"mean", mean}, {"sd", std::sqrt(var)}, {"min", c.minCoeff()}, {"max", c.maxCoeff()}});
    }
    return cols;
}

} // namespace detail

struct RankChoice {
    int used = 0;
    std::string method;  // "fixed" or "threshold"
    double threshold = 0.0;
    int r_hat = 0;
    std::optional<int> r_tilde;
    VectorXd eigenvalues;
};

inline RankChoice choose_rank(const Panel& panel, const EstimateConfig& cfg) {
    RankChoice rc;
    rc.eigenvalues = covariate_spectrum(panel);
    rc.threshold = cfg.rank_threshold.value_or(default_rank_threshold(panel.n_units(), panel.n_periods()));
    rc.r_hat = threshold_rank(rc.eigenvalues, rc.threshold);
    if (rc.eigenvalues.size() >= 2) rc.r_tilde = ratio_rank(rc.eigenvalues);
    rc.used = cfg.r.value_or(rc.r_hat);
    rc.method = cfg.r ? "fixed" : "threshold";
    return rc;
}

inline nlohmann::json run_estimate(const EstimateConfig& cfg, const Panel& panel) {
    using nlohmann::json;
    const auto N = panel.n_units();
    const auto T = panel.n_periods();
    const auto k = panel.n_covariates();
    cfg.validate(k);

    const RankChoice rank = detail::in_stage("factor_stage", [&] { return choose_rank(panel, cfg); });
    const int r = rank.used;

    json report;
    report["schema_version"] = kReportSchemaVersion;
    report["family"] = std::string(family_name(cfg.family));
    report["dimensions"] = {{"N", N}, {"T", T}, {"k", k}};
    report["rank"] = {{"used", r},
                      {"method", rank.method},
                      {"threshold", rank.threshold},
                      {"r_hat", rank.r_hat},
                      {"r_tilde", rank.r_tilde ? json(*rank.r_tilde) : json()},
                      {"eigenvalues", detail::to_vector(rank.eigenvalues)}};

    SubsampleRun full;
    full.split = Split::Full;
    full.factors = detail::in_stage("factor_stage", [&] { return estimate_factors(panel, r); });
    full.fit = detail::in_stage("mle_stage", [&] { return fit_cce(panel, *full.factors, cfg.family, cfg.fit); });
    const FactorEstimate& factors = *full.factors;
    const CceFit& fit = *full.fit;

    report["fit"] = {{"converged", fit.converged},
                     {"iterations", fit.iterations},
                     {"grad_norm", fit.grad_norm},
                     {"loglik", fit.loglik},
                     {"bound_hits", fit.bound_hits},
                     {"loading_bound", fit.loading_bound}};
    if (!fit.converged)
        throw NumericalError("mle_stage: optimizer did not converge (gradient " + std::to_string(fit.grad_norm) +
                             " after " + std::to_string(fit.iterations) + " iterations)");

    const BetaBiasComponents bias =
        detail::in_stage("bias_correction", [&] { return compute_beta_bias(panel, fit, factors, cfg.family, cfg.L); });
    int separated = 0;
    for (bool s : bias.separated) separated += s ? 1 : 0;
    report["loadings"] = {{"summary", detail::loadings_summary(fit.loadings)}, {"separated_units", separated}};

    std::optional<VectorXd> corrected;
    std::optional<std::array<SubsampleRun, 5>> runs;
    if (cfg.correction == Correction::Analytical) {
        corrected = detail::in_stage("bias_correction", [&] { return correct_beta(fit, bias, N, T); });
        report["bias_terms"] = {{"b", detail::to_vector(bias.b())},
                                {"d", detail::to_vector(bias.d())},
                                {"b1", detail::to_vector(bias.b1)},
                                {"b2", detail::to_vector(bias.b2)},
                                {"d1", detail::to_vector(bias.d1)},
                                {"d2", detail::to_vector(bias.d2)}};
    } else if (cfg.correction == Correction::Spj) {
        SpjOptions so;
        so.fit = cfg.fit;
        so.parallel = cfg.parallel;
        runs = detail::in_stage("jackknife", [&] { return spj_runs(panel, cfg.family, r, so, full); });
        const SpjResult<VectorXd> spj = spj_beta_from_runs(*runs);
        if (!spj.valid) {
            std::string what = "jackknife: subsample fit failed";
            for (const auto& f : spj.failed_splits) what += "; " + f;
            throw NumericalError(what);
        }
        json parts = json::object();
        for (const auto& run : *runs) parts[std::string(split_name(run.split))] = detail::to_vector(run.fit->beta);
        report["spj"] = {{"estimates", parts}, {"corrected", detail::to_vector(spj.corrected)}};
        corrected = spj.corrected;
    }

    const VectorXd point = corrected.value_or(fit.beta);
    const InferenceResult inf =
        detail::in_stage("inference", [&] { return beta_covariance(fit, bias, cfg.L, cfg.level, point); });
    report["beta"] = {{"raw", detail::to_vector(fit.beta)},
                      {"correction", std::string(correction_name(cfg.correction))},
                      {"corrected", corrected ? json(detail::to_vector(*corrected)) : json()},
                      {"std_errors", detail::to_vector(inf.std_errors)},
                      {"ci_lower", detail::to_vector(inf.ci_lower)},
                      {"ci_upper", detail::to_vector(inf.ci_upper)},
                      {"level", cfg.level},
                      {"bandwidth", cfg.L}};

    if (cfg.policy) {
        const PolicyPair& policy = *cfg.policy;
        const ApeEstimate ape = detail::in_stage("ape", [&] { return ape_estimate(fit, factors, cfg.family, policy); });
        const ApeBiasComponents ab = detail::in_stage(
            "bias_correction", [&] { return compute_ape_bias(panel, fit, factors, cfg.family, policy, bias, cfg.L); });
        const double sigma2 =
            detail::in_stage("inference", [&] { return ape_variance(panel, fit, factors, cfg.family, bias, ab, cfg.L); });
        const double se = ape_standard_error(sigma2, N, T);
        std::optional<double> ape_corrected;
        if (cfg.correction == Correction::Analytical) ape_corrected = correct_ape(ape, bias, ab, N, T);
        if (cfg.correction == Correction::Spj)
            ape_corrected = detail::in_stage("jackknife", [&] {
                return spj_ape_from_runs(*runs, cfg.family, policy).corrected;
            });
        const Interval ci = confidence_interval(ape_corrected.value_or(ape.value), se, cfg.level);
        report["ape"] = {{"x0", detail::to_vector(policy.x0)},
                         {"x1", detail::to_vector(policy.x1)},
                         {"raw", ape.value},
                         {"corrected", ape_corrected ? detail::json_number(*ape_corrected) : json()},
                         {"std_error", se},
                         {"ci_lower", ci.lower},
                         {"ci_upper", ci.upper}};
    }
    return report;
}

} // namespace cce
