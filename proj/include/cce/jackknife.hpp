#pragma once

// Split-panel jackknife: the full two-step estimator is rerun on the two
// cross-section halves and the two time halves, and combined as
//   3 full - (first_n + last_n) / 2 - (first_t + last_t) / 2.
// Odd sizes give the first half ceil(n / 2). Time halves are contiguous.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cce/ape.hpp"
#include "cce/error.hpp"
#include "cce/factor_stage.hpp"
#include "cce/likelihood.hpp"
#include "cce/mle_stage.hpp"
#include "cce/panel.hpp"
#include "cce/parallel.hpp"

namespace cce {

struct SpjOptions {
    FitOptions fit;
    bool parallel = true;  // run the subsample fits concurrently
};

enum class Split { Full, FirstUnits, LastUnits, FirstPeriods, LastPeriods };

inline std::string_view split_name(Split s) {
    switch (s) {
    case Split::Full: return "full";
    case Split::FirstUnits: return "first_half_units";
    case Split::LastUnits: return "second_half_units";
    case Split::FirstPeriods: return "first_half_periods";
    case Split::LastPeriods: return "second_half_periods";
    }
    return "unknown";
}

inline constexpr std::array<Split, 5> kAllSplits = {Split::Full, Split::FirstUnits, Split::LastUnits,
                                                    Split::FirstPeriods, Split::LastPeriods};

template <class T>
struct SpjResult {
    T full{};
    std::pair<T, T> half_n{};
    std::pair<T, T> half_t{};
    T corrected{};
    bool valid = true;
    std::vector<std::string> failed_splits;
};

/// One pipeline run on a subsample.
struct SubsampleRun {
    Split split = Split::Full;
    std::optional<FactorEstimate> factors;
    std::optional<CceFit> fit;
    std::string failure;  // empty when the fit converged

    [[nodiscard]] bool ok() const { return fit.has_value() && failure.empty(); }
};

inline Panel split_panel(const Panel& panel, Split s) {
    const auto N = panel.n_units();
    const auto T = panel.n_periods();
    const auto n1 = (N + 1) / 2;
    const auto t1 = (T + 1) / 2;
    switch (s) {
    case Split::Full: return panel;
    case Split::FirstUnits: return panel.unit_slice(0, n1);
    case Split::LastUnits: return panel.unit_slice(n1, N);
    case Split::FirstPeriods: return panel.period_slice(0, t1);
    case Split::LastPeriods: return panel.period_slice(t1, T);
    }
    throw InvalidInput("unknown split");
}

template <class T>
T spj_combine(const T& full, const std::pair<T, T>& half_n, const std::pair<T, T>& half_t) {
    return 3.0 * full - 0.5 * (half_n.first + half_n.second) - 0.5 * (half_t.first + half_t.second);
}

inline SubsampleRun run_subsample(const Panel& panel, Split s, Family family, int r, const FitOptions& opts) {
    SubsampleRun run;
    run.split = s;
    const Panel sub = split_panel(panel, s);
    try {
        run.factors = estimate_factors(sub, r);
        run.fit = fit_cce(sub, *run.factors, family, opts);
        if (!run.fit->converged) {
            run.failure = "not converged (gradient " + std::to_string(run.fit->grad_norm) + ", " +
                          std::to_string(run.fit->bound_hits) + " units at the loading bound)";
        }
    } catch (const NumericalError& e) {
        run.failure = e.what();
    }
    return run;
}

/// Runs the requested splits; the full-sample run can be supplied to avoid refitting.
inline std::array<SubsampleRun, 5> spj_runs(const Panel& panel, Family family, int r, const SpjOptions& opts,
                                            std::optional<SubsampleRun> full = std::nullopt) {
    if (panel.n_units() < 4 || panel.n_periods() < 4)
        throw InvalidInput("split-panel jackknife needs N >= 4 and T >= 4");
    std::array<SubsampleRun, 5> runs;
    const std::size_t first = full ? 1 : 0;
    if (full) runs[0] = std::move(*full);
    parallel_for(5 - first, opts.parallel ? default_thread_count() : 1u, [&](std::size_t j) {
        runs[first + j] = run_subsample(panel, kAllSplits[first + j], family, r, opts.fit);
    });
    return runs;
}

namespace detail {

template <class T, class Stat>
SpjResult<T> combine_runs(const std::array<SubsampleRun, 5>& runs, Stat&& stat, T nan_value) {
    SpjResult<T> out;
    std::array<T, 5> v;
    for (std::size_t j = 0; j < 5; ++j) {
        if (runs[j].fit) {
            v[j] = stat(runs[j]);
        } else {
            v[j] = nan_value;
        }
        if (!runs[j].ok()) {
            out.valid = false;
            out.failed_splits.push_back(std::string(split_name(runs[j].split)) + ": " + runs[j].failure);
        }
    }
    out.full = v[0];
    out.half_n = {v[1], v[2]};
    out.half_t = {v[3], v[4]};
    out.corrected = spj_combine(out.full, out.half_n, out.half_t);
    return out;
}

} // namespace detail

inline SpjResult<VectorXd> spj_beta_from_runs(const std::array<SubsampleRun, 5>& runs) {
    Eigen::Index kk = 0;
    for (const auto& run : runs)
        if (run.fit) kk = run.fit->beta.size();
    return detail::combine_runs<VectorXd>(runs, [](const SubsampleRun& run) { return run.fit->beta; },
                                          VectorXd::Constant(kk, std::numeric_limits<double>::quiet_NaN()));
}

inline SpjResult<double> spj_ape_from_runs(const std::array<SubsampleRun, 5>& runs, Family family,
                                           const PolicyPair& policy) {
    return detail::combine_runs<double>(
        runs, [&](const SubsampleRun& run) { return ape_estimate(*run.fit, *run.factors, family, policy).value; },
        std::numeric_limits<double>::quiet_NaN());
}

inline SpjResult<VectorXd> spj_correct_beta(const Panel& panel, Family family, int r, const SpjOptions& opts = {}) {
    return spj_beta_from_runs(spj_runs(panel, family, r, opts));
}

inline SpjResult<double> spj_correct_ape(const Panel& panel, Family family, int r, const PolicyPair& policy,
                                         const SpjOptions& opts = {}) {
    detail::check_policy(policy, static_cast<Eigen::Index>(panel.n_covariates()));
    return spj_ape_from_runs(spj_runs(panel, family, r, opts), family, policy);
}

} // namespace cce
