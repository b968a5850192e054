#pragma once

// Replication harness for the simulation design in dgp.hpp: bias, Monte Carlo
// standard deviation and 95% coverage of the first coefficient for the raw,
// analytically corrected and split-panel jackknife estimators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cce/ape.hpp"
#include "cce/bias_correction.hpp"
#include "cce/dgp.hpp"
#include "cce/error.hpp"
#include "cce/factor_stage.hpp"
#include "cce/inference.hpp"
#include "cce/jackknife.hpp"
#include "cce/mle_stage.hpp"
#include "cce/parallel.hpp"

namespace cce {

enum class Estimator { Raw, Abc, Spj };

inline std::string_view estimator_name(Estimator e) {
    switch (e) {
    case Estimator::Raw: return "raw";
    case Estimator::Abc: return "abc";
    case Estimator::Spj: return "spj";
    }
    return "unknown";
}

inline Estimator parse_estimator(std::string_view s) {
    if (s == "raw") return Estimator::Raw;
    if (s == "abc") return Estimator::Abc;
    if (s == "spj") return Estimator::Spj;
    throw InvalidInput("unknown estimator '" + std::string(s) + "' (expected raw, abc or spj)");
}

struct GridSize {
    int n_units = 100;
    int n_periods = 100;
};

struct McConfig {
    std::vector<GridSize> sizes{{100, 100}};
    bool serial = false;
    std::vector<int> bandwidths{0};
    int n_reps = 500;
    std::set<Estimator> estimators{Estimator::Raw, Estimator::Abc, Estimator::Spj};
    std::uint64_t base_seed = 20240101;
    int r = 2;
    double level = 0.95;
    unsigned threads = 0;  // 0: hardware concurrency
    FitOptions fit;
    std::optional<PolicyPair> policy;  // APE tracking; nullopt disables it
};

/// Per-replication record for one (size, L); NaN marks an unavailable estimate.
struct McRecord {
    int rep = 0;
    std::uint64_t seed = 0;
    int L = 0;
    bool full_ok = false;
    bool spj_ok = false;
    std::string failure;
    double raw = std::numeric_limits<double>::quiet_NaN();
    double abc = std::numeric_limits<double>::quiet_NaN();
    double spj = std::numeric_limits<double>::quiet_NaN();
    double se = std::numeric_limits<double>::quiet_NaN();
    std::array<double, 5> spj_parts{};  // full, first/second unit half, first/second period half
    double ape_true = std::numeric_limits<double>::quiet_NaN();
    double ape_raw = std::numeric_limits<double>::quiet_NaN();
    double ape_abc = std::numeric_limits<double>::quiet_NaN();
    double ape_spj = std::numeric_limits<double>::quiet_NaN();
    double ape_se = std::numeric_limits<double>::quiet_NaN();
};

struct McCell {
    int n_units = 0;
    int n_periods = 0;
    bool serial = false;
    int L = 0;
    Estimator estimator = Estimator::Raw;
    std::string statistic = "beta1";  // "beta1" or "ape"
    double bias = 0.0;
    double std_error = 0.0;  // Monte Carlo standard deviation of the estimates
    double mean_se = 0.0;    // average estimated standard error
    double coverage95 = 0.0;
    int n_reps = 0;          // replications used
    int failures = 0;        // replications excluded
    bool flagged = false;    // failures above 5% of attempted replications
};

struct McTable {
    std::vector<McCell> cells;
    std::vector<McRecord> records;  // in (size, rep, L) order

    [[nodiscard]] const McCell* find(int n, int t, int L, Estimator e, std::string_view stat = "beta1") const {
        for (const auto& c : cells)
            if (c.n_units == n && c.n_periods == t && c.L == L && c.estimator == e && c.statistic == stat) return &c;
        return nullptr;
    }
};

/// Counter-based replication seed; independent of execution order.
inline std::uint64_t replication_seed(std::uint64_t base, int n, int t, bool serial, int rep) {
    std::uint64_t s = mix_seed(base);
    s = mix_seed(s ^ static_cast<std::uint64_t>(n));
    s = mix_seed(s ^ (static_cast<std::uint64_t>(t) << 20));
    s = mix_seed(s ^ (serial ? 0x5eULL : 0x1dULL));
    return mix_seed(s ^ (static_cast<std::uint64_t>(rep) << 32));
}

/// Sample APE at the true coefficients and common components.
inline double true_ape(const DgpDraw& draw, const PolicyPair& policy) {
    return average_partial_effect(Family::Logit, draw.true_beta, draw.true_index, policy);
}

inline PolicyPair default_policy(Eigen::Index k) {
    VectorXd x1 = VectorXd::Zero(k);
    x1(0) = 1.0;
    return {VectorXd::Zero(k), x1};
}

/// The simulated panel used by replication `rep` of `size`.
inline DgpDraw replication_draw(const McConfig& cfg, const GridSize& size, int rep) {
    DgpConfig dc;
    dc.n_units = size.n_units;
    dc.n_periods = size.n_periods;
    dc.serial = cfg.serial;
    dc.seed = replication_seed(cfg.base_seed, size.n_units, size.n_periods, cfg.serial, rep);
    return generate(dc);
}

/// One replication at one size; returns a record per bandwidth.
inline std::vector<McRecord> run_replication(const McConfig& cfg, const GridSize& size, int rep) {
    const std::uint64_t seed = replication_seed(cfg.base_seed, size.n_units, size.n_periods, cfg.serial, rep);
    const DgpDraw draw = replication_draw(cfg, size, rep);
    const Panel& panel = draw.panel;
    const auto N = panel.n_units();
    const auto T = panel.n_periods();

    std::vector<McRecord> out(cfg.bandwidths.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j].rep = rep;
        out[j].seed = seed;
        out[j].L = cfg.bandwidths[j];
        if (cfg.policy) out[j].ape_true = true_ape(draw, *cfg.policy);
    }

    SubsampleRun full = run_subsample(panel, Split::Full, Family::Logit, cfg.r, cfg.fit);
    const bool need_spj = cfg.estimators.contains(Estimator::Spj);
    std::optional<std::array<SubsampleRun, 5>> runs;
    if (need_spj) {
        SpjOptions so;
        so.fit = cfg.fit;
        so.parallel = false;
        runs = spj_runs(panel, Family::Logit, cfg.r, so, full);
    }
    const CceFit* fit = full.fit ? &*full.fit : nullptr;
    const FactorEstimate* factors = full.factors ? &*full.factors : nullptr;

    std::optional<SpjResult<VectorXd>> spj_beta;
    std::optional<SpjResult<double>> spj_ape;
    if (runs) {
        spj_beta = spj_beta_from_runs(*runs);
        if (cfg.policy && spj_beta->valid) spj_ape = spj_ape_from_runs(*runs, Family::Logit, *cfg.policy);
    }

    for (auto& rec : out) {
        rec.full_ok = full.ok();
        rec.failure = full.failure;
        if (spj_beta) {
            rec.spj_ok = spj_beta->valid;
            rec.spj_parts = {spj_beta->full(0), spj_beta->half_n.first(0), spj_beta->half_n.second(0),
                             spj_beta->half_t.first(0), spj_beta->half_t.second(0)};
            if (rec.spj_ok) rec.spj = spj_beta->corrected(0);
            if (!rec.spj_ok && rec.failure.empty()) rec.failure = spj_beta->failed_splits.front();
            if (spj_ape) rec.ape_spj = spj_ape->corrected;
        }
        if (!rec.full_ok) continue;
        rec.raw = fit->beta(0);
        try {
            const BetaBiasComponents bias = compute_beta_bias(panel, *fit, *factors, Family::Logit, rec.L);
            rec.abc = correct_beta(*fit, bias, N, T)(0);
            rec.se = beta_covariance(*fit, bias, rec.L, cfg.level).std_errors(0);
            if (cfg.policy) {
                const ApeEstimate ape = ape_estimate(*fit, *factors, Family::Logit, *cfg.policy);
                const ApeBiasComponents ab =
                    compute_ape_bias(panel, *fit, *factors, Family::Logit, *cfg.policy, bias, rec.L);
                rec.ape_raw = ape.value;
                rec.ape_abc = correct_ape(ape, bias, ab, N, T);
                rec.ape_se = ape_standard_error(
                    ape_variance(panel, *fit, *factors, Family::Logit, bias, ab, rec.L), N, T);
            }
        } catch (const NumericalError& e) {
            rec.full_ok = false;
            rec.failure = e.what();
            rec.abc = rec.se = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return out;
}

namespace detail {

struct Moments {
    double sum = 0.0, sum2 = 0.0, se_sum = 0.0;
    int n = 0, covered = 0, failed = 0;

    void add(double est, double truth, double se, double z) {
        if (!std::isfinite(est) || !std::isfinite(se)) {
            ++failed;
            return;
        }
        const double err = est - truth;
        sum += err;
        sum2 += err * err;
        se_sum += se;
        ++n;
        if (std::abs(err) <= z * se) ++covered;
    }
};

inline McCell make_cell(const GridSize& size, bool serial, int L, Estimator e, std::string stat, const Moments& m) {
    McCell c;
    c.n_units = size.n_units;
    c.n_periods = size.n_periods;
    c.serial = serial;
    c.L = L;
    c.estimator = e;
    c.statistic = std::move(stat);
    c.n_reps = m.n;
    c.failures = m.failed;
    if (m.n > 0) {
        const double mean = m.sum / m.n;
        c.bias = mean;
        c.std_error = m.n > 1 ? std::sqrt(std::max(0.0, (m.sum2 - m.n * mean * mean) / (m.n - 1))) : 0.0;
        c.mean_se = m.se_sum / m.n;
        c.coverage95 = static_cast<double>(m.covered) / m.n;
    } else {
        c.bias = c.std_error = c.mean_se = c.coverage95 = std::numeric_limits<double>::quiet_NaN();
    }
    c.flagged = 20 * m.failed > m.failed + m.n;
    return c;
}

} // namespace detail

/// Aggregates records of one size into table cells.
inline std::vector<McCell> aggregate(const McConfig& cfg, const GridSize& size, const std::vector<McRecord>& recs) {
    const double z = normal_quantile_two_sided(cfg.level);
    std::vector<McCell> cells;
    for (int L : cfg.bandwidths) {
        for (Estimator e : cfg.estimators) {
            detail::Moments beta, ape;
            for (const auto& r : recs) {
                if (r.L != L) continue;
                // All estimators share the full-sample sandwich standard error.
                const double se = r.full_ok ? r.se : std::numeric_limits<double>::quiet_NaN();
                const double ape_se = r.full_ok ? r.ape_se : std::numeric_limits<double>::quiet_NaN();
                switch (e) {
                case Estimator::Raw:
                    beta.add(r.raw, 1.0, se, z);
                    ape.add(r.ape_raw, r.ape_true, ape_se, z);
                    break;
                case Estimator::Abc:
                    beta.add(r.abc, 1.0, se, z);
                    ape.add(r.ape_abc, r.ape_true, ape_se, z);
                    break;
                case Estimator::Spj:
                    beta.add(r.spj_ok ? r.spj : std::numeric_limits<double>::quiet_NaN(), 1.0, se, z);
                    ape.add(r.spj_ok ? r.ape_spj : std::numeric_limits<double>::quiet_NaN(), r.ape_true, ape_se, z);
                    break;
                }
            }
            cells.push_back(detail::make_cell(size, cfg.serial, L, e, "beta1", beta));
            if (cfg.policy) cells.push_back(detail::make_cell(size, cfg.serial, L, e, "ape", ape));
        }
    }
    return cells;
}

inline McTable run_grid(const McConfig& cfg) {
    if (cfg.n_reps < 1) throw InvalidInput("n_reps must be >= 1");
    if (cfg.sizes.empty() || cfg.bandwidths.empty() || cfg.estimators.empty())
        throw InvalidInput("simulation grid is empty");
    for (int L : cfg.bandwidths)
        if (L < 0) throw InvalidInput("bandwidth must be >= 0");
    const unsigned threads = cfg.threads == 0 ? default_thread_count() : cfg.threads;
    McTable table;
    for (const auto& size : cfg.sizes) {
        std::vector<std::vector<McRecord>> per_rep(static_cast<std::size_t>(cfg.n_reps));
        parallel_for(per_rep.size(), threads,
                     [&](std::size_t rep) { per_rep[rep] = run_replication(cfg, size, static_cast<int>(rep)); });
        std::vector<McRecord> recs;
        for (auto& v : per_rep)
            for (auto& r : v) recs.push_back(std::move(r));
        auto cells = aggregate(cfg, size, recs);
        table.cells.insert(table.cells.end(), cells.begin(), cells.end());
        table.records.insert(table.records.end(), recs.begin(), recs.end());
    }
    return table;
}

inline void write_table_csv(std::ostream& os, const McTable& table) {
    os << "N,T,serial,L,statistic,estimator,bias,std_error,mean_se,coverage95,n_reps,failures,flagged\n";
    os << std::setprecision(10);
    for (const auto& c : table.cells) {
        os << c.n_units << ',' << c.n_periods << ',' << (c.serial ? 1 : 0) << ',' << c.L << ',' << c.statistic << ','
           << estimator_name(c.estimator) << ',' << c.bias << ',' << c.std_error << ',' << c.mean_se << ','
           << c.coverage95 << ',' << c.n_reps << ',' << c.failures << ',' << (c.flagged ? 1 : 0) << '\n';
    }
}

inline std::string format_table(const McTable& table) {
    std::ostringstream os;
    os << std::fixed;
    os << std::setw(5) << "N" << std::setw(5) << "T" << std::setw(4) << "L" << std::setw(7) << "stat" << std::setw(5)
       << "est" << std::setw(10) << "bias" << std::setw(10) << "sd" << std::setw(10) << "mean_se" << std::setw(10)
       << "cov95" << std::setw(7) << "reps" << std::setw(6) << "fail" << '\n';
    for (const auto& c : table.cells) {
        os << std::setw(5) << c.n_units << std::setw(5) << c.n_periods << std::setw(4) << c.L << std::setw(7)
           << c.statistic << std::setw(5) << estimator_name(c.estimator) << std::setprecision(4) << std::setw(10)
           << c.bias << std::setw(10) << c.std_error << std::setw(10) << c.mean_se << std::setprecision(3)
           << std::setw(10) << c.coverage95 << std::setw(7) << c.n_reps << std::setw(6) << c.failures
           << (c.flagged ? "  FLAGGED" : "") << '\n';
    }
    return os.str();
}

} // namespace cce
