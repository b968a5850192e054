// Command-line front end: estimate, factors, simulate.
//
// Exit codes: 0 success, 2 input error, 3 numerical or convergence error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cce/cce.hpp"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

using nlohmann::json;

cce::VectorXd parse_vector(const std::string& s, const std::string& what) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto d = cce::detail::parse_double(cce::detail::trim(item));
        if (!d) throw cce::InvalidInput(what + ": '" + item + "' is not a number");
        v.push_back(*d);
    }
    if (v.empty()) throw cce::InvalidInput(what + ": empty vector");
    return Eigen::Map<cce::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

void write_json(const json& j, const std::string& path) {
    if (path == "-") {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw cce::InvalidInput("cannot write " + path);
    out << j.dump(2) << '\n';
}

std::string fmt(const json& v, int prec = 6) {
    if (v.is_null()) return "NA";
    std::ostringstream os;
    os << std::setprecision(prec) << v.get<double>();
    return os.str();
}

void print_report_text(const json& r, std::ostream& os) {
    const auto& dim = r["dimensions"];
    os << "family " << r["family"].get<std::string>() << ", N = " << dim["N"] << ", T = " << dim["T"]
       << ", k = " << dim["k"] << '\n';
    const auto& rk = r["rank"];
    os << "rank " << rk["used"] << " (" << rk["method"].get<std::string>() << "), r_hat = " << rk["r_hat"]
       << ", r_tilde = " << (rk["r_tilde"].is_null() ? std::string("NA") : rk["r_tilde"].dump())
       << ", threshold = " << fmt(rk["threshold"]) << '\n';
    os << "eigenvalues";
    for (const auto& e : rk["eigenvalues"]) os << ' ' << fmt(e);
    os << '\n';
    const auto& fit = r["fit"];
    os << "converged " << fit["converged"] << " in " << fit["iterations"] << " iterations, gradient "
       << fmt(fit["grad_norm"], 3) << ", loglik " << fmt(fit["loglik"], 10) << ", bound hits " << fit["bound_hits"]
       << ", separated units " << r["loadings"]["separated_units"] << '\n';

    const auto& b = r["beta"];
    const bool has_corr = !b["corrected"].is_null();
    os << "\n" << std::setw(6) << "coef" << std::setw(13) << "raw";
    if (has_corr) os << std::setw(13) << b["correction"].get<std::string>();
    os << std::setw(13) << "std.err" << std::setw(13) << "ci.lower" << std::setw(13) << "ci.upper" << '\n';
    for (std::size_t j = 0; j < b["raw"].size(); ++j) {
        os << std::setw(6) << ("x" + std::to_string(j + 1)) << std::setw(13) << fmt(b["raw"][j]);
        if (has_corr) os << std::setw(13) << fmt(b["corrected"][j]);
        os << std::setw(13) << fmt(b["std_errors"][j]) << std::setw(13) << fmt(b["ci_lower"][j]) << std::setw(13)
           << fmt(b["ci_upper"][j]) << '\n';
    }
    os << "level " << fmt(b["level"]) << ", bandwidth " << b["bandwidth"] << '\n';
    if (r.contains("ape")) {
        const auto& a = r["ape"];
        os << "\nAPE raw " << fmt(a["raw"]) << ", corrected " << fmt(a["corrected"]) << ", std.err "
           << fmt(a["std_error"]) << ", ci [" << fmt(a["ci_lower"]) << ", " << fmt(a["ci_upper"]) << "]\n";
    }
}

json table_json(const cce::McTable& table) {
    json cells = json::array();
    for (const auto& c : table.cells) {
        cells.push_back({{"N", c.n_units},
                         {"T", c.n_periods},
                         {"serial", c.serial},
                         {"L", c.L},
                         {"statistic", c.statistic},
                         {"estimator", std::string(cce::estimator_name(c.estimator))},
                         {"bias", cce::detail::json_number(c.bias)},
                         {"std_error", cce::detail::json_number(c.std_error)},
                         {"mean_se", cce::detail::json_number(c.mean_se)},
                         {"coverage95", cce::detail::json_number(c.coverage95)},
                         {"n_reps", c.n_reps},
                         {"failures", c.failures},
                         {"flagged", c.flagged}});
    }
    return {{"schema_version", cce::kReportSchemaVersion}, {"cells", cells}};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-step CCE estimation of nonlinear panel models with interactive fixed effects"};
    app.require_subcommand(1);

    // estimate
    auto* est = app.add_subcommand("estimate", "estimate a panel from a long-format CSV");
    std::string est_input, est_family = "logit", est_correction = "analytical", est_json, est_x0, est_x1;
    int est_L = 1;
    double est_level = 0.95;
    std::optional<int> est_rank;
    std::optional<double> est_threshold;
    bool est_text = false;
    est->add_option("--input,-i", est_input, "panel CSV (id,time,y,x1,...,xk)")->required();
    est->add_option("--family", est_family, "logit, probit, poisson or gaussian")->capture_default_str();
    est->add_option("--correction", est_correction, "none, analytical or spj")->capture_default_str();
    est->add_option("--bandwidth,-L", est_L, "Bartlett bandwidth")->capture_default_str();
    est->add_option("--level", est_level, "confidence level")->capture_default_str();
    est->add_option("--rank,-r", est_rank, "number of factors (default: threshold rule)");
    est->add_option("--threshold", est_threshold, "eigenvalue threshold (default min(N,T)^(-1/3))");
    est->add_option("--policy-x0", est_x0, "comma-separated baseline covariates for the APE");
    est->add_option("--policy-x1", est_x1, "comma-separated counterfactual covariates for the APE");
    est->add_option("--json", est_json, "write the JSON report to this file ('-' for stdout)");
    est->add_flag("--text", est_text, "print a text summary instead of JSON on stdout");

    // factors
    auto* fac = app.add_subcommand("factors", "eigenvalues, rank estimates and estimated factors");
    std::string fac_input, fac_output, fac_json;
    std::optional<double> fac_threshold;
    std::optional<int> fac_rank;
    fac->add_option("--input,-i", fac_input, "panel CSV")->required();
    fac->add_option("--threshold", fac_threshold, "eigenvalue threshold (default min(N,T)^(-1/3))");
    fac->add_option("--rank,-r", fac_rank, "number of factors to write (default r_hat)");
    fac->add_option("--output,-o", fac_output, "write the T x r factor matrix to this CSV");
    fac->add_option("--json", fac_json, "write the JSON summary to this file instead of stdout");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Monte Carlo study on the simulated logit design");
    std::string sim_n = "100", sim_t = "100", sim_L = "0", sim_est = "raw,abc,spj", sim_emit, sim_csv, sim_json;
    int sim_reps = 500;
    bool sim_serial = false, sim_no_ape = false;
    std::uint64_t sim_seed = cce::McConfig{}.base_seed;
    unsigned sim_threads = 0;
    sim->add_option("--n", sim_n, "cross-section sizes, comma-separated")->capture_default_str();
    sim->add_option("--t", sim_t, "time dimensions, comma-separated (paired with --n)")->capture_default_str();
    sim->add_flag("--serial", sim_serial, "AR(1) covariate noise");
    sim->add_option("--reps", sim_reps, "replications per size")->capture_default_str();
    sim->add_option("--bandwidth,-L", sim_L, "bandwidths, comma-separated")->capture_default_str();
    sim->add_option("--estimators", sim_est, "subset of raw,abc,spj")->capture_default_str();
    sim->add_option("--seed", sim_seed, "base seed")->capture_default_str();
    sim->add_option("--threads", sim_threads, "worker threads (0: all cores)");
    sim->add_flag("--no-ape", sim_no_ape, "skip the APE statistics");
    sim->add_option("--emit-csv", sim_emit, "directory for the simulated panels and the summary table");
    sim->add_option("--csv", sim_csv, "write the summary table to this CSV");
    sim->add_option("--json", sim_json, "write the summary table as JSON ('-' for stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    }

    try {
        if (*est) {
            cce::EstimateConfig cfg;
            cfg.family = cce::parse_family(est_family);
            cfg.correction = cce::parse_correction(est_correction);
            cfg.L = est_L;
            cfg.level = est_level;
            cfg.r = est_rank;
            cfg.rank_threshold = est_threshold;
            if (est_x0.empty() != est_x1.empty())
                throw cce::InvalidInput("--policy-x0 and --policy-x1 must be given together");
            if (!est_x0.empty())
                cfg.policy = cce::PolicyPair{parse_vector(est_x0, "--policy-x0"), parse_vector(est_x1, "--policy-x1")};
            const cce::Panel panel = cce::parse_panel_csv(est_input);
            const json report = cce::run_estimate(cfg, panel);
            if (!est_json.empty()) write_json(report, est_json);
            if (est_text) print_report_text(report, std::cout);
            else if (est_json != "-") std::cout << report.dump(2) << '\n';
        } else if (*fac) {
            const cce::Panel panel = cce::parse_panel_csv(fac_input);
            cce::EstimateConfig cfg;
            cfg.r = fac_rank;
            cfg.rank_threshold = fac_threshold;
            cfg.validate(panel.n_covariates());
            const cce::RankChoice rc = cce::choose_rank(panel, cfg);
            const cce::FactorEstimate fe = cce::estimate_factors(panel, rc.used);
            json out = {{"schema_version", cce::kReportSchemaVersion},
                        {"eigenvalues", cce::detail::to_vector(rc.eigenvalues)},
                        {"threshold", rc.threshold},
                        {"r_hat", rc.r_hat},
                        {"r_tilde", rc.r_tilde ? json(*rc.r_tilde) : json()},
                        {"r_used", rc.used}};
            if (!fac_output.empty()) {
                std::ofstream os(fac_output);
                if (!os) throw cce::InvalidInput("cannot write " + fac_output);
                os << "time";
                for (int j = 1; j <= fe.r; ++j) os << ",f" << j;
                os << '\n';
                for (Eigen::Index t = 0; t < fe.factors.rows(); ++t) {
                    os << (t + 1);
                    for (Eigen::Index j = 0; j < fe.factors.cols(); ++j)
                        os << ',' << cce::detail::format_double(fe.factors(t, j));
                    os << '\n';
                }
                out["factors_csv"] = fac_output;
            }
            write_json(out, fac_json.empty() ? "-" : fac_json);
        } else if (*sim) {
            cce::McConfig cfg;
            const auto ns = split_list(sim_n);
            const auto ts = split_list(sim_t);
            if (ns.size() != ts.size()) throw cce::InvalidInput("--n and --t must list the same number of sizes");
            cfg.sizes.clear();
            for (std::size_t j = 0; j < ns.size(); ++j)
                cfg.sizes.push_back({std::stoi(ns[j]), std::stoi(ts[j])});
            cfg.bandwidths.clear();
            for (const auto& l : split_list(sim_L)) cfg.bandwidths.push_back(std::stoi(l));
            cfg.estimators.clear();
            for (const auto& e : split_list(sim_est)) cfg.estimators.insert(cce::parse_estimator(e));
            if (sim_reps < 1) throw cce::InvalidInput("--reps must be positive");
            cfg.n_reps = sim_reps;
            cfg.serial = sim_serial;
            cfg.base_seed = sim_seed;
            cfg.threads = sim_threads;
            if (!sim_no_ape) cfg.policy = cce::default_policy(4);

            const cce::McTable table = cce::run_grid(cfg);
            std::cout << cce::format_table(table);
            if (!sim_csv.empty()) {
                std::ofstream os(sim_csv);
                if (!os) throw cce::InvalidInput("cannot write " + sim_csv);
                cce::write_table_csv(os, table);
            }
            if (!sim_json.empty()) write_json(table_json(table), sim_json);
            if (!sim_emit.empty()) {
                namespace fs = std::filesystem;
                fs::create_directories(sim_emit);
                for (const auto& size : cfg.sizes)
                    for (int rep = 0; rep < cfg.n_reps; ++rep) {
                        const auto path = fs::path(sim_emit) / ("panel_n" + std::to_string(size.n_units) + "_t" +
                                                                std::to_string(size.n_periods) + "_rep" +
                                                                std::to_string(rep) + ".csv");
                        cce::write_panel_csv(path.string(), cce::replication_draw(cfg, size, rep).panel);
                    }
                std::ofstream os(fs::path(sim_emit) / "mc_table.csv");
                cce::write_table_csv(os, table);
            }
        }
    } catch (const cce::InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const cce::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return 0;
}
