#pragma once

// Long-format panel files: header `id,time,y,x1,...,xk`, one row per (unit, period).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "cce/error.hpp"
#include "cce/panel.hpp"

namespace cce {

/// Panel plus the labels it was read with.
struct LabeledPanel {
    Panel panel;
    std::vector<std::string> unit_labels;    // first-appearance order
    std::vector<std::string> period_labels;  // ascending
    std::vector<std::string> covariate_names;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

inline LabeledPanel read_panel_csv(std::istream& in, const std::string& source = "input") {
    std::string line;
    std::size_t line_no = 0;
    auto where = [&] { return source + ":" + std::to_string(line_no) + ": "; };

    do {
        if (!std::getline(in, line)) throw InvalidInput(source + ": empty file");
        ++line_no;
    } while (detail::trim(line).empty());
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    const auto header = detail::split_fields(line);
    if (header.size() < 4 || header[0] != "id" || header[1] != "time" || header[2] != "y")
        throw InvalidInput(where() + "header must be id,time,y,x1,...,xk");
    LabeledPanel out;
    for (std::size_t j = 3; j < header.size(); ++j) {
        if (header[j].empty()) throw InvalidInput(where() + "empty covariate name in header");
        out.covariate_names.emplace_back(header[j]);
    }
    const std::size_t width = header.size();
    const std::size_t k = width - 3;

    struct Row {
        std::size_t unit, period;
        std::vector<double> values;  // y, x1..xk
        std::size_t line;
    };
    std::vector<Row> rows;
    std::unordered_map<std::string, std::size_t> unit_index;
    std::unordered_map<std::string, std::size_t> period_index;
    std::vector<std::string> period_seen;

    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_fields(line);
        if (fields.size() != width)
            throw InvalidInput(where() + "expected " + std::to_string(width) + " fields, found " +
                               std::to_string(fields.size()));
        if (fields[0].empty() || fields[1].empty()) throw InvalidInput(where() + "empty id or time label");
        Row row;
        row.line = line_no;
        const std::string id(fields[0]);
        const std::string time(fields[1]);
        auto [uit, unew] = unit_index.try_emplace(id, out.unit_labels.size());
        if (unew) out.unit_labels.push_back(id);
        auto [pit, pnew] = period_index.try_emplace(time, period_seen.size());
        if (pnew) period_seen.push_back(time);
        row.unit = uit->second;
        row.period = pit->second;
        row.values.reserve(k + 1);
        for (std::size_t j = 2; j < width; ++j) {
            const auto v = detail::parse_double(fields[j]);
            if (!v || !std::isfinite(*v))
                throw InvalidInput(where() + "non-numeric value '" + std::string(fields[j]) + "' in column " +
                                   std::string(header[j]));
            row.values.push_back(*v);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InvalidInput(source + ": no data rows");

    // Sort periods numerically when every label is numeric, lexicographically otherwise.
    std::vector<std::size_t> order(period_seen.size());
    for (std::size_t p = 0; p < order.size(); ++p) order[p] = p;
    std::vector<std::optional<double>> numeric(period_seen.size());
    bool all_numeric = true;
    for (std::size_t p = 0; p < period_seen.size(); ++p) {
        numeric[p] = detail::parse_double(period_seen[p]);
        all_numeric = all_numeric && numeric[p].has_value();
    }
    if (all_numeric) {
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return *numeric[a] < *numeric[b]; });
    } else {
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return period_seen[a] < period_seen[b]; });
    }
    std::vector<std::size_t> rank(order.size());
    for (std::size_t p = 0; p < order.size(); ++p) {
        rank[order[p]] = p;
        out.period_labels.push_back(period_seen[order[p]]);
    }

    const std::size_t N = out.unit_labels.size();
    const std::size_t T = out.period_labels.size();
    MatrixXd Y(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(T));
    std::vector<MatrixXd> X(N, MatrixXd(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(k)));
    std::vector<std::size_t> first_line(N * T, 0);
    for (const auto& row : rows) {
        const std::size_t t = rank[row.period];
        auto& slot = first_line[row.unit * T + t];
        if (slot != 0)
            throw InvalidInput(source + ":" + std::to_string(row.line) + ": duplicate cell (id=" +
                               out.unit_labels[row.unit] + ", time=" + out.period_labels[t] + "), first seen on line " +
                               std::to_string(slot));
        slot = row.line;
        const auto i = static_cast<Eigen::Index>(row.unit);
        const auto ti = static_cast<Eigen::Index>(t);
        Y(i, ti) = row.values[0];
        for (std::size_t j = 0; j < k; ++j) X[row.unit](ti, static_cast<Eigen::Index>(j)) = row.values[j + 1];
    }

    if (rows.size() != N * T) {
        std::ostringstream msg;
        msg << source << ": unbalanced panel, " << (N * T - rows.size()) << " missing cell(s):";
        int listed = 0;
        for (std::size_t i = 0; i < N && listed < 10; ++i)
            for (std::size_t t = 0; t < T && listed < 10; ++t)
                if (first_line[i * T + t] == 0) {
                    msg << " (id=" << out.unit_labels[i] << ", time=" << out.period_labels[t] << ")";
                    ++listed;
                }
        throw InvalidInput(msg.str());
    }
    out.panel = Panel(std::move(Y), std::move(X));
    return out;
}

inline LabeledPanel read_panel_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path);
    return read_panel_csv(in, path);
}

inline Panel parse_panel_csv(const std::string& path) { return read_panel_csv(path).panel; }

/// Writes with labels 1..N and 1..T and 17 significant digits, so reading back is exact.
inline void write_panel_csv(std::ostream& out, const Panel& panel) {
    const auto k = panel.n_covariates();
    out << "id,time,y";
    for (std::size_t j = 1; j <= k; ++j) out << ",x" << j;
    out << '\n';
    for (std::size_t i = 0; i < panel.n_units(); ++i) {
        const MatrixXd& x = panel.unit_covariates(i);
        for (std::size_t t = 0; t < panel.n_periods(); ++t) {
            out << (i + 1) << ',' << (t + 1) << ',' << detail::format_double(panel.y(i, t));
            for (std::size_t j = 0; j < k; ++j)
                out << ',' << detail::format_double(x(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)));
            out << '\n';
        }
    }
}

inline void write_panel_csv(const std::string& path, const Panel& panel) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path);
    write_panel_csv(out, panel);
    if (!out) throw InvalidInput("write failed: " + path);
}

} // namespace cce
