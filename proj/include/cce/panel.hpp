#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cce/error.hpp"

namespace cce {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// (m + m') / 2 into a fresh matrix, so `x = symmetrized(x)` is alias-free.
inline MatrixXd symmetrized(const MatrixXd& m) {
    MatrixXd s = m.transpose();
    s += m;
    s *= 0.5;
    return s;
}

/// Balanced N x T panel of scalar outcomes and k covariates.
///
/// Outcomes are stored N x T. Covariates are stored unit-major: one T x k
/// block per unit, so row t of `covariates[i]` is x_it'.
class Panel {
public:
    Panel() = default;

    Panel(MatrixXd outcomes, std::vector<MatrixXd> covariates)
        : outcomes_(std::move(outcomes)), covariates_(std::move(covariates)) {
        validate();
    }

    [[nodiscard]] std::size_t n_units() const { return static_cast<std::size_t>(outcomes_.rows()); }
    [[nodiscard]] std::size_t n_periods() const { return static_cast<std::size_t>(outcomes_.cols()); }
    [[nodiscard]] std::size_t n_covariates() const {
        return covariates_.empty() ? 0 : static_cast<std::size_t>(covariates_.front().cols());
    }

    [[nodiscard]] const MatrixXd& outcomes() const { return outcomes_; }
    [[nodiscard]] double y(std::size_t i, std::size_t t) const {
        return outcomes_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
    }
    /// T x k covariate block of unit i.
    [[nodiscard]] const MatrixXd& unit_covariates(std::size_t i) const { return covariates_[i]; }
    [[nodiscard]] const std::vector<MatrixXd>& covariates() const { return covariates_; }

    /// Units [begin, end), all periods.
    [[nodiscard]] Panel unit_slice(std::size_t begin, std::size_t end) const {
        if (begin >= end || end > n_units()) throw InvalidInput("unit_slice: bad range");
        const auto b = static_cast<Eigen::Index>(begin);
        const auto n = static_cast<Eigen::Index>(end - begin);
        MatrixXd y = outcomes_.middleRows(b, n);
        std::vector<MatrixXd> x(covariates_.begin() + b, covariates_.begin() + b + n);
        return Panel(std::move(y), std::move(x));
    }

    /// Periods [begin, end), all units.
    [[nodiscard]] Panel period_slice(std::size_t begin, std::size_t end) const {
        if (begin >= end || end > n_periods()) throw InvalidInput("period_slice: bad range");
        const auto b = static_cast<Eigen::Index>(begin);
        const auto n = static_cast<Eigen::Index>(end - begin);
        MatrixXd y = outcomes_.middleCols(b, n);
        std::vector<MatrixXd> x;
        x.reserve(covariates_.size());
        for (const auto& xi : covariates_) x.emplace_back(xi.middleRows(b, n));
        return Panel(std::move(y), std::move(x));
    }

    friend bool operator==(const Panel& a, const Panel& b) {
        if (a.outcomes_.rows() != b.outcomes_.rows() || a.outcomes_.cols() != b.outcomes_.cols()) return false;
        if (a.outcomes_ != b.outcomes_ || a.covariates_.size() != b.covariates_.size()) return false;
        for (std::size_t i = 0; i < a.covariates_.size(); ++i) {
            if (a.covariates_[i].cols() != b.covariates_[i].cols() || a.covariates_[i] != b.covariates_[i]) return false;
        }
        return true;
    }

private:
    void validate() const {
        const auto n = outcomes_.rows();
        const auto t = outcomes_.cols();
        if (n < 2 || t < 2) throw InvalidInput("panel needs N >= 2 and T >= 2");
        if (static_cast<Eigen::Index>(covariates_.size()) != n)
            throw InvalidInput("panel: covariate blocks (" + std::to_string(covariates_.size()) +
                               ") do not match N (" + std::to_string(n) + ")");
        const auto k = covariates_.front().cols();
        if (k < 1) throw InvalidInput("panel needs k >= 1 covariates");
        for (std::size_t i = 0; i < covariates_.size(); ++i) {
            if (covariates_[i].rows() != t || covariates_[i].cols() != k)
                throw InvalidInput("panel: covariate block of unit " + std::to_string(i) + " is not T x k");
            if (!covariates_[i].allFinite())
                throw InvalidInput("panel: non-finite covariate in unit " + std::to_string(i));
        }
        if (!outcomes_.allFinite()) throw InvalidInput("panel: non-finite outcome");
    }

    MatrixXd outcomes_;
    std::vector<MatrixXd> covariates_;
};

} // namespace cce
