#pragma once

// Model families and the derivatives of their log-likelihood in the single
// index z = beta'x + lambda'f.

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "cce/error.hpp"

namespace cce {

enum class Family { Logit, Probit, Poisson, Gaussian };

inline std::string_view family_name(Family f) {
    switch (f) {
        case Family::Logit: return "logit";
        case Family::Probit: return "probit";
        case Family::Poisson: return "poisson";
        case Family::Gaussian: return "gaussian";
    }
    return "unknown";
}

inline Family parse_family(std::string_view s) {
    if (s == "logit") return Family::Logit;
    if (s == "probit") return Family::Probit;
    if (s == "poisson") return Family::Poisson;
    if (s == "gaussian") return Family::Gaussian;
    throw InvalidInput("unknown family '" + std::string(s) + "' (expected logit, probit, poisson or gaussian)");
}

inline bool is_binary(Family f) { return f == Family::Logit || f == Family::Probit; }

/// l and its first four derivatives in z. Entries above the requested order are 0.
struct IndexDerivatives {
    double value = 0.0;
    std::array<double, 5> d{};  // d[j] = l^(j); d[0] == value

    [[nodiscard]] double operator[](int j) const { return d[static_cast<std::size_t>(j)]; }
};

namespace detail {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
inline constexpr double kTailCut = -6.0;

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z - kLogSqrt2Pi); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

// (1 - Phi(x)) / phi(x) for x >= 6, by backward evaluation of the
// Laplace continued fraction 1/(x+1/(x+2/(x+3/(x+...)))).
inline double mills_ratio_upper(double x) {
    double t = x;
    for (int j = 80; j >= 1; --j) t = x + j / t;
    return 1.0 / t;
}

inline double log_normal_cdf(double z) {
    if (z < kTailCut) return -0.5 * z * z - kLogSqrt2Pi + std::log(mills_ratio_upper(-z));
    if (z > 0.0) return std::log1p(-0.5 * std::erfc(z * kInvSqrt2));
    return std::log(normal_cdf(z));
}

// phi(z) / Phi(z)
inline double inverse_mills(double z) {
    if (z < kTailCut) return 1.0 / mills_ratio_upper(-z);
    return normal_pdf(z) / normal_cdf(z);
}

inline double log_logistic(double z) {
    // log G(z), G(z) = 1 / (1 + e^{-z})
    return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

inline double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Derivatives of log Phi(u) in u, orders 0..max_order.
inline std::array<double, 5> log_normal_cdf_derivs(double u, int max_order) {
    std::array<double, 5> out{};
    out[0] = log_normal_cdf(u);
    if (max_order < 1) return out;
    const double m = inverse_mills(u);
    out[1] = m;
    if (max_order < 2) return out;
    const double m1 = -m * (u + m);
    out[2] = m1;
    if (max_order < 3) return out;
    const double m2 = -m1 * (u + 2.0 * m) - m;
    out[3] = m2;
    if (max_order < 4) return out;
    out[4] = -m2 * (u + 2.0 * m) - 2.0 * m1 * (1.0 + m1);
    return out;
}

inline bool in_domain(Family family, double y, double z) {
    if (!std::isfinite(z) || !std::isfinite(y)) return false;
    switch (family) {
        case Family::Logit:
        case Family::Probit: return y == 0.0 || y == 1.0;
        case Family::Poisson: return z > 0.0 && y >= 0.0 && y == std::floor(y);
        case Family::Gaussian: return true;
    }
    return false;
}

inline void check_domain(Family family, double y, double z) {
    if (in_domain(family, y, z)) return;
    std::string what = std::string(family_name(family)) + ": ";
    if (!std::isfinite(z) || !std::isfinite(y)) {
        what += "non-finite outcome or index";
    } else if (is_binary(family)) {
        what += "outcome must be 0 or 1, got " + std::to_string(y);
    } else if (family == Family::Poisson && !(z > 0.0)) {
        what += "index must be > 0, got z = " + std::to_string(z);
    } else {
        what += "outcome must be a non-negative integer, got " + std::to_string(y);
    }
    throw InvalidInput(what);
}

/// Unchecked evaluation; caller guarantees in_domain(family, y, z).
inline IndexDerivatives evaluate(Family family, double y, double z, int max_order) {
    IndexDerivatives r;
    auto& d = r.d;
    switch (family) {
        case Family::Logit: {
            const double G = logistic(z);
            const double Gc = logistic(-z);  // 1 - G without cancellation
            // y z - log(1 + e^z) == y z + log G(-z)
            d[0] = y * z + log_logistic(-z);
            if (max_order >= 1) d[1] = y == 1.0 ? Gc : -G;
            const double g = G * Gc;
            if (max_order >= 2) d[2] = -g;
            if (max_order >= 3) d[3] = -g * (Gc - G);
            if (max_order >= 4) d[4] = -g * (1.0 - 6.0 * g);
            break;
        }
        case Family::Probit: {
            if (y == 1.0) {
                d = log_normal_cdf_derivs(z, max_order);
            } else {
                // log Phi(-z): odd orders flip sign
                const auto p = log_normal_cdf_derivs(-z, max_order);
                d = {p[0], -p[1], p[2], -p[3], p[4]};
            }
            break;
        }
        case Family::Poisson: {
            d[0] = y * std::log(z) - z - std::lgamma(y + 1.0);
            const double iz = 1.0 / z;
            d[1] = y * iz - 1.0;
            d[2] = -y * iz * iz;
            d[3] = 2.0 * y * iz * iz * iz;
            d[4] = -6.0 * y * iz * iz * iz * iz;
            break;
        }
        case Family::Gaussian: {
            const double u = y - z;
            d[0] = -u * u;
            d[1] = 2.0 * u;
            d[2] = -2.0;
            break;
        }
    }
    for (int j = max_order + 1; j <= 4; ++j) d[static_cast<std::size_t>(j)] = 0.0;
    r.value = d[0];
    return r;
}

} // namespace detail

/// log L(y, z). Throws InvalidInput outside the family's domain.
inline double log_density(Family family, double y, double z) {
    detail::check_domain(family, y, z);
    return detail::evaluate(family, y, z, 0).value;
}

/// l^(order)(y, z) for order in 1..4.
inline double index_derivative(Family family, double y, double z, int order) {
    if (order < 1 || order > 4) throw InvalidInput("index_derivative: order must be in 1..4, got " + std::to_string(order));
    detail::check_domain(family, y, z);
    return detail::evaluate(family, y, z, order)[order];
}

/// All derivatives up to max_order in one pass (checked).
inline IndexDerivatives index_derivatives(Family family, double y, double z, int max_order = 4) {
    detail::check_domain(family, y, z);
    return detail::evaluate(family, y, z, max_order);
}

/// Conditional mean E[y | z] and its z-derivatives up to order 3.
/// Binary: G and g, g', g''. Poisson and Gaussian: the index itself.
inline std::array<double, 4> mean_function(Family family, double z) {
    switch (family) {
        case Family::Logit: {
            const double G = detail::logistic(z);
            const double Gc = detail::logistic(-z);
            const double g = G * Gc;
            return {G, g, g * (Gc - G), g * (1.0 - 6.0 * g)};
        }
        case Family::Probit: {
            const double phi = detail::normal_pdf(z);
            return {detail::normal_cdf(z), phi, -z * phi, (z * z - 1.0) * phi};
        }
        case Family::Poisson:
            if (!(z > 0.0)) throw InvalidInput("poisson: index must be > 0, got z = " + std::to_string(z));
            return {z, 1.0, 0.0, 0.0};
        case Family::Gaussian:
            return {z, 1.0, 0.0, 0.0};
    }
    return {};
}

} // namespace cce
