#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "error.hpp"

namespace lcd {

/// Gamma distribution in shape/scale form.
struct GammaParams {
    double shape = 1.0;
    double scale = 1.0;

    double mean() const noexcept { return shape * scale; }
    bool valid() const noexcept {
        return std::isfinite(shape) && std::isfinite(scale) && shape > 0.0 && scale > 0.0;
    }
};

struct BetaParams {
    double a = 1.0;
    double b = 1.0;

    bool valid() const noexcept { return std::isfinite(a) && std::isfinite(b) && a > 0.0 && b > 0.0; }
};

namespace detail {

inline void require_positive(double x, const char *fn) {
    if (!(x > 0.0) || std::isnan(x))
        throw DomainError(std::string(fn) + ": argument must be positive, got " + std::to_string(x));
}

// Lanczos approximation, g = 607/128, 14 terms (Godfrey's coefficients).
inline double lanczos_log_gamma(double x) noexcept {
    static constexpr double cof[14] = {57.1562356658629235,     -59.5979603554754912,    14.1360979747417471,
                                       -0.491913816097620199,   .339946499848118887e-4,  .465236289270485756e-4,
                                       -.983744753048795646e-4, .158088703224912494e-3,  -.210264441724104883e-3,
                                       .217439618115212643e-3,  -.164318106536763890e-3, .844182239838527433e-4,
                                       -.261908384015814087e-4, .368991826595316234e-5};
    double y = x;
    double tmp = x + 5.24218750000000000;
    tmp = (x + 0.5) * std::log(tmp) - tmp;
    double ser = 0.999999999999997092;
    for (double c : cof)
        ser += c / ++y;
    return tmp + std::log(2.5066282746310005 * ser / x);
}

} // namespace detail

/// Natural log of the gamma function for x > 0.
inline double log_gamma(double x) {
    detail::require_positive(x, "log_gamma");
    if (x == 1.0 || x == 2.0)
        return 0.0;
    if (x < 0.5) {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        using std::numbers::pi;
        return std::log(pi / std::sin(pi * x)) - detail::lanczos_log_gamma(1.0 - x);
    }
    return detail::lanczos_log_gamma(x);
}

/// Digamma ψ(x) for x > 0: upward recurrence to x >= 10, then the asymptotic series.
inline double digamma(double x) {
    detail::require_positive(x, "digamma");
    double shift = 0.0;
    while (x < 10.0) {
        shift -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // Bernoulli terms B_2k / (2k x^2k), k = 1..7
    const double series =
        inv2 * (1.0 / 12 -
                inv2 * (1.0 / 120 -
                        inv2 * (1.0 / 252 -
                                inv2 * (1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 - inv2 / 12.0))))));
    return shift + std::log(x) - 0.5 * inv - series;
}

/// log B(a, b).
inline double log_beta(double a, double b) { return log_gamma(a) + log_gamma(b) - log_gamma(a + b); }
inline double log_beta(const BetaParams &p) { return log_beta(p.a, p.b); }

/// E[log X] for X ~ Gamma(shape, scale).
inline double expected_log(const GammaParams &p) { return digamma(p.shape) + std::log(p.scale); }

/// KL(p || q) between two gamma distributions (shape/scale). Always >= 0.
inline double gamma_kl(const GammaParams &p, const GammaParams &q) {
    if (!p.valid() || !q.valid())
        throw DomainError("gamma_kl: parameters must be positive and finite");
    return (p.shape - q.shape) * digamma(p.shape) - log_gamma(p.shape) + log_gamma(q.shape) +
           q.shape * (std::log(q.scale) - std::log(p.scale)) + p.shape * (p.scale / q.scale - 1.0);
}

} // namespace lcd
