#pragma once

// Closed-form a priori bounds U(lambda), their minimizers, the C(q) factors
// relating U(q lambda*) to U(lambda*), and the high-probability bounds for
// the grid-ERM parameter. All logarithms are natural.

#include "regselect/spectral_reg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace regselect {

struct TheoryParams {
    double tau = 0.0;     // noise level, E[||eps||^2 | X] <= tau^2
    double beta = 1.0;    // source-condition magnitude
    double s = 0.5;       // source exponent
    double alpha = 0.5;   // effective exponent
    double c1 = 1.0;      // filter constants
    double c2 = 1.0;
    double c0 = 0.0;      // Lipschitz constant of A' (nonlinear case)
    double m = 4.0;       // loss bound M
    double eta = 0.05;    // confidence level
    double n = 50.0;      // training-set size
    double grid_size = 500.0;  // N
};

struct OptimalParameter {
    double lambda = 0.0;
    double bound = 0.0;
};

namespace detail {

inline void check_positive(double v, const char* what)
{
    if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + " must be > 0");
}

inline void check_confidence(const TheoryParams& p)
{
    if (!(p.eta > 0.0 && p.eta < 1.0)) throw std::invalid_argument("eta must lie in (0, 1)");
    check_positive(p.m, "M");
    check_positive(p.n, "n");
    check_positive(p.grid_size, "N");
}

} // namespace detail

/// U(lambda) = C1^2 tau^2 / lambda + C2^2 beta^2 lambda^(2 alpha).
inline double spectral_bound(double lambda, const TheoryParams& p)
{
    detail::check_lambda(lambda);
    return p.c1 * p.c1 * p.tau * p.tau / lambda
           + p.c2 * p.c2 * p.beta * p.beta * std::pow(lambda, 2.0 * p.alpha);
}

/// lambda* = (C1^2 / (2 alpha C2^2))^(1/(2alpha+1)) (tau/beta)^(2/(2alpha+1)).
inline OptimalParameter spectral_optimal(const TheoryParams& p)
{
    detail::check_positive(p.tau, "tau");
    detail::check_positive(p.beta, "beta");
    detail::check_positive(p.alpha, "alpha");
    const double e = 1.0 / (2.0 * p.alpha + 1.0);
    const double lambda = std::pow(p.c1 * p.c1 / (2.0 * p.alpha * p.c2 * p.c2), e)
                          * std::pow(p.tau / p.beta, 2.0 * e);
    // At the stationary point the two terms are in ratio 2 alpha : 1, so
    // U(lambda*) = (2 alpha + 1) C2^2 beta^2 lambda*^(2 alpha).
    const double bound = (2.0 * p.alpha + 1.0) * p.c2 * p.c2 * p.beta * p.beta
                         * std::pow(lambda, 2.0 * p.alpha);
    return {lambda, bound};
}

/// U(lambda) = tau^2 / (2 lambda) + beta^2 lambda / 2.
inline double convex_bound(double lambda, const TheoryParams& p)
{
    detail::check_lambda(lambda);
    return p.tau * p.tau / (2.0 * lambda) + p.beta * p.beta * lambda / 2.0;
}

/// lambda* = tau / beta, U(lambda*) = beta tau.
inline OptimalParameter convex_optimal(const TheoryParams& p)
{
    detail::check_positive(p.tau, "tau");
    detail::check_positive(p.beta, "beta");
    return {p.tau / p.beta, p.beta * p.tau};
}

inline void check_nonlinear(const TheoryParams& p)
{
    if (!(p.beta * p.c0 < 1.0)) throw std::invalid_argument("nonlinear bound needs beta * C0 < 1");
}

/// U(lambda) = (tau + beta lambda)^2 / ((1 - beta C0) lambda).
inline double nonlinear_bound(double lambda, const TheoryParams& p)
{
    detail::check_lambda(lambda);
    check_nonlinear(p);
    const double a = p.tau + p.beta * lambda;
    return a * a / ((1.0 - p.beta * p.c0) * lambda);
}

/// lambda* = tau / beta, U(lambda*) = 4 tau beta / (1 - beta C0).
inline OptimalParameter nonlinear_optimal(const TheoryParams& p)
{
    check_nonlinear(p);
    detail::check_positive(p.tau, "tau");
    detail::check_positive(p.beta, "beta");
    return {p.tau / p.beta, 4.0 * p.tau * p.beta / (1.0 - p.beta * p.c0)};
}

enum class BoundFamily { Spectral, Convex, Nonlinear };

/// C(q) with U(q lambda*) = C(q) U(lambda*); C(1) = 1 and nondecreasing for q >= 1.
inline double cq_factor(BoundFamily family, double q, double alpha = 0.5)
{
    if (!(q >= 1.0)) throw std::invalid_argument("C(q) needs q >= 1");
    switch (family) {
    case BoundFamily::Spectral:
        detail::check_positive(alpha, "alpha");
        return (2.0 * alpha + std::pow(q, 2.0 * alpha + 1.0)) / (q * (2.0 * alpha + 1.0));
    case BoundFamily::Convex:
        return (1.0 + q * q) / (2.0 * q);
    case BoundFamily::Nonlinear:
        return (1.0 + q) * (1.0 + q) / (4.0 * q);
    }
    throw std::logic_error("cq_factor: unknown family");
}

/// (13 M / (2 n)) log(2 N / eta).
inline double erm_additive_term(const TheoryParams& p)
{
    detail::check_confidence(p);
    return 13.0 * p.m / (2.0 * p.n) * std::log(2.0 * p.grid_size / p.eta);
}

/// 2 C(Q) U(lambda*) + (13 M / (2 n)) log(2 N / eta).
inline double erm_bound(double u_star, double cq, const TheoryParams& p)
{
    if (!(u_star >= 0.0) || !(cq >= 0.0)) {
        throw std::invalid_argument("erm_bound: U(lambda*) and C(Q) must be >= 0");
    }
    return 2.0 * cq * u_star + erm_additive_term(p);
}

/// L(f_{lambda_grid}) + 2 sqrt((M/n) log(2N/eta)).
inline double hoeffding_bound(double grid_oracle_risk, const TheoryParams& p)
{
    detail::check_confidence(p);
    return grid_oracle_risk + 2.0 * std::sqrt(p.m / p.n * std::log(2.0 * p.grid_size / p.eta));
}

/// min(qualification, s): Tikhonov has qualification 1, Landweber and cut-off are unlimited.
inline double effective_alpha(const FilterKind& filter, double s)
{
    detail::check_positive(s, "s");
    return std::holds_alternative<Tikhonov>(filter) ? std::min(1.0, s) : s;
}

} // namespace regselect
