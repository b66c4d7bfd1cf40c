#pragma once

// Convex variational regularization: soft-thresholding, FISTA for the lasso,
// accelerated dual projected gradient for anisotropic TV denoising, and the
// Bregman divergences of the l1 norm and of TV.

#include "regselect/operators.hpp"
#include "regselect/spectral_reg.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace regselect {

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SolverConfig {
    // Stop once ||x_k - x_{k-1}||_2 < tolerance and a plain proximal-gradient
    // step from x_k also moves it by less than tolerance.
    double tolerance = 1e-6;
    long max_iterations = 200000;

    void validate() const
    {
        if (!(tolerance > 0.0)) throw std::invalid_argument("solver tolerance must be > 0");
        if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    }
};

inline Vector soft_threshold(const Vector& y, double lambda)
{
    if (!(lambda >= 0.0)) throw std::invalid_argument("soft_threshold: lambda must be >= 0");
    Vector out(y.size());
    for (Index i = 0; i < y.size(); ++i) {
        const double v = y[i];
        out[i] = std::abs(v) > lambda ? v - std::copysign(lambda, v) : 0.0;
    }
    return out;
}

/// sign(x) with sign(0) = 0.
inline Vector l1_subgradient(const Vector& x)
{
    return x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

struct LassoResult {
    Vector x;
    long iterations = 0;
};

/*
 * FISTA with constant step 1/||A||^2 and adaptive restart for min 1/2 ||Ax - y||^2 + lambda ||x||_1.
 * `start` seeds the iteration (warm start).
 */
template <LinearMap Op>
LassoResult lasso_fista(const Op& a, const Vector& y, double lambda, const SolverConfig& cfg,
                        const Vector& start)
{
    detail::check_lambda(lambda);
    cfg.validate();
    detail::check_dim(y.size(), a.rows(), "lasso_solve");
    detail::check_dim(start.size(), a.cols(), "lasso_solve start");
    const double lip = a.norm() * a.norm();
    if (!(lip > 0.0)) return {Vector::Zero(a.cols()), 0};
    const double step = 1.0 / lip;

    Vector x = start;
    Vector z = x;
    Vector x_old(x.size());
    double t = 1.0;
    for (long it = 1; it <= cfg.max_iterations; ++it) {
        x_old.swap(x);
        x = soft_threshold(z - step * a.adjoint_apply(a.apply(z) - y), lambda * step);
        const Vector diff = x - x_old;
        if ((z - x).dot(diff) > 0.0) {
            // Gradient-based momentum restart.
            t = 1.0;
            z = x;
        } else {
            const double t_old = t;
            t = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            z = x + ((t_old - 1.0) / t) * diff;
        }
        if (diff.norm() < cfg.tolerance) {
            const Vector plain = soft_threshold(x - step * a.adjoint_apply(a.apply(x) - y), lambda * step);
            if ((plain - x).norm() < cfg.tolerance) return {std::move(x), it};
        }
    }
    throw ConvergenceError("lasso_solve: no convergence within "
                           + std::to_string(cfg.max_iterations) + " iterations");
}

template <LinearMap Op>
Vector lasso_solve(const Op& a, const Vector& y, double lambda, const SolverConfig& cfg = {})
{
    return lasso_fista(a, y, lambda, cfg, Vector::Zero(a.cols())).x;
}

inline Vector lasso_solve(const ForwardOperator& a, const Vector& y, double lambda,
                          const SolverConfig& cfg = {})
{
    return std::visit([&](const auto& o) { return lasso_solve(o, y, lambda, cfg); }, a);
}

/// A^T (y - A x) / lambda clipped to [-1, 1]; an element of d||.||_1(x) at the exact optimum.
template <LinearMap Op>
Vector lasso_certificate(const Op& a, const Vector& y, const Vector& x, double lambda)
{
    detail::check_lambda(lambda);
    return (a.adjoint_apply(y - a.apply(x)) / lambda).cwiseMax(-1.0).cwiseMin(1.0);
}

inline double total_variation(const Vector& image, const GradientOperator& grad)
{
    return grad.apply(image).lpNorm<1>();
}

inline double total_variation(const Vector& image)
{
    const auto side = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(image.size()))));
    if (side * side != image.size()) throw DimensionError("total_variation: image is not square");
    return total_variation(image, GradientOperator(side));
}

struct TvSolution {
    Vector image;
    Vector dual;  // p with |p_j| <= lambda and image = y - D^T p
    double lambda = 0.0;
    long iterations = 0;

    /// eta = p / lambda, so that D^T eta = (y - image) / lambda lies in dTV(image).
    Vector certificate() const { return dual / lambda; }
};

/*
 * Accelerated projected gradient on the dual of
 *   min_x 1/2 ||x - y||^2 + lambda ||D x||_1,
 * i.e. min_{|p|_inf <= lambda} 1/2 ||y - D^T p||^2 with step 1/||D||^2.
 * Stops per SolverConfig, measured on the primal image.
 */
inline TvSolution tv_denoise(const Vector& y, Index side, double lambda, const SolverConfig& cfg,
                             const Vector& dual_start)
{
    detail::check_lambda(lambda);
    cfg.validate();
    const GradientOperator grad(side);
    detail::check_dim(y.size(), grad.cols(), "tv_denoise");
    if (grad.rows() == 0) return {y, Vector(), lambda, 0};
    detail::check_dim(dual_start.size(), grad.rows(), "tv_denoise start");

    const double lip = grad.norm() * grad.norm();
    const double step = 1.0 / lip;
    auto project = [lambda](Vector& p) { p = p.cwiseMax(-lambda).cwiseMin(lambda); };

    Vector p = dual_start;
    project(p);
    Vector z = p;
    Vector x = y - grad.adjoint_apply(p);
    double t = 1.0;
    for (long it = 1; it <= cfg.max_iterations; ++it) {
        const Vector residual = y - grad.adjoint_apply(z);
        Vector p_new = z + step * grad.apply(residual);
        project(p_new);
        if ((z - p_new).dot(p_new - p) > 0.0) {
            t = 1.0;
            z = p_new;
        } else {
            const double t_old = t;
            t = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            z = p_new + ((t_old - 1.0) / t) * (p_new - p);
        }
        p.swap(p_new);
        Vector x_new = y - grad.adjoint_apply(p);
        const double diff = (x_new - x).norm();
        x.swap(x_new);
        if (diff < cfg.tolerance) {
            Vector plain = p + step * grad.apply(x);
            project(plain);
            if (grad.adjoint_apply(plain - p).norm() < cfg.tolerance) {
                return {std::move(x), std::move(p), lambda, it};
            }
        }
    }
    throw ConvergenceError("tv_denoise: no convergence within "
                           + std::to_string(cfg.max_iterations) + " iterations");
}

inline TvSolution tv_denoise(const Vector& y, Index side, double lambda,
                             const SolverConfig& cfg = {1e-8, 200000})
{
    return tv_denoise(y, side, lambda, cfg, Vector::Zero(2 * side * (side - 1)));
}

/// ||x||_1 - ||x_ref||_1 - <eta, x - x_ref> for a given subgradient eta at x_ref.
inline double bregman_l1(const Vector& x, const Vector& x_ref, const Vector& eta)
{
    detail::check_dim(x_ref.size(), x.size(), "bregman_l1");
    detail::check_dim(eta.size(), x.size(), "bregman_l1 subgradient");
    return x.lpNorm<1>() - x_ref.lpNorm<1>() - eta.dot(x - x_ref);
}

/// Bregman divergence of ||.||_1 with the sign subgradient at x_ref: ||x||_1 - <sign(x_ref), x>.
inline double bregman_l1(const Vector& x, const Vector& x_ref)
{
    detail::check_dim(x_ref.size(), x.size(), "bregman_l1");
    return x.lpNorm<1>() - l1_subgradient(x_ref).dot(x);
}

/// TV(x) - TV(x_ref) - <D^T eta, x - x_ref>, eta a dual certificate at x_ref.
inline double bregman_tv(const Vector& x, const Vector& x_ref, const Vector& eta,
                         const GradientOperator& grad)
{
    detail::check_dim(x.size(), grad.cols(), "bregman_tv");
    detail::check_dim(x_ref.size(), grad.cols(), "bregman_tv");
    if (eta.size() != grad.rows()) {
        throw std::invalid_argument("bregman_tv: missing or malformed dual certificate");
    }
    const Vector gx = grad.apply(x);
    const Vector gr = grad.apply(x_ref);
    return gx.lpNorm<1>() - gr.lpNorm<1>() - eta.dot(gx - gr);
}

inline double bregman_tv(const Vector& x, const TvSolution& ref)
{
    const auto side = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(x.size()))));
    return bregman_tv(x, ref.image, ref.certificate(), GradientOperator(side));
}

// Regularization paths over a list of parameters, in the order given.

struct LassoPath {
    ForwardOperator op;
};
struct TvPath {
    Index side;
};
struct TikhonovPath {
    ForwardOperator op;
};
struct SoftThresholdPath {};

using PathMethod = std::variant<LassoPath, TvPath, TikhonovPath, SoftThresholdPath>;

inline std::vector<Vector> regularization_path(const PathMethod& method, const Vector& y,
                                               std::span<const double> lambdas,
                                               const SolverConfig& cfg = {},
                                               bool warm_start = true)
{
    if (lambdas.empty()) throw std::invalid_argument("regularization_path: empty grid");
    std::vector<Vector> out;
    out.reserve(lambdas.size());
    std::visit(
        [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, LassoPath>) {
                Vector start = Vector::Zero(cols(m.op));
                for (double lambda : lambdas) {
                    auto res = std::visit(
                        [&](const auto& o) { return lasso_fista(o, y, lambda, cfg, start); },
                        m.op);
                    if (warm_start) start = res.x;
                    out.push_back(std::move(res.x));
                }
            } else if constexpr (std::is_same_v<M, TvPath>) {
                Vector start = Vector::Zero(2 * m.side * (m.side - 1));
                for (double lambda : lambdas) {
                    auto res = tv_denoise(y, m.side, lambda, cfg, start);
                    if (warm_start) start = res.dual;
                    out.push_back(std::move(res.image));
                }
            } else if constexpr (std::is_same_v<M, TikhonovPath>) {
                if (const auto* dense = std::get_if<DenseOperator>(&m.op)) {
                    const auto& decomp = dense->decomposition();
                    for (double lambda : lambdas) {
                        out.push_back(spectral_filter_solve(decomp, Tikhonov{}, y, lambda));
                    }
                } else {
                    for (double lambda : lambdas) out.push_back(tikhonov_solve(m.op, y, lambda));
                }
            } else {
                for (double lambda : lambdas) out.push_back(soft_threshold(y, lambda));
            }
        },
        method);
    return out;
}

} // namespace regselect
