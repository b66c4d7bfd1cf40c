#pragma once

// Spectral regularization x_lambda = g_lambda(A*A) A* y for Tikhonov,
// Landweber and spectral cut-off, plus the radial truncation and the
// truncated squared loss.

#include "regselect/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

namespace regselect {

struct Tikhonov {};

struct Landweber {
    double step = 0.2;
};

struct SpectralCutoff {};

using FilterKind = std::variant<Tikhonov, Landweber, SpectralCutoff>;

class TruncationRadius {
public:
    constexpr TruncationRadius() = default;
    explicit TruncationRadius(double r) : value_(r)
    {
        if (!(r > 0.0)) throw std::invalid_argument("truncation radius must be > 0");
    }
    constexpr double value() const { return value_; }

private:
    double value_ = 1.0;
};

namespace detail {

inline void check_lambda(double lambda)
{
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
}

} // namespace detail

/// floor(1/lambda), with a relative guard so grid round-off (1/0.1 = 9.999...) is absorbed.
inline std::int64_t landweber_iters_from_lambda(double lambda)
{
    detail::check_lambda(lambda);
    const double inv = 1.0 / lambda;
    return static_cast<std::int64_t>(std::floor(inv * (1.0 + 1e-12)));
}

/// 1 - (1 - step*sigma)^k, computed without cancellation for small step*sigma.
inline double landweber_gain(double step_sigma, std::int64_t k)
{
    if (k <= 0) return 0.0;
    if (step_sigma < 1.0) {
        return -std::expm1(static_cast<double>(k) * std::log1p(-step_sigma));
    }
    return 1.0 - std::pow(1.0 - step_sigma, static_cast<double>(k));
}

/// g_lambda evaluated at an eigenvalue sigma of A*A (sigma = singular value squared).
inline double filter_value(const FilterKind& filter, double sigma, double lambda)
{
    detail::check_lambda(lambda);
    return std::visit(
        [&](const auto& f) -> double {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, Tikhonov>) {
                return 1.0 / (sigma + lambda);
            } else if constexpr (std::is_same_v<F, Landweber>) {
                const auto k = landweber_iters_from_lambda(lambda);
                if (sigma <= 0.0) return f.step * static_cast<double>(k);
                return landweber_gain(f.step * sigma, k) / sigma;
            } else {
                return (sigma > 0.0 && sigma >= lambda) ? 1.0 / sigma : 0.0;
            }
        },
        filter);
}

/// Solves (A*A + lambda I) x = A* y directly from the normal equations.
inline Vector tikhonov_solve(const ForwardOperator& a, const Vector& y, double lambda)
{
    detail::check_lambda(lambda);
    detail::check_dim(y.size(), rows(a), "tikhonov_solve");
    const Matrix m = to_dense(a);
    Matrix normal = m.transpose() * m;
    normal.diagonal().array() += lambda;
    return normal.ldlt().solve(m.transpose() * y);
}

/// k steps of x <- x + step A^T (y - A x) from x = 0.
template <LinearMap Op>
Vector landweber_solve(const Op& a, const Vector& y, std::int64_t k, double step)
{
    if (k < 0) throw std::invalid_argument("landweber: iteration count must be >= 0");
    detail::check_dim(y.size(), a.rows(), "landweber_solve");
    const double n = a.norm();
    if (!(step > 0.0) || !(step * n * n < 2.0)) {
        throw std::invalid_argument("landweber: step * ||A||^2 must lie in (0, 2)");
    }
    Vector x = Vector::Zero(a.cols());
    for (std::int64_t t = 0; t < k; ++t) {
        x += step * a.adjoint_apply(y - a.apply(x));
    }
    return x;
}

inline Vector landweber_solve(const ForwardOperator& a, const Vector& y, std::int64_t k,
                              double step)
{
    return std::visit([&](const auto& o) { return landweber_solve(o, y, k, step); }, a);
}

/// sum_i g(sigma_i^2) sigma_i <u_i, y> v_i over the numerical rank.
inline Vector spectral_filter_solve(const SpectralDecomposition& decomp,
                                    const FilterKind& filter, const Vector& y, double lambda)
{
    detail::check_lambda(lambda);
    detail::check_dim(y.size(), decomp.rows(), "spectral_filter_solve");
    if (const auto* lw = std::get_if<Landweber>(&filter)) {
        const double s0 = decomp.singular_values.size() ? decomp.singular_values[0] : 0.0;
        if (!(lw->step > 0.0) || !(lw->step * s0 * s0 < 2.0)) {
            throw std::invalid_argument("landweber: step * ||A||^2 must lie in (0, 2)");
        }
    }
    const Index r = decomp.rank();
    Vector coeff = decomp.left.leftCols(r).transpose() * y;
    for (Index i = 0; i < r; ++i) {
        const double s = decomp.singular_values[i];
        coeff[i] *= filter_value(filter, s * s, lambda) * s;
    }
    return decomp.right.leftCols(r) * coeff;
}

inline Vector truncate(const Vector& x, TruncationRadius r = {})
{
    const double n = x.norm();
    if (n <= r.value()) return x;
    return (r.value() / n) * x;
}

inline double truncated_sq_loss(const Vector& x, const Vector& x_true, TruncationRadius r = {})
{
    detail::check_dim(x.size(), x_true.size(), "truncated_sq_loss");
    return (truncate(x, r) - truncate(x_true, r)).squaredNorm();
}

/*
 * Precomputed g(sigma_i^2) sigma_i for every lambda of a grid, so that a
 * reconstruction in right-singular coordinates costs O(rank) per lambda.
 */
class SpectralSweep {
public:
    SpectralSweep(const SpectralDecomposition& decomp, const FilterKind& filter,
                  std::span<const double> lambdas)
        : decomp_(&decomp), rank_(decomp.rank()),
          gains_(static_cast<Index>(lambdas.size()), decomp.rank())
    {
        for (Index j = 0; j < gains_.rows(); ++j) {
            for (Index i = 0; i < rank_; ++i) {
                const double s = decomp.singular_values[i];
                gains_(j, i) = filter_value(filter, s * s, lambdas[static_cast<std::size_t>(j)]) * s;
            }
        }
    }

    /// A datum and its ground truth expressed in singular coordinates.
    struct Projected {
        Vector data;           // U_r^T y
        Vector truth;          // V_r^T x
        double truth_outside;  // ||x||^2 - ||V_r^T x||^2, mass of x off the range
    };

    Projected project(const Vector& y, const Vector& x) const
    {
        detail::check_dim(y.size(), decomp_->rows(), "project");
        detail::check_dim(x.size(), decomp_->cols(), "project");
        Projected p;
        p.data = decomp_->left.leftCols(rank_).transpose() * y;
        p.truth = decomp_->right.leftCols(rank_).transpose() * x;
        p.truth_outside = std::max(0.0, x.squaredNorm() - p.truth.squaredNorm());
        return p;
    }

    Index size() const { return gains_.rows(); }
    Index rank() const { return rank_; }

    /// Coefficients of x_lambda_j in the basis V_r.
    Vector coefficients(Index j, const Vector& data) const
    {
        return gains_.row(j).transpose().cwiseProduct(data);
    }

    Vector solution(Index j, const Vector& data) const
    {
        return decomp_->right.leftCols(rank_) * coefficients(j, data);
    }

    /// ||T x_lambda_j - T x||^2 evaluated in singular coordinates.
    double truncated_loss(Index j, const Projected& p, TruncationRadius r = {}) const
    {
        double norm_sq = 0.0;
        for (Index i = 0; i < rank_; ++i) {
            const double c = gains_(j, i) * p.data[i];
            norm_sq += c * c;
        }
        const double n = std::sqrt(norm_sq);
        const double scale = n > r.value() ? r.value() / n : 1.0;
        const double truth_sq = p.truth.squaredNorm() + p.truth_outside;
        const double truth_n = std::sqrt(truth_sq);
        const double tscale = truth_n > r.value() ? r.value() / truth_n : 1.0;
        double acc = 0.0;
        for (Index i = 0; i < rank_; ++i) {
            const double diff = scale * gains_(j, i) * p.data[i] - tscale * p.truth[i];
            acc += diff * diff;
        }
        return acc + tscale * tscale * p.truth_outside;
    }

private:
    const SpectralDecomposition* decomp_;
    Index rank_;
    Matrix gains_;
};

} // namespace regselect
