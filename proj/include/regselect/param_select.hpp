#pragma once

// Parameter grids, losses, empirical risk minimization over a grid, the
// Monte Carlo oracle selector and the quasi-optimality baseline.

#include "regselect/operators.hpp"
#include "regselect/spectral_reg.hpp"
#include "regselect/variational_reg.hpp"

#include <cmath>
#include <concepts>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace regselect {

/// Ascending parameter values lambda_1 <= ... <= lambda_N.
class ParamGrid {
public:
    ParamGrid() = default;

    explicit ParamGrid(std::vector<double> values) : values_(std::move(values))
    {
        if (values_.empty()) throw std::invalid_argument("grid: no values");
        for (std::size_t j = 0; j < values_.size(); ++j) {
            if (!(values_[j] > 0.0)) throw std::invalid_argument("grid: values must be > 0");
            if (j > 0 && values_[j] < values_[j - 1]) {
                throw std::invalid_argument("grid: values must be ascending");
            }
        }
        ratio_ = values_.size() > 1
                     ? std::pow(values_.back() / values_.front(),
                                1.0 / static_cast<double>(values_.size() - 1))
                     : 1.0;
    }

    std::span<const double> values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t j) const { return values_[j]; }
    double lambda_min() const { return values_.front(); }
    double lambda_max() const { return values_.back(); }
    /// (lambda_N / lambda_1)^(1/(N-1)); equals Q for geometric grids.
    double ratio() const { return ratio_; }

private:
    std::vector<double> values_;
    double ratio_ = 1.0;
};

/// lambda_j = lambda_1 Q^(j-1), Q = (lambda_N / lambda_1)^(1/(N-1)).
inline ParamGrid build_grid(double lambda_min, double lambda_max, std::size_t count)
{
    if (!(lambda_min > 0.0) || !(lambda_max >= lambda_min)) {
        throw std::invalid_argument("build_grid: need 0 < lambda_min <= lambda_max");
    }
    if (count == 0) throw std::invalid_argument("build_grid: count must be >= 1");
    if (count == 1) {
        if (lambda_max != lambda_min) {
            throw std::invalid_argument("build_grid: a single point needs lambda_min == lambda_max");
        }
        return ParamGrid({lambda_min});
    }
    const double q = std::pow(lambda_max / lambda_min, 1.0 / static_cast<double>(count - 1));
    std::vector<double> v(count);
    for (std::size_t j = 0; j < count; ++j) {
        v[j] = lambda_min * std::pow(q, static_cast<double>(j));
    }
    return ParamGrid(std::move(v));
}

struct Sample {
    Vector y;  // observation
    Vector x;  // ground truth
};

class TrainingSet {
public:
    TrainingSet() = default;
    explicit TrainingSet(std::vector<Sample> pairs) : pairs_(std::move(pairs))
    {
        if (pairs_.empty()) throw std::invalid_argument("training set: need at least one pair");
        for (const auto& p : pairs_) {
            if (p.y.size() != pairs_.front().y.size() || p.x.size() != pairs_.front().x.size()) {
                throw DimensionError("training set: inconsistent pair dimensions");
            }
        }
    }

    std::size_t size() const { return pairs_.size(); }
    const Sample& operator[](std::size_t i) const { return pairs_[i]; }
    const std::vector<Sample>& pairs() const { return pairs_; }
    auto begin() const { return pairs_.begin(); }
    auto end() const { return pairs_.end(); }

private:
    std::vector<Sample> pairs_;
};

enum class LossKind { TruncatedSquared, L1Bregman, TvBregman };

/// How the subgradient at the reconstruction is chosen for Bregman losses.
enum class SubgradientRule {
    Certificate,      // optimality certificate produced by the solver
    SignOfReference,  // sign(x_lambda), sign(0) = 0
};

struct LossSpec {
    LossKind kind = LossKind::TruncatedSquared;
    double bound = 4.0;
    TruncationRadius radius{};
    SubgradientRule rule = SubgradientRule::Certificate;

    static LossSpec truncated_squared(TruncationRadius r = {})
    {
        return {LossKind::TruncatedSquared, 4.0 * r.value() * r.value(), r,
                SubgradientRule::Certificate};
    }
    /// M = 2R with R the l2 -> l1 norm of the identity on R^dim.
    static LossSpec l1_bregman(Index dim, SubgradientRule rule = SubgradientRule::Certificate)
    {
        return {LossKind::L1Bregman, 2.0 * std::sqrt(static_cast<double>(dim)), {}, rule};
    }
    /// M = 2R with R = sqrt(#differences) * ||D||_2, the l2 -> l1 norm bound of D.
    static LossSpec tv_bregman(Index side)
    {
        const GradientOperator grad(side);
        return {LossKind::TvBregman,
                2.0 * std::sqrt(static_cast<double>(grad.rows())) * grad.norm(), {},
                SubgradientRule::Certificate};
    }
};

/// A reconstruction and, when the method provides one, its subgradient certificate.
struct Reconstruction {
    Vector x;
    Vector subgradient;  // primal-space eta for l1, dual-space eta for TV; may be empty
};

inline const char* to_string(LossKind k)
{
    switch (k) {
    case LossKind::TruncatedSquared: return "truncated-squared";
    case LossKind::L1Bregman: return "l1-bregman";
    case LossKind::TvBregman: return "tv-bregman";
    }
    return "?";
}

/// l(recon, truth) for the loss described by `spec`.
inline double evaluate_loss(const LossSpec& spec, const Reconstruction& recon, const Vector& truth)
{
    switch (spec.kind) {
    case LossKind::TruncatedSquared:
        return truncated_sq_loss(recon.x, truth, spec.radius);
    case LossKind::L1Bregman:
        if (spec.rule == SubgradientRule::Certificate && recon.subgradient.size() != 0) {
            return bregman_l1(truth, recon.x, recon.subgradient);
        }
        return bregman_l1(truth, recon.x);
    case LossKind::TvBregman: {
        const auto side =
            static_cast<Index>(std::llround(std::sqrt(static_cast<double>(truth.size()))));
        return bregman_tv(truth, recon.x, recon.subgradient, GradientOperator(side));
    }
    }
    throw std::logic_error("evaluate_loss: unknown loss kind");
}

template <class M>
concept ReconstructionMethod = requires(const M& m, const Vector& y, double lambda) {
    m(y, lambda);
} && (std::convertible_to<std::invoke_result_t<const M&, const Vector&, double>, Vector>
      || std::convertible_to<std::invoke_result_t<const M&, const Vector&, double>,
                             Reconstruction>);

namespace detail {

template <class M>
Reconstruction reconstruct(const M& method, const Vector& y, double lambda)
{
    using R = std::invoke_result_t<const M&, const Vector&, double>;
    if constexpr (std::is_same_v<std::decay_t<R>, Reconstruction>) {
        return method(y, lambda);
    } else {
        return Reconstruction{Vector(method(y, lambda)), Vector()};
    }
}

} // namespace detail

/// (1/n) sum_i l(f_lambda(y_i), x_i), summed in index order.
template <ReconstructionMethod M>
double empirical_risk(const M& method, const LossSpec& loss, const TrainingSet& data,
                      double lambda)
{
    detail::check_lambda(lambda);
    if (data.size() == 0) throw std::invalid_argument("empirical_risk: empty training set");
    double total = 0.0;
    for (const auto& s : data) {
        total += evaluate_loss(loss, detail::reconstruct(method, s.y, lambda), s.x);
    }
    return total / static_cast<double>(data.size());
}

struct Selection {
    std::size_t index = 0;  // 0-based grid index
    double lambda = 0.0;
    std::vector<double> risk;  // one entry per grid value
};

/// First index attaining the minimum (ties go to the smallest index).
inline std::size_t argmin_first(std::span<const double> values)
{
    if (values.empty()) throw std::invalid_argument("argmin: empty sequence");
    std::size_t best = 0;
    for (std::size_t j = 1; j < values.size(); ++j) {
        if (values[j] < values[best]) best = j;
    }
    return best;
}

inline Selection select_from_curve(const ParamGrid& grid, std::vector<double> risk)
{
    if (risk.size() != grid.size()) throw DimensionError("risk curve does not match grid");
    const auto j = argmin_first(risk);
    return {j, grid[j], std::move(risk)};
}

/// lambda_hat in argmin_{lambda in grid} empirical risk.
template <ReconstructionMethod M>
Selection erm_select(const M& method, const LossSpec& loss, const TrainingSet& data,
                     const ParamGrid& grid)
{
    if (grid.size() == 0) throw std::invalid_argument("erm_select: empty grid");
    std::vector<double> risk(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        risk[j] = empirical_risk(method, loss, data, grid[j]);
    }
    return select_from_curve(grid, std::move(risk));
}

/// Grid argmin of a Monte Carlo risk estimate from n_mc fresh draws of `sampler`.
template <ReconstructionMethod M, class Sampler>
Selection oracle_select(const M& method, const LossSpec& loss, Sampler&& sampler,
                        const ParamGrid& grid, std::size_t n_mc, std::uint64_t seed)
{
    if (n_mc < 1) throw std::invalid_argument("oracle_select: n_mc must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<Sample> draws;
    draws.reserve(n_mc);
    for (std::size_t i = 0; i < n_mc; ++i) draws.push_back(sampler(rng));
    return erm_select(method, loss, TrainingSet(std::move(draws)), grid);
}

struct QuasiOptimality {
    std::size_t index = 0;  // 0-based j*, in [0, N-2]
    double lambda = 0.0;
    std::vector<double> distances;  // N-1 consecutive distances
};

/// j* in argmin_j ||x_{lambda_j} - x_{lambda_{j+1}}||; lambda_qo = lambda_{j*}.
inline QuasiOptimality quasi_optimality_tikhonov(std::span<const Vector> path,
                                                 const ParamGrid& grid)
{
    if (path.size() < 2) throw std::invalid_argument("quasi-optimality: path shorter than 2");
    if (path.size() != grid.size()) throw DimensionError("quasi-optimality: path/grid mismatch");
    std::vector<double> dist(path.size() - 1);
    for (std::size_t j = 0; j + 1 < path.size(); ++j) dist[j] = (path[j] - path[j + 1]).norm();
    const auto j = argmin_first(dist);
    return {j, grid[j], std::move(dist)};
}

/*
 * Landweber variant: j* minimizes ||x_{2k} - x_k|| with k = floor(1 / lambda_{j+1}),
 * for j in [0, N-2]. `data` are the coefficients U_r^T y of one datum.
 */
inline QuasiOptimality quasi_optimality_landweber(const SpectralDecomposition& decomp,
                                                  const Vector& data, const ParamGrid& grid,
                                                  double step)
{
    if (grid.size() < 2) throw std::invalid_argument("quasi-optimality: grid shorter than 2");
    const Index r = decomp.rank();
    detail::check_dim(data.size(), r, "quasi_optimality_landweber");
    const double s0 = r > 0 ? decomp.singular_values[0] : 0.0;
    if (!(step > 0.0) || !(step * s0 * s0 < 2.0)) {
        throw std::invalid_argument("landweber: step * ||A||^2 must lie in (0, 2)");
    }
    std::vector<double> dist(grid.size() - 1);
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
        const auto k = landweber_iters_from_lambda(grid[j + 1]);
        double acc = 0.0;
        for (Index i = 0; i < r; ++i) {
            const double s = decomp.singular_values[i];
            // gain(2k) - gain(k) = a^k (1 - a^k), a = 1 - step s^2
            const double g1 = landweber_gain(step * s * s, k);
            const double diff = (1.0 - g1) * g1 / s * data[i];
            acc += diff * diff;
        }
        dist[j] = std::sqrt(acc);
    }
    const auto j = argmin_first(dist);
    return {j, grid[j], std::move(dist)};
}

inline QuasiOptimality quasi_optimality_landweber(const DenseOperator& a, const Vector& y,
                                                  const ParamGrid& grid, double step)
{
    const auto& decomp = a.decomposition();
    detail::check_dim(y.size(), a.rows(), "quasi_optimality_landweber");
    const Vector data = decomp.left.leftCols(decomp.rank()).transpose() * y;
    return quasi_optimality_landweber(decomp, data, grid, step);
}

} // namespace regselect
