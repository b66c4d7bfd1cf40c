#pragma once

// Reconstruction methods bound to a problem, per-sample loss rows over a
// parameter grid, and Monte Carlo risk summaries.

#include "regselect/data_models.hpp"
#include "regselect/parallel.hpp"
#include "regselect/param_select.hpp"
#include "regselect/spectral_reg.hpp"
#include "regselect/variational_reg.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace regselect {

struct SpectralMethod {
    FilterKind filter = Tikhonov{};
};
struct LassoMethod {
    SolverConfig cfg{1e-6, 200000};
};
struct TvMethod {
    SolverConfig cfg{1e-8, 200000};
};

using MethodSpec = std::variant<SpectralMethod, LassoMethod, TvMethod>;

inline LossSpec default_loss(const Problem& problem)
{
    if (problem.image_side() > 0) return LossSpec::tv_bregman(problem.image_side());
    if (problem.dense()) return LossSpec::truncated_squared();
    return LossSpec::l1_bregman(problem.signal_dim());
}

inline MethodSpec default_method(const Problem& problem)
{
    if (problem.image_side() > 0) return TvMethod{};
    if (problem.dense()) return SpectralMethod{};
    return LassoMethod{};
}

/// Landweber iteration count for lambda, or nullopt for other methods.
inline std::optional<long> iterations_for(const MethodSpec& method, double lambda)
{
    if (const auto* s = std::get_if<SpectralMethod>(&method)) {
        if (std::holds_alternative<Landweber>(s->filter)) return landweber_iters_from_lambda(lambda);
    }
    return std::nullopt;
}

/*
 * Evaluates l(x_lambda(y), x) for every lambda of a fixed grid. Spectral
 * methods with the truncated squared loss work in singular coordinates;
 * iterative solvers walk the grid from the largest lambda down with warm
 * starts.
 */
class LossEvaluator {
public:
    LossEvaluator(const Problem& problem, MethodSpec method, LossSpec loss, const ParamGrid& grid)
        : problem_(&problem), method_(std::move(method)), loss_(loss),
          lambdas_(grid.values().begin(), grid.values().end())
    {
        if (lambdas_.empty()) throw std::invalid_argument("loss evaluator: empty grid");
        if (const auto* s = std::get_if<SpectralMethod>(&method_)) {
            if (const auto* d = problem.dense()) {
                dense_ = *d;
            } else {
                dense_ = DenseOperator(to_dense(problem.op()));
            }
            if (const auto* lw = std::get_if<Landweber>(&s->filter)) {
                const double n = dense_->norm();
                if (!(lw->step * n * n < 2.0)) {
                    throw std::invalid_argument("landweber: step * ||A||^2 must be < 2");
                }
            }
            sweep_ = std::make_shared<SpectralSweep>(dense_->decomposition(), s->filter, lambdas_);
        }
        if (std::holds_alternative<TvMethod>(method_) && problem.image_side() == 0) {
            throw std::invalid_argument("tv method needs an image model");
        }
        if (loss_.kind == LossKind::TvBregman && !std::holds_alternative<TvMethod>(method_)) {
            throw std::invalid_argument("tv-bregman loss needs the tv method");
        }
    }

    std::size_t size() const { return lambdas_.size(); }
    std::span<const double> lambdas() const { return lambdas_; }
    const MethodSpec& method() const { return method_; }
    const LossSpec& loss() const { return loss_; }
    const SpectralSweep* sweep() const { return sweep_.get(); }

    Reconstruction reconstruct(const Vector& y, double lambda) const
    {
        return std::visit(
            [&](const auto& m) -> Reconstruction {
                using M = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<M, SpectralMethod>) {
                    return {spectral_filter_solve(dense_->decomposition(), m.filter, y, lambda), Vector()};
                } else if constexpr (std::is_same_v<M, LassoMethod>) {
                    const Vector x = lasso_solve(problem_->op(), y, lambda, m.cfg);
                    return {x, certificate(y, x, lambda)};
                } else {
                    const auto sol = tv_denoise(y, problem_->image_side(), lambda, m.cfg);
                    return {sol.image, sol.certificate()};
                }
            },
            method_);
    }

    /// Loss of the reconstruction at every grid value, in grid order.
    std::vector<double> losses(const Sample& s) const
    {
        std::vector<double> out(lambdas_.size());
        if (sweep_ && loss_.kind == LossKind::TruncatedSquared) {
            const auto p = sweep_->project(s.y, s.x);
            for (std::size_t j = 0; j < out.size(); ++j) {
                out[j] = sweep_->truncated_loss(static_cast<Index>(j), p, loss_.radius);
            }
            return out;
        }
        std::visit(
            [&](const auto& m) {
                using M = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<M, SpectralMethod>) {
                    const Vector data = sweep_project(s.y);
                    for (std::size_t j = 0; j < out.size(); ++j) {
                        out[j] = evaluate_loss(loss_, {sweep_->solution(static_cast<Index>(j), data), Vector()}, s.x);
                    }
                } else if constexpr (std::is_same_v<M, LassoMethod>) {
                    Vector start = Vector::Zero(problem_->signal_dim());
                    for (std::size_t jj = out.size(); jj-- > 0;) {
                        const double lambda = lambdas_[jj];
                        auto res = std::visit(
                            [&](const auto& o) { return lasso_fista(o, s.y, lambda, m.cfg, start); },
                            problem_->op());
                        out[jj] = evaluate_loss(loss_, {res.x, certificate(s.y, res.x, lambda)}, s.x);
                        start = std::move(res.x);
                    }
                } else {
                    const Index side = problem_->image_side();
                    Vector dual = Vector::Zero(2 * side * (side - 1));
                    for (std::size_t jj = out.size(); jj-- > 0;) {
                        auto sol = tv_denoise(s.y, side, lambdas_[jj], m.cfg, dual);
                        out[jj] = evaluate_loss(loss_, {sol.image, sol.certificate()}, s.x);
                        dual = std::move(sol.dual);
                    }
                }
            },
            method_);
        return out;
    }

    /// Row i holds losses(samples[i]); rows are computed in parallel.
    Matrix table(std::span<const Sample> samples) const
    {
        Matrix t(static_cast<Index>(samples.size()), static_cast<Index>(lambdas_.size()));
        parallel_for(samples.size(), [&](std::size_t i) {
            const auto row = losses(samples[i]);
            for (std::size_t j = 0; j < row.size(); ++j) t(static_cast<Index>(i), static_cast<Index>(j)) = row[j];
        });
        return t;
    }

private:
    Vector certificate(const Vector& y, const Vector& x, double lambda) const
    {
        return std::visit([&](const auto& o) { return lasso_certificate(o, y, x, lambda); }, problem_->op());
    }

    Vector sweep_project(const Vector& y) const
    {
        const auto& dec = dense_->decomposition();
        return dec.left.leftCols(dec.rank()).transpose() * y;
    }

    const Problem* problem_;
    MethodSpec method_;
    LossSpec loss_;
    std::vector<double> lambdas_;
    std::optional<DenseOperator> dense_;
    std::shared_ptr<SpectralSweep> sweep_;
};

/// Column means of a loss table, each summed in row order.
inline std::vector<double> column_means(const Matrix& table)
{
    std::vector<double> out(static_cast<std::size_t>(table.cols()));
    for (Index j = 0; j < table.cols(); ++j) {
        double acc = 0.0;
        for (Index i = 0; i < table.rows(); ++i) acc += table(i, j);
        out[static_cast<std::size_t>(j)] = acc / static_cast<double>(table.rows());
    }
    return out;
}

/// Linear interpolation between order statistics at position q (n - 1).
inline double percentile(std::vector<double> values, double q)
{
    if (values.empty()) throw std::invalid_argument("percentile: no values");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("percentile: q must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct RiskEstimate {
    double mean = 0.0;
    double p05 = 0.0;
    double p95 = 0.0;
    double std_error = 0.0;  // standard error of the mean
};

inline RiskEstimate summarize(std::span<const double> values)
{
    if (values.empty()) throw std::invalid_argument("summarize: no values");
    double acc = 0.0;
    for (double v : values) acc += v;
    const double n = static_cast<double>(values.size());
    const double mean = acc / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double se = values.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    std::vector<double> copy(values.begin(), values.end());
    if (values.size() == 1) return {mean, mean, mean, 0.0};
    return {mean, percentile(copy, 0.05), percentile(copy, 0.95), se};
}

/// Monte Carlo estimate of E l(x_lambda(Y), X) from n_mc fresh draws.
inline RiskEstimate estimate_expected_risk(const Problem& problem, const MethodSpec& method,
                                           const LossSpec& loss, double lambda, std::size_t n_mc,
                                           std::uint64_t seed, Split split = Split::Test)
{
    detail::check_lambda(lambda);
    if (n_mc < 1) throw std::invalid_argument("estimate_expected_risk: n_mc must be >= 1");
    Rng rng(derive_seed(seed, 0, Stream::Oracle));
    const auto draws = problem.draw_many(n_mc, rng, split);
    const LossEvaluator eval(problem, method, loss, ParamGrid({lambda}));
    const Matrix t = eval.table(draws);
    std::vector<double> col(t.col(0).data(), t.col(0).data() + t.rows());
    return summarize(col);
}

} // namespace regselect
