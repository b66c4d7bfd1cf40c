#pragma once

// Experiment drivers behind the command-line subcommands. Every driver is a
// pure function of its configuration: the same StudyConfig yields the same
// rows, bit for bit.

#include "regselect/data_models.hpp"
#include "regselect/dataset_io.hpp"
#include "regselect/param_select.hpp"
#include "regselect/risk.hpp"
#include "regselect/theory_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace regselect {

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row)
    {
        if (row.size() != header.size()) throw std::logic_error("csv row width mismatch");
        rows.push_back(std::move(row));
    }

    std::string str() const
    {
        std::ostringstream os;
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
            os << '\n';
        };
        line(header);
        for (const auto& r : rows) line(r);
        return os.str();
    }
};

inline std::string cell(double v) { return format_double(v); }
inline std::string cell(std::size_t v) { return std::to_string(v); }
inline std::string cell(long v) { return std::to_string(v); }

// ---------------------------------------------------------------------------
// Configuration

struct GridSpec {
    double lo = 1e-4;
    double hi = 100.0;
    std::size_t count = 500;

    ParamGrid build() const { return build_grid(lo, hi, count); }

    /// "lo:hi:N"
    static GridSpec parse(const std::string& text)
    {
        const auto a = text.find(':');
        const auto b = a == std::string::npos ? a : text.find(':', a + 1);
        if (a == std::string::npos || b == std::string::npos) {
            throw std::invalid_argument("grid must look like lo:hi:N, got '" + text + "'");
        }
        GridSpec g;
        g.lo = parse_double(text.substr(0, a));
        g.hi = parse_double(text.substr(a + 1, b - a - 1));
        g.count = parse_integer<std::size_t>(text.substr(b + 1));
        g.build();
        return g;
    }

    std::string str() const { return format_double(lo) + ":" + format_double(hi) + ":" + std::to_string(count); }
};

struct StudyConfig {
    std::string model = "spectral";  // spectral | sparse-denoise | sparse-deblur | tv-images
    std::optional<Index> d;
    double s = 0.5;
    std::optional<Index> sparsity;
    std::optional<double> tau;
    std::optional<std::size_t> n;
    std::size_t n_mc = 500;
    std::optional<GridSpec> grid;
    std::vector<std::string> filters{"tikhonov"};  // tikhonov | landweber | cutoff | lasso | tv
    std::string loss = "auto";  // auto | truncated | l1-bregman | l1-bregman-sign | tv-bregman
    std::uint64_t seed = 0;
    std::size_t trials = 30;

    double step = 0.2;  // Landweber step size
    double eta = 0.05;
    std::string images;  // IDX file for tv-images
    Index side = 28;
    std::size_t pool = 200;
    double train_fraction = 0.5;
    double tau_lo = 1e-4;
    double tau_hi = 1e-1;
    std::size_t tau_count = 30;
    std::vector<double> taus{1e-3, 1e-2, 1e-1, 0.5};  // compare-qo noise levels
    std::vector<std::size_t> n_values;                // plateau-study sizes; empty selects 5, 10, ..., 100
    std::size_t n_test = 50;
};

inline DataModel make_model(const StudyConfig& c, double tau)
{
    if (c.model == "spectral") {
        return SpectralSource{c.d.value_or(70), c.s, tau, c.seed};
    }
    if (c.model == "sparse-denoise") {
        return SparseDenoise{c.d.value_or(1024), c.sparsity.value_or(16), tau};
    }
    if (c.model == "sparse-deblur") {
        return SparseDeblur{c.d.value_or(256), c.sparsity.value_or(8), tau};
    }
    if (c.model == "tv-images") {
        return TvImages{c.images, c.side, c.pool, c.train_fraction, tau, c.seed};
    }
    throw std::invalid_argument("unknown model '" + c.model + "'");
}

inline double default_tau(const StudyConfig& c)
{
    if (c.tau) return *c.tau;
    return c.model == "spectral" ? 0.01 : 0.1;
}

inline MethodSpec make_method(const std::string& filter, const StudyConfig& c)
{
    if (filter == "tikhonov") return SpectralMethod{Tikhonov{}};
    if (filter == "landweber") return SpectralMethod{Landweber{c.step}};
    if (filter == "cutoff") return SpectralMethod{SpectralCutoff{}};
    if (filter == "lasso") return LassoMethod{};
    if (filter == "tv") return TvMethod{};
    throw std::invalid_argument("unknown filter '" + filter + "'");
}

inline LossSpec make_loss(const std::string& loss, const Problem& p)
{
    if (loss == "auto") return default_loss(p);
    if (loss == "truncated") return LossSpec::truncated_squared();
    if (loss == "l1-bregman") return LossSpec::l1_bregman(p.signal_dim());
    if (loss == "l1-bregman-sign") return LossSpec::l1_bregman(p.signal_dim(), SubgradientRule::SignOfReference);
    if (loss == "tv-bregman") {
        if (p.image_side() == 0) throw std::invalid_argument("tv-bregman loss needs the tv-images model");
        return LossSpec::tv_bregman(p.image_side());
    }
    throw std::invalid_argument("unknown loss '" + loss + "'");
}

/// Grid used when none is configured.
inline GridSpec default_grid(const std::string& filter, const std::string& model)
{
    if (filter == "tikhonov") return {1e-4, 100.0, 500};
    if (filter == "landweber") return {1e-3, 1.0, 500};
    if (filter == "cutoff") return {1e-5, 1.0, 500};
    if (filter == "tv") return {1e-3, 1.0, 50};
    if (model == "sparse-deblur") return {1e-5, 1.0, 500};
    return {1e-4, 10.0, 1000};
}

inline GridSpec grid_for(const StudyConfig& c, const std::string& filter)
{
    return c.grid.value_or(default_grid(filter, c.model));
}

/// 10^3 log-spaced points over the grid range widened by one decade each side.
inline ParamGrid fine_grid(const GridSpec& g)
{
    return build_grid(g.lo / 10.0, g.hi * 10.0, 1000);
}

inline std::vector<double> log_space(double lo, double hi, std::size_t count)
{
    const auto g = build_grid(lo, hi, count);
    return {g.values().begin(), g.values().end()};
}

inline const std::string& single_filter(const StudyConfig& c)
{
    if (c.filters.size() != 1) throw std::invalid_argument("this command takes exactly one filter");
    return c.filters.front();
}

// ---------------------------------------------------------------------------
// generate

inline Dataset run_generate(const StudyConfig& c)
{
    const Problem p(make_model(c, default_tau(c)));
    Rng rng = make_rng(c.seed, 0, Stream::Train);
    return {p.model(), p.op(), TrainingSet(p.draw_many(c.n.value_or(50), rng))};
}

// ---------------------------------------------------------------------------
// risk-curve: empirical risk over the grid for one training set

inline CsvTable run_risk_curve(const StudyConfig& c)
{
    const auto& filter = single_filter(c);
    const Problem p(make_model(c, default_tau(c)));
    const auto grid = grid_for(c, filter).build();
    const MethodSpec method = make_method(filter, c);
    const LossEvaluator eval(p, method, make_loss(c.loss, p), grid);
    Rng rng = make_rng(c.seed, 0, Stream::Train);
    const auto train = p.draw_many(c.n.value_or(50), rng);
    const auto risk = column_means(eval.table(train));

    CsvTable t{{"lambda", "iterations", "empirical_risk"}, {}};
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const auto k = iterations_for(method, grid[j]);
        t.add({cell(grid[j]), k ? cell(*k) : std::string(), cell(risk[j])});
    }
    return t;
}

// ---------------------------------------------------------------------------
// rate-study: L(x_{lambda*(tau)}) / tau^(4 alpha / (2 alpha + 1))

struct RatePoint {
    std::string filter;
    double tau = 0.0;
    double lambda_star = 0.0;
    double risk_star = 0.0;
    double ratio = 0.0;
};

/// Monte Carlo risk curve on `grid` from n_mc draws of the oracle stream.
inline std::vector<double> oracle_curve(const Problem& p, const MethodSpec& method, const LossSpec& loss,
                                        const ParamGrid& grid, std::size_t n_mc, std::uint64_t seed,
                                        std::uint64_t trial = 0)
{
    if (n_mc < 1) throw std::invalid_argument("n_mc must be >= 1");
    Rng rng = make_rng(seed, trial, Stream::Oracle);
    const auto draws = p.draw_many(n_mc, rng, Split::Test);
    return column_means(LossEvaluator(p, method, loss, grid).table(draws));
}

inline std::vector<RatePoint> rate_study(const StudyConfig& c)
{
    std::vector<RatePoint> out;
    const auto taus = log_space(c.tau_lo, c.tau_hi, c.tau_count);
    for (const auto& filter : c.filters) {
        const MethodSpec method = make_method(filter, c);
        const auto* spectral = std::get_if<SpectralMethod>(&method);
        if (!spectral) throw std::invalid_argument("rate-study needs a spectral filter");
        const double alpha = effective_alpha(spectral->filter, c.s);
        const double exponent = 4.0 * alpha / (2.0 * alpha + 1.0);
        const auto fine = fine_grid(grid_for(c, filter));
        for (double tau : taus) {
            const Problem p(make_model(c, tau));
            const auto curve = oracle_curve(p, method, make_loss(c.loss, p), fine, c.n_mc, c.seed);
            const auto j = argmin_first(curve);
            out.push_back({filter, tau, fine[j], curve[j], curve[j] / std::pow(tau, exponent)});
        }
    }
    return out;
}

inline CsvTable to_csv(const std::vector<RatePoint>& pts, double s)
{
    CsvTable t{{"filter", "s", "tau", "lambda_star", "risk_star", "ratio"}, {}};
    for (const auto& r : pts) t.add({r.filter, cell(s), cell(r.tau), cell(r.lambda_star), cell(r.risk_star), cell(r.ratio)});
    return t;
}

// ---------------------------------------------------------------------------
// Shared pieces for the ERM studies

/// ERM on a training set drawn from the train stream of (trial, sub).
inline Selection erm_trial(const Problem& p, const LossEvaluator& eval, std::size_t n, std::uint64_t seed,
                           std::uint64_t trial, std::uint64_t sub)
{
    Rng rng = make_rng(seed, trial, Stream::Train, sub);
    const auto train = p.draw_many(n, rng, Split::Train);
    std::vector<double> risk = column_means(eval.table(train));
    const auto j = argmin_first(risk);
    return {j, eval.lambdas()[j], std::move(risk)};
}

// ---------------------------------------------------------------------------
// noise-study: learned and oracle parameters across noise levels

struct NoiseRow {
    std::string filter;
    double tau = 0.0;
    std::size_t trial = 0;
    double lambda_hat = 0.0;
    double risk_hat = 0.0;
    double lambda_star = 0.0;
    double risk_star = 0.0;
};

inline std::vector<NoiseRow> noise_study(const StudyConfig& c)
{
    std::vector<NoiseRow> out;
    const auto taus = log_space(c.tau_lo, c.tau_hi, c.tau_count);
    const std::size_t n = c.n.value_or(10);
    for (const auto& filter : c.filters) {
        const MethodSpec method = make_method(filter, c);
        const GridSpec gs = grid_for(c, filter);
        const auto grid = gs.build();
        const auto fine = fine_grid(gs);
        for (std::size_t ti = 0; ti < taus.size(); ++ti) {
            const Problem p(make_model(c, taus[ti]));
            const LossSpec loss = make_loss(c.loss, p);
            const auto star_curve = oracle_curve(p, method, loss, fine, c.n_mc, c.seed);
            const auto js = argmin_first(star_curve);
            const auto grid_curve = oracle_curve(p, method, loss, grid, c.n_mc, c.seed);
            const LossEvaluator eval(p, method, loss, grid);
            for (std::size_t t = 0; t < c.trials; ++t) {
                const auto sel = erm_trial(p, eval, n, c.seed, t, ti);
                out.push_back({filter, taus[ti], t, sel.lambda, grid_curve[sel.index], fine[js], star_curve[js]});
            }
        }
    }
    return out;
}

inline CsvTable to_csv(const std::vector<NoiseRow>& rows)
{
    CsvTable t{{"filter", "tau", "trial", "lambda_hat", "risk_hat", "lambda_star", "risk_star"}, {}};
    for (const auto& r : rows) {
        t.add({r.filter, cell(r.tau), cell(r.trial), cell(r.lambda_hat), cell(r.risk_hat), cell(r.lambda_star),
               cell(r.risk_star)});
    }
    return t;
}

// ---------------------------------------------------------------------------
// plateau-study: risk of the learned parameter as n grows

struct PlateauResult {
    std::vector<std::size_t> n_values;
    std::vector<std::vector<double>> lambda_hat;  // [n index][trial]
    std::vector<std::vector<double>> risk;        // [n index][trial]
    std::vector<double> oracle_curve;             // Monte Carlo risk over the grid
    double oracle_risk = 0.0;                     // min of oracle_curve
    double oracle_lambda = 0.0;
};

inline std::vector<std::size_t> plateau_sizes(const StudyConfig& c)
{
    if (!c.n_values.empty()) return c.n_values;
    std::vector<std::size_t> v;
    for (std::size_t n = 5; n <= 100; n += 5) v.push_back(n);
    return v;
}

inline PlateauResult plateau_study(const StudyConfig& c)
{
    const auto& filter = single_filter(c);
    const Problem p(make_model(c, default_tau(c)));
    const MethodSpec method = make_method(filter, c);
    const LossSpec loss = make_loss(c.loss, p);
    const auto grid = grid_for(c, filter).build();
    const LossEvaluator eval(p, method, loss, grid);

    PlateauResult r;
    r.n_values = plateau_sizes(c);
    r.oracle_curve = oracle_curve(p, method, loss, grid, c.n_mc, c.seed);
    const auto jo = argmin_first(r.oracle_curve);
    r.oracle_risk = r.oracle_curve[jo];
    r.oracle_lambda = grid[jo];
    for (std::size_t k = 0; k < r.n_values.size(); ++k) {
        std::vector<double> lam(c.trials), risk(c.trials);
        for (std::size_t t = 0; t < c.trials; ++t) {
            const auto sel = erm_trial(p, eval, r.n_values[k], c.seed, t, r.n_values[k]);
            lam[t] = sel.lambda;
            risk[t] = r.oracle_curve[sel.index];
        }
        r.lambda_hat.push_back(std::move(lam));
        r.risk.push_back(std::move(risk));
    }
    return r;
}

inline CsvTable to_csv(const PlateauResult& r)
{
    CsvTable t{{"n", "trial", "lambda_hat", "risk"}, {}};
    for (std::size_t k = 0; k < r.n_values.size(); ++k) {
        for (std::size_t i = 0; i < r.risk[k].size(); ++i) {
            t.add({cell(r.n_values[k]), cell(i), cell(r.lambda_hat[k][i]), cell(r.risk[k][i])});
        }
    }
    return t;
}

inline CsvTable summary_csv(const PlateauResult& r)
{
    CsvTable t{{"n", "risk_mean", "risk_p05", "risk_p95"}, {}};
    for (std::size_t k = 0; k < r.n_values.size(); ++k) {
        const auto s = summarize(r.risk[k]);
        t.add({cell(r.n_values[k]), cell(s.mean), cell(s.p05), cell(s.p95)});
    }
    return t;
}

// ---------------------------------------------------------------------------
// compare-qo: learned parameter against per-datum quasi-optimality

struct QoRow {
    std::string method;
    double tau = 0.0;
    double mean = 0.0;
    double std = 0.0;
};

inline double sample_std(std::span<const double> v)
{
    if (v.size() < 2) return 0.0;
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

/// Per-datum quasi-optimality losses; the parameter choice never sees the truth.
inline double qo_test_risk(const LossEvaluator& eval, const SpectralDecomposition& decomp,
                           const std::vector<Sample>& test, const ParamGrid& grid, const FilterKind& filter)
{
    const SpectralSweep& sweep = *eval.sweep();
    double acc = 0.0;
    for (const auto& s : test) {
        const auto proj = sweep.project(s.y, s.x);
        std::size_t j = 0;
        if (const auto* lw = std::get_if<Landweber>(&filter)) {
            j = quasi_optimality_landweber(decomp, proj.data, grid, lw->step).index;
        } else {
            std::vector<Vector> path;
            path.reserve(grid.size());
            for (std::size_t k = 0; k < grid.size(); ++k) path.push_back(sweep.coefficients(static_cast<Index>(k), proj.data));
            j = quasi_optimality_tikhonov(path, grid).index;
        }
        acc += sweep.truncated_loss(static_cast<Index>(j), proj, eval.loss().radius);
    }
    return acc / static_cast<double>(test.size());
}

inline std::vector<QoRow> compare_qo(const StudyConfig& c)
{
    struct Arm {
        std::string name;
        GridSpec grid;
    };
    const std::vector<Arm> arms{{"tikhonov", c.grid.value_or(GridSpec{1e-5, 10.0, 1000})},
                                {"landweber", c.grid.value_or(GridSpec{1e-3, 1.0, 800})}};
    const std::size_t n_train = c.n.value_or(1000);
    std::vector<QoRow> out;
    for (const auto& arm : arms) {
        const MethodSpec method = make_method(arm.name, c);
        const FilterKind filter = std::get<SpectralMethod>(method).filter;
        const auto grid = arm.grid.build();
        for (std::size_t ti = 0; ti < c.taus.size(); ++ti) {
            const Problem p(make_model(c, c.taus[ti]));
            if (!p.dense()) throw std::invalid_argument("compare-qo needs the spectral model");
            const LossSpec loss = LossSpec::truncated_squared();
            const LossEvaluator eval(p, method, loss, grid);
            Rng test_rng = make_rng(c.seed, 0, Stream::Test, ti);
            const auto test = p.draw_many(c.n_test, test_rng, Split::Test);
            const auto test_curve = column_means(eval.table(test));
            const double l_qo = qo_test_risk(eval, p.dense()->decomposition(), test, grid, filter);
            std::vector<double> diff(c.trials);
            for (std::size_t t = 0; t < c.trials; ++t) {
                const auto sel = erm_trial(p, eval, n_train, c.seed, t, ti);
                diff[t] = test_curve[sel.index] - l_qo;
            }
            out.push_back({arm.name, c.taus[ti], summarize(diff).mean, sample_std(diff)});
        }
    }
    return out;
}

inline CsvTable to_csv(const std::vector<QoRow>& rows)
{
    CsvTable t{{"method", "tau", "mean", "std"}, {}};
    for (const auto& r : rows) t.add({r.method, cell(r.tau), cell(r.mean), cell(r.std)});
    return t;
}

// ---------------------------------------------------------------------------
// bound-check: a priori bounds next to measured risks

struct BoundRow {
    double tau = 0.0;
    double lambda_theory = 0.0;
    double bound_theory = 0.0;
    double risk_oracle = 0.0;
    double risk_erm = 0.0;
    double erm_bound = 0.0;
    double hoeffding_bound = 0.0;
};

inline std::vector<BoundRow> bound_check(const StudyConfig& c)
{
    const auto& filter = single_filter(c);
    const MethodSpec method = make_method(filter, c);
    const auto* spectral = std::get_if<SpectralMethod>(&method);
    if (!spectral) throw std::invalid_argument("bound-check needs a spectral filter");
    const auto grid = grid_for(c, filter).build();
    const std::size_t n = c.n.value_or(50);
    std::vector<BoundRow> out;
    const auto taus = log_space(c.tau_lo, c.tau_hi, c.tau_count);
    for (std::size_t ti = 0; ti < taus.size(); ++ti) {
        const Problem p(make_model(c, taus[ti]));
        const LossSpec loss = make_loss(c.loss, p);
        TheoryParams tp;
        tp.tau = taus[ti];
        tp.s = c.s;
        tp.alpha = effective_alpha(spectral->filter, c.s);
        tp.m = loss.bound;
        tp.eta = c.eta;
        tp.n = static_cast<double>(n);
        tp.grid_size = static_cast<double>(grid.size());
        const auto opt = spectral_optimal(tp);
        const auto curve = oracle_curve(p, method, loss, grid, c.n_mc, c.seed);
        const LossEvaluator eval(p, method, loss, grid);
        const auto sel = erm_trial(p, eval, n, c.seed, 0, ti);
        const double cq = cq_factor(BoundFamily::Spectral, std::max(1.0, grid.ratio()), tp.alpha);
        const double oracle = *std::min_element(curve.begin(), curve.end());
        out.push_back({taus[ti], opt.lambda, opt.bound, oracle, curve[sel.index], erm_bound(opt.bound, cq, tp),
                       hoeffding_bound(oracle, tp)});
    }
    return out;
}

inline CsvTable to_csv(const std::vector<BoundRow>& rows)
{
    CsvTable t{{"tau", "lambda_theory", "bound_theory", "risk_oracle", "risk_erm", "erm_bound", "hoeffding_bound"}, {}};
    for (const auto& r : rows) {
        t.add({cell(r.tau), cell(r.lambda_theory), cell(r.bound_theory), cell(r.risk_oracle), cell(r.risk_erm),
               cell(r.erm_bound), cell(r.hoeffding_bound)});
    }
    return t;
}

} // namespace regselect
