// Prints one PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include "regselect/dataset_io.hpp"
#include "regselect/studies.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#ifndef REGSELECT_CLI_PATH
#define REGSELECT_CLI_PATH "regselect_cli"
#endif

using namespace regselect;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

Vector gaussian(Index n, Rng& rng)
{
    std::normal_distribution<double> g;
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = g(rng);
    return v;
}

void grid_ratios(Outcome& o)
{
    struct Case {
        double lo, hi;
        std::size_t n;
        double q;
    };
    const Case cases[] = {{1e-4, 100, 500, 1.0281}, {1e-3, 1, 500, 1.0139}, {1e-5, 1, 500, 1.0233},
                          {1e-5, 1, 1000, 1.0116},  {1e-3, 1, 50, 1.1514},  {1e-2, 1, 50, 1.0985},
                          {1e-4, 1, 3000, 1.0031},  {1e-3, 1, 800, 1.0087}};
    double worst = 0.0;
    for (const auto& c : cases) worst = std::max(worst, std::abs(build_grid(c.lo, c.hi, c.n).ratio() - c.q));
    o.require(worst <= 1e-4, "ratio mismatch");
    o.detail << "max |Q - Q_ref| = " << fmt(worst);
}

void solver_oracles(Outcome& o)
{
    Rng rng(2024);
    Matrix m(30, 20);
    for (Index j = 0; j < m.cols(); ++j) m.col(j) = gaussian(30, rng);
    const DenseOperator a = DenseOperator(m).normalized();
    const Vector y = gaussian(30, rng);

    double tik = 0.0;
    for (double lambda : {1e-4, 1e-2, 1.0, 10.0}) {
        tik = std::max(tik, (tikhonov_solve(a, y, lambda)
                             - spectral_filter_solve(a.decomposition(), Tikhonov{}, y, lambda)).norm());
    }
    double lw = 0.0;
    for (double lambda : {1.0, 0.1, 0.01, 0.002}) {
        const auto k = landweber_iters_from_lambda(lambda);
        lw = std::max(lw, (landweber_solve(ForwardOperator(a), y, k, 0.2)
                           - spectral_filter_solve(a.decomposition(), Landweber{0.2}, y, lambda)).norm());
    }
    double lasso = 0.0;
    const ForwardOperator id = DenseOperator(Matrix::Identity(25, 25));
    const Vector z = gaussian(25, rng);
    for (double lambda : {0.05, 0.5, 1.5}) {
        lasso = std::max(lasso, (lasso_solve(id, z, lambda, {1e-6, 200000}) - soft_threshold(z, lambda)).norm());
    }
    const Index side = 8;
    const Vector img = gaussian(side * side, rng);
    const double tv_small = (tv_denoise(img, side, 1e-8).image - img).norm();
    const double tv_large =
        (tv_denoise(img, side, 1e3).image - Vector::Constant(side * side, img.mean())).norm();

    o.require(tik <= 1e-10, "tikhonov");
    o.require(lw <= 1e-10, "landweber");
    o.require(lasso <= 1e-5, "lasso");
    o.require(tv_small <= 1e-3 && tv_large <= 1e-3, "tv extremes");
    o.detail << "tikhonov " << fmt(tik) << ", landweber " << fmt(lw) << ", lasso " << fmt(lasso) << ", tv "
             << fmt(tv_small) << "/" << fmt(tv_large);
}

void rate_reproduction(Outcome& o)
{
    for (double s : {0.5, 1.0}) {
        StudyConfig c;
        c.d = 70;
        c.s = s;
        c.n_mc = 500;
        c.tau_lo = 1e-4;
        c.tau_hi = 1e-1;
        c.tau_count = 10;
        c.filters = {"tikhonov", "landweber"};
        const auto pts = rate_study(c);
        for (const auto& filter : c.filters) {
            std::vector<double> r;
            for (const auto& p : pts)
                if (p.filter == filter) r.push_back(p.ratio);
            const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
            const double spread = *hi / *lo;
            const double trend = r.back() / r.front();
            o.require(spread < 10.0 && trend > 0.1, filter + " s=" + fmt(s));
            o.detail << filter << " s=" << fmt(s) << ": max/min " << fmt(spread) << ", last/first " << fmt(trend)
                     << "; ";
        }
    }
}

void erm_bound_validity(Outcome& o)
{
    const Problem p(SpectralSource{70, 0.5, 0.01, 0});
    const auto grid = build_grid(1e-4, 100.0, 500);
    const MethodSpec method = SpectralMethod{Tikhonov{}};
    const LossSpec loss = LossSpec::truncated_squared();
    const LossEvaluator eval(p, method, loss, grid);
    Rng test_rng = make_rng(0, 0, Stream::Test);
    const auto held_out = p.draw_many(5000, test_rng, Split::Test);
    const auto curve = column_means(eval.table(held_out));
    const double oracle = curve[argmin_first(curve)];
    TheoryParams tp;
    tp.m = loss.bound;
    tp.n = 50;
    tp.grid_size = 500;
    tp.eta = 0.05;
    const double additive = erm_additive_term(tp);
    const std::size_t trials = 200;
    std::size_t failures = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        const auto sel = erm_trial(p, eval, 50, 0, t, 0);
        if (!(curve[sel.index] <= 2.0 * oracle + additive)) ++failures;
    }
    const double rate = static_cast<double>(failures) / static_cast<double>(trials);
    o.require(rate <= 0.05, "failure rate");
    o.detail << "failures " << failures << "/" << trials << ", oracle risk " << fmt(oracle) << ", additive term "
             << fmt(additive);
}

void plateau(Outcome& o)
{
    StudyConfig c;
    c.d = 70;
    c.s = 0.5;
    c.tau = 0.01;
    c.trials = 30;
    c.n_mc = 5000;
    c.n_values = {20, 100};
    const auto r = plateau_study(c);
    const auto m20 = summarize(r.risk[0]).mean;
    const auto m100 = summarize(r.risk[1]).mean;
    TheoryParams tp;
    tp.m = LossSpec::truncated_squared().bound;
    tp.n = 20;
    tp.grid_size = static_cast<double>(r.oracle_curve.size());
    const double additive = erm_additive_term(tp);
    const double ratio = m100 / m20;
    o.require(ratio <= 1.5 && ratio >= 1.0 / 1.5, "plateau ratio");
    o.require(m20 - r.oracle_risk < additive && m100 - r.oracle_risk < additive, "excess risk");
    o.detail << "mean n=20 " << fmt(m20) << ", n=100 " << fmt(m100) << ", oracle " << fmt(r.oracle_risk)
             << ", additive term " << fmt(additive);
}

void quasi_optimality(Outcome& o)
{
    StudyConfig c;
    c.d = 70;
    c.s = 0.5;
    c.trials = 30;
    c.n = 1000;
    c.n_test = 50;
    c.taus = {1e-3, 1e-2, 1e-1, 0.5};
    const auto rows = compare_qo(c);
    auto mean_at = [&](const std::string& m, double tau) {
        for (const auto& r : rows)
            if (r.method == m && r.tau == tau) return r.mean;
        throw std::logic_error("missing cell");
    };
    int tik = 0;
    for (double tau : {1e-2, 1e-1, 0.5}) tik += mean_at("tikhonov", tau) < 0.0;
    int lw = 0;
    for (double tau : {1e-3, 1e-2}) lw += mean_at("landweber", tau) < 0.0;
    o.require(tik >= 2, "tikhonov signs");
    o.require(lw >= 2, "landweber signs");
    for (const auto& r : rows) o.detail << r.method << " tau=" << fmt(r.tau) << ": " << fmt(r.mean) << "; ";
    o.detail << "negative cells: tikhonov " << tik << "/3, landweber " << lw << "/2";
}

void bregman_suite(Outcome& o)
{
    Rng rng(7);
    std::uniform_int_distribution<int> tri(-1, 1);
    double min_l1 = std::numeric_limits<double>::infinity();
    std::size_t iff_errors = 0;
    for (int k = 0; k < 10000; ++k) {
        Vector x(6), ref(6);
        for (Index i = 0; i < 6; ++i) {
            x[i] = tri(rng) * (0.1 + std::abs(gaussian(1, rng)[0]));
            ref[i] = tri(rng) * (0.1 + std::abs(gaussian(1, rng)[0]));
        }
        if (k % 2 == 0) {
            // Force compatibility on even draws.
            for (Index i = 0; i < 6; ++i)
                if (x[i] != 0.0) ref[i] = std::copysign(std::abs(ref[i]) + 0.1, x[i]);
        }
        bool compatible = true;
        for (Index i = 0; i < 6; ++i)
            if (x[i] != 0.0 && (ref[i] == 0.0 || (ref[i] > 0.0) != (x[i] > 0.0))) compatible = false;
        const double b = bregman_l1(x, ref);
        min_l1 = std::min(min_l1, b);
        if ((std::abs(b) <= 1e-12) != compatible) ++iff_errors;
    }
    double min_tv = std::numeric_limits<double>::infinity();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        const Vector y = gaussian(64, rng);
        const double lambda = std::pow(10.0, -2.0 + 2.5 * unit(rng));
        const auto sol = tv_denoise(y, 8, lambda);
        // Comparison points: the reconstruction itself, nearby points, and other reconstructions.
        std::vector<Vector> points{sol.image, sol.image + 1e-3 * gaussian(64, rng), gaussian(64, rng),
                                   tv_denoise(y, 8, 2.0 * lambda).image, tv_denoise(y, 8, 0.5 * lambda).image};
        for (const auto& x : points) min_tv = std::min(min_tv, bregman_tv(x, sol));
    }
    o.require(min_l1 >= 0.0, "l1 nonnegativity");
    o.require(iff_errors == 0, "zero iff sign compatible");
    o.require(min_tv >= -1e-6, "tv nonnegativity");
    o.detail << "min D_l1 " << fmt(min_l1) << ", iff violations " << iff_errors << ", min D_tv " << fmt(min_tv);
}

void theory_suite(Outcome& o)
{
    TheoryParams p;
    p.tau = 0.01;
    p.beta = 0.8;
    p.alpha = 0.5;
    p.c0 = 0.5;
    struct Family {
        BoundFamily kind;
        std::function<double(double)> u;
        OptimalParameter opt;
    };
    const std::vector<Family> families{
        {BoundFamily::Spectral, [&](double l) { return spectral_bound(l, p); }, spectral_optimal(p)},
        {BoundFamily::Convex, [&](double l) { return convex_bound(l, p); }, convex_optimal(p)},
        {BoundFamily::Nonlinear, [&](double l) { return nonlinear_bound(l, p); }, nonlinear_optimal(p)}};
    std::size_t beaten = 0;
    double worst_identity = 0.0;
    for (const auto& f : families) {
        const auto grid = build_grid(f.opt.lambda * 1e-4, f.opt.lambda * 1e4, 10000);
        const double u_star = f.u(f.opt.lambda);
        for (double l : grid.values())
            if (f.u(l) < u_star) ++beaten;
        for (double q : {1.0, 1.5, 2.0, 5.0}) {
            const double lhs = f.u(q * f.opt.lambda);
            const double rhs = cq_factor(f.kind, q, p.alpha) * u_star;
            worst_identity = std::max(worst_identity, std::abs(lhs - rhs) / rhs);
        }
    }
    TheoryParams e;
    e.m = 4;
    e.n = 50;
    e.grid_size = 500;
    e.eta = 0.05;
    const double example = erm_bound(0.0, 1.0, e);
    o.require(beaten == 0, "optimality");
    o.require(worst_identity <= 1e-10, "C(q) identity");
    o.require(std::abs(example - 5.1498) <= 1e-3, "erm_bound example");
    o.detail << "grid points below U(lambda*) " << beaten << ", max rel. C(q) error " << fmt(worst_identity)
             << ", erm_bound example " << fmt(example);
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void determinism(Outcome& o)
{
    const auto dir = std::filesystem::temp_directory_path() / "regselect_acceptance";
    std::filesystem::create_directories(dir);
    const std::string common = " --d 16 --n-mc 100 --trials 3 --seed 11 --grid 1e-3:1:25 --tau-range 1e-3:1e-1:3";
    const std::vector<std::pair<std::string, std::string>> commands{
        {"generate", common + " --n 10"},
        {"risk-curve", common + " --n 20 --filter landweber"},
        {"rate-study", common + " --filter tikhonov,landweber"},
        {"noise-study", common + " --n 10"},
        {"plateau-study", common + " --n-values 5,10"},
        {"compare-qo", common + " --n 40 --n-test 10 --tau 0.01,0.1"},
        {"bound-check", common + " --n 20"},
        {"risk-curve", " --seed 11 --model sparse-deblur --d 32 --sparsity 3 --grid 1e-3:1:4 --n 3 --filter lasso"},
        {"risk-curve", " --seed 11 --model tv-images --side 8 --pool 6 --filter tv --grid 1e-2:1:3 --n 2"}};
    std::size_t identical = 0;
    for (std::size_t i = 0; i < commands.size(); ++i) {
        std::string outputs[2];
        for (int run = 0; run < 2; ++run) {
            const auto out = dir / ("run" + std::to_string(i) + "_" + std::to_string(run) + ".csv");
            const std::string cmd = std::string(REGSELECT_CLI_PATH) + " " + commands[i].first
                                    + commands[i].second + " --out " + out.string();
            if (std::system(cmd.c_str()) != 0) {
                o.require(false, commands[i].first + " exited with an error");
                continue;
            }
            outputs[run] = slurp(out);
            if (commands[i].first == "plateau-study") {
                auto summary = out;
                summary.replace_filename(out.stem().string() + "_summary.csv");
                outputs[run] += slurp(summary);
            }
        }
        const bool same = !outputs[0].empty() && outputs[0] == outputs[1];
        identical += same;
        o.require(same, commands[i].first + " output differs");
    }
    std::filesystem::remove_all(dir);
    o.detail << identical << "/" << commands.size() << " command runs byte-identical";
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, void (*)(Outcome&)>> criteria{
        {"grid ratios", grid_ratios},
        {"closed-form solver oracles", solver_oracles},
        {"rate reproduction", rate_reproduction},
        {"ERM bound validity", erm_bound_validity},
        {"plateau", plateau},
        {"quasi-optimality signs", quasi_optimality},
        {"Bregman properties", bregman_suite},
        {"theory formulas", theory_suite},
        {"CLI determinism", determinism}};
    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        all = all && o.pass;
        std::cout << "criterion " << i + 1 << ": " << (o.pass ? "PASS" : "FAIL") << " (" << criteria[i].first
                  << ") " << o.detail.str() << " [" << fmt(secs) << " s]" << std::endl;
    }
    return all ? 0 : 1;
}
