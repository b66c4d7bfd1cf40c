#include "regselect/theory_bounds.hpp"

#include <gtest/gtest.h>

#include <functional>

using namespace regselect;

namespace {

TheoryParams base(double tau)
{
    TheoryParams p;
    p.tau = tau;
    return p;
}

// Argmin of f over 10^4 log-spaced points in [center/100, 100 center].
std::pair<double, double> log_grid_argmin(const std::function<double(double)>& f, double center)
{
    const int n = 10000;
    double best = std::numeric_limits<double>::infinity();
    double arg = 0.0;
    for (int i = 0; i < n; ++i) {
        const double l = center * std::pow(10.0, -2.0 + 4.0 * i / (n - 1));
        const double v = f(l);
        if (v < best) {
            best = v;
            arg = l;
        }
    }
    return {arg, std::pow(10.0, 4.0 / (n - 1))};
}

} // namespace

TEST(SpectralBound, Examples)
{
    const auto p = base(0.01);
    EXPECT_NEAR(spectral_bound(0.01, p), 0.02, 1e-15);
    const auto opt = spectral_optimal(p);
    EXPECT_NEAR(opt.lambda, 0.01, 1e-15);
    EXPECT_NEAR(opt.bound, 0.02, 1e-15);
    EXPECT_THROW(spectral_bound(0.0, p), std::invalid_argument);
    EXPECT_THROW(spectral_optimal(base(0.0)), std::invalid_argument);

    const auto noiseless = base(0.0);
    double prev = 0.0;
    for (int i = 1; i < 50; ++i) {
        const double u = spectral_bound(0.02 * i, noiseless);
        EXPECT_GT(u, prev);
        prev = u;
    }
}

TEST(SpectralBound, OptimalIsStationaryAndMatchesBound)
{
    for (double alpha : {0.25, 0.5, 1.0, 2.0}) {
        for (double beta : {0.5, 1.0, 3.0}) {
            TheoryParams p = base(0.03);
            p.alpha = alpha;
            p.beta = beta;
            p.c1 = 1.3;
            p.c2 = 0.7;
            const auto opt = spectral_optimal(p);
            EXPECT_NEAR(opt.bound / spectral_bound(opt.lambda, p), 1.0, 1e-12);
            const double h = 1e-6 * opt.lambda;
            const double deriv = (spectral_bound(opt.lambda + h, p) - spectral_bound(opt.lambda - h, p)) / (2 * h);
            EXPECT_LT(std::abs(deriv) * opt.lambda / opt.bound, 1e-8);
        }
    }
}

TEST(SpectralBound, Homogeneity)
{
    const auto a = spectral_optimal(base(0.01));
    const auto b = spectral_optimal(base(0.04));
    EXPECT_NEAR(b.lambda / a.lambda, 4.0, 1e-12);
    EXPECT_NEAR(b.bound / a.bound, 4.0, 1e-12);
}

TEST(ConvexBound, Examples)
{
    const auto opt = convex_optimal(base(0.25));
    EXPECT_DOUBLE_EQ(opt.lambda, 0.25);
    EXPECT_DOUBLE_EQ(opt.bound, 0.25);
    TheoryParams same = base(0.7);
    same.beta = 0.7;
    EXPECT_DOUBLE_EQ(convex_optimal(same).lambda, 1.0);
    TheoryParams p = base(0.2);
    p.beta = 2.0;
    const auto o = convex_optimal(p);
    EXPECT_NEAR(convex_bound(2.0 * o.lambda, p), 1.25 * p.beta * p.tau, 1e-14);
    EXPECT_NEAR(convex_bound(o.lambda, p), o.bound, 1e-14);
}

TEST(NonlinearBound, Examples)
{
    TheoryParams p = base(1.0);
    EXPECT_NEAR(nonlinear_bound(2.0, p), 9.0 / 2.0, 1e-14);
    const auto opt = nonlinear_optimal(p);
    EXPECT_DOUBLE_EQ(opt.lambda, 1.0);
    EXPECT_DOUBLE_EQ(opt.bound, 4.0);
    EXPECT_NEAR(nonlinear_bound(opt.lambda, p), opt.bound, 1e-14);
    p.c0 = 0.5;
    EXPECT_DOUBLE_EQ(nonlinear_optimal(p).bound, 8.0);
    p.c0 = 1.0;
    EXPECT_THROW(nonlinear_bound(1.0, p), std::invalid_argument);
    EXPECT_THROW(nonlinear_optimal(p), std::invalid_argument);
}

TEST(Bounds, OptimaAreGridMinimizers)
{
    for (double tau : {1e-3, 0.05, 0.4}) {
        for (double alpha : {0.25, 0.5, 1.0, 2.0}) {
            TheoryParams p = base(tau);
            p.alpha = alpha;
            p.beta = 1.7;
            p.c0 = 0.3;
            const auto s = spectral_optimal(p);
            auto [arg, ratio] = log_grid_argmin([&](double l) { return spectral_bound(l, p); }, s.lambda);
            EXPECT_LE(std::abs(std::log(arg / s.lambda)), std::log(ratio) * (1 + 1e-9));

            const auto c = convex_optimal(p);
            std::tie(arg, ratio) = log_grid_argmin([&](double l) { return convex_bound(l, p); }, c.lambda);
            EXPECT_LE(std::abs(std::log(arg / c.lambda)), std::log(ratio) * (1 + 1e-9));

            const auto n = nonlinear_optimal(p);
            std::tie(arg, ratio) = log_grid_argmin([&](double l) { return nonlinear_bound(l, p); }, n.lambda);
            EXPECT_LE(std::abs(std::log(arg / n.lambda)), std::log(ratio) * (1 + 1e-9));
        }
    }
}

TEST(CqFactor, ExamplesAndMonotone)
{
    for (auto fam : {BoundFamily::Spectral, BoundFamily::Convex, BoundFamily::Nonlinear}) {
        for (double alpha : {0.25, 0.5, 1.0, 2.0}) {
            EXPECT_DOUBLE_EQ(cq_factor(fam, 1.0, alpha), 1.0);
            double prev = 1.0;
            for (int i = 1; i <= 400; ++i) {
                const double c = cq_factor(fam, 1.0 + 0.01 * i, alpha);
                EXPECT_GE(c, prev);
                prev = c;
            }
        }
        EXPECT_THROW(cq_factor(fam, 0.9), std::invalid_argument);
    }
    EXPECT_DOUBLE_EQ(cq_factor(BoundFamily::Convex, 2.0), 1.25);
    EXPECT_DOUBLE_EQ(cq_factor(BoundFamily::Spectral, 2.0, 0.5), 1.25);
    EXPECT_DOUBLE_EQ(cq_factor(BoundFamily::Nonlinear, 2.0), 9.0 / 8.0);
}

TEST(CqFactor, SubstitutionIdentity)
{
    for (double q : {1.0, 1.0281, 1.5, 2.1544, 7.0}) {
        for (double alpha : {0.25, 0.5, 1.0, 2.0}) {
            TheoryParams p = base(0.02);
            p.alpha = alpha;
            p.beta = 1.4;
            p.c1 = 0.8;
            p.c2 = 1.9;
            p.c0 = 0.2;
            const auto s = spectral_optimal(p);
            EXPECT_NEAR(spectral_bound(q * s.lambda, p) / s.bound,
                        cq_factor(BoundFamily::Spectral, q, alpha), 1e-10);
            const auto c = convex_optimal(p);
            EXPECT_NEAR(convex_bound(q * c.lambda, p) / c.bound, cq_factor(BoundFamily::Convex, q), 1e-10);
            const auto n = nonlinear_optimal(p);
            EXPECT_NEAR(nonlinear_bound(q * n.lambda, p) / n.bound, cq_factor(BoundFamily::Nonlinear, q), 1e-10);
        }
    }
}

TEST(ErmBound, Examples)
{
    TheoryParams p;
    p.m = 4.0;
    p.n = 50.0;
    p.grid_size = 500.0;
    p.eta = 0.05;
    EXPECT_NEAR(erm_bound(0.0, 1.0, p), 5.1498, 1e-4);
    EXPECT_NEAR(erm_bound(0.3, 1.2, p), 0.72 + 0.52 * std::log(20000.0), 1e-12);

    TheoryParams big = p;
    big.n = 1e15;
    EXPECT_NEAR(erm_bound(0.3, 1.2, big), 0.72, 1e-10);

    TheoryParams dbl = p;
    dbl.grid_size = 1000.0;
    EXPECT_NEAR(erm_bound(0.1, 1.0, dbl) - erm_bound(0.1, 1.0, p), 0.52 * std::log(2.0), 1e-12);

    p.eta = 1.0;
    EXPECT_THROW(erm_bound(0.1, 1.0, p), std::invalid_argument);
}

TEST(HoeffdingBound, Examples)
{
    TheoryParams p;
    p.m = 4.0;
    p.n = 100.0;
    p.grid_size = 500.0;
    p.eta = 0.05;
    EXPECT_NEAR(hoeffding_bound(0.0, p), 1.2588, 1e-4);
    TheoryParams quad = p;
    quad.n = 400.0;
    EXPECT_NEAR(hoeffding_bound(0.0, quad), 0.5 * hoeffding_bound(0.0, p), 1e-12);

    TheoryParams large = p;
    large.n = 1e5;
    EXPECT_GT(hoeffding_bound(0.0, large), erm_additive_term(large));
    p.eta = 0.0;
    EXPECT_THROW(hoeffding_bound(0.0, p), std::invalid_argument);
}

TEST(Bounds, MonotoneInSampleSizeGridAndConfidence)
{
    TheoryParams p;
    p.m = 4.0;
    double prev_e = std::numeric_limits<double>::infinity();
    double prev_h = prev_e;
    for (double n : {10.0, 20.0, 50.0, 100.0, 1000.0}) {
        p.n = n;
        EXPECT_LT(erm_bound(0.1, 1.1, p), prev_e);
        EXPECT_LT(hoeffding_bound(0.1, p), prev_h);
        prev_e = erm_bound(0.1, 1.1, p);
        prev_h = hoeffding_bound(0.1, p);
    }
    p.n = 50.0;
    prev_e = prev_h = 0.0;
    for (double grid : {10.0, 100.0, 500.0, 3000.0}) {
        p.grid_size = grid;
        EXPECT_GT(erm_bound(0.1, 1.1, p), prev_e);
        EXPECT_GT(hoeffding_bound(0.1, p), prev_h);
        prev_e = erm_bound(0.1, 1.1, p);
        prev_h = hoeffding_bound(0.1, p);
    }
    prev_e = prev_h = 0.0;
    for (double eta : {0.5, 0.2, 0.05, 0.01}) {
        p.eta = eta;
        EXPECT_GT(erm_bound(0.1, 1.1, p), prev_e);
        EXPECT_GT(hoeffding_bound(0.1, p), prev_h);
        prev_e = erm_bound(0.1, 1.1, p);
        prev_h = hoeffding_bound(0.1, p);
    }
}

TEST(EffectiveAlpha, Examples)
{
    EXPECT_EQ(effective_alpha(Tikhonov{}, 0.5), 0.5);
    EXPECT_EQ(effective_alpha(Tikhonov{}, 2.0), 1.0);
    EXPECT_EQ(effective_alpha(Landweber{0.2}, 2.0), 2.0);
    EXPECT_EQ(effective_alpha(SpectralCutoff{}, 3.0), 3.0);
    EXPECT_THROW(effective_alpha(Tikhonov{}, 0.0), std::invalid_argument);
}
