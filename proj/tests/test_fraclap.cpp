#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "fle/exponents.hpp"
#include "fle/fraclap.hpp"

namespace {

using namespace fle;
constexpr double pi = std::numbers::pi;

double halton(int index, int base) {
    double f = 1.0;
    double r = 0.0;
    for (int i = index; i > 0; i /= base) {
        f /= base;
        r += f * (i % base);
    }
    return r;
}

// (-Delta)^s exp(-|x|^2/2) at the origin, from the Fourier side.
double gaussian_at_origin(int n, double s) {
    return std::pow(2.0, s) * std::tgamma(0.5 * n + s) / std::tgamma(0.5 * n);
}

// int |xi|^{2s} |FT exp(-|x|^2/2)|^2 dxi / (2 pi)^n.
double gaussian_seminorm(int n, double s) {
    return sphere_area(n) * std::tgamma(s + 0.5 * n) / 2.0;
}

RadialFunction near_optimizer(int n, double s, double eps) {
    const double g = 0.5 * (n - 2.0 * s) - eps;
    return {[g](double r) { return std::pow(r, -g) / (1.0 + r * r); }, g + 2.0, g};
}

TEST(AngularKernel, OneDimensional) {
    EXPECT_DOUBLE_EQ(angular_kernel(1, 0.3, 0.0), 2.0);
    const double tau = 0.4;
    const double e = -1.6;
    EXPECT_NEAR(angular_kernel(1, 0.3, tau), std::pow(1.0 - tau, e) + std::pow(1.0 + tau, e), 1e-13);
}

TEST(AngularKernel, ThreeDimensionalClosedForm) {
    for (double s : {0.2, 0.5, 0.8}) {
        const double a = 0.5 * (3.0 + 2.0 * s);
        for (double tau : {0.0, 0.1, 0.5, 0.9, 0.999, 1.001, 2.0, 7.0}) {
            const double exact =
                tau == 0.0 ? 4.0 * pi
                           : 2.0 * pi *
                                 (std::pow(1.0 + tau, 2.0 - 2.0 * a) -
                                  std::pow(std::abs(1.0 - tau), 2.0 - 2.0 * a)) /
                                 (2.0 * tau * (1.0 - a));
            EXPECT_NEAR(angular_kernel(3, s, tau) / exact, 1.0, 1e-10) << s << " " << tau;
        }
    }
}

TEST(AngularKernel, TwoDimensionalCircleSum) {
    const double s = 0.5;
    const double tau = 0.5;
    const int m = 4000;
    double sum = 0.0;
    for (int k = 0; k < m; ++k) {
        const double th = 2.0 * pi * k / m;
        sum += std::pow(1.0 - 2.0 * tau * std::cos(th) + tau * tau, -(1.0 + s));
    }
    EXPECT_NEAR(angular_kernel(2, s, tau), 2.0 * pi * sum / m, 1e-8);
}

TEST(AngularKernel, ReflectionAndInfinity) {
    for (int n : {2, 4, 7}) {
        const double s = 0.35;
        for (double tau : {0.3, 0.8}) {
            EXPECT_NEAR(angular_kernel(n, s, 1.0 / tau) / (std::pow(tau, n + 2.0 * s) * angular_kernel(n, s, tau)),
                        1.0, 1e-10);
        }
        const double far = 1e3;
        EXPECT_NEAR(angular_kernel(n, s, far) * std::pow(far, n + 2.0 * s) / sphere_area(n), 1.0, 1e-3);
    }
    EXPECT_THROW(angular_kernel(3, 0.5, 1.0), SingularInputError);
    EXPECT_THROW(angular_kernel(3, 0.5, -1.0), DomainError);
}

TEST(FracLap, GaussianAtOriginMatchesFourierSide) {
    EXPECT_NEAR(frac_lap_radial(radial::gaussian(), 1, 0.5, 0.0), std::sqrt(2.0 / pi), 1e-9);
    for (auto [n, s] : {std::pair{1, 0.2}, std::pair{2, 0.7}, std::pair{3, 0.5}, std::pair{5, 0.9}}) {
        EXPECT_NEAR(frac_lap_radial(radial::gaussian(), n, s, 0.0) / gaussian_at_origin(n, s), 1.0, 1e-8)
            << n << " " << s;
    }
}

TEST(FracLap, ConstantIsAnnihilated) {
    EXPECT_NEAR(frac_lap_radial(radial::constant(3.0), 3, 0.4, 0.7), 0.0, 1e-9);
    EXPECT_NEAR(frac_lap_radial(radial::constant(-1.0), 1, 0.8, 0.0), 0.0, 1e-9);
}

TEST(FracLap, BubbleRatioIsConstant) {
    const int n = 3;
    const double s = 0.5;
    const double ps = sobolev_exponent(n, s).value();
    const RadialFunction b = radial::bubble(n, s);
    std::vector<double> ratios;
    for (double r : {0.0, 0.5, 1.0, 2.0}) {
        ratios.push_back(frac_lap_radial(b, n, s, r) / std::pow(b(r), ps));
    }
    for (double q : ratios) EXPECT_NEAR(q / ratios[0], 1.0, 1e-6);
    EXPECT_NEAR(ratios[0], 2.0, 1e-6);
}

TEST(FracLap, FallIdentity) {
    EXPECT_NEAR(frac_lap_power(3, 0.5, 0.5), 0.5, 1e-8);
    EXPECT_NEAR(frac_lap_power(4, 0.3, 1.7), hardy_constant(4, 0.3), 1e-8);
    int checked = 0;
    for (int i = 1; checked < 10; ++i) {
        const int n = 1 + static_cast<int>(6.0 * halton(i, 2));
        const double s = 0.05 + 0.9 * halton(i, 3);
        if (!(n > 2.0 * s)) continue;
        const double beta = (n - 2.0 * s) * (0.05 + 0.9 * halton(i, 5));
        const double expected = lambda_of_alpha(n, s, 0.5 * (n - 2.0 * s) - beta);
        EXPECT_NEAR(frac_lap_power(n, s, beta), expected, 1e-7 * std::max(1.0, expected))
            << n << " " << s << " " << beta;
        ++checked;
    }
    EXPECT_THROW(frac_lap_power(3, 0.5, 2.0), DomainError);
    EXPECT_THROW(frac_lap_power(1, 0.5, 0.2), DomainError);
}

TEST(FracLap, SingularSolutionResidual) {
    const Params prm = Params::make(3, 0.5, 3.0);
    const double a = singular_amplitude(prm);
    const RadialFunction us = radial::singular_solution(prm);
    for (double r : {0.5, 1.0, 2.0}) {
        const double rhs = std::pow(a, prm.p) * std::pow(r, -2.0 * prm.s * prm.p / (prm.p - 1.0));
        EXPECT_NEAR(frac_lap_radial(us, 3, 0.5, r) / rhs, 1.0, 1e-7) << r;
    }
    EXPECT_THROW(frac_lap_radial(us, 3, 0.5, 0.0), DomainError);
}

TEST(FracLap, Linearity) {
    const RadialFunction u = radial::gaussian();
    const RadialFunction v = radial::bubble(2, 0.3);
    const RadialFunction w = radial::combine(2.5, u, -0.75, v);
    for (double r : {0.0, 0.8, 3.0}) {
        const double lhs = frac_lap_radial(w, 2, 0.3, r);
        const double rhs = 2.5 * frac_lap_radial(u, 2, 0.3, r) - 0.75 * frac_lap_radial(v, 2, 0.3, r);
        EXPECT_NEAR(lhs, rhs, 1e-10 * (1.0 + std::abs(rhs))) << r;
    }
}

TEST(FracLap, DilationCovariance) {
    const double mu = 2.0;
    const RadialFunction g = radial::gaussian();
    for (auto [n, s] : {std::pair{1, 0.25}, std::pair{3, 0.5}}) {
        for (double r : {0.3, 0.7}) {
            const double lhs = frac_lap_radial(radial::dilate(g, mu), n, s, r);
            const double rhs = std::pow(mu, 2.0 * s) * frac_lap_radial(g, n, s, mu * r);
            EXPECT_NEAR(lhs / rhs, 1.0, 1e-8) << n << " " << r;
        }
    }
}

TEST(Seminorm, GaussianMatchesFourierSide) {
    EXPECT_NEAR(hs_seminorm_sq(radial::gaussian(), 1, 0.5), 1.0, 1e-8);
    for (auto [n, s] : {std::pair{1, 0.25}, std::pair{2, 0.6}, std::pair{3, 0.5}}) {
        EXPECT_NEAR(hs_seminorm_sq(radial::gaussian(), n, s) / gaussian_seminorm(n, s), 1.0, 1e-8)
            << n << " " << s;
    }
    const RadialFunction zero{[](double) { return 0.0; }};
    EXPECT_EQ(hs_seminorm_sq(zero, 3, 0.5), 0.0);
    const RadialFunction slow{[](double r) { return 1.0 / (1.0 + r); }, 1.0};
    EXPECT_THROW(hs_seminorm_sq(slow, 3, 0.5), DomainError);
}

TEST(Seminorm, SelfAdjointness) {
    const RadialFunction g = radial::gaussian();
    const QuadratureSpec coarse{.radial_nodes = 16, .tolerance = 1e-7};
    for (double s : {0.25, 0.75}) {
        const double pairing = integrate_radial(
            [&](double r) { return g(r) * frac_lap_radial(g, 1, s, r); }, 1, 1.0, coarse, "pairing");
        EXPECT_NEAR(pairing / hs_seminorm_sq(g, 1, s), 1.0, 1e-6) << s;
    }
}

TEST(Pohozaev, NormalizedBubble) {
    // c^{p-1} = 2 makes c (1 + r^2)^{-1} an exact solution at (3, 1/2).
    const int n = 3;
    const double s = 0.5;
    const double p = 2.0;
    const RadialFunction b = radial::bubble(n, s, 2.0);
    const double hs = hs_seminorm_sq(b, n, s);
    EXPECT_NEAR(hs, 2.0 * pi * pi, 1e-7);
    const double lp = integrate_radial([&](double r) { return std::pow(b(r), p + 1.0); }, n, 3.0, {}, "lp");
    EXPECT_NEAR(lp / hs, 1.0, 1e-8);
    EXPECT_LE(std::abs(pohozaev_residual(b, n, s, p)), 1e-3 * 0.5 * (n - 2.0 * s) * hs);
    const RadialFunction zero{[](double) { return 0.0; }};
    EXPECT_EQ(pohozaev_residual(zero, n, s, p), 0.0);
}

TEST(Pohozaev, CriticalDilationLeavesResidualUnchanged) {
    const int n = 3;
    const double s = 0.5;
    const double p = 2.0;
    const double mu = 2.0;
    const RadialFunction g = radial::gaussian();
    const double base = pohozaev_residual(g, n, s, p);
    ASSERT_GT(std::abs(base), 0.1);
    const double scaled = pohozaev_residual(radial::dilate(g, mu, std::pow(mu, 2.0 * s / (p - 1.0))), n, s, p);
    EXPECT_NEAR(scaled / base, 1.0, 1e-7);
}

TEST(Hardy, GaussianQuotient) {
    // n = 1, s = 1/4: Gamma(3/4) / Gamma(1/4).
    EXPECT_NEAR(hardy_quotient(radial::gaussian(), 1, 0.25), std::tgamma(0.75) / std::tgamma(0.25), 1e-8);
}

TEST(Hardy, QuotientBoundedBelowOnFamily) {
    const int n = 3;
    const double s = 0.5;
    const double lam = hardy_constant(n, s);
    const RadialFunction g = radial::gaussian();
    const std::vector<RadialFunction> family{
        g,
        radial::dilate(g, 3.0),
        radial::dilate(g, 0.2),
        radial::bubble(4, 0.5),
        {[](double r) { return 1.0 / (1.0 + std::pow(r, 4)); }, 4.0},
        {[](double r) { return r * r * std::exp(-r * r); }},
        {[](double r) { return r < 1.0 ? std::exp(-1.0 / (1.0 - r * r)) : 0.0; }},
        radial::combine(1.0, g, -2.0, radial::dilate(g, 2.0)),
        near_optimizer(n, s, 0.3),
        near_optimizer(n, s, 0.05),
    };
    for (std::size_t i = 0; i < family.size(); ++i) {
        EXPECT_GE(hardy_quotient(family[i], n, s), lam - 1e-8) << i;
    }
}

TEST(Hardy, NearOptimizersApproachConstant) {
    const int n = 3;
    const double s = 0.5;
    const double lam = hardy_constant(n, s);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {0.3, 0.2, 0.1, 0.05, 0.02}) {
        const double q = hardy_quotient(near_optimizer(n, s, eps), n, s);
        EXPECT_GT(q, lam);
        EXPECT_LT(q, prev) << eps;
        if (eps == 0.05) {
            EXPECT_LT(q / lam - 1.0, 0.05);
        }
        prev = q;
    }
}

TEST(Stability, DichotomyOfSingularSolution) {
    {
        const Params prm = Params::make(3, 0.5, 3.0);
        ASSERT_GT(cond_margin(prm), 0.0);
        const RadialFunction us = radial::singular_solution(prm);
        for (double eps : {0.3, 0.1, 0.02}) {
            EXPECT_LT(stability_form(us, near_optimizer(3, 0.5, eps), 3, 0.5, prm.p), 0.0) << eps;
        }
    }
    {
        const Params prm = Params::make(9, 0.5, 15.0);
        ASSERT_LT(cond_margin(prm), 0.0);
        const RadialFunction us = radial::singular_solution(prm);
        for (double eps : {0.3, 0.2, 0.1, 0.05}) {
            EXPECT_GE(stability_form(us, near_optimizer(9, 0.5, eps), 9, 0.5, prm.p), -1e-8) << eps;
        }
    }
    const RadialFunction zero{[](double) { return 0.0; }};
    EXPECT_GE(stability_form(zero, radial::gaussian(), 3, 0.5, 3.0), 0.0);
}

// Direct 1-D evaluation of int (eta(x) - eta(y))^2 / |x - y|^2 dy with eta = 1 / (1 + y^2),
// through y = x +- t / (1 - t).
double rho_direct(double x) {
    auto eta = [](double y) { return 1.0 / (1.0 + y * y); };
    double total = 0.0;
    for (double sign : {1.0, -1.0}) {
        auto f = [&](double t, double, double rest) {
            if (!(rest > 0.0) || !(t > 0.0)) return 0.0;
            const double q = (eta(x) - eta(x + sign * t / rest)) / t;
            return q * q;
        };
        // The fold y = 0 lies at t = x / (1 + x) on the left side.
        const double mid = x / (1.0 + x);
        if (mid > 0.0) {
            total += quad::tanh_sinh_value([&](double t, double, double) { return f(t, t, 1.0 - t); }, 0.0,
                                           mid, {}, "rho_direct");
        }
        total += quad::tanh_sinh_value([&](double t, double, double dr) { return f(t, t, dr); }, mid, 1.0,
                                       {}, "rho_direct");
    }
    return total;
}

TEST(Rho, MatchesDirectIntegral) {
    for (double x : {0.0, 0.7, 3.0, 40.0}) {
        EXPECT_NEAR(rho_kernel(2.0, 1, 0.5, x) / rho_direct(x), 1.0, 1e-8) << x;
    }
    EXPECT_NEAR(rho_kernel(2.0, 1, 0.5, 0.0), pi / 2.0, 1e-10);
    EXPECT_EQ(rho_kernel(2.0, 1, 0.5, -1.3), rho_kernel(2.0, 1, 0.5, 1.3));
    EXPECT_THROW(rho_kernel(0.5, 1, 0.5, 1.0), DomainError);
}

TEST(Rho, TwoSidedBound) {
    std::vector<double> radii;
    for (int k = 0; k <= 40; ++k) radii.push_back(100.0 * std::pow(k / 40.0, 2.0));
    const auto [lo, hi] = verify_rho_bounds(2.0, 1, 0.5, radii);
    EXPECT_GT(lo, 0.0);
    EXPECT_LT(hi / lo, 50.0);
    const auto [lo3, hi3] = verify_rho_bounds(2.0, 3, 0.4, {0.0, 1.0, 10.0, 100.0});
    EXPECT_GT(lo3, 0.0);
    EXPECT_LT(hi3 / lo3, 50.0);
}

}  // namespace
