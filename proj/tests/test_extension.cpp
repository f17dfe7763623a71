#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "fle/exponents.hpp"
#include "fle/extension.hpp"
#include "fle/fraclap.hpp"

using namespace fle;

namespace {

// (n, s, p) with p above the dividing exponent, so the singular solution is stable.
Params stable_point() {
    const auto rows = region_table({10}, {0.5});
    const double pc = rows.at(0).p_critical.value();
    const Params prm = Params::make(10, 0.5, 4.0);
    EXPECT_GT(prm.p, pc);
    EXPECT_LT(cond_margin(prm), 0.0);
    return prm;
}

std::shared_ptr<const AxisymGrid> make_grid(int n, double s, int cells) {
    return std::make_shared<const AxisymGrid>(n, s, GridOptions{cells, cells});
}

// Gaussian e^{-|x|^2/2} at the origin of (-Delta)^s: 2^s Gamma(n/2+s)/Gamma(n/2).
double gaussian_at_origin(int n, double s) {
    return std::pow(2.0, s) * std::tgamma(0.5 * n + s) / std::tgamma(0.5 * n);
}

}  // namespace

TEST(Poisson, KernelNormalizesAtRandomPoints) {
    std::mt19937 gen(7);
    std::uniform_int_distribution<int> dim(1, 10);
    std::uniform_real_distribution<double> order(0.05, 0.95);
    std::uniform_real_distribution<double> coord(0.0, 3.0);
    for (int k = 0; k < 10; ++k) {
        const int n = dim(gen);
        const double s = order(gen);
        const double x = coord(gen);
        const double t = std::exp(-3.0 * coord(gen));
        EXPECT_NEAR(poisson_kernel_mass(n, s, x, t), 1.0, 1e-10) << n << " " << s << " " << x << " " << t;
    }
}

TEST(Poisson, ConstantExtendsToItself) {
    for (double t : {1e-3, 0.5, 4.0}) {
        EXPECT_NEAR(poisson_extend(radial::constant(2.5), 3, 0.3, 0.7, t), 2.5, 1e-12);
    }
}

TEST(Poisson, HalfLaplacianOfGaussianInOneDimension) {
    // Cauchy kernel against e^{-y^2/2}: u(0, t) = e^{t^2/2} erfc(t/sqrt 2).
    for (double t : {0.3, 1.0, 3.0}) {
        const double exact = std::exp(0.5 * t * t) * std::erfc(t / std::numbers::sqrt2);
        EXPECT_NEAR(poisson_extend(radial::gaussian(), 1, 0.5, 0.0, t), exact, 1e-11);
    }
}

TEST(Poisson, TraceContinuity) {
    const auto g = radial::gaussian();
    for (double x : {0.0, 0.5, 1.5}) {
        EXPECT_NEAR(poisson_extend(g, 3, 0.5, x, 1e-3), g(x), 1e-2);
        // The gap closes like t^{2s}.
        EXPECT_NEAR(poisson_extend(g, 3, 0.25, x, 1e-6), g(x), 1e-2);
    }
}

TEST(Poisson, PowerExtensionIsHomogeneous) {
    const int n = 3;
    const double s = 0.5;
    const double gamma = 0.5 * (n - 2.0 * s) - 0.3;
    const auto u = radial::power(gamma);
    for (auto [x, t] : {std::pair{0.6, 0.4}, std::pair{0.0, 1.0}, std::pair{2.0, 0.1}}) {
        const double base = poisson_extend(u, n, s, x, t);
        const double scaled = poisson_extend(u, n, s, 2.0 * x, 2.0 * t);
        EXPECT_NEAR(scaled / base, std::pow(2.0, -gamma), 1e-6);
    }
}

TEST(Poisson, RejectsBadInput) {
    EXPECT_THROW(poisson_extend(radial::gaussian(), 3, 0.5, 1.0, 0.0), DomainError);
    EXPECT_THROW(poisson_extend(radial::power(3.5), 3, 0.5, 1.0, 1.0), DomainError);
    EXPECT_THROW(poisson_kernel_mass(3, 1.0, 1.0, 1.0), DomainError);
}

TEST(Flux, GaussianMatchesFractionalLaplacian) {
    const auto g = radial::gaussian();
    for (int n : {1, 3}) {
        const double at_origin = weighted_flux(g, n, 0.5, 0.0);
        EXPECT_NEAR(at_origin / (kappa(0.5) * gaussian_at_origin(n, 0.5)), 1.0, 1e-6);
        for (double x : {0.0, 1.0}) {
            const double expect = kappa(0.5) * frac_lap_radial(g, n, 0.5, x);
            EXPECT_NEAR(weighted_flux(g, n, 0.5, x) / expect, 1.0, 1e-3) << n << " " << x;
        }
    }
    const double expect = kappa(0.3) * gaussian_at_origin(2, 0.3);
    EXPECT_NEAR(weighted_flux(g, 2, 0.3, 0.0) / expect, 1.0, 1e-4);
}

TEST(Flux, PowerGivesKappaTimesLambda) {
    const int n = 3;
    const double alpha = 0.3;
    for (double s : {0.25, 0.75}) {
        const double gamma = 0.5 * (n - 2.0 * s) - alpha;
        EXPECT_NEAR(weighted_flux(radial::power(gamma), n, s, 1.0) / (kappa(s) * lambda_of_alpha(n, s, alpha)),
                    1.0, 1e-6);
    }
}

TEST(Flux, ConstantGivesZero) {
    EXPECT_NEAR(weighted_flux(radial::constant(3.0), 3, 0.4, 0.7), 0.0, 1e-9);
}

TEST(Flux, SingularPointRejected) {
    EXPECT_THROW(weighted_flux(radial::power(1.0), 3, 0.5, 0.0), DomainError);
}

TEST(Grid, WeightsAreExactIntegrals) {
    for (double s : {0.2, 0.5, 0.8}) {
        const AxisymGrid g(3, s, GridOptions{40, 50, 0.0, 2.0});
        double st = 0.0;
        for (double w : g.t_weights()) {
            EXPECT_GT(w, 0.0);
            st += w;
        }
        double sr = 0.0;
        for (double w : g.r_weights()) {
            EXPECT_GT(w, 0.0);
            sr += w;
        }
        const double e = 2.0 - 2.0 * s;
        EXPECT_NEAR(st, std::pow(2.0, e) / e, 1e-14 * std::pow(2.0, e) / e);
        EXPECT_NEAR(sr, 8.0 / 3.0, 1e-13);
        // Graded towards t = 0 at least like (T/N)^{1/(1-s)}, up to the clamp.
        const double grading = std::clamp(1.0 / (1.0 - s), 1.0, 4.0);
        EXPECT_LE(g.t_nodes()[1], 2.0 * std::pow(1.0 / 50.0, grading) * (1.0 + 1e-12));
    }
    EXPECT_THROW(AxisymGrid(3, 0.5, GridOptions{2, 10}), DomainError);
}

TEST(Linear, ConstantsAreExact) {
    const auto grid = make_grid(3, 0.7, 48);
    const ExtField u = solve_linear_degenerate(grid, [](double, double) { return 1.0; }, [](double) { return 0.0; });
    // Conductances near t = 0 span ~8 decades at this grading, so roundoff sits near 1e-10.
    for (double v : u.values) EXPECT_NEAR(v, 1.0, 1e-9);
    EXPECT_LE(u.residual, 1e-10);
}

TEST(Linear, DiscreteMaximumPrinciple) {
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + trial % 4;
        const double s = 0.15 + 0.7 * (trial % 5) / 4.0;
        const auto grid = make_grid(n, s, 24);
        double c[6];
        for (double& x : c) x = coef(gen);
        auto data = [&](double r, double t) {
            return c[0] + c[1] * std::cos(3.0 * r) + c[2] * std::sin(5.0 * t) + c[3] * r * t +
                   c[4] * std::cos(7.0 * (r - t)) + c[5] * r * r;
        };
        const ExtField u = solve_linear_degenerate(grid, data, [](double) { return 0.0; });
        double lo = INFINITY;
        double hi = -INFINITY;
        for (int j = 0; j <= grid->nt(); ++j) {
            for (int i = 0; i <= grid->nr(); ++i) {
                if (grid->active(i, j)) continue;
                lo = std::min(lo, u.at(i, j));
                hi = std::max(hi, u.at(i, j));
            }
        }
        const double slack = 1e-12 * std::max(std::abs(lo), std::abs(hi));
        for (double v : u.values) {
            EXPECT_GE(v, lo - slack);
            EXPECT_LE(v, hi + slack);
        }
    }
}

TEST(Linear, ReproducesSingularExtension) {
    const Params prm = Params::make(3, 0.5, 3.0);
    const HomogeneousExtension us = singular_extension(prm);
    const double a = singular_amplitude(prm);
    const double beta = prm.scaling_exponent();
    const int cells = 128;
    const auto grid = make_grid(3, 0.5, cells);
    const ExtField u = solve_linear_degenerate(
        grid, [&](double r, double t) { return us.value(r, t); },
        [&](double r) { return kappa(0.5) * std::pow(a * std::pow(r, -beta), prm.p); });
    double worst = 0.0;
    double err2 = 0.0;
    double norm2 = 0.0;
    for (int j = 0; j <= cells; ++j) {
        for (int i = 0; i <= cells; ++i) {
            const double r = grid->r_nodes()[i];
            const double t = grid->t_nodes()[j];
            if (i == 0 && j == 0) continue;
            const double exact = us.value(r, t);
            const double w = grid->r_weights()[i] * grid->t_weights()[j];
            err2 += w * std::pow(u.at(i, j) - exact, 2);
            norm2 += w * exact * exact;
            // The two cells around the singular point do not resolve |X|^{-beta}.
            if (std::hypot(r, t) >= 2.0 / cells) worst = std::max(worst, std::abs(u.at(i, j) / exact - 1.0));
        }
    }
    EXPECT_LT(worst, 0.05);
    EXPECT_LT(std::sqrt(err2 / norm2), 1e-3);
}

TEST(Linear, ReproducesHomogeneousSolutionOfSphereProblem) {
    const int n = 3;
    const double s = 0.5;
    const double alpha = 0.3;
    const double gamma = 0.5 * (n - 2.0 * s) - alpha;
    const HomogeneousExtension v(n, s, gamma);
    const double flux = kappa(s) * lambda_of_alpha(n, s, alpha);
    const auto grid = make_grid(n, s, 64);
    const ExtField u = solve_linear_degenerate(
        grid, [&](double r, double t) { return v.value(r, t); },
        [&](double r) { return flux * std::pow(r, -gamma - 2.0 * s); });
    double worst = 0.0;
    for (int j = 0; j <= grid->nt(); ++j) {
        for (int i = 0; i <= grid->nr(); ++i) {
            const double r = grid->r_nodes()[i];
            const double t = grid->t_nodes()[j];
            if (std::hypot(r, t) < 4.0 / 64.0) continue;
            worst = std::max(worst, std::abs(u.at(i, j) / v.value(r, t) - 1.0));
        }
    }
    EXPECT_LT(worst, 0.02);
}

TEST(Minimal, ZeroLambdaGivesZero) {
    const Params prm = Params::make(3, 0.5, 3.0);
    const ExtField u = solve_minimal(prm, 0.0, make_grid(3, 0.5, 16));
    for (double v : u.values) EXPECT_EQ(v, 0.0);
}

TEST(Minimal, SmallLambdaConvergesQuicklyAndOrders) {
    const Params prm = stable_point();
    const MinimalSolver solver(prm, make_grid(prm.n, prm.s, 64));
    const ExtField a = solver.solve(0.1);
    const ExtField b = solver.solve(0.2);
    EXPECT_LT(a.iterations, 100);
    EXPECT_LT(b.iterations, 100);
    for (std::size_t k = 0; k < a.values.size(); ++k) EXPECT_LE(a.values[k], b.values[k]);
}

TEST(Minimal, IterationLimitIsReported) {
    const Params prm = stable_point();
    const MinimalSolver solver(prm, make_grid(prm.n, prm.s, 32));
    try {
        solver.solve(0.9, 1e-8, 2);
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_GT(e.achieved(), 1e-8);
    }
    EXPECT_THROW(solver.solve(1.0), DomainError);
}

TEST(Minimal, BranchInvariants) {
    const Params prm = stable_point();
    const auto grid = make_grid(prm.n, prm.s, 128);
    const MinimalBranch branch = solve_minimal_branch(prm, {0.3, 0.5, 0.7, 0.9}, grid);
    const MinimalSolver solver(prm, grid);
    const ExtField& us = solver.singular_field();
    const HomogeneousExtension exact = singular_extension(prm);
    ASSERT_EQ(branch.solutions.size(), 4u);
    for (std::size_t j = 0; j < branch.solutions.size(); ++j) {
        const ExtField& u = branch.solutions[j];
        EXPECT_LE(u.last_increment, 1e-8);
        for (std::size_t k = 0; k < u.values.size(); ++k) {
            EXPECT_GE(u.values[k], 0.0);
            EXPECT_LE(u.values[k], us.values[k]);
        }
        if (j > 0) {
            EXPECT_GT(branch.sup_values[j], branch.sup_values[j - 1]);
            const ExtField& prev = branch.solutions[j - 1];
            for (std::size_t k = 0; k < u.values.size(); ++k) EXPECT_LE(prev.values[k], u.values[k]);
        }
        const ExtField v = rescale_blowup(branch, j);
        EXPECT_EQ(v.at(0, 0), 1.0);
        EXPECT_NEAR(v.grid->radius(), branch.rescale_factors[j], 1e-12 * branch.rescale_factors[j]);
        for (int jj = 0; jj <= v.grid->nt(); ++jj) {
            for (int i = 0; i <= v.grid->nr(); ++i) {
                if (i == 0 && jj == 0) continue;
                const double bound = exact.value(v.grid->r_nodes()[i], v.grid->t_nodes()[jj]);
                EXPECT_LE(v.at(i, jj), bound * (1.0 + 1e-10));
            }
        }
    }
    // Monitored only: Cauchy differences of v_j on the smallest common window.
    const double window = 0.9 * *std::min_element(branch.rescale_factors.begin(), branch.rescale_factors.end());
    for (std::size_t j = 2; j < branch.solutions.size(); ++j) {
        const double d = window_difference(rescale_blowup(branch, j - 1), rescale_blowup(branch, j), window);
        RecordProperty("cauchy_" + std::to_string(j), std::to_string(d));
        EXPECT_TRUE(std::isfinite(d));
    }
}

TEST(Minimal, TraceRiseNearTheArcFadesAsLambdaGrowsToOne) {
    // The arc data lambda u_bar_s peaks where the arc meets t = 0, so for moderate lambda the
    // trace increases towards r = 1; the decreasing profile emerges only as lambda -> 1.
    const Params prm = stable_point();
    const MinimalBranch branch =
        solve_minimal_branch(prm, {0.3, 0.7, 0.9, 0.99}, make_grid(prm.n, prm.s, 64));
    std::vector<double> defect;
    for (const auto& u : branch.solutions) defect.push_back(trace_monotonicity_defect(u));
    EXPECT_GT(defect[0], 1e-3);
    for (std::size_t j = 1; j < defect.size(); ++j) EXPECT_LT(defect[j], defect[j - 1]);
    EXPECT_EQ(defect.back(), 0.0);
}

TEST(Minimal, UnitSupRescaleIsIdentity) {
    const Params prm = Params::make(3, 0.5, 3.0);
    const auto grid = make_grid(3, 0.5, 16);
    ExtField u(grid);
    for (std::size_t k = 0; k < u.values.size(); ++k) u.values[k] = 1.0 / (1.0 + static_cast<double>(k));
    const MinimalBranch branch{prm, {0.5}, {u}, {1.0}, {1.0}};
    const ExtField v = rescale_blowup(branch, 0);
    EXPECT_EQ(v.grid->radius(), grid->radius());
    EXPECT_EQ(v.grid->t_nodes(), grid->t_nodes());
    EXPECT_EQ(v.values, u.values);
}

TEST(SphereProfile, BoundaryValueAndComparison) {
    const int n = 3;
    const double s = 0.5;
    const double half = 0.5 * (n - 2.0 * s);
    const SphereProfile phi0 = sphere_profile(n, s, 0.0);
    EXPECT_EQ(phi0.phi.front(), 1.0);
    for (double frac : {0.1, 0.3}) {
        const SphereProfile phi = sphere_profile(n, s, frac * half);
        ASSERT_EQ(phi.phi.size(), phi0.phi.size());
        for (std::size_t k = 0; k < phi.phi.size(); ++k) EXPECT_LE(phi0.phi[k], phi.phi[k] + 1e-14);
    }
    EXPECT_THROW(sphere_profile(n, s, half), DomainError);
}

TEST(SphereProfile, MatchesPoissonExtensionOnTheHalfSphere) {
    for (auto [n, s, alpha] : {std::tuple{3, 0.5, 0.3}, std::tuple{4, 0.3, 0.5}, std::tuple{2, 0.75, 0.1}}) {
        const double gamma = 0.5 * (n - 2.0 * s) - alpha;
        const SphereProfile phi = sphere_profile(n, s, alpha, 1600);
        const auto u = radial::power(gamma);
        for (double theta : {0.05, 0.4, 0.9, 1.3, 0.5 * std::numbers::pi}) {
            const double x = theta == 0.5 * std::numbers::pi ? 0.0 : std::cos(theta);
            EXPECT_NEAR(phi(theta), poisson_extend(u, n, s, x, std::sin(theta)), 1e-3) << n << " " << theta;
        }
    }
}

TEST(SphereProfile, TableOfSingularExtensionAgrees) {
    const Params prm = stable_point();
    const HomogeneousExtension us = singular_extension(prm);
    const SphereProfile phi = sphere_profile(prm.n, prm.s, prm.alpha_star());
    for (double theta : {0.1, 0.5, 1.0, 1.5}) EXPECT_NEAR(us.profile(theta).first, phi(theta), 1e-4);
}
