#pragma once

// Acceptance checks across modules. Each returns a pass/fail verdict with a one-line detail;
// nothing here is random, so repeated runs give identical output.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fle/exponents.hpp"
#include "fle/extension.hpp"
#include "fle/fraclap.hpp"
#include "fle/monotonicity.hpp"
#include "fle/radial.hpp"

namespace fle::verify {

struct CriterionResult {
    CriterionResult() = default;
    CriterionResult(int i, std::string n, bool p = false, std::string d = {})
        : id(i), name(std::move(n)), passed(p), detail(std::move(d)) {}

    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

struct VerifyOptions {
    /// Cells per direction of the extension grid used by the field-based checks.
    int grid_cells = 128;
    double tol = 1e-8;
};

namespace detail {

inline std::string fmt(const char* f, double a) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

inline std::string fmt(const char* f, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

inline std::string fmt(const char* f, double a, double b, double c) {
    char buf[200];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

inline double halton(int index, int base) {
    double f = 1.0;
    double r = 0.0;
    for (int i = index; i > 0; i /= base) {
        f /= base;
        r += f * (i % base);
    }
    return r;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// phi_eps = |x|^{-(n-2s)/2+eps} / (1 + |x|^2).
inline RadialFunction near_optimizer(int n, double s, double eps) {
    const double g = 0.5 * (n - 2.0 * s) - eps;
    return {[g](double r) { return std::pow(r, -g) / (1.0 + r * r); }, g + 2.0, g};
}

}  // namespace detail

/// (10, 1/2, 4): above the dividing exponent read off region_table, so the singular solution is stable.
inline Params cond_failing_point() {
    const auto rows = region_table({10}, {0.5});
    const ExtendedReal pc = rows.at(0).p_critical;
    const Params prm = Params::make(10, 0.5, 4.0);
    if (!(pc.is_finite() && prm.p > pc.value() && cond_margin(prm) < 0.0)) {
        throw SchemeError("cond_failing_point: (10, 1/2, 4) is not above the dividing exponent");
    }
    return prm;
}

/// Minimal-solution branch shared by the field-based checks, computed on first use.
class FieldContext {
public:
    explicit FieldContext(VerifyOptions opt = {}) : opt_(opt) {}

    static std::vector<double> lambdas() { return {0.3, 0.5, 0.7, 0.9, 0.99, 0.999, 0.9995, 0.9999}; }

    const Params& params() {
        if (!prm_) prm_ = cond_failing_point();
        return *prm_;
    }

    std::shared_ptr<const AxisymGrid> grid() {
        if (!grid_) {
            grid_ = std::make_shared<const AxisymGrid>(params().n, params().s,
                                                       GridOptions{opt_.grid_cells, opt_.grid_cells});
        }
        return grid_;
    }

    const MinimalBranch& branch() {
        if (!branch_) branch_ = solve_minimal_branch(params(), lambdas(), grid(), opt_.tol, 100000);
        return *branch_;
    }

    const ExtField& solution(double lambda) {
        const auto ls = lambdas();
        const auto it = std::find(ls.begin(), ls.end(), lambda);
        if (it == ls.end()) throw DomainError("FieldContext: lambda not on the branch");
        return branch().solutions.at(static_cast<std::size_t>(it - ls.begin()));
    }

    const HomogeneousExtension& singular() {
        if (!singular_) singular_ = singular_extension(params());
        return *singular_;
    }

private:
    VerifyOptions opt_;
    std::optional<Params> prm_;
    std::shared_ptr<const AxisymGrid> grid_;
    std::optional<MinimalBranch> branch_;
    std::optional<HomogeneousExtension> singular_;
};

inline CriterionResult gamma_layer() {
    CriterionResult r{1, "gamma layer exactness"};
    double worst_hardy = 0.0;
    double worst_sym = 0.0;
    for (int n = 1; n <= 9; ++n) {
        for (int k = 1; k <= 9; ++k) {
            const double s = 0.1 * k;
            if (!(n > 2.0 * s)) continue;
            const double lg = std::lgamma(0.25 * (n + 2.0 * s)) - std::lgamma(0.25 * (n - 2.0 * s));
            const double hardy = std::pow(2.0, 2.0 * s) * std::exp(2.0 * lg);
            worst_hardy = std::max(worst_hardy, detail::rel(lambda_of_alpha(n, s, 0.0), hardy));
            const double half = 0.5 * (n - 2.0 * s);
            for (double f : {0.1, 0.3, 0.5, 0.7, 0.9}) {
                const double l = lambda_of_alpha(n, s, f * half);
                worst_sym = std::max(worst_sym, detail::rel(lambda_of_alpha(n, s, -f * half), l));
            }
        }
    }
    r.passed = worst_hardy <= 1e-13 && worst_sym <= 1e-12;
    r.detail = detail::fmt("max rel |lambda(0) - Lambda| = %.3g, max rel asymmetry = %.3g", worst_hardy, worst_sym);
    return r;
}

inline CriterionResult cond_equivalence() {
    CriterionResult r{2, "cond gamma-form equivalence"};
    int checked = 0;
    int sign_mismatch = 0;
    double worst = 0.0;
    for (int i = 1; checked < 500; ++i) {
        const int n = 1 + static_cast<int>(12.0 * detail::halton(i, 2));
        const double s = 0.02 + 0.96 * detail::halton(i, 3);
        if (!(n > 2.0 * s)) continue;
        const double ps = sobolev_exponent(n, s).value();
        const double p = ps * std::exp(std::log(50.0) * detail::halton(i, 5)) + 1e-6;
        const Params prm = Params::make(n, s, p);
        const double margin = cond_margin(prm);
        const CondGammaForm g = cond_gamma_form(prm);
        if ((margin > 0.0) != (g.lhs > g.rhs)) ++sign_mismatch;
        const double scaled = std::pow(2.0, 2.0 * s) * (g.lhs - g.rhs);
        worst = std::max(worst, std::abs(scaled - margin) / (1.0 + std::abs(margin)));
        ++checked;
    }
    r.passed = sign_mismatch == 0 && worst <= 1e-10;
    r.detail = detail::fmt("500 samples, %g sign mismatches, max rel difference %.3g", sign_mismatch, worst);
    return r;
}

inline CriterionResult classical_limit() {
    CriterionResult r{3, "classical limit of p_c"};
    double worst = 0.0;
    for (int n : {11, 12, 15, 20}) {
        const ExtendedReal pc = joseph_lundgren(n, 0.999);
        const double ratio = pc.is_finite() ? pc.value() / classical_joseph_lundgren(n).value() : INFINITY;
        worst = std::max(worst, std::abs(ratio - 1.0));
    }
    std::string finite_cases;
    for (int n = 3; n <= 10; ++n) {
        const ExtendedReal pc = joseph_lundgren(n, 0.999);
        if (pc.is_finite()) finite_cases += " n=" + std::to_string(n) + detail::fmt(" (p_c=%.6g)", pc.value());
    }
    if (joseph_lundgren(3, 0.5).is_finite()) finite_cases += " (3,0.5)";
    r.passed = worst <= 0.01 && finite_cases.empty();
    r.detail = detail::fmt("max rel deviation n>=11: %.3g; tail margin at (10,0.999) = %.4g", worst,
                           tail_margin(10, 0.999));
    if (!finite_cases.empty()) r.detail += "; finite where +inf expected:" + finite_cases;
    return r;
}

inline CriterionResult fall_identity() {
    CriterionResult r{4, "fall identity"};
    double worst = std::abs(frac_lap_power(3, 0.5, 0.5) - 0.5);
    int checked = 0;
    for (int i = 1; checked < 10; ++i) {
        const int n = 1 + static_cast<int>(6.0 * detail::halton(i, 2));
        const double s = 0.05 + 0.9 * detail::halton(i, 3);
        if (!(n > 2.0 * s)) continue;
        const double beta = (n - 2.0 * s) * (0.05 + 0.9 * detail::halton(i, 5));
        const double expected = lambda_of_alpha(n, s, 0.5 * (n - 2.0 * s) - beta);
        worst = std::max(worst, std::abs(frac_lap_power(n, s, beta) - expected) / std::max(1.0, expected));
        ++checked;
    }
    r.passed = worst <= 1e-6;
    r.detail = detail::fmt("closed-form point + 10 triples, max deviation %.3g", worst);
    return r;
}

inline CriterionResult singular_solution() {
    CriterionResult r{5, "singular solution residual"};
    double worst = 0.0;
    for (const Params prm : {Params::make(3, 0.5, 3.0), Params::make(10, 0.5, 4.0)}) {
        const double a = singular_amplitude(prm);
        const RadialFunction us = radial::singular_solution(prm);
        for (double x : {0.5, 1.0, 2.0}) {
            const double rhs = std::pow(a, prm.p) * std::pow(x, -2.0 * prm.s * prm.p / (prm.p - 1.0));
            worst = std::max(worst, detail::rel(frac_lap_radial(us, prm.n, prm.s, x), rhs));
        }
    }
    r.passed = worst <= 1e-5;
    r.detail = detail::fmt("(3,1/2,3) and (10,1/2,4) at |x| in {0.5,1,2}: max rel residual %.3g", worst);
    return r;
}

inline CriterionResult extension_consistency() {
    CriterionResult r{6, "extension consistency"};
    double worst_flux = 0.0;
    for (int n : {1, 3}) {
        for (double x : {0.0, 0.7}) {
            const double flux = weighted_flux(radial::gaussian(), n, 0.5, x);
            const double direct = kappa(0.5) * frac_lap_radial(radial::gaussian(), n, 0.5, x);
            worst_flux = std::max(worst_flux, detail::rel(flux, direct));
        }
    }
    double worst_mass = 0.0;
    for (int n : {1, 3, 10}) {
        for (double s : {0.2, 0.5, 0.8}) {
            for (auto [x, t] : {std::pair{0.0, 0.1}, std::pair{0.7, 1e-3}, std::pair{2.0, 3.0}}) {
                worst_mass = std::max(worst_mass, std::abs(poisson_kernel_mass(n, s, x, t) - 1.0));
            }
        }
    }
    r.passed = worst_flux <= 1e-3 && worst_mass <= 1e-10;
    r.detail = detail::fmt("max rel flux error %.3g, max |mass - 1| %.3g", worst_flux, worst_mass);
    return r;
}

inline CriterionResult pohozaev() {
    CriterionResult r{7, "pohozaev at critical p"};
    const int n = 3;
    const double s = 0.5;
    const RadialFunction b = radial::bubble(n, s, 2.0);
    const double scale = 0.5 * (n - 2.0 * s) * hs_seminorm_sq(b, n, s);
    const double res = std::abs(pohozaev_residual(b, n, s, 2.0));
    r.passed = res <= 1e-3 * scale;
    r.detail = detail::fmt("|residual| / ((n-2s)/2 ||u||^2) = %.3g", res / scale);
    return r;
}

inline CriterionResult hardy() {
    CriterionResult r{8, "hardy inequality"};
    const int n = 3;
    const double s = 0.5;
    const double lam = hardy_constant(n, s);
    const RadialFunction g = radial::gaussian();
    const std::vector<RadialFunction> family{
        g,
        radial::dilate(g, 3.0),
        radial::dilate(g, 0.2),
        radial::bubble(4, 0.5),
        {[](double x) { return 1.0 / (1.0 + std::pow(x, 4)); }, 4.0, std::nullopt},
        {[](double x) { return x * x * std::exp(-x * x); }, std::numeric_limits<double>::infinity(), std::nullopt},
        {[](double x) { return x < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0; }, std::numeric_limits<double>::infinity(), std::nullopt},
        radial::combine(1.0, g, -2.0, radial::dilate(g, 2.0)),
        detail::near_optimizer(n, s, 0.3),
        detail::near_optimizer(n, s, 0.05),
    };
    double lowest = INFINITY;
    for (const auto& phi : family) lowest = std::min(lowest, hardy_quotient(phi, n, s));
    bool decreasing = true;
    double prev = INFINITY;
    double at_005 = 0.0;
    for (double eps : {0.3, 0.2, 0.1, 0.05}) {
        const double q = hardy_quotient(detail::near_optimizer(n, s, eps), n, s);
        decreasing = decreasing && q < prev && q > lam;
        prev = q;
        if (eps == 0.05) at_005 = q / lam - 1.0;
    }
    r.passed = lowest >= lam - 1e-8 && decreasing && at_005 < 0.05;
    r.detail = detail::fmt("min quotient - Lambda = %.3g, near-optimizer excess at eps=0.05: %.3g", lowest - lam,
                           at_005);
    if (!decreasing) r.detail += " (not monotone)";
    return r;
}

inline CriterionResult stability_dichotomy() {
    CriterionResult r{9, "stability dichotomy of u_s"};
    const Params unstable = Params::make(3, 0.5, 3.0);
    double most_negative = INFINITY;
    {
        const RadialFunction us = radial::singular_solution(unstable);
        for (double eps : {0.02, 0.05, 0.1, 0.2, 0.3}) {
            most_negative = std::min(most_negative, stability_form(us, detail::near_optimizer(3, 0.5, eps), 3, 0.5, 3.0));
        }
    }
    const double pc = region_table({9}, {0.5}).at(0).p_critical.value();
    const Params stable = Params::make(9, 0.5, 2.0 * pc);
    double lowest = INFINITY;
    {
        const RadialFunction us = radial::singular_solution(stable);
        for (double eps : {0.02, 0.05, 0.1, 0.2, 0.3}) {
            // Only the sign matters; at eps = 0.02 the seminorm stalls near 1e-6 relative accuracy.
            QuadratureSpec spec;
            if (eps < 0.05) spec.tolerance = 1e-5;
            lowest = std::min(lowest, stability_form(us, detail::near_optimizer(9, 0.5, eps), 9, 0.5, stable.p, spec));
        }
    }
    r.passed = cond_margin(unstable) > 0.0 && most_negative < 0.0 && cond_margin(stable) < 0.0 && lowest >= -1e-8;
    r.detail = detail::fmt("(3,1/2,3): min form %.4g; (9,1/2,%.4g): min form %.4g", most_negative, stable.p, lowest);
    return r;
}

inline CriterionResult monotonicity_formula(FieldContext& ctx) {
    CriterionResult r{10, "monotonicity formula"};
    const Params& prm = ctx.params();
    const EnergyReport rep = energy_report(view_of(ctx.solution(0.5)), prm, log_grid(0.1, 0.9, 20));
    double worst_fd = 0.0;
    bool nonnegative = true;
    for (std::size_t k = 0; k < rep.E.size(); ++k) {
        nonnegative = nonnegative && rep.dE_formula[k] >= 0.0;
        worst_fd = std::max(worst_fd, detail::rel(rep.dE_fd[k], rep.dE_formula[k]));
    }
    const FieldView us = view_of(ctx.singular());
    std::vector<double> e;
    double worst_derivative = 0.0;
    for (double lambda : log_grid(0.2, 0.8, 7)) {
        e.push_back(energy(us, prm, lambda).E);
        worst_derivative = std::max(worst_derivative,
                                    energy_derivative(us, prm, lambda) / energy_derivative_scale(us, prm, lambda));
    }
    const auto [lo, hi] = std::minmax_element(e.begin(), e.end());
    const double spread = (*hi - *lo) / std::abs(*hi);
    r.passed = rep.min_increment() >= -1e-6 && nonnegative && worst_fd <= 0.05 && spread <= 1e-3 &&
               worst_derivative <= 1e-8;
    r.detail = detail::fmt("u_0.5: min increment %.3g, max rel |fd - formula| %.3g; ", rep.min_increment(), worst_fd);
    r.detail += detail::fmt("u_s: E spread %.3g, dE/scale %.3g", spread, worst_derivative);
    return r;
}

inline CriterionResult minimal_construction(FieldContext& ctx, double tol) {
    CriterionResult r{11, "minimal solution construction"};
    const MinimalBranch& full = ctx.branch();
    const MinimalSolver solver(ctx.params(), ctx.grid());
    const ExtField& us = solver.singular_field();
    const HomogeneousExtension& exact = ctx.singular();
    std::vector<std::string> failures;
    int max_iter = 0;
    for (std::size_t j = 0; j < 4; ++j) {
        const ExtField& u = full.solutions[j];
        max_iter = std::max(max_iter, u.iterations);
        if (!(u.last_increment <= tol)) failures.push_back("not converged at lambda " + std::to_string(full.lambda_values[j]));
        for (std::size_t k = 0; k < u.values.size(); ++k) {
            if (!(u.values[k] >= 0.0 && u.values[k] <= us.values[k])) {
                failures.push_back("0 <= u <= u_s violated");
                break;
            }
        }
        if (j > 0) {
            const ExtField& prev = full.solutions[j - 1];
            for (std::size_t k = 0; k < u.values.size(); ++k) {
                if (prev.values[k] > u.values[k]) {
                    failures.push_back("branch not nondecreasing");
                    break;
                }
            }
            if (!(full.sup_values[j] > full.sup_values[j - 1])) failures.push_back("m_j not increasing");
        }
        const ExtField v = rescale_blowup(full, j);
        if (v.at(0, 0) != 1.0) failures.push_back("v_j(0) != 1");
        bool below = true;
        for (int jj = 0; jj <= v.grid->nt() && below; ++jj) {
            for (int i = 0; i <= v.grid->nr(); ++i) {
                if (i == 0 && jj == 0) continue;
                if (v.at(i, jj) > exact.value(v.grid->r_nodes()[i], v.grid->t_nodes()[jj]) * (1.0 + 1e-10)) {
                    below = false;
                    break;
                }
            }
        }
        if (!below) failures.push_back("v_j > u_s");
    }
    r.passed = failures.empty();
    r.detail = detail::fmt("lambda in {0.3,0.5,0.7,0.9}: m = %.5g .. %.5g, max iterations %g", full.sup_values[0],
                           full.sup_values[3], max_iter);
    for (const auto& f : failures) r.detail += "; " + f;
    return r;
}

inline CriterionResult rho_bound() {
    CriterionResult r{12, "rho two-sided bound"};
    // Frozen acceptance constant; at (m, n, s) = (2, 1, 1/2) the computed band is flat to rounding.
    constexpr double frozen_ratio = 50.0;
    std::vector<double> radii;
    for (int k = 0; k <= 40; ++k) radii.push_back(100.0 * std::pow(k / 40.0, 2.0));
    const auto [lo, hi] = verify_rho_bounds(2.0, 1, 0.5, radii);
    r.passed = lo > 0.0 && std::isfinite(hi) && hi / lo < frozen_ratio;
    r.detail = detail::fmt("band [%.4g, %.4g], ratio %.4g", lo, hi, hi / lo);
    return r;
}

inline CriterionResult growth_exponents(FieldContext& ctx) {
    CriterionResult r{13, "energy growth exponents"};
    const Params& prm = ctx.params();
    const GrowthFit fit = fit_growth_exponents(view_of(ctx.solution(0.9999)), prm, log_grid(0.3, 0.9, 8));
    const double err = std::max(std::abs(fit.dirichlet_slope - fit.expected), std::abs(fit.potential_slope - fit.expected));
    r.passed = err <= 0.2;
    r.detail = detail::fmt("u_0.9999 on R in [0.3,0.9]: slopes %.4g, %.4g vs %.4g", fit.dirichlet_slope,
                           fit.potential_slope, fit.expected);
    return r;
}

inline constexpr int criterion_count = 13;

/// Runs the selected criteria (all when `ids` is empty) in order; exceptions count as failures.
inline std::vector<CriterionResult> run(const std::vector<int>& ids = {}, const VerifyOptions& opt = {},
                                        const std::function<void(const CriterionResult&)>& on_result = {}) {
    for (int id : ids) {
        if (id < 1 || id > criterion_count) throw DomainError("verify: criterion ids run from 1 to 13");
    }
    FieldContext ctx(opt);
    const std::vector<std::function<CriterionResult()>> checks{
        gamma_layer,
        cond_equivalence,
        classical_limit,
        fall_identity,
        singular_solution,
        extension_consistency,
        pohozaev,
        hardy,
        stability_dichotomy,
        [&] { return monotonicity_formula(ctx); },
        [&] { return minimal_construction(ctx, opt.tol); },
        rho_bound,
        [&] { return growth_exponents(ctx); },
    };
    std::vector<CriterionResult> out;
    for (int id = 1; id <= criterion_count; ++id) {
        if (!ids.empty() && std::find(ids.begin(), ids.end(), id) == ids.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        CriterionResult res;
        try {
            res = checks[id - 1]();
        } catch (const std::exception& e) {
            res = {id, "criterion " + std::to_string(id), false, std::string("error: ") + e.what()};
        }
        res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (on_result) on_result(res);
        out.push_back(std::move(res));
    }
    return out;
}

}  // namespace fle::verify
