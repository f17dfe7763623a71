#pragma once

// Scaled energy of extended solutions on half-balls B_lambda centred at the origin,
// its derivative identity, and the homogeneity defect.
//
// Integrals are taken in polar coordinates (r, t) = rho (cos theta, sin theta) with the
// axisymmetric measure |S^{n-1}| r^{n-1} dr dt. The theta variable is mapped through
// theta = (pi/2) w^g so that the t^{1-2s} weight and the t^{2s} boundary behaviour
// become smooth in w.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <utility>
#include <vector>

#include "fle/errors.hpp"
#include "fle/extension.hpp"
#include "fle/grid.hpp"
#include "fle/quadrature.hpp"
#include "fle/special.hpp"

namespace fle {

/// Read-only axisymmetric field: value and (d/dr, d/dt) on rho < radius.
struct FieldView {
    std::function<double(double, double)> value;
    std::function<std::pair<double, double>(double, double)> gradient;
    double radius = std::numeric_limits<double>::infinity();
};

inline FieldView view_of(const ExtField& field) {
    auto f = std::make_shared<const ExtField>(field);
    return {[f](double r, double t) { return (*f)(r, t); },
            [f](double r, double t) { return f->gradient(r, t); }, f->grid->radius()};
}

inline FieldView view_of(const HomogeneousExtension& ext) {
    auto e = std::make_shared<const HomogeneousExtension>(ext);
    return {[e](double r, double t) { return e->value(r, t); },
            [e](double r, double t) { return e->gradient(r, t); }, std::numeric_limits<double>::infinity()};
}

/// mu^beta u(mu X), beta = 2s/(p-1).
inline FieldView dilate(const FieldView& u, double mu, const Params& prm) {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw DomainError("dilate: mu must be positive");
    const double a = std::pow(mu, prm.scaling_exponent());
    return {[v = u.value, mu, a](double r, double t) { return a * v(mu * r, mu * t); },
            [g = u.gradient, mu, a](double r, double t) {
                const auto [gr, gt] = g(mu * r, mu * t);
                return std::pair{a * mu * gr, a * mu * gt};
            },
            u.radius / mu};
}

struct EnergyOptions {
    /// Gauss-Legendre panels on [lambda/64, lambda] and on the mapped polar angle.
    int rho_panels = 96;
    int theta_panels = 96;
    int order = 4;
    /// Geometric panels covering [lambda 2^{-levels-6}, lambda/64].
    int geometric_levels = 40;

    void validate() const {
        if (rho_panels < 1 || theta_panels < 1 || order < 1 || geometric_levels < 0) {
            throw DomainError("EnergyOptions: panel counts must be positive");
        }
    }
};

/// Raw integrals over B_lambda: int t^{1-2s}|grad u|^2, int_{t=0} |u|^{p+1}, int_{dB} t^{1-2s} u^2.
struct EnergyParts {
    double dirichlet = 0.0;
    double potential = 0.0;
    double sphere = 0.0;
};

struct EnergyValue {
    double E = 0.0;
    double E1 = 0.0;
    double E2 = 0.0;
    /// lambda above 0.9 of the field radius, where the outer boundary may interfere.
    bool beyond_safe_radius = false;
};

namespace detail {

struct Rule {
    std::vector<double> x;
    std::vector<double> w;
};

inline void append_panel(Rule& rule, double a, double b, int order) {
    const auto& gl = quad::gauss_legendre(order);
    const double half = 0.5 * (b - a);
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
        rule.x.push_back(0.5 * (a + b) + half * gl.nodes[k]);
        rule.w.push_back(half * gl.weights[k]);
    }
}

// Nodes on [0, lambda]: geometric near 0, uniform above lambda/64.
inline Rule radial_rule(double lambda, const EnergyOptions& opt) {
    Rule rule;
    const double knee = lambda / 64.0;
    for (int k = opt.geometric_levels; k >= 1; --k) {
        append_panel(rule, std::ldexp(knee, -k), std::ldexp(knee, -k + 1), opt.order);
    }
    for (int k = 0; k < opt.rho_panels; ++k) {
        append_panel(rule, knee + (lambda - knee) * k / opt.rho_panels,
                     knee + (lambda - knee) * (k + 1) / opt.rho_panels, opt.order);
    }
    return rule;
}

// Nodes theta in (0, pi/2) with weights for d theta, through theta = (pi/2) w^g.
inline Rule angular_rule(double s, const EnergyOptions& opt) {
    const double g = 1.0 / std::min(2.0 * s, 2.0 - 2.0 * s);
    Rule mapped;
    for (int k = 0; k < opt.theta_panels; ++k) {
        append_panel(mapped, static_cast<double>(k) / opt.theta_panels,
                     static_cast<double>(k + 1) / opt.theta_panels, opt.order);
    }
    Rule rule;
    for (std::size_t k = 0; k < mapped.x.size(); ++k) {
        const double w = mapped.x[k];
        rule.x.push_back(0.5 * std::numbers::pi * std::pow(w, g));
        rule.w.push_back(mapped.w[k] * 0.5 * std::numbers::pi * g * std::pow(w, g - 1.0));
    }
    return rule;
}

inline void check_lambda(const FieldView& u, double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("energy: lambda must be positive");
    if (lambda > u.radius * (1.0 + 1e-12)) throw DomainError("energy: lambda exceeds the field domain");
}

// |S^{n-1}| int_{dB_lambda} t^{1-2s} f(r, t) d sigma.
template <class F>
double sphere_integral(F&& f, int n, double s, double lambda, const EnergyOptions& opt) {
    const Rule th = angular_rule(s, opt);
    double sum = 0.0;
    for (std::size_t k = 0; k < th.x.size(); ++k) {
        const double c = std::cos(th.x[k]);
        const double sn = std::sin(th.x[k]);
        const double r = std::min(lambda * c, lambda);
        const double t = lambda * sn;
        sum += th.w[k] * std::pow(c, n - 1) * std::pow(t, 1.0 - 2.0 * s) * f(r, t);
    }
    return sphere_area(n) * std::pow(lambda, n) * sum;
}

// Radial derivative d/d rho plus beta u / rho at (r, t).
inline double homogeneity_residual(const FieldView& u, double beta, double r, double t) {
    const double rho = std::hypot(r, t);
    const auto [gr, gt] = u.gradient(r, t);
    return (r * gr + t * gt) / rho + beta * u.value(r, t) / rho;
}

}  // namespace detail

inline EnergyParts energy_parts(const FieldView& u, int n, double s, double p, double lambda,
                                const EnergyOptions& opt = {}) {
    check_dimension(n);
    check_order(s);
    opt.validate();
    detail::check_lambda(u, lambda);
    const auto rho = detail::radial_rule(lambda, opt);
    const auto th = detail::angular_rule(s, opt);
    EnergyParts out;
    double bulk = 0.0;
    double trace = 0.0;
    for (std::size_t i = 0; i < rho.x.size(); ++i) {
        const double R = rho.x[i];
        double ring = 0.0;
        for (std::size_t k = 0; k < th.x.size(); ++k) {
            const double c = std::cos(th.x[k]);
            const double sn = std::sin(th.x[k]);
            const double r = R * c;
            const double t = R * sn;
            const auto [gr, gt] = u.gradient(r, t);
            const double v = th.w[k] * std::pow(t, 1.0 - 2.0 * s) * std::pow(r, n - 1) * (gr * gr + gt * gt);
            if (std::isfinite(v)) ring += v;
        }
        bulk += rho.w[i] * R * ring;
        const double tv = std::pow(std::abs(u.value(R, 0.0)), p + 1.0) * std::pow(R, n - 1);
        if (std::isfinite(tv)) trace += rho.w[i] * tv;
    }
    out.dirichlet = sphere_area(n) * bulk;
    out.potential = sphere_area(n) * trace;
    out.sphere = detail::sphere_integral([&](double r, double t) {
        const double v = u.value(r, t);
        return v * v;
    }, n, s, lambda, opt);
    return out;
}

/// E = E1 + E2 at radius lambda about the origin, with
///   E1 = lambda^{e} (1/2 int t^{1-2s}|grad u|^2 - kappa_s/(p+1) int |u|^{p+1}),
///   E2 = lambda^{e-1} s/(p-1) int_{dB} t^{1-2s} u^2,   e = 2s(p+1)/(p-1) - n.
inline EnergyValue energy(const FieldView& u, const Params& prm, double lambda, const EnergyOptions& opt = {}) {
    const EnergyParts parts = energy_parts(u, prm.n, prm.s, prm.p, lambda, opt);
    const double e = prm.energy_exponent();
    EnergyValue out;
    out.E1 = std::pow(lambda, e) * (0.5 * parts.dirichlet - kappa(prm.s) / (prm.p + 1.0) * parts.potential);
    out.E2 = std::pow(lambda, e - 1.0) * prm.s / (prm.p - 1.0) * parts.sphere;
    out.E = out.E1 + out.E2;
    out.beyond_safe_radius = lambda > 0.9 * u.radius;
    return out;
}

/// lambda^{e} int_{dB_lambda} t^{1-2s} (u_rho + (2s/(p-1)) u / rho)^2 d sigma, the exact
/// derivative of `energy` (the rescaling X -> lambda X of lambda int_{dB_1} t^{1-2s} U_lambda^2).
inline double energy_derivative(const FieldView& u, const Params& prm, double lambda,
                                const EnergyOptions& opt = {}) {
    opt.validate();
    detail::check_lambda(u, lambda);
    const double beta = prm.scaling_exponent();
    const double integral = detail::sphere_integral([&](double r, double t) {
        const double h = detail::homogeneity_residual(u, beta, r, t);
        return h * h;
    }, prm.n, prm.s, lambda, opt);
    return std::pow(lambda, prm.energy_exponent()) * integral;
}

/// Same surface integral with u_rho^2 + (beta u / rho)^2: the size against which
/// energy_derivative is small for a homogeneous field.
inline double energy_derivative_scale(const FieldView& u, const Params& prm, double lambda,
                                      const EnergyOptions& opt = {}) {
    opt.validate();
    detail::check_lambda(u, lambda);
    const double beta = prm.scaling_exponent();
    const double integral = detail::sphere_integral([&](double r, double t) {
        const auto [gr, gt] = u.gradient(r, t);
        const double d = (r * gr + t * gt) / lambda;
        const double b = beta * u.value(r, t) / lambda;
        return d * d + b * b;
    }, prm.n, prm.s, lambda, opt);
    return std::pow(lambda, prm.energy_exponent()) * integral;
}

namespace detail {

template <class F>
double annulus_integral(const FieldView& u, const Params& prm, double inner, double outer,
                        const EnergyOptions& opt, F&& f) {
    opt.validate();
    if (!(inner > 0.0 && outer > inner)) throw DomainError("homogeneity_defect: need 0 < inner < outer");
    check_lambda(u, outer);
    const auto th = angular_rule(prm.s, opt);
    const double weight_exp = 2.0 - prm.n + 2.0 * prm.scaling_exponent();
    double sum = 0.0;
    for (int i = 0; i < opt.rho_panels; ++i) {
        Rule rho;
        append_panel(rho, inner + (outer - inner) * i / opt.rho_panels,
                     inner + (outer - inner) * (i + 1) / opt.rho_panels, opt.order);
        for (std::size_t a = 0; a < rho.x.size(); ++a) {
            const double R = rho.x[a];
            double ring = 0.0;
            for (std::size_t k = 0; k < th.x.size(); ++k) {
                const double r = R * std::cos(th.x[k]);
                const double t = R * std::sin(th.x[k]);
                ring += th.w[k] * std::pow(t, 1.0 - 2.0 * prm.s) * std::pow(r, prm.n - 1) * f(r, t);
            }
            sum += rho.w[a] * R * std::pow(R, weight_exp) * ring;
        }
    }
    return sphere_area(prm.n) * sum;
}

}  // namespace detail

/// int over inner < |X| < outer of t^{1-2s} |X|^{2-n+4s/(p-1)} (u_rho + (2s/(p-1)) u/|X|)^2.
inline double homogeneity_defect(const FieldView& u, const Params& prm, double inner, double outer,
                                 const EnergyOptions& opt = {}) {
    const double beta = prm.scaling_exponent();
    return detail::annulus_integral(u, prm, inner, outer, opt, [&](double r, double t) {
        const double h = detail::homogeneity_residual(u, beta, r, t);
        return h * h;
    });
}

/// The same weighted integral of |grad u|^2 + (beta u/|X|)^2.
inline double homogeneity_scale(const FieldView& u, const Params& prm, double inner, double outer,
                                const EnergyOptions& opt = {}) {
    const double beta = prm.scaling_exponent();
    return detail::annulus_integral(u, prm, inner, outer, opt, [&](double r, double t) {
        const auto [gr, gt] = u.gradient(r, t);
        const double b = beta * u.value(r, t) / std::hypot(r, t);
        return gr * gr + gt * gt + b * b;
    });
}

struct EnergyReport {
    std::vector<double> lambda_grid;
    std::vector<double> E;
    std::vector<double> E1;
    std::vector<double> E2;
    std::vector<double> dE_formula;
    std::vector<double> dE_fd;

    /// min_k E(lambda_{k+1}) - E(lambda_k).
    double min_increment() const {
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k + 1 < E.size(); ++k) worst = std::min(worst, E[k + 1] - E[k]);
        return worst;
    }
};

/// `count` log-spaced radii in [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, int count) {
    if (!(lo > 0.0 && hi > lo) || count < 2) throw DomainError("log_grid: need 0 < lo < hi and count >= 2");
    std::vector<double> out(count);
    for (int k = 0; k < count; ++k) out[k] = lo * std::pow(hi / lo, static_cast<double>(k) / (count - 1));
    out.back() = hi;
    return out;
}

/// Energy, derivative formula and second-order finite differences of E on `lambdas`.
inline EnergyReport energy_report(const FieldView& u, const Params& prm, std::vector<double> lambdas,
                                  const EnergyOptions& opt = {}) {
    if (lambdas.size() < 3) throw DomainError("energy_report: need at least 3 radii");
    for (std::size_t k = 1; k < lambdas.size(); ++k) {
        if (!(lambdas[k] > lambdas[k - 1])) throw DomainError("energy_report: radii must increase");
    }
    EnergyReport rep;
    rep.lambda_grid = std::move(lambdas);
    const auto& x = rep.lambda_grid;
    for (double lambda : x) {
        const EnergyValue v = energy(u, prm, lambda, opt);
        rep.E.push_back(v.E);
        rep.E1.push_back(v.E1);
        rep.E2.push_back(v.E2);
        rep.dE_formula.push_back(energy_derivative(u, prm, lambda, opt));
    }
    const std::size_t m = x.size();
    // Three-point derivative at x[c] from the nodes x[a], x[b], x[c'] (Lagrange).
    auto derivative = [&](std::size_t at, std::size_t i0, std::size_t i1, std::size_t i2) {
        const std::size_t idx[3] = {i0, i1, i2};
        double d = 0.0;
        for (int j = 0; j < 3; ++j) {
            double coef = 0.0;
            for (int k = 0; k < 3; ++k) {
                if (k == j) continue;
                double term = 1.0 / (x[idx[j]] - x[idx[k]]);
                for (int l = 0; l < 3; ++l) {
                    if (l == j || l == k) continue;
                    term *= (x[at] - x[idx[l]]) / (x[idx[j]] - x[idx[l]]);
                }
                coef += term;
            }
            d += coef * rep.E[idx[j]];
        }
        return d;
    };
    rep.dE_fd.resize(m);
    rep.dE_fd[0] = derivative(0, 0, 1, 2);
    for (std::size_t k = 1; k + 1 < m; ++k) rep.dE_fd[k] = derivative(k, k - 1, k, k + 1);
    rep.dE_fd[m - 1] = derivative(m - 1, m - 3, m - 2, m - 1);
    return rep;
}

struct GrowthFit {
    double dirichlet_slope = 0.0;
    double potential_slope = 0.0;
    /// n - 2s(p+1)/(p-1).
    double expected = 0.0;
};

/// Least-squares log-log slopes of int_{B_R} t^{1-2s}|grad u|^2 and int_{B_R} |u|^{p+1} over R.
inline GrowthFit fit_growth_exponents(const FieldView& u, const Params& prm, const std::vector<double>& radii,
                                      const EnergyOptions& opt = {}) {
    if (radii.size() < 2) throw DomainError("fit_growth_exponents: need at least 2 radii");
    std::vector<double> lx;
    std::vector<double> ld;
    std::vector<double> lp;
    for (double R : radii) {
        const EnergyParts parts = energy_parts(u, prm.n, prm.s, prm.p, R, opt);
        lx.push_back(std::log(R));
        ld.push_back(std::log(parts.dirichlet));
        lp.push_back(std::log(parts.potential));
    }
    auto slope = [&](const std::vector<double>& y) {
        const double k = static_cast<double>(lx.size());
        double mx = 0.0;
        double my = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i] / k;
            my += y[i] / k;
        }
        double sxy = 0.0;
        double sxx = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxy += (lx[i] - mx) * (y[i] - my);
            sxx += (lx[i] - mx) * (lx[i] - mx);
        }
        return sxy / sxx;
    };
    return {slope(ld), slope(lp), -prm.energy_exponent()};
}

}  // namespace fle
