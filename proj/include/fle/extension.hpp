#pragma once

// Extension to the upper half-space: Poisson integral, weighted normal derivative,
// homogeneous extensions, the minimal-solution branch of the ball problem and its
// blow-up rescaling, and the half-sphere profile problem.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <tuple>
#include <utility>
#include <vector>

#include "fle/errors.hpp"
#include "fle/grid.hpp"
#include "fle/quadrature.hpp"
#include "fle/radial.hpp"
#include "fle/special.hpp"
#include "fle/spline.hpp"

namespace fle {

namespace detail {

struct PoissonParts {
    double weighted = 0.0;  // int P (M - shift)
    double mass = 0.0;      // int P
};

// Radial reduction: int P(X, y) f(y) dy = p |S^{n-1}| int_0^inf v^{n-1} (1+v^2)^{-(n+2s)/2} M_f(x, t v) dv.
inline PoissonParts poisson_parts(const RadialFunction& u, int n, double s, double x, double t,
                                  double shift, const QuadratureSpec& spec) {
    const double log_c = std::log(poisson_constant(n, s) * sphere_area(n));
    const double decay = 0.5 * (n + 2.0 * s);
    auto kernel = [&](double v) {
        return std::exp(log_c + (n - 1) * std::log(v) - decay * std::log1p(v * v));
    };
    const SphericalMean mean(u, n, x, spec);
    const double hit = x / t;  // v at which the sphere passes through the origin

    std::vector<double> breaks{0.0};
    const double far = std::max(64.0, 8.0 * std::max(1.0, x) / t);
    double top = 1.0 / 256.0;
    while (top < far) {
        breaks.push_back(top);
        top *= 2.0;
    }
    breaks.push_back(top);
    if (hit > breaks[1] && hit < top) breaks.push_back(hit);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    auto opt = outer_options(spec, static_cast<int>(breaks.size()));
    PoissonParts out;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double a = breaks[i];
        const double b = breaks[i + 1];
        auto mass_f = [&](double v, double, double) { return v > 0.0 ? kernel(v) : (n == 1 ? kernel(0.0) : 0.0); };
        out.mass += quad::tanh_sinh_value(mass_f, a, b, opt, "poisson kernel mass");
        auto f = [&](double v, double dl, double dr) {
            if (v == 0.0) return 0.0;
            const double h = t * v;
            const double gap = a == hit ? t * dl : (b == hit ? t * dr : std::abs(x - h));
            const double y = kernel(v) * (mean(h, gap) - shift);
            return std::isfinite(y) ? y : 0.0;
        };
        auto panel_opt = opt;
        panel_opt.abs_tol = 1e-14 * std::abs(shift);
        if (i == 0 && x == 0.0 && u.singular_exponent) {
            const double q0 = n - *u.singular_exponent;
            out.weighted +=
                integrate_power_head([&](double v) { return f(v, v, b - v); }, b, q0, panel_opt, "poisson_extend");
        } else {
            out.weighted += quad::tanh_sinh_value(f, a, b, panel_opt, "poisson_extend");
        }
    }
    const double start = breaks.back();
    out.mass += integrate_power_tail([&](double v) { return kernel(v); }, start, 2.0 * s, opt,
                                     "poisson kernel mass");
    auto tail_opt = opt;
    tail_opt.abs_tol = 1e-14 * std::abs(shift);
    out.weighted += integrate_power_tail([&](double v) { return kernel(v) * (mean(t * v) - shift); }, start,
                                         2.0 * s, tail_opt, "poisson_extend tail");
    return out;
}

inline void check_half_space_point(double x, double t) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("extension: |x| must be >= 0");
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("extension: t must be > 0");
}

}  // namespace detail

/// Numerically integrated Poisson kernel int P(X, y) dy at X = (x, t); equals 1 in exact arithmetic.
inline double poisson_kernel_mass(int n, double s, double x_norm, double t, const QuadratureSpec& spec = {}) {
    check_dimension(n);
    check_order(s);
    detail::check_half_space_point(x_norm, t);
    return detail::poisson_parts(radial::constant(0.0), n, s, x_norm, t, 0.0, spec).mass;
}

/// Poisson extension at X = (x, t), divided by the computed kernel mass.
inline double poisson_extend(const RadialFunction& u, int n, double s, double x_norm, double t,
                             const QuadratureSpec& spec = {}) {
    check_dimension(n);
    check_order(s);
    spec.validate();
    detail::check_half_space_point(x_norm, t);
    if (!(u.decay_rate > -2.0 * s)) throw DomainError("poisson_extend: profile grows too fast");
    if (u.singular_exponent && !(*u.singular_exponent < n)) {
        throw DomainError("poisson_extend: profile is not locally integrable");
    }
    const auto parts = detail::poisson_parts(u, n, s, x_norm, t, 0.0, spec);
    return parts.weighted / parts.mass;
}

struct FluxOptions {
    /// Largest t of the sequence t_k = t0 2^{-k}.
    double t0 = 0.2;
    int levels = 7;
    /// Relative disagreement tolerated between the two highest extrapolants.
    double tolerance = 1e-5;
};

/// -lim t^{1-2s} d/dt of the Poisson extension at |x| = x_norm, by generalized Richardson
/// extrapolation of D(t) = 2s (u(x) - u_bar(x, t)) / t^{2s} in the powers t^{2k-2s}, t^{2k}.
inline double weighted_flux(const RadialFunction& u, int n, double s, double x_norm,
                            const QuadratureSpec& spec = {}, const FluxOptions& fo = {}) {
    check_dimension(n);
    check_order(s);
    spec.validate();
    if (fo.levels < 3 || !(fo.t0 > 0.0)) throw DomainError("weighted_flux: need >= 3 levels and t0 > 0");
    if (!(x_norm >= 0.0) || !std::isfinite(x_norm)) throw DomainError("weighted_flux: |x| must be >= 0");
    const double u0 = u(x_norm);
    if (!std::isfinite(u0)) throw DomainError("weighted_flux: profile is singular at the evaluation point");

    const int k_max = fo.levels;
    std::vector<double> ts(k_max);
    std::vector<double> ds(k_max);
    for (int k = 0; k < k_max; ++k) {
        ts[k] = std::ldexp(fo.t0, -k);
        const auto parts = detail::poisson_parts(u, n, s, x_norm, ts[k], u0, spec);
        ds[k] = -2.0 * s * (parts.weighted / parts.mass) / std::pow(ts[k], 2.0 * s);
    }
    std::vector<double> exps;
    for (int k = 1; static_cast<int>(exps.size()) < k_max; ++k) {
        exps.push_back(2.0 * k - 2.0 * s);
        exps.push_back(2.0 * k);
    }
    auto extrapolate = [&](int first, int count) {
        Eigen::MatrixXd a(count, count);
        Eigen::VectorXd b(count);
        for (int row = 0; row < count; ++row) {
            const double tau = ts[first + row] / fo.t0;
            a(row, 0) = 1.0;
            for (int c = 1; c < count; ++c) a(row, c) = std::pow(tau, exps[c - 1]);
            b[row] = ds[first + row];
        }
        return Eigen::VectorXd(a.colPivHouseholderQr().solve(b))[0];
    };
    const double best = extrapolate(0, k_max);
    const double check = extrapolate(1, k_max - 1);
    double scale = 0.0;
    for (double d : ds) scale = std::max(scale, std::abs(d));
    const double err = std::abs(best - check);
    // Rounding in u_bar - u(x), amplified by t^{-2s} at the smallest t.
    const double noise = 1e-12 * std::abs(u0) / std::pow(ts.back(), 2.0 * s);
    if (!(err <= std::max(fo.tolerance * std::max(std::abs(best), 1e-6 * scale), noise))) {
        throw ConvergenceError("weighted_flux: extrapolation did not converge", err);
    }
    return best;
}

/// amplitude * rho^{-gamma} Psi(theta) with Psi the Poisson extension of |y|^{-gamma} on the
/// unit half-sphere, X = rho (cos theta, sin theta). Psi is tabulated once per (n, s, gamma)
/// and interpolated by a cubic spline in theta^{2s} on nodes clustered at the equator.
class HomogeneousExtension {
public:
    HomogeneousExtension(int n, double s, double gamma, double amplitude = 1.0, int nodes = 64)
        : n_(n), s_(s), gamma_(gamma), amplitude_(amplitude) {
        check_dimension(n);
        check_order(s);
        if (!(gamma > 0.0 && gamma < n)) throw DomainError("HomogeneousExtension: need 0 < gamma < n");
        if (nodes < 8) throw DomainError("HomogeneousExtension: need >= 8 nodes");
        table_ = table(n, s, gamma, nodes);
    }

    int n() const { return n_; }
    double s() const { return s_; }
    double gamma() const { return gamma_; }
    double amplitude() const { return amplitude_; }

    /// Psi(theta) and dPsi/dtheta.
    std::pair<double, double> profile(double theta) const {
        const double w = std::pow(theta, 2.0 * s_);
        const auto [v, dv] = table_->eval(w);
        const double dw = theta > 0.0 ? 2.0 * s_ * w / theta : 0.0;
        return {v, dv * dw};
    }

    double value(double r, double t) const {
        const double rho = std::hypot(r, t);
        if (rho == 0.0) return std::numeric_limits<double>::infinity();
        return amplitude_ * std::pow(rho, -gamma_) * profile(std::atan2(t, r)).first;
    }

    /// (d/dr, d/dt).
    std::pair<double, double> gradient(double r, double t) const {
        const double rho = std::hypot(r, t);
        const double theta = std::atan2(t, r);
        const auto [psi, dpsi] = profile(theta);
        const double scale = amplitude_ * std::pow(rho, -gamma_ - 1.0);
        const double d_rho = -gamma_ * scale * psi;  // derivative along X / rho
        const double d_theta = scale * dpsi;         // (1/rho) d/dtheta
        const double c = r / rho;
        const double sn = t / rho;
        return {c * d_rho - sn * d_theta, sn * d_rho + c * d_theta};
    }

private:
    static std::shared_ptr<const CubicSpline> table(int n, double s, double gamma, int nodes) {
        static std::mutex mutex;
        static std::map<std::tuple<int, double, double, int>, std::shared_ptr<const CubicSpline>> cache;
        const auto key = std::make_tuple(n, s, gamma, nodes);
        {
            std::lock_guard<std::mutex> lock(mutex);
            if (auto it = cache.find(key); it != cache.end()) return it->second;
        }
        const RadialFunction u = radial::power(gamma);
        const QuadratureSpec spec{.radial_nodes = 48, .angular_nodes = 16, .tolerance = 1e-9};
        const double top = std::pow(0.5 * std::numbers::pi, 2.0 * s);
        std::vector<double> w(nodes + 1);
        std::vector<double> psi(nodes + 1);
        for (int k = 0; k <= nodes; ++k) {
            const double frac = static_cast<double>(k) / nodes;
            w[k] = top * std::pow(frac, std::max(1.0, 2.0 * s));
            if (k == 0) {
                psi[k] = 1.0;
                continue;
            }
            const double theta = k == nodes ? 0.5 * std::numbers::pi : std::pow(w[k], 0.5 / s);
            const double x = k == nodes ? 0.0 : std::cos(theta);
            psi[k] = poisson_extend(u, n, s, x, std::sin(theta), spec);
        }
        auto spline = std::make_shared<const CubicSpline>(std::move(w), std::move(psi));
        std::lock_guard<std::mutex> lock(mutex);
        return cache.emplace(key, spline).first->second;
    }

    int n_;
    double s_;
    double gamma_;
    double amplitude_;
    std::shared_ptr<const CubicSpline> table_;
};

/// Extension of the singular solution A |x|^{-2s/(p-1)}.
inline HomogeneousExtension singular_extension(const Params& prm, int nodes = 64) {
    return HomogeneousExtension(prm.n, prm.s, prm.scaling_exponent(), singular_amplitude(prm), nodes);
}

/// Picard iteration for the minimal solution of the ball problem
///   div(t^{1-2s} grad u) = 0,  -t^{1-2s} u_t = kappa_s u^p on t = 0,  u = lambda u_bar_s on the arc,
/// sharing one factorization and one sampled u_bar_s across lambda.
class MinimalSolver {
public:
    MinimalSolver(const Params& prm, std::shared_ptr<const AxisymGrid> grid)
        : prm_(prm), grid_(grid), system_(grid), singular_(grid), kappa_(kappa(prm.s)) {
        if (grid->n() != prm.n || grid->s() != prm.s) {
            throw DomainError("solve_minimal: grid built for a different (n, s)");
        }
        const HomogeneousExtension us = singular_extension(prm);
        singular_ = sample_field(grid, [&](double r, double t) { return us.value(r, t); });
    }

    const Params& params() const { return prm_; }
    const std::shared_ptr<const AxisymGrid>& grid() const { return grid_; }
    /// u_bar_s at the grid nodes (+inf at the origin).
    const ExtField& singular_field() const { return singular_; }

    /// Minimal solution for boundary factor lambda in [0, 1). `start` must be a subsolution
    /// below the minimal solution (e.g. the solution for a smaller lambda).
    ExtField solve(double lambda, double tol = 1e-8, int max_iter = 1000, const ExtField* start = nullptr) const {
        if (!(lambda >= 0.0 && lambda < 1.0)) throw DomainError("solve_minimal: lambda must lie in [0, 1)");
        if (!(tol > 0.0)) throw DomainError("solve_minimal: tol must be positive");
        if (max_iter < 1) throw DomainError("solve_minimal: max_iter must be >= 1");
        const int nr = grid_->nr();
        ExtField boundary(grid_);
        for (std::size_t k = 0; k < boundary.values.size(); ++k) {
            boundary.values[k] = std::isfinite(singular_.values[k]) ? lambda * singular_.values[k] : 0.0;
        }
        ExtField u = start ? *start : ExtField(grid_);
        if (u.grid != grid_) throw DomainError("solve_minimal: warm start lives on another grid");
        const auto& wr = grid_->r_weights();
        std::vector<double> flux(nr + 1);
        double increment = 0.0;
        for (int it = 1; it <= max_iter; ++it) {
            for (int i = 0; i <= nr; ++i) flux[i] = wr[i] * kappa_ * std::pow(std::max(u.at(i, 0), 0.0), prm_.p);
            ExtField next = system_.solve(boundary, flux);
            const double slack = 1e-11 * std::max(1.0, next.max_abs());
            increment = 0.0;
            for (std::size_t k = 0; k < next.values.size(); ++k) {
                const double d = next.values[k] - u.values[k];
                if (d < -slack) throw SchemeError("solve_minimal: iterates failed to increase");
                if (next.values[k] > singular_.values[k] + slack) {
                    throw SchemeError("solve_minimal: iterate exceeds the singular supersolution");
                }
                increment = std::max(increment, std::abs(d));
            }
            next.iterations = it;
            next.last_increment = increment;
            u = std::move(next);
            if (increment <= tol) return u;
        }
        throw ConvergenceError("solve_minimal: max_iter exceeded", increment);
    }

private:
    Params prm_;
    std::shared_ptr<const AxisymGrid> grid_;
    DegenerateSystem system_;
    ExtField singular_;
    double kappa_;
};

inline ExtField solve_minimal(const Params& prm, double lambda, std::shared_ptr<const AxisymGrid> grid,
                              double tol = 1e-8, int max_iter = 1000) {
    return MinimalSolver(prm, std::move(grid)).solve(lambda, tol, max_iter);
}

/// Largest increase of the trace between consecutive nodes, relative to max |u|; 0 when the
/// trace is radially nonincreasing.
inline double trace_monotonicity_defect(const ExtField& u) {
    double worst = 0.0;
    for (int i = 0; i < u.grid->nr(); ++i) worst = std::max(worst, u.at(i + 1, 0) - u.at(i, 0));
    return worst / std::max(u.max_abs(), std::numeric_limits<double>::min());
}

struct MinimalBranch {
    Params params;
    std::vector<double> lambda_values;
    std::vector<ExtField> solutions;
    /// m_j = u_{lambda_j}(0).
    std::vector<double> sup_values;
    /// R_j = m_j^{(p-1)/(2s)}.
    std::vector<double> rescale_factors;
};

/// Minimal solutions for increasing lambda, each warm-started from its predecessor.
inline MinimalBranch solve_minimal_branch(const Params& prm, std::vector<double> lambdas,
                                          std::shared_ptr<const AxisymGrid> grid, double tol = 1e-8,
                                          int max_iter = 1000) {
    for (std::size_t j = 1; j < lambdas.size(); ++j) {
        if (!(lambdas[j] > lambdas[j - 1])) throw DomainError("minimal branch: lambda values must increase");
    }
    const MinimalSolver solver(prm, std::move(grid));
    MinimalBranch branch{prm, std::move(lambdas), {}, {}, {}};
    for (double lambda : branch.lambda_values) {
        const ExtField* start = branch.solutions.empty() ? nullptr : &branch.solutions.back();
        ExtField u = solver.solve(lambda, tol, max_iter, start);
        const double m = u.at(0, 0);
        branch.sup_values.push_back(m);
        branch.rescale_factors.push_back(std::pow(m, (prm.p - 1.0) / (2.0 * prm.s)));
        branch.solutions.push_back(std::move(u));
    }
    return branch;
}

/// v_j(X) = m_j^{-1} u_{lambda_j}(X / R_j) on the grid dilated by R_j.
inline ExtField rescale_blowup(const MinimalBranch& branch, std::size_t j) {
    if (j >= branch.solutions.size()) throw DomainError("rescale_blowup: index out of range");
    const double m = branch.sup_values[j];
    if (!(m > 0.0)) throw DomainError("rescale_blowup: requires m_j > 0");
    const ExtField& u = branch.solutions[j];
    GridOptions opt{u.grid->nr(), u.grid->nt(), u.grid->grading(), u.grid->radius() * branch.rescale_factors[j]};
    auto grid = std::make_shared<const AxisymGrid>(u.grid->n(), u.grid->s(), opt);
    ExtField v(grid);
    for (std::size_t k = 0; k < v.values.size(); ++k) v.values[k] = u.values[k] / m;
    v.iterations = u.iterations;
    v.residual = u.residual;
    return v;
}

/// max |a - b| over a fixed window rho <= window, sampled on a (samples x samples) lattice.
inline double window_difference(const ExtField& a, const ExtField& b, double window, int samples = 64) {
    if (!(window > 0.0) || window > a.grid->radius() || window > b.grid->radius()) {
        throw DomainError("window_difference: window must lie inside both grids");
    }
    double worst = 0.0;
    for (int i = 0; i <= samples; ++i) {
        for (int j = 0; j <= samples; ++j) {
            const double r = window * i / samples;
            const double t = window * j / samples;
            if (r * r + t * t > window * window) continue;
            worst = std::max(worst, std::abs(a(r, t) - b(r, t)));
        }
    }
    return worst;
}

struct SphereProfile {
    std::vector<double> theta;
    std::vector<double> phi;

    /// Piecewise-linear interpolation in theta.
    double operator()(double th) const {
        auto it = std::upper_bound(theta.begin(), theta.end(), th);
        std::size_t k = it == theta.begin() ? 0 : static_cast<std::size_t>(it - theta.begin()) - 1;
        k = std::min(k, theta.size() - 2);
        const double a = (th - theta[k]) / (theta[k + 1] - theta[k]);
        return (1.0 - a) * phi[k] + a * phi[k + 1];
    }
};

/// Half-sphere problem -div(theta_1^{1-2s} grad phi) + (((n-2s)/2)^2 - alpha^2) theta_1^{1-2s} phi = 0,
/// phi = 1 on the equator, reduced to theta in (0, pi/2) with theta_1 = sin theta and
/// measure cos^{n-1} theta sin^{1-2s} theta; zero weighted flux at the pole.
inline SphereProfile sphere_profile(int n, double s, double alpha, int ode_nodes = 800) {
    check_supercritical_dimension(n, s);
    const double half = 0.5 * (n - 2.0 * s);
    if (!(alpha >= 0.0 && alpha < half)) throw DomainError("sphere_profile: need 0 <= alpha < (n-2s)/2");
    if (ode_nodes < 8) throw DomainError("sphere_profile: need >= 8 nodes");
    const int m = ode_nodes;
    const double c = half * half - alpha * alpha;
    const double g = std::clamp(1.0 / (1.0 - s), 1.0, 4.0);
    SphereProfile out;
    out.theta.resize(m + 1);
    for (int k = 0; k <= m; ++k) out.theta[k] = 0.5 * std::numbers::pi * std::pow(static_cast<double>(k) / m, g);
    const auto& th = out.theta;

    quad::TanhSinhOptions opt;
    opt.rel_tol = 1e-12;
    auto integral = [&](auto&& f, double a, double b) {
        return quad::tanh_sinh_value(f, a, b, opt, "sphere_profile");
    };
    std::vector<double> face(m);
    for (int k = 0; k < m; ++k) {
        const double inv = integral([&](double x) { return std::pow(std::sin(x), 2.0 * s - 1.0); }, th[k], th[k + 1]);
        face[k] = std::pow(std::cos(0.5 * (th[k] + th[k + 1])), n - 1) / inv;
    }
    // Tridiagonal system for phi_1 .. phi_m (phi_0 = 1).
    std::vector<double> lower(m + 1, 0.0);
    std::vector<double> diag(m + 1, 0.0);
    std::vector<double> upper(m + 1, 0.0);
    std::vector<double> rhs(m + 1, 0.0);
    for (int k = 1; k <= m; ++k) {
        const double lo = 0.5 * (th[k - 1] + th[k]);
        const double hi = k == m ? th[m] : 0.5 * (th[k] + th[k + 1]);
        const double mass = integral(
            [&](double x) { return std::pow(std::cos(x), n - 1) * std::pow(std::sin(x), 1.0 - 2.0 * s); }, lo, hi);
        diag[k] = face[k - 1] + (k < m ? face[k] : 0.0) + c * mass;
        if (k > 1) lower[k] = -face[k - 1];
        else rhs[k] += face[0];
        if (k < m) upper[k] = -face[k];
    }
    for (int k = 2; k <= m; ++k) {
        const double f = lower[k] / diag[k - 1];
        diag[k] -= f * upper[k - 1];
        rhs[k] -= f * rhs[k - 1];
    }
    out.phi.assign(m + 1, 1.0);
    out.phi[m] = rhs[m] / diag[m];
    for (int k = m - 1; k >= 1; --k) out.phi[k] = (rhs[k] - upper[k] * out.phi[k + 1]) / diag[k];
    for (double v : out.phi) {
        if (!std::isfinite(v)) throw ConvergenceError("sphere_profile: solver produced a non-finite value", v);
    }
    return out;
}

}  // namespace fle
