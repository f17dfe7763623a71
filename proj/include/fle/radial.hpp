#pragma once

// Radial profiles on R^n, the quadrature settings shared by the nonlocal
// integrals, spherical means, and half-line integration with power tails.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "fle/errors.hpp"
#include "fle/quadrature.hpp"
#include "fle/special.hpp"

namespace fle {

/// Radial function u(|x|) on R^n.
struct RadialFunction {
    std::function<double(double)> evaluation;
    /// Exponent d with |u(r)| = O(r^{-d}) as r -> infinity (+inf for faster than any power).
    double decay_rate = std::numeric_limits<double>::infinity();
    /// Exponent b with r^b u(r) bounded near 0, when u blows up at the origin.
    std::optional<double> singular_exponent;

    double operator()(double r) const { return evaluation(r); }
};

struct QuadratureSpec {
    /// Minimum tanh-sinh nodes across the outer (radial) integration; refinement is adaptive.
    int radial_nodes = 400;
    /// Minimum tanh-sinh nodes per inner (polar-angle) integral.
    int angular_nodes = 64;
    /// Near-field radius, relative to min(r, 1) for origin-singular profiles.
    double splitting_radius = 0.0625;
    /// Start of the mapped far field, relative to max(r, 1).
    double tail_cutoff = 4.0;
    /// Relative target of the outer integrations.
    double tolerance = 1e-10;

    void validate() const {
        if (radial_nodes < 8 || angular_nodes < 8) {
            throw DomainError("QuadratureSpec: node counts must be >= 8");
        }
        if (!(splitting_radius > 0.0) || !(splitting_radius < 1.0)) {
            throw DomainError("QuadratureSpec: splitting_radius must lie in (0, 1)");
        }
        if (!(tail_cutoff > 1.0)) throw DomainError("QuadratureSpec: tail_cutoff must exceed 1");
        if (!(tolerance > 0.0)) throw DomainError("QuadratureSpec: tolerance must be positive");
    }
};

namespace radial {

inline RadialFunction gaussian() {
    return {[](double r) { return std::exp(-0.5 * r * r); },
            std::numeric_limits<double>::infinity(), std::nullopt};
}

inline RadialFunction constant(double c) {
    return {[c](double) { return c; }, 0.0, std::nullopt};
}

/// c (1 + r^2)^{-(n-2s)/2}.
inline RadialFunction bubble(int n, double s, double c = 1.0) {
    const double e = 0.5 * (n - 2.0 * s);
    return {[c, e](double r) { return c * std::pow(1.0 + r * r, -e); }, n - 2.0 * s,
            std::nullopt};
}

/// Pure power r^{-beta}.
inline RadialFunction power(double beta) {
    return {[beta](double r) { return std::pow(r, -beta); }, beta,
            beta > 0.0 ? std::optional<double>(beta) : std::nullopt};
}

/// Singular solution A r^{-2s/(p-1)}.
inline RadialFunction singular_solution(const Params& prm) {
    const double a = singular_amplitude(prm);
    const double beta = prm.scaling_exponent();
    return {[a, beta](double r) { return a * std::pow(r, -beta); }, beta, beta};
}

/// a u + b v.
inline RadialFunction combine(double a, const RadialFunction& u, double b,
                              const RadialFunction& v) {
    std::optional<double> sing;
    if (u.singular_exponent || v.singular_exponent) {
        sing = std::max(u.singular_exponent.value_or(0.0), v.singular_exponent.value_or(0.0));
    }
    return {[a, b, fu = u.evaluation, fv = v.evaluation](double r) {
                return a * fu(r) + b * fv(r);
            },
            std::min(u.decay_rate, v.decay_rate), sing};
}

/// amplitude * u(mu r).
inline RadialFunction dilate(const RadialFunction& u, double mu, double amplitude = 1.0) {
    return {[f = u.evaluation, mu, amplitude](double r) { return amplitude * f(mu * r); },
            u.decay_rate, u.singular_exponent};
}

}  // namespace radial

namespace detail {

inline constexpr double kInnerTolerance = 1e-11;
inline constexpr double kTinyFraction = 1e-300;

// Smallest tanh-sinh level whose node count reaches `nodes` (about 12 * 2^L nodes).
inline int level_for_nodes(int nodes) {
    int level = 0;
    while (12 * (1 << level) < nodes && level < 10) ++level;
    return level;
}

inline quad::TanhSinhOptions inner_options(const QuadratureSpec& spec) {
    return {.rel_tol = kInnerTolerance,
            .abs_tol = 0.0,
            .max_level = 12,
            .min_fraction = kTinyFraction,
            .min_level = std::max(3, level_for_nodes(spec.angular_nodes))};
}

inline quad::TanhSinhOptions outer_options(const QuadratureSpec& spec, int panels) {
    return {.rel_tol = spec.tolerance,
            .abs_tol = 0.0,
            .max_level = 12,
            .min_fraction = kTinyFraction,
            .min_level = std::max(2, level_for_nodes(spec.radial_nodes / std::max(panels, 1)))};
}

// Inner integrals do not throw on a stalled refinement unless the estimate is clearly off.
inline double accept_inner(const quad::Result& r, const char* what) {
    if (!r.converged && r.error > 1e-8 * std::abs(r.value) && r.error > 1e-280) {
        throw ConvergenceError(std::string(what) + ": inner quadrature did not converge", r.error);
    }
    return r.value;
}

}  // namespace detail

/// Mean of u over the sphere of radius h centred at a point at distance r from the origin.
/// `gap` must equal |r - h|; callers that know it without cancellation pass it in.
class SphericalMean {
public:
    SphericalMean(const RadialFunction& u, int n, double r, const QuadratureSpec& spec = {})
        : u_(u), n_(n), r_(r), opt_(detail::inner_options(spec)) {
        if (n_ >= 2) {
            coef_ = sphere_area(n_ - 1) / sphere_area(n_);
        }
    }

    double operator()(double h) const { return (*this)(h, std::abs(r_ - h)); }

    double operator()(double h, double gap) const {
        if (r_ == 0.0) {
            return u_(h);
        }
        if (n_ == 1) {
            return 0.5 * (u_(r_ + h) + u_(gap));
        }
        const double rh4 = 4.0 * r_ * h;
        const double far = r_ + h;
        const int m = n_ - 2;
        bool overflow = false;
        auto integrand = [&](double theta, double dl, double dr) {
            double dist;
            double sn;
            if (theta < 0.5 * std::numbers::pi) {
                const double sh = std::sin(0.5 * dl);
                dist = std::sqrt(std::max(far * far - rh4 * sh * sh, 0.0));
                sn = std::sin(dl);
            } else {
                dist = std::hypot(gap, std::sqrt(rh4) * std::sin(0.5 * dr));
                sn = std::sin(dr);
            }
            const double w = m == 0 ? 1.0 : (m == 1 ? sn : std::pow(sn, m));
            const double v = u_(dist) * w;
            if (!std::isfinite(v)) {
                // Only within ~1e-100 of a point singularity; such spheres carry negligible
                // weight in any outer integral, so the stalled estimate is kept.
                overflow = true;
                return 0.0;
            }
            return v;
        };
        const double width = 8.0 * gap / std::sqrt(r_ * h);
        const quad::Result res = quad::polar_with_peak(integrand, width, true, opt_);
        return coef_ * (overflow ? res.value : detail::accept_inner(res, "spherical mean"));
    }

private:
    const RadialFunction& u_;
    int n_;
    double r_;
    double coef_ = 0.0;
    quad::TanhSinhOptions opt_;
};

/// Integral of f over consecutive panels given by `breaks`; f receives (x, x - left, right - x).
template <class F>
double integrate_panels(F&& f, std::span<const double> breaks, const quad::TanhSinhOptions& opt,
                        const char* what) {
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (!(breaks[i + 1] > breaks[i])) continue;
        sum += quad::tanh_sinh_value(f, breaks[i], breaks[i + 1], opt, what);
    }
    return sum;
}

/// Integral of f over [start, inf) for f = O(x^{-1-q}), through x = start v^{-1/q}, v in (0, 1].
template <class F>
double integrate_power_tail(F&& f, double start, double q, const quad::TanhSinhOptions& opt,
                            const char* what) {
    if (!(q > 0.0)) throw DomainError(std::string(what) + ": tail integral diverges");
    auto mapped = [&](double v, double, double) {
        const double stretch = std::pow(v, -1.0 / q);
        const double x = start * stretch;
        if (!(x < 1e150)) return 0.0;
        const double y = f(x) * stretch / v;
        // Beyond 1e100 a non-finite value is an inf * 0 from intermediate powers.
        return std::isfinite(y) || x < 1e100 ? y : 0.0;
    };
    return start / q * quad::tanh_sinh_value(mapped, 0.0, 1.0, opt, what);
}

/// Integral of f over [0, end] for f = O(x^{q-1}) at 0, through x = end v^{1/q}.
template <class F>
double integrate_power_head(F&& f, double end, double q, const quad::TanhSinhOptions& opt,
                            const char* what) {
    if (!(q > 0.0)) throw DomainError(std::string(what) + ": integral diverges at the origin");
    auto mapped = [&](double v, double, double) {
        const double x = end * std::pow(v, 1.0 / q);
        return f(x) * x / v;
    };
    return quad::tanh_sinh_value(mapped, 0.0, 1.0, opt, what) / q;
}

/// Integral of f over (0, inf): geometric panels 2^-8 ... 2^6 (plus `extra` breakpoints),
/// then a power tail of exponent q. With q0 > 0 the first panel is mapped for an
/// f = O(x^{q0-1}) singularity at the origin.
template <class F>
double integrate_half_line(F&& f, double q, std::span<const double> extra, const QuadratureSpec& spec,
                           const char* what, double q0 = 0.0) {
    std::vector<double> breaks{0.0};
    for (int k = -8; k <= 6; ++k) breaks.push_back(std::ldexp(1.0, k));
    for (double x : extra) {
        if (x > 0.0 && x < breaks.back()) breaks.push_back(x);
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    const auto opt = detail::outer_options(spec, static_cast<int>(breaks.size()));
    auto guarded = [&](double x, double dl, double dr) {
        const double y = f(x, dl, dr);
        // Within 1e-100 of the origin a non-finite value is an inf * 0 from intermediate powers.
        return std::isfinite(y) || x > 1e-100 ? y : 0.0;
    };
    double body;
    if (q0 > 0.0) {
        const double head =
            integrate_power_head([&](double x) { return guarded(x, x, breaks[1] - x); }, breaks[1], q0,
                                 opt, what);
        body = head + integrate_panels(guarded, std::span(breaks).subspan(1), opt, what);
    } else {
        body = integrate_panels(guarded, breaks, opt, what);
    }
    const double tail = integrate_power_tail([&](double x) { return f(x, x, x); }, breaks.back(), q,
                                             opt, what);
    return body + tail;
}

/// |S^{n-1}| int_0^inf r^{n-1} f(r) dr, where f = O(r^{-n-q}) at infinity.
template <class F>
double integrate_radial(F&& f, int n, double q, const QuadratureSpec& spec, const char* what) {
    auto g = [&](double r, double, double) { return std::pow(r, n - 1) * f(r); };
    return sphere_area(n) * integrate_half_line(g, q, {}, spec, what);
}

}  // namespace fle
