#pragma once

// Fractional Laplacian of radial functions, the H^s seminorm, Hardy quotient,
// stability form, Pohozaev residual and the cutoff kernel rho.
//
// (-Delta)^s u(x) = C |S^{n-1}| int_0^inf h^{-1-2s} (u(x) - M_u(x, h)) dh, where M_u is the
// spherical mean and C = operator_constant(n, s). The h-integral is split into a near field
// [0, delta] (polynomial fit of (u - M)/h^2 in h^2, integrated exactly against h^{1-2s}),
// geometric panels up to the far-field radius, and a mapped tail.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fle/errors.hpp"
#include "fle/quadrature.hpp"
#include "fle/radial.hpp"
#include "fle/special.hpp"

namespace fle {

namespace detail {

// w_k with int_0^1 x^{1-2s} P(x^2) dx = sum_k w_k P(4^{-k}) for P of degree <= 4.
inline std::array<double, 5> near_field_weights(double s) {
    Eigen::Matrix<double, 5, 5> a;
    Eigen::Matrix<double, 5, 1> b;
    for (int j = 0; j < 5; ++j) {
        for (int k = 0; k < 5; ++k) {
            a(j, k) = std::pow(0.25, k * j);
        }
        b(j) = 1.0 / (2.0 * j + 2.0 - 2.0 * s);
    }
    const Eigen::Matrix<double, 5, 1> w = a.fullPivLu().solve(b);
    return {w(0), w(1), w(2), w(3), w(4)};
}

// int_0^delta h^{1-2s} G(h) dh for an even smooth G sampled at delta 2^{-k}, k = 0..4.
template <class G>
double near_field_integral(G&& g, double s, double delta) {
    const auto w = near_field_weights(s);
    double sum = 0.0;
    for (int k = 0; k < 5; ++k) {
        sum += w[k] * g(std::ldexp(delta, -k));
    }
    return std::pow(delta, 2.0 - 2.0 * s) * sum;
}

// K(tau) |1 - tau|^{1+2s}, with gap = |1 - tau| supplied by the caller. The scaling keeps
// the value and the integrand bounded as tau -> 1; the integrand is formed in logs.
inline double angular_kernel_scaled(int n, double s, double tau, double gap,
                                    const quad::TanhSinhOptions& opt) {
    const double e = n + 2.0 * s;
    const double g = 1.0 + 2.0 * s;
    if (n == 1) {
        return 1.0 + std::pow(gap / (1.0 + tau), g);
    }
    if (gap < 1e-10) {
        // Limit |S^{n-2}| B((n-1)/2, s+1/2) / 2; the correction is O(gap).
        return 0.5 * sphere_area(n - 1) *
               std::exp(log_gamma(0.5 * (n - 1)) + log_gamma(s + 0.5) - log_gamma(0.5 * n + s));
    }
    const int m = n - 2;
    const double log_gap = std::log(gap);
    auto integrand = [&](double theta, double dl, double dr) {
        double half_sin;
        double sn;
        if (theta < 0.5 * std::numbers::pi) {
            half_sin = std::sin(0.5 * dl);
            sn = std::sin(dl);
        } else {
            half_sin = std::cos(0.5 * dr);
            sn = std::sin(dr);
        }
        const double dist = std::hypot(gap, 2.0 * std::sqrt(tau) * half_sin);
        double lg = g * log_gap - e * std::log(dist);
        if (m > 0) lg += m * std::log(sn);
        return std::exp(lg);
    };
    const double width = tau > 0.0 ? 8.0 * gap / std::sqrt(tau) : 1.0;
    const quad::Result r = quad::polar_with_peak(integrand, width, false, opt);
    return sphere_area(n - 1) * accept_inner(r, "angular_kernel");
}

// Scaled K(tau) memoized separately for tau in (0, 1/2] (keyed by tau) and [1/2, 1)
// (keyed by gap). Lookups are serialized, so one cache may serve concurrent callers.
class KernelCache {
public:
    KernelCache(int n, double s, const quad::TanhSinhOptions& opt) : n_(n), s_(s), opt_(opt) {}

    double operator()(double tau, double gap) {
        if (n_ == 1) {
            return angular_kernel_scaled(n_, s_, tau, gap, opt_);
        }
        const bool low = tau <= 0.5;
        const double key = low ? tau : gap;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto& table = low ? low_ : high_;
            auto it = table.find(key);
            if (it != table.end()) return it->second;
        }
        const double k = angular_kernel_scaled(n_, s_, tau, gap, opt_);
        std::lock_guard<std::mutex> lock(mutex_);
        (low ? low_ : high_).emplace(key, k);
        return k;
    }

private:
    int n_;
    double s_;
    quad::TanhSinhOptions opt_;
    std::mutex mutex_;
    std::unordered_map<double, double> low_;
    std::unordered_map<double, double> high_;
};

// Process-wide kernel cache per (n, s, inner refinement floor); the kernel is a pure
// function of these, so sharing only saves work.
inline KernelCache& shared_kernel_cache(int n, double s, const quad::TanhSinhOptions& opt) {
    static std::mutex mutex;
    static std::map<std::tuple<int, double, int>, std::unique_ptr<KernelCache>> caches;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = caches[{n, s, opt.min_level}];
    if (!slot) slot = std::make_unique<KernelCache>(n, s, opt);
    return *slot;
}

inline constexpr double kTaylorGap = 1e-4;

// a^{2s} int (u(x) - u(y))^2 |x - y|^{-n-2s} dy at |x| = a, divided by scale^2 and written
// over tau = |y|/a in (0,1) and its reciprocal. The scale keeps profiles that blow up at the
// origin representable.
inline double gagliardo_density_scaled(const RadialFunction& u, int n, double s, double a,
                                       double scale, KernelCache& kernel,
                                       const quad::TanhSinhOptions& opt) {
    const double ua = u(a) / scale;
    // a u'(a) and a^2 u''(a), for the difference quotients at tau -> 1 where direct
    // differencing loses all digits.
    const double h = 1e-4 * a;
    const double up = u(a + h) / scale;
    const double um = u(a - h) / scale;
    const double du = 0.5 * (up - um) * 1e4;
    const double d2u = (up - 2.0 * ua + um) * 1e8;
    bool overflow = false;
    auto part = [&](double tau, double gap) {
        const double k = kernel(tau, gap);
        const double far = std::min(a / tau, 1e150);
        double q1;
        double q2;
        if (gap < kTaylorGap) {
            q1 = du - 0.5 * d2u * gap;
            q2 = -(du + 0.5 * d2u * gap / tau) / tau;
        } else {
            q1 = (ua - u(a * tau) / scale) / gap;
            q2 = (ua - u(far) / scale) / gap;
        }
        const double d1 = q1 * std::pow(tau, 0.5 * (n - 1));
        const double d2 = q2 * std::pow(tau, s - 0.5);
        const double v = k * std::pow(gap, 1.0 - 2.0 * s) * (d1 * d1 + d2 * d2);
        if (!std::isfinite(v)) {
            // a * tau has reached the singularity at the origin; the weight there is nil.
            overflow = true;
            return 0.0;
        }
        return v;
    };
    // Unit-scale features of u sit at tau = 1/a in u(a tau) and at tau = a in u(a / tau);
    // tanh-sinh clustering finds them unaided unless they are extremely close to 0. Such a
    // feature gets its own panel, with ends at powers of 2 so that nearby radii share kernel nodes.
    std::vector<double> breaks{0.0, 0.5};
    for (double b : {a, 1.0 / a}) {
        if (b > 0.0 && b < 1.0 / 32.0) {
            const double e = std::floor(std::log2(b));
            breaks.push_back(std::exp2(e - 1.0));
            breaks.push_back(std::exp2(e + 2.0));
        }
    }
    std::sort(breaks.begin(), breaks.end());
    quad::Result lo;
    lo.converged = true;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const quad::Result r = quad::tanh_sinh(
            [&](double tau, double, double) { return part(tau, 1.0 - tau); }, breaks[i], breaks[i + 1],
            opt);
        lo.value += r.value;
        lo.error += r.error;
        lo.converged = lo.converged && r.converged;
    }
    const quad::Result hi =
        quad::tanh_sinh([&](double tau, double, double dr) { return part(tau, dr); }, 0.5, 1.0, opt);
    quad::Result both;
    both.value = lo.value + hi.value;
    both.error = lo.error + hi.error;
    both.converged = lo.converged && hi.converged;
    return overflow ? both.value : accept_inner(both, "gagliardo density");
}

inline double density_scale(const RadialFunction& u, double a) {
    if (!(a < 1.0)) return 1.0;
    const double m = std::abs(u(a));
    return m > 1.0 && std::isfinite(m) ? m : 1.0;
}

// v r^e without spurious overflow of either factor. A profile value that has itself overflowed
// next to the origin is dropped; integrability there has been validated by the caller.
inline double times_power(double v, double r, double e) {
    if (v == 0.0) return 0.0;
    if (!std::isfinite(v)) return r < 1e-30 ? 0.0 : v;
    return std::copysign(std::exp(std::log(std::abs(v)) + e * std::log(r)), v);
}

// Exponent q0 of an integrand x^{q0-1} at the origin: base - sum_i k_i b_i over the profiles
// with singular exponent b_i raised to power k_i; 0 when none is singular.
inline double origin_exponent(double base, std::initializer_list<const RadialFunction*> profiles,
                              std::initializer_list<double> powers) {
    bool singular = false;
    double q0 = base;
    auto k = powers.begin();
    for (const RadialFunction* u : profiles) {
        if (u->singular_exponent) {
            singular = true;
            q0 -= *k * *u->singular_exponent;
        }
        ++k;
    }
    if (!singular) return 0.0;
    if (!(q0 > 0.0)) throw DomainError("integral diverges at the origin");
    return q0;
}

inline void check_radial_input(const RadialFunction& u) {
    if (!u.evaluation) throw DomainError("radial function has no evaluation");
}

}  // namespace detail

/// K(tau) = int_{S^{n-1}} |e_1 - tau w|^{-(n+2s)} dsigma(w).
inline double angular_kernel(int n, double s, double tau, const QuadratureSpec& spec = {}) {
    check_dimension(n);
    check_order(s);
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw DomainError("angular_kernel: tau must be >= 0");
    if (tau == 1.0) throw SingularInputError("angular_kernel: kernel is singular at tau = 1");
    const double gap = std::abs(1.0 - tau);
    return detail::angular_kernel_scaled(n, s, tau, gap, detail::inner_options(spec)) *
           std::pow(gap, -1.0 - 2.0 * s);
}

/// (-Delta)^s u at |x| = r for the operator with symbol |xi|^{2s}.
inline double frac_lap_radial(const RadialFunction& u, int n, double s, double r,
                              const QuadratureSpec& spec = {}) {
    check_dimension(n);
    check_order(s);
    spec.validate();
    detail::check_radial_input(u);
    if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("frac_lap_radial: r must be >= 0");
    const bool singular = u.singular_exponent.has_value();
    if (singular && r == 0.0) {
        throw DomainError("frac_lap_radial: profile is singular at the evaluation point");
    }
    if (!(u.decay_rate > -2.0 * s)) {
        throw DomainError("frac_lap_radial: profile grows too fast for the operator to exist");
    }

    const double u0 = u(r);
    const SphericalMean mean(u, n, r, spec);
    const double delta = spec.splitting_radius * (singular ? std::min(r, 1.0) : 1.0);
    const double near = detail::near_field_integral(
        [&](double h) { return (u0 - mean(h)) / (h * h); }, s, delta);

    const double far_start = spec.tail_cutoff * std::max(r, 1.0);
    std::vector<double> breaks;
    for (double h = delta; h < far_start; h *= 2.0) breaks.push_back(h);
    breaks.push_back(far_start);
    if (r > delta && r < far_start) breaks.push_back(r);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    const auto opt = detail::outer_options(spec, static_cast<int>(breaks.size()));
    double mid = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double a = breaks[i];
        const double b = breaks[i + 1];
        auto f = [&](double h, double dl, double dr) {
            const double gap = a == r ? dl : (b == r ? dr : std::abs(h - r));
            return std::pow(h, -1.0 - 2.0 * s) * (u0 - mean(h, gap));
        };
        const double scale = std::max(std::abs(u0), 1e-300) * std::pow(a, -2.0 * s);
        auto panel_opt = opt;
        panel_opt.abs_tol = 1e-3 * spec.tolerance * scale;
        mid += quad::tanh_sinh_value(f, a, b, panel_opt, "frac_lap_radial");
    }

    const double tail_u0 = u0 * std::pow(far_start, -2.0 * s) / (2.0 * s);
    const double tail_mean = integrate_power_tail(
        [&](double h) { return std::pow(h, -1.0 - 2.0 * s) * mean(h); }, far_start, 2.0 * s, opt,
        "frac_lap_radial tail");
    return operator_constant(n, s) * sphere_area(n) * (near + mid + tail_u0 - tail_mean);
}

/// c with (-Delta)^s |x|^{-beta} = c |x|^{-beta-2s}, by quadrature at |x| = 1.
inline double frac_lap_power(int n, double s, double beta, const QuadratureSpec& spec = {}) {
    check_supercritical_dimension(n, s);
    if (!(beta > 0.0 && beta < n - 2.0 * s)) {
        throw DomainError("frac_lap_power: requires 0 < beta < n - 2s");
    }
    return frac_lap_radial(radial::power(beta), n, s, 1.0, spec);
}

/// Gagliardo integrand rho_u(x) = int (u(x) - u(y))^2 |x-y|^{-n-2s} dy at |x| = a.
inline double gagliardo_density(const RadialFunction& u, int n, double s, double a,
                                const QuadratureSpec& spec = {}) {
    check_dimension(n);
    check_order(s);
    const auto opt = detail::inner_options(spec);
    const double x = std::abs(a);
    if (x == 0.0) {
        const double u0 = u(0.0);
        auto f = [&](double r, double, double) {
            const double d = u0 - u(r);
            return d * d * std::pow(r, -1.0 - 2.0 * s);
        };
        return sphere_area(n) * integrate_half_line(f, 2.0 * s, {}, spec, "gagliardo_density");
    }
    const double scale = detail::density_scale(u, x);
    return scale * scale * std::pow(x, -2.0 * s) *
           detail::gagliardo_density_scaled(u, n, s, x, scale,
                                            detail::shared_kernel_cache(n, s, opt), opt);
}

/// A_{n,s} * iint (u(x) - u(y))^2 / |x-y|^{n+2s} dx dy, which equals int u (-Delta)^s u.
inline double hs_seminorm_sq(const RadialFunction& u, int n, double s,
                             const QuadratureSpec& spec = {}) {
    check_dimension(n);
    check_order(s);
    spec.validate();
    detail::check_radial_input(u);
    const double d = u.decay_rate;
    if (!(d > 0.5 * n - s)) {
        throw DomainError("hs_seminorm_sq: decay too slow, the seminorm diverges");
    }
    if (u.singular_exponent && !(*u.singular_exponent < 0.5 * (n - 2.0 * s))) {
        throw DomainError("hs_seminorm_sq: origin singularity too strong, the seminorm diverges");
    }
    const auto inner = detail::inner_options(spec);
    detail::KernelCache& kernel = detail::shared_kernel_cache(n, s, inner);
    auto f = [&](double a, double, double) {
        const double scale = detail::density_scale(u, a);
        const double w = std::pow(a, 0.5 * (n - 1) - s) * scale;
        const double v = detail::gagliardo_density_scaled(u, n, s, a, scale, kernel, inner);
        return v == 0.0 ? 0.0 : w * w * v;
    };
    const double q = std::isfinite(d) ? std::min(2.0 * s, 2.0 * d + 2.0 * s - n) : 2.0 * s;
    return normalizing_constant(n, s) * sphere_area(n) *
           integrate_half_line(f, q, {}, spec, "hs_seminorm_sq", detail::origin_exponent(n - 2.0 * s, {&u}, {2.0}));
}

/// ||phi||^2_{H^s} / int phi^2 |x|^{-2s}.
inline double hardy_quotient(const RadialFunction& phi, int n, double s,
                             const QuadratureSpec& spec = {}) {
    check_supercritical_dimension(n, s);
    const double q = 2.0 * phi.decay_rate + 2.0 * s - n;
    auto weighted = [&](double r, double, double) {
        const double v = detail::times_power(phi(r), r, 0.5 * (n - 1) - s);
        return v * v;
    };
    const double den = sphere_area(n) * integrate_half_line(weighted, std::isfinite(q) ? q : 1.0, {},
                                                            spec, "hardy_quotient",
                                                            detail::origin_exponent(n - 2.0 * s, {&phi}, {2.0}));
    if (!(den > 0.0)) throw DomainError("hardy_quotient: zero denominator");
    return hs_seminorm_sq(phi, n, s, spec) / den;
}

/// ||phi||^2_{H^s} - p int |u|^{p-1} phi^2.
inline double stability_form(const RadialFunction& u, const RadialFunction& phi, int n, double s,
                             double p, const QuadratureSpec& spec = {}) {
    check_dimension(n);
    check_order(s);
    if (!(p > 1.0)) throw DomainError("stability_form: requires p > 1");
    const double q = (p - 1.0) * u.decay_rate + 2.0 * phi.decay_rate - n;
    auto weighted = [&](double r, double, double) {
        const double v = detail::times_power(phi(r), r, 0.5 * (n - 1));
        return v == 0.0 ? 0.0 : std::pow(std::abs(u(r)), p - 1.0) * v * v;
    };
    const double potential = sphere_area(n) * integrate_half_line(weighted, std::isfinite(q) ? q : 1.0,
                                                                  {}, spec, "stability_form",
                                                                  detail::origin_exponent(n, {&u, &phi}, {p - 1.0, 2.0}));
    return hs_seminorm_sq(phi, n, s, spec) - p * potential;
}

/// n/(p+1) int |u|^{p+1} - (n-2s)/2 ||u||^2_{H^s}.
inline double pohozaev_residual(const RadialFunction& u, int n, double s, double p,
                                const QuadratureSpec& spec = {}) {
    check_supercritical_dimension(n, s);
    if (!(p > 1.0)) throw DomainError("pohozaev_residual: requires p > 1");
    const double q = (p + 1.0) * u.decay_rate - n;
    auto weighted = [&](double r, double, double) {
        return std::pow(std::abs(detail::times_power(u(r), r, (n - 1.0) / (p + 1.0))), p + 1.0);
    };
    const double lp = sphere_area(n) * integrate_half_line(weighted, std::isfinite(q) ? q : 1.0, {},
                                                           spec, "pohozaev_residual",
                                                           detail::origin_exponent(n, {&u}, {p + 1.0}));
    return n / (p + 1.0) * lp - 0.5 * (n - 2.0 * s) * hs_seminorm_sq(u, n, s, spec);
}

/// rho(x) = int (eta(x) - eta(y))^2 |x-y|^{-n-2s} dy for eta = (1 + |x|^2)^{-m/2}.
inline double rho_kernel(double m, int n, double s, double x_norm, const QuadratureSpec& spec = {}) {
    check_dimension(n);
    check_order(s);
    if (!(m > 0.5 * n)) throw DomainError("rho_kernel: requires m > n/2");
    const RadialFunction eta{[m](double r) { return std::pow(1.0 + r * r, -0.5 * m); }, m,
                             std::nullopt};
    return gagliardo_density(eta, n, s, std::abs(x_norm), spec);
}

/// Range of rho(x) (1 + |x|^2)^{n/2+s} over the given radii.
inline std::pair<double, double> verify_rho_bounds(double m, int n, double s,
                                                   const std::vector<double>& radii,
                                                   const QuadratureSpec& spec = {}) {
    if (radii.empty()) throw DomainError("verify_rho_bounds: no radii");
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (double x : radii) {
        const double v = rho_kernel(m, n, s, x, spec) * std::pow(1.0 + x * x, 0.5 * n + s);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {lo, hi};
}

}  // namespace fle
