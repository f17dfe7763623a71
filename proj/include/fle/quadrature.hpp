#pragma once

// One-dimensional quadrature rules used throughout: Gauss-Legendre panels and
// double-exponential (tanh-sinh) integration with exact endpoint distances.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <map>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "fle/errors.hpp"

namespace fle::quad {

struct GaussRule {
    std::vector<double> nodes;    // on [-1, 1], ascending
    std::vector<double> weights;
};

/// Gauss-Legendre rule with m points (Newton iteration on P_m).
inline GaussRule compute_gauss_legendre(int m) {
    GaussRule rule;
    rule.nodes.resize(m);
    rule.weights.resize(m);
    for (int i = 0; i < (m + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= m; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (m == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = m * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        // Recompute derivative at the converged node.
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= m; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = m * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[m - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[m - 1 - i] = w;
    }
    if (m % 2 == 1) {
        rule.nodes[m / 2] = 0.0;
    }
    return rule;
}

/// Cached Gauss-Legendre rule; thread-safe.
inline const GaussRule& gauss_legendre(int m) {
    static std::mutex mutex;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(m);
    if (it == cache.end()) {
        it = cache.emplace(m, compute_gauss_legendre(m)).first;
    }
    return it->second;
}

/// m-point Gauss-Legendre on a single panel [a, b].
template <std::invocable<double> F>
double gauss_panel(F&& f, double a, double b, int m = 20) {
    const GaussRule& rule = gauss_legendre(m);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    }
    return half * sum;
}

/// Composite Gauss-Legendre over consecutive breakpoints.
template <std::invocable<double> F>
double gauss_composite(F&& f, std::span<const double> breaks, int m = 20) {
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        sum += gauss_panel(f, breaks[i], breaks[i + 1], m);
    }
    return sum;
}

/// Breakpoints a = x_0 < ... < x_k = b, geometric towards a with first panel width
/// `first` and ratio 2; used for integrands with an algebraic feature at a.
inline std::vector<double> geometric_breaks(double a, double b, double first) {
    std::vector<double> breaks{a};
    double w = std::max(first, 1e-300);
    double x = a + w;
    while (x < b) {
        breaks.push_back(x);
        w *= 2.0;
        x = a + w;
    }
    breaks.push_back(b);
    return breaks;
}

struct Result {
    double value = 0.0;
    double error = 0.0;
    long evaluations = 0;
    bool converged = false;
};

struct TanhSinhOptions {
    double rel_tol = 1e-12;
    double abs_tol = 0.0;
    int max_level = 10;
    /// Nodes closer than this fraction of (b - a) to an endpoint are skipped.
    double min_fraction = 1e-100;
    /// Refinement levels always performed before convergence is tested.
    int min_level = 3;
};

namespace detail {

// Distance of the abscissa tanh(pi/2 sinh t) from 1.
inline double ts_complement(double t) {
    const double u = 0.5 * std::numbers::pi * std::sinh(t);
    // 1 - tanh(u) = exp(-u) / cosh(u)
    return std::exp(-u) / std::cosh(u);
}

inline double ts_weight(double t) {
    const double u = 0.5 * std::numbers::pi * std::sinh(t);
    const double c = std::cosh(u);
    return 0.5 * std::numbers::pi * std::cosh(t) / (c * c);
}

inline double ts_t_max(double min_fraction) {
    // Solve complement(t) = min_fraction for t by bisection; complement is decreasing.
    double lo = 0.0;
    double hi = 8.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (ts_complement(mid) > min_fraction) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

}  // namespace detail

/// Tanh-sinh quadrature of f over [a, b]. The integrand receives (x, x - a, b - x)
/// with the two distances computed without cancellation, so it can evaluate
/// endpoint singularities accurately.
template <class F>
    requires std::invocable<F, double, double, double>
Result tanh_sinh(F&& f, double a, double b, const TanhSinhOptions& opt = {}) {
    Result res;
    if (a == b) {
        res.converged = true;
        return res;
    }
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    const double t_max = detail::ts_t_max(opt.min_fraction);

    auto eval_pair = [&](double t) {
        const double comp = detail::ts_complement(t);
        const double w = detail::ts_weight(t);
        if (w == 0.0 || comp == 0.0) {
            return 0.0;
        }
        const double dist = half * comp;
        double sum = 0.0;
        // right of centre: x = b - dist
        sum += w * f(b - dist, (b - a) - dist, dist);
        // left of centre: x = a + dist
        sum += w * f(a + dist, dist, (b - a) - dist);
        res.evaluations += 2;
        return sum;
    };

    double h = 1.0;
    double sum = f(mid, half, half) * 0.5 * std::numbers::pi;
    res.evaluations = 1;
    for (int j = 1; j * h <= t_max; ++j) {
        sum += eval_pair(j * h);
    }
    double estimate = half * h * sum;
    for (int level = 1; level <= opt.max_level; ++level) {
        h *= 0.5;
        double add = 0.0;
        for (long j = 1; static_cast<double>(j) * h <= t_max; j += 2) {
            add += eval_pair(static_cast<double>(j) * h);
        }
        sum += add;
        const double next = half * h * sum;
        const double diff = std::abs(next - estimate);
        estimate = next;
        res.error = diff;
        if (level >= opt.min_level && diff <= std::max(opt.abs_tol, opt.rel_tol * std::abs(next))) {
            res.converged = true;
            break;
        }
    }
    res.value = estimate;
    return res;
}

/// Tanh-sinh over [0, pi] for f(theta, theta, pi - theta) with a sharp feature of width
/// `width` at the endpoint `at_pi ? pi : 0`; the feature gets its own panel when narrow.
template <class F>
Result polar_with_peak(F&& f, double width, bool at_pi, const TanhSinhOptions& opt) {
    constexpr double pi = std::numbers::pi;
    if (!(width < 0.25 * pi)) {
        return tanh_sinh(f, 0.0, pi, opt);
    }
    // Integrate in the distance d from the feature so that tiny widths stay representable.
    auto g = [&](double d, double other) {
        return at_pi ? f(pi - d, other, d) : f(d, d, other);
    };
    const Result peak =
        tanh_sinh([&](double d, double, double) { return g(d, pi - d); }, 0.0, width, opt);
    const Result rest =
        tanh_sinh([&](double d, double, double dr) { return g(d, dr); }, width, pi, opt);
    Result out;
    out.value = peak.value + rest.value;
    out.error = peak.error + rest.error;
    out.evaluations = peak.evaluations + rest.evaluations;
    out.converged = peak.converged && rest.converged;
    return out;
}

/// Convenience overload for integrands that only need x.
template <class F>
    requires(std::invocable<F, double> && !std::invocable<F, double, double, double>)
Result tanh_sinh(F&& f, double a, double b, const TanhSinhOptions& opt = {}) {
    return tanh_sinh([&](double x, double, double) { return f(x); }, a, b, opt);
}

/// Value of a tanh-sinh integration, throwing ConvergenceError when the target is missed.
template <class F>
double tanh_sinh_value(F&& f, double a, double b, const TanhSinhOptions& opt,
                       const char* what) {
    const Result r = tanh_sinh(std::forward<F>(f), a, b, opt);
    if (!r.converged) {
        throw ConvergenceError(std::string(what) + ": tanh-sinh quadrature did not converge",
                               r.error);
    }
    return r.value;
}

}  // namespace fle::quad
