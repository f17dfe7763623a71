#pragma once

// Gamma-function layer and the closed-form constants of the fractional
// Lane-Emden problem (-Delta)^s u = |u|^{p-1} u in R^n.

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "fle/errors.hpp"
#include "fle/extended_real.hpp"

namespace fle {

namespace detail {

// zeta(k) - 1 for k = 2, 3, ...; drives the Taylor series of ln Gamma about 1.
inline constexpr std::array<double, 40> kZetaMinusOne = {
    6.44934066848226406066e-01, 2.02056903159594292152e-01, 8.23232337111381856642e-02,
    3.69277551433699266492e-02, 1.73430619844491401560e-02, 8.34927738192282713203e-03,
    4.07735619794433960111e-03, 2.00839282608221425530e-03, 9.94575127818085255593e-04,
    4.94188604119464528625e-04, 2.46086553308048319906e-04, 1.22713347578489145439e-04,
    6.12481350587048276653e-05, 3.05882363070204932689e-05, 1.52822594086518709648e-05,
    7.63719763789976256827e-06, 3.81729326499984021842e-06, 1.90821271655393897155e-06,
    9.53962033872796212006e-07, 4.76932986787806446824e-07, 2.38450502727733004353e-07,
    1.19219925965311063718e-07, 5.96081890512594800969e-08, 2.98035035146522792822e-08,
    1.49015548283650426809e-08, 7.45071178983543006094e-09, 3.72533402478845728320e-09,
    1.86265972351304914216e-09, 9.31327432419668165620e-10, 4.65662906503378365753e-10,
    2.32831183367650533586e-10, 1.16415501727005193112e-10, 5.82077208790270145017e-11,
    2.91038504449710000529e-11, 1.45519218910419848941e-11, 7.27595983505748179627e-12,
    3.63797954737865086266e-12, 1.81898965030706607072e-12, 9.09494784026388840724e-13,
    4.54747378304215421834e-13};

inline constexpr double kEulerGamma = 0.577215664901532860606512090082;

// ln Gamma(1 + z) for |z| <= 1/2:
//   -ln(1+z) + z(1-gamma) + sum_{k>=2} (-1)^k (zeta(k)-1) z^k / k
inline double log_gamma_near_one(double z) {
    double sum = 0.0;
    double zk = -z;
    for (std::size_t i = 0; i < kZetaMinusOne.size(); ++i) {
        zk *= -z;
        sum += kZetaMinusOne[i] * zk / static_cast<double>(i + 2);
    }
    return -std::log1p(z) + z * (1.0 - kEulerGamma) + sum;
}

// Lanczos approximation, g = 607/128, 15 terms (Godfrey). Valid for x >= 1/2.
inline double log_gamma_lanczos(double x) {
    static constexpr double g = 607.0 / 128.0;
    static constexpr std::array<double, 15> c = {
        0.99999999999999709182,     57.156235665862923517,      -59.597960355475491248,
        14.136097974741747174,      -0.49191381609762019978,    .33994649984811888699e-4,
        .46523628927048575665e-4,   -.98374475304879564677e-4,  .15808870322491248884e-3,
        -.21026444172410488319e-3,  .21743961811521264320e-3,   -.16431810653676389022e-3,
        .84418223983852743293e-4,   -.26190838401581408670e-4,  .36899182659531622704e-5};
    const double z = x - 1.0;
    double a = c[0];
    for (std::size_t k = c.size() - 1; k >= 1; --k) {
        a += c[k] / (z + static_cast<double>(k));
    }
    const double t = z + g + 0.5;
    return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(a);
}

}  // namespace detail

/// ln Gamma(x) for x > 0, relative error near 1e-15 across [1e-6, 1e4].
inline double log_gamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        std::ostringstream os;
        os << "log_gamma: argument must be positive and finite, got " << x;
        throw DomainError(os.str());
    }
    if (x < 0.5) {
        return detail::log_gamma_near_one(x) - std::log(x);
    }
    if (x <= 1.5) {
        return detail::log_gamma_near_one(x - 1.0);
    }
    if (x <= 2.5) {
        return std::log1p(x - 2.0) + detail::log_gamma_near_one(x - 2.0);
    }
    return detail::log_gamma_lanczos(x);
}

/// Gamma(x) for x > 0.
inline double gamma_positive(double x) { return std::exp(log_gamma(x)); }

/// Area of the unit sphere S^{n-1} in R^n (2 for n = 1).
inline double sphere_area(int n) {
    const double h = 0.5 * n;
    return 2.0 * std::exp(h * std::log(std::numbers::pi) - log_gamma(h));
}

/// Problem triple (n, s, p).
struct Params {
    int n = 1;
    double s = 0.5;
    double p = 2.0;

    /// Validates 0 < s < 1, n >= 1, p > 1.
    static Params make(int n, double s, double p) {
        if (n < 1) throw DomainError("dimension n must be >= 1");
        if (!(s > 0.0 && s < 1.0)) throw DomainError("fractional order s must lie in (0,1)");
        if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("exponent p must be > 1");
        return Params{n, s, p};
    }

    /// Homogeneity exponent 2s/(p-1) of the singular solution.
    double scaling_exponent() const { return 2.0 * s / (p - 1.0); }

    /// alpha* = (n-2s)/2 - 2s/(p-1).
    double alpha_star() const { return 0.5 * (n - 2.0 * s) - scaling_exponent(); }

    /// Zeroth-order coefficient (2s/(p-1))(n - 2s - 2s/(p-1)) of the half-sphere equation.
    double angular_coefficient() const {
        const double b = scaling_exponent();
        return b * (n - 2.0 * s - b);
    }

    /// Exponent 2s(p+1)/(p-1) - n of the monotonicity-energy prefactor.
    double energy_exponent() const { return 2.0 * s * (p + 1.0) / (p - 1.0) - n; }
};

inline void check_order(double s) {
    if (!(s > 0.0 && s < 1.0)) {
        throw DomainError("fractional order s must lie in (0,1)");
    }
}

inline void check_dimension(int n) {
    if (n < 1) throw DomainError("dimension n must be >= 1");
}

inline void check_supercritical_dimension(int n, double s) {
    check_dimension(n);
    check_order(s);
    if (!(n > 2.0 * s)) {
        throw DomainError("requires n > 2s");
    }
}

/// Normalizing constant exactly as printed:
///   2^{2s-1} Gamma((n+2s)/2) / (pi^{n/2} |Gamma(-s)|),  |Gamma(-s)| = Gamma(1-s)/s.
inline double normalizing_constant(int n, double s) {
    check_dimension(n);
    check_order(s);
    const double log_abs_gamma_minus_s = log_gamma(1.0 - s) - std::log(s);
    return std::exp((2.0 * s - 1.0) * std::numbers::ln2 + log_gamma(0.5 * (n + 2.0 * s)) -
                    0.5 * n * std::log(std::numbers::pi) - log_abs_gamma_minus_s);
}

/// Constant C with (-Delta)^s u(x) = C PV int (u(x)-u(y)) |x-y|^{-n-2s} dy for the
/// operator whose Fourier symbol is |xi|^{2s}; equals 2 * normalizing_constant(n, s).
inline double operator_constant(int n, double s) { return 2.0 * normalizing_constant(n, s); }

/// kappa_s = Gamma(1-s) / (2^{2s-1} Gamma(s)).
inline double kappa(double s) {
    check_order(s);
    return std::exp(log_gamma(1.0 - s) - (2.0 * s - 1.0) * std::numbers::ln2 - log_gamma(s));
}

/// Normalization p_{n,s} = Gamma((n+2s)/2) / (pi^{n/2} Gamma(s)) of the Poisson kernel
/// p_{n,s} t^{2s} |X-y|^{-(n+2s)}.
inline double poisson_constant(int n, double s) {
    check_dimension(n);
    check_order(s);
    return std::exp(log_gamma(0.5 * (n + 2.0 * s)) - 0.5 * n * std::log(std::numbers::pi) -
                    log_gamma(s));
}

/// lambda(alpha) = 2^{2s} G((n+2s+2a)/4) G((n+2s-2a)/4) / (G((n-2s-2a)/4) G((n-2s+2a)/4)).
inline double lambda_of_alpha(int n, double s, double alpha) {
    check_supercritical_dimension(n, s);
    const double half_gap = 0.5 * (n - 2.0 * s);
    if (!(std::abs(alpha) < half_gap)) {
        std::ostringstream os;
        os << "lambda_of_alpha: |alpha| must be < (n-2s)/2 = " << half_gap << ", got " << alpha;
        throw DomainError(os.str());
    }
    // Sums are written symmetrically so that lambda(alpha) == lambda(-alpha) bit for bit.
    const double num = log_gamma(0.25 * (n + 2.0 * s + 2.0 * alpha)) +
                       log_gamma(0.25 * (n + 2.0 * s - 2.0 * alpha));
    const double den = log_gamma(0.25 * (n - 2.0 * s - 2.0 * alpha)) +
                       log_gamma(0.25 * (n - 2.0 * s + 2.0 * alpha));
    return std::exp(2.0 * s * std::numbers::ln2 + num - den);
}

/// Optimal fractional Hardy constant 2^{2s} Gamma((n+2s)/4)^2 / Gamma((n-2s)/4)^2.
inline double hardy_constant(int n, double s) { return lambda_of_alpha(n, s, 0.0); }

/// p_S(n, s): (n+2s)/(n-2s) if n > 2s, +inf otherwise.
inline ExtendedReal sobolev_exponent(int n, double s) {
    check_dimension(n);
    check_order(s);
    if (n > 2.0 * s) {
        return ExtendedReal((n + 2.0 * s) / (n - 2.0 * s));
    }
    return ExtendedReal::infinity();
}

/// Amplitude A of the singular solution A |x|^{-2s/(p-1)}: A^{p-1} = lambda(alpha*).
inline double singular_amplitude(const Params& prm) {
    check_supercritical_dimension(prm.n, prm.s);
    const ExtendedReal ps = sobolev_exponent(prm.n, prm.s);
    if (!(prm.p > ps.value())) {
        throw DomainError("singular_amplitude: requires p > p_S(n,s)");
    }
    return std::pow(lambda_of_alpha(prm.n, prm.s, prm.alpha_star()), 1.0 / (prm.p - 1.0));
}

}  // namespace fle
