#pragma once

// Stability dividing line for the singular solution: the margin
// p * lambda(alpha*) - Lambda_{n,s}, its literal Gamma-ratio form, and the
// fractional Joseph-Lundgren exponent p_c(n, s) as the first zero of the margin.

#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fle/errors.hpp"
#include "fle/extended_real.hpp"
#include "fle/special.hpp"

namespace fle {

struct StabilityVerdict {
    Params params;
    double margin = 0.0;
    bool cond_holds = false;
    bool singular_solution_stable = false;
};

struct CondGammaForm {
    double lhs = 0.0;
    double rhs = 0.0;
};

struct ExponentTableRow {
    int n = 0;
    double s = 0.0;
    ExtendedReal p_sobolev;
    ExtendedReal p_critical;
    double tail_margin = std::numeric_limits<double>::quiet_NaN();
    /// Set when a cell could not be evaluated; the other cells hold what was computable.
    std::optional<std::string> error;
};

namespace detail {

inline void check_supercritical(const Params& prm) {
    check_supercritical_dimension(prm.n, prm.s);
    if (!(prm.p > sobolev_exponent(prm.n, prm.s).value())) {
        std::ostringstream os;
        os << "requires p > p_S(n,s) = " << sobolev_exponent(prm.n, prm.s) << ", got p = "
           << prm.p;
        throw DomainError(os.str());
    }
}

// Margin for p >= p_S; at p = p_S, alpha* = 0 and the margin is (p_S - 1) Lambda.
inline double margin_from_sobolev(int n, double s, double p) {
    const double alpha = 0.5 * (n - 2.0 * s) - 2.0 * s / (p - 1.0);
    return p * lambda_of_alpha(n, s, std::max(alpha, 0.0)) - hardy_constant(n, s);
}

}  // namespace detail

/// p * lambda(alpha*) - Lambda_{n,s}; positive exactly when the singular solution is unstable.
inline double cond_margin(const Params& prm) {
    detail::check_supercritical(prm);
    return detail::margin_from_sobolev(prm.n, prm.s, prm.p);
}

/// Both sides of the stability condition evaluated literally, one Gamma at a time:
///   lhs = p G(n/2 - s/(p-1)) G(s + s/(p-1)) / (G(s/(p-1)) G((n-2s)/2 - s/(p-1)))
///   rhs = G((n+2s)/4)^2 / G((n-2s)/4)^2
inline CondGammaForm cond_gamma_form(const Params& prm) {
    detail::check_supercritical(prm);
    const double n = prm.n;
    const double s = prm.s;
    const double q = s / (prm.p - 1.0);
    CondGammaForm out;
    out.lhs = prm.p * gamma_positive(0.5 * n - q) * gamma_positive(s + q) /
              (gamma_positive(q) * gamma_positive(0.5 * (n - 2.0 * s) - q));
    const double g_plus = gamma_positive(0.25 * (n + 2.0 * s));
    const double g_minus = gamma_positive(0.25 * (n - 2.0 * s));
    out.rhs = (g_plus * g_plus) / (g_minus * g_minus);
    return out;
}

/// Verdict for the singular solution at (n, s, p).
inline StabilityVerdict stability_verdict(const Params& prm) {
    StabilityVerdict v;
    v.params = prm;
    v.margin = cond_margin(prm);
    v.cond_holds = v.margin > 0.0;
    v.singular_solution_stable = !v.cond_holds;
    return v;
}

/// Limit of the margin as p -> infinity:
///   2^{2s} s Gamma(s) Gamma(n/2) / Gamma((n-2s)/2) - Lambda_{n,s}.
inline double tail_margin(int n, double s) {
    check_supercritical_dimension(n, s);
    const double limit = std::exp(2.0 * s * std::numbers::ln2 + std::log(s) + log_gamma(s) +
                                  log_gamma(0.5 * n) - log_gamma(0.5 * (n - 2.0 * s)));
    return limit - hardy_constant(n, s);
}

/// Number of sign changes of the margin on `points` log-spaced exponents in (p_lo, p_hi].
inline int count_margin_sign_changes(int n, double s, double p_lo, double p_hi, int points) {
    check_supercritical_dimension(n, s);
    const double ps = sobolev_exponent(n, s).value();
    if (!(p_lo >= ps) || !(p_hi > p_lo) || points < 2) {
        throw DomainError("count_margin_sign_changes: need p_S <= p_lo < p_hi and points >= 2");
    }
    int changes = 0;
    int prev_sign = 0;
    const double ratio = std::log(p_hi / p_lo);
    for (int i = 1; i <= points; ++i) {
        const double p = p_lo * std::exp(ratio * i / points);
        const double m = detail::margin_from_sobolev(n, s, p);
        const int sign = (m > 0.0) - (m < 0.0);
        if (sign != 0) {
            if (prev_sign != 0 && sign != prev_sign) {
                ++changes;
            }
            prev_sign = sign;
        }
    }
    return changes;
}

/// Fractional Joseph-Lundgren exponent: +inf when the tail margin is nonnegative,
/// otherwise the first p > p_S with margin zero (doubling bracket, then bisection).
inline ExtendedReal joseph_lundgren(int n, double s, double tol = 1e-10) {
    check_supercritical_dimension(n, s);
    if (tail_margin(n, s) >= 0.0) {
        return ExtendedReal::infinity();
    }
    const double ps = sobolev_exponent(n, s).value();
    auto margin = [&](double p) { return detail::margin_from_sobolev(n, s, p); };

    double lo = ps;
    double hi = 2.0 * ps;
    int doublings = 0;
    while (margin(hi) >= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++doublings > 200) {
            throw ConvergenceError("joseph_lundgren: no sign change while doubling", hi);
        }
    }

    double root = 0.5 * (lo + hi);
    bool found = false;
    for (int it = 0; it < 200; ++it) {
        root = 0.5 * (lo + hi);
        const double m = margin(root);
        if (std::abs(m) <= tol) {
            found = true;
            break;
        }
        if (m > 0.0) {
            lo = root;
        } else {
            hi = root;
        }
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
            found = std::abs(m) <= 1e3 * tol;
            break;
        }
    }
    if (!found) {
        throw ConvergenceError("joseph_lundgren: bisection did not reach tolerance",
                               std::abs(margin(root)));
    }

    // Dividing-line check: the margin stays positive strictly between p_S and p_c.
    for (int i = 1; i <= 100; ++i) {
        const double p = ps + (root - ps) * i / 101.0;
        if (!(margin(p) > 0.0)) {
            std::ostringstream os;
            os << "joseph_lundgren: margin not positive at p = " << p << " below root " << root;
            throw ConvergenceError(os.str(), margin(p));
        }
    }
    return ExtendedReal(root);
}

/// p_S, p_c and tail margin over an (n outer, s inner) grid; failures are recorded per row.
inline std::vector<ExponentTableRow> region_table(const std::vector<int>& ns,
                                                  const std::vector<double>& ss,
                                                  double tol = 1e-10) {
    std::vector<ExponentTableRow> rows;
    rows.reserve(ns.size() * ss.size());
    for (int n : ns) {
        for (double s : ss) {
            ExponentTableRow row;
            row.n = n;
            row.s = s;
            try {
                row.p_sobolev = sobolev_exponent(n, s);
                if (row.p_sobolev.is_infinite()) {
                    row.p_critical = ExtendedReal::infinity();
                    row.error = "n <= 2s: no supercritical range";
                } else {
                    row.tail_margin = tail_margin(n, s);
                    row.p_critical = joseph_lundgren(n, s, tol);
                }
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

/// Classical (s = 1) Joseph-Lundgren exponent ((n-2)^2 - 4n + 8 sqrt(n-1)) / ((n-2)(n-10))
/// for n >= 11; +inf for 3 <= n <= 10.
inline ExtendedReal classical_joseph_lundgren(int n) {
    if (n < 3) throw DomainError("classical_joseph_lundgren: requires n >= 3");
    if (n <= 10) return ExtendedReal::infinity();
    const double d = n;
    return ExtendedReal(((d - 2.0) * (d - 2.0) - 4.0 * d + 8.0 * std::sqrt(d - 1.0)) /
                        ((d - 2.0) * (d - 10.0)));
}

}  // namespace fle
