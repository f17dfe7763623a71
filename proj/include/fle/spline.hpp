#pragma once

// Natural cubic spline on strictly increasing nodes.

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

#include "fle/errors.hpp"

namespace fle {

class CubicSpline {
public:
    CubicSpline() = default;

    CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t m = x_.size();
        if (m < 2 || y_.size() != m) throw DomainError("CubicSpline: need >= 2 matching nodes");
        for (std::size_t i = 1; i < m; ++i) {
            if (!(x_[i] > x_[i - 1])) throw DomainError("CubicSpline: nodes must increase");
        }
        // Second derivatives by the Thomas algorithm, zero at both ends.
        m2_.assign(m, 0.0);
        if (m == 2) return;
        std::vector<double> c(m, 0.0);
        std::vector<double> d(m, 0.0);
        for (std::size_t i = 1; i + 1 < m; ++i) {
            const double h0 = x_[i] - x_[i - 1];
            const double h1 = x_[i + 1] - x_[i];
            const double a = h0 / 6.0;
            const double b = (h0 + h1) / 3.0;
            const double cc = h1 / 6.0;
            const double rhs = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
            const double denom = b - a * c[i - 1];
            c[i] = cc / denom;
            d[i] = (rhs - a * d[i - 1]) / denom;
        }
        for (std::size_t i = m - 2; i >= 1; --i) {
            m2_[i] = d[i] - c[i] * m2_[i + 1];
        }
    }

    double operator()(double x) const { return eval(x).first; }

    /// Value and first derivative; linear extrapolation outside the nodes.
    std::pair<double, double> eval(double x) const {
        const std::size_t k = segment(x);
        const double h = x_[k + 1] - x_[k];
        const double a = (x_[k + 1] - x) / h;
        const double b = (x - x_[k]) / h;
        const double v = a * y_[k] + b * y_[k + 1] +
                         ((a * a * a - a) * m2_[k] + (b * b * b - b) * m2_[k + 1]) * h * h / 6.0;
        const double dv = (y_[k + 1] - y_[k]) / h +
                          (-(3.0 * a * a - 1.0) * m2_[k] + (3.0 * b * b - 1.0) * m2_[k + 1]) * h / 6.0;
        return {v, dv};
    }

    const std::vector<double>& nodes() const { return x_; }

private:
    std::size_t segment(double x) const {
        const auto it = std::upper_bound(x_.begin(), x_.end(), x);
        const std::size_t k = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
        return std::min(k, x_.size() - 2);
    }

    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> m2_;
};

}  // namespace fle
