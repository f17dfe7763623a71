#pragma once

// Axisymmetric (r, t) grid on the quarter disk r^2 + t^2 < R^2 and the weighted
// finite-volume scheme for div(t^{1-2s} r^{n-1} grad u) = 0 with a Neumann flux on t = 0.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fle/errors.hpp"
#include "fle/quadrature.hpp"
#include "fle/special.hpp"

namespace fle {

struct GridOptions {
    int nr = 128;
    int nt = 128;
    /// t_j = R (j/N_t)^grading; 0 selects 1/(1-s) clamped to [1, 4].
    double grading = 0.0;
    double radius = 1.0;

    void validate() const {
        if (nr < 4 || nt < 4) throw DomainError("grid: need at least 4 cells per direction");
        if (grading != 0.0 && !(grading >= 1.0 && grading <= 8.0)) {
            throw DomainError("grid: grading exponent must lie in [1, 8]");
        }
        if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("grid: radius must be positive");
    }
};

class AxisymGrid {
public:
    AxisymGrid(int n, double s, const GridOptions& opt = {}) : n_(n), s_(s), opt_(opt) {
        check_dimension(n);
        check_order(s);
        opt.validate();
        const double big_r = opt.radius;
        grading_ = opt.grading != 0.0 ? opt.grading : std::clamp(1.0 / (1.0 - s), 1.0, 4.0);
        r_.resize(opt.nr + 1);
        t_.resize(opt.nt + 1);
        for (int i = 0; i <= opt.nr; ++i) r_[i] = big_r * i / opt.nr;
        for (int j = 0; j <= opt.nt; ++j) t_[j] = big_r * std::pow(static_cast<double>(j) / opt.nt, grading_);
        r_.back() = big_r;
        t_.back() = big_r;

        // Dual cells: [r_{i-1/2}, r_{i+1/2}] clipped to [0, R], likewise in t.
        wr_.resize(r_.size());
        for (int i = 0; i <= opt.nr; ++i) {
            const double lo = i == 0 ? 0.0 : 0.5 * (r_[i - 1] + r_[i]);
            const double hi = i == opt.nr ? big_r : 0.5 * (r_[i] + r_[i + 1]);
            wr_[i] = (std::pow(hi, n) - std::pow(lo, n)) / n;
        }
        wt_.resize(t_.size());
        const double e = 2.0 - 2.0 * s;
        for (int j = 0; j <= opt.nt; ++j) {
            const double lo = j == 0 ? 0.0 : 0.5 * (t_[j - 1] + t_[j]);
            const double hi = j == opt.nt ? big_r : 0.5 * (t_[j] + t_[j + 1]);
            wt_[j] = (std::pow(hi, e) - std::pow(lo, e)) / e;
        }
    }

    int n() const { return n_; }
    double s() const { return s_; }
    double radius() const { return opt_.radius; }
    double grading() const { return grading_; }
    int nr() const { return opt_.nr; }
    int nt() const { return opt_.nt; }
    const std::vector<double>& r_nodes() const { return r_; }
    const std::vector<double>& t_nodes() const { return t_; }
    /// Integral of r^{n-1} dr over the dual cell of r-node i.
    const std::vector<double>& r_weights() const { return wr_; }
    /// Integral of t^{1-2s} dt over the dual cell of t-node j.
    const std::vector<double>& t_weights() const { return wt_; }

    /// Unknown of the scheme; nodes on or outside the arc carry Dirichlet data.
    bool active(int i, int j) const {
        const double rho2 = r_[i] * r_[i] + t_[j] * t_[j];
        return rho2 < opt_.radius * opt_.radius * (1.0 - 1e-12);
    }

    /// Conductance of the face between (i, j) and (i+1, j): midpoint r^{n-1}, exact t-weight.
    double r_face(int i, int j) const {
        const double mid = 0.5 * (r_[i] + r_[i + 1]);
        return std::pow(mid, n_ - 1) * wt_[j] / (r_[i + 1] - r_[i]);
    }

    /// Conductance between (i, j) and (i, j+1): exact harmonic integral of t^{2s-1}.
    double t_face(int i, int j) const {
        const double a = t_[j];
        const double b = t_[j + 1];
        const double inv = (std::pow(b, 2.0 * s_) - std::pow(a, 2.0 * s_)) / (2.0 * s_);
        return wr_[i] / inv;
    }

private:
    int n_;
    double s_;
    GridOptions opt_;
    double grading_ = 1.0;
    std::vector<double> r_;
    std::vector<double> t_;
    std::vector<double> wr_;
    std::vector<double> wt_;
};

/// Nodal field on an AxisymGrid; values(i, j) at (r_i, t_j).
struct ExtField {
    std::shared_ptr<const AxisymGrid> grid;
    std::vector<double> values;
    int iterations = 0;
    double residual = 0.0;
    double last_increment = 0.0;

    ExtField() = default;
    explicit ExtField(std::shared_ptr<const AxisymGrid> g)
        : grid(std::move(g)), values(static_cast<std::size_t>(grid->nr() + 1) * (grid->nt() + 1), 0.0) {}

    double& at(int i, int j) { return values[index(i, j)]; }
    double at(int i, int j) const { return values[index(i, j)]; }

    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * (grid->nr() + 1) + static_cast<std::size_t>(i);
    }

    std::vector<double> trace() const {
        std::vector<double> out(grid->nr() + 1);
        for (int i = 0; i <= grid->nr(); ++i) out[i] = at(i, 0);
        return out;
    }

    /// One-sided weighted normal derivative -2s (u(r, t_1) - u(r, 0)) / t_1^{2s}.
    std::vector<double> flux() const {
        const double t1 = grid->t_nodes()[1];
        const double s = grid->s();
        std::vector<double> out(grid->nr() + 1);
        for (int i = 0; i <= grid->nr(); ++i) {
            out[i] = -2.0 * s * (at(i, 1) - at(i, 0)) / std::pow(t1, 2.0 * s);
        }
        return out;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }

    /// Bilinear interpolation; (r, t) must lie in the grid box.
    double operator()(double r, double t) const {
        const auto [i, a] = locate(grid->r_nodes(), r);
        const auto [j, b] = locate(grid->t_nodes(), t);
        return (1 - a) * (1 - b) * at(i, j) + a * (1 - b) * at(i + 1, j) + (1 - a) * b * at(i, j + 1) +
               a * b * at(i + 1, j + 1);
    }

    /// (u_r, u_t): centred nodal differences, bilinearly interpolated.
    std::pair<double, double> gradient(double r, double t) const {
        const auto [i, a] = locate(grid->r_nodes(), r);
        const auto [j, b] = locate(grid->t_nodes(), t);
        double gr = 0.0;
        double gt = 0.0;
        for (int di = 0; di <= 1; ++di) {
            for (int dj = 0; dj <= 1; ++dj) {
                const double w = (di ? a : 1 - a) * (dj ? b : 1 - b);
                if (w == 0.0) continue;
                const auto [dr, dt] = nodal_gradient(i + di, j + dj);
                gr += w * dr;
                gt += w * dt;
            }
        }
        return {gr, gt};
    }

    std::pair<double, double> nodal_gradient(int i, int j) const {
        const auto& r = grid->r_nodes();
        const auto& t = grid->t_nodes();
        const int nr = grid->nr();
        const int nt = grid->nt();
        double dr;
        if (i == 0) {
            dr = 0.0;  // axis of symmetry
        } else if (i == nr) {
            dr = (at(i, j) - at(i - 1, j)) / (r[i] - r[i - 1]);
        } else {
            dr = centred(at(i - 1, j), at(i, j), at(i + 1, j), r[i] - r[i - 1], r[i + 1] - r[i]);
        }
        double dt;
        if (j == 0) {
            dt = (at(i, 1) - at(i, 0)) / t[1];
        } else if (j == nt) {
            dt = (at(i, j) - at(i, j - 1)) / (t[j] - t[j - 1]);
        } else {
            dt = centred(at(i, j - 1), at(i, j), at(i, j + 1), t[j] - t[j - 1], t[j + 1] - t[j]);
        }
        return {dr, dt};
    }

private:
    static double centred(double um, double u0, double up, double hm, double hp) {
        // Second-order derivative on a nonuniform stencil.
        return (hm * hm * (up - u0) + hp * hp * (u0 - um)) / (hm * hp * (hm + hp));
    }

    static std::pair<int, double> locate(const std::vector<double>& x, double v) {
        if (!(v >= x.front() && v <= x.back() * (1.0 + 1e-12))) {
            throw DomainError("ExtField: point outside the grid");
        }
        auto it = std::upper_bound(x.begin(), x.end(), v);
        int k = static_cast<int>(it - x.begin()) - 1;
        k = std::clamp(k, 0, static_cast<int>(x.size()) - 2);
        const double a = std::clamp((v - x[k]) / (x[k + 1] - x[k]), 0.0, 1.0);
        return {k, a};
    }
};

/// The assembled, factorized scheme on one grid, reused across right-hand sides.
class DegenerateSystem {
public:
    explicit DegenerateSystem(std::shared_ptr<const AxisymGrid> grid) : grid_(std::move(grid)) {
        const int nr = grid_->nr();
        const int nt = grid_->nt();
        unknown_.assign(static_cast<std::size_t>(nr + 1) * (nt + 1), -1);
        int count = 0;
        for (int j = 0; j <= nt; ++j) {
            for (int i = 0; i <= nr; ++i) {
                if (grid_->active(i, j)) unknown_[node(i, j)] = count++;
            }
        }
        std::vector<Eigen::Triplet<double>> trips;
        diag_.assign(count, 0.0);
        auto couple = [&](int i0, int j0, int i1, int j1, double c) {
            const int a = unknown_[node(i0, j0)];
            const int b = unknown_[node(i1, j1)];
            if (a >= 0) diag_[a] += c;
            if (b >= 0) diag_[b] += c;
            if (a >= 0 && b >= 0) {
                trips.emplace_back(a, b, -c);
                trips.emplace_back(b, a, -c);
            } else if (a >= 0 || b >= 0) {
                boundary_links_.push_back({a >= 0 ? a : b, a >= 0 ? node(i1, j1) : node(i0, j0), c});
            }
        };
        for (int j = 0; j <= nt; ++j) {
            for (int i = 0; i <= nr; ++i) {
                if (i < nr) couple(i, j, i + 1, j, grid_->r_face(i, j));
                if (j < nt) couple(i, j, i, j + 1, grid_->t_face(i, j));
            }
        }
        for (int k = 0; k < count; ++k) trips.emplace_back(k, k, diag_[k]);
        matrix_.resize(count, count);
        matrix_.setFromTriplets(trips.begin(), trips.end());
        solver_.compute(matrix_);
        if (solver_.info() != Eigen::Success) {
            throw ConvergenceError("solve_linear_degenerate: factorization failed", 0.0);
        }
    }

    const std::shared_ptr<const AxisymGrid>& grid() const { return grid_; }

    /// Solves with Dirichlet values taken from `dirichlet` at inactive nodes and the
    /// cell-integrated trace flux F_i = int g r^{n-1} dr over trace cell i.
    ExtField solve(const ExtField& dirichlet, std::span<const double> cell_flux) const {
        const int nr = grid_->nr();
        const int nt = grid_->nt();
        if (cell_flux.size() != static_cast<std::size_t>(nr + 1)) {
            throw DomainError("solve_linear_degenerate: flux size mismatch");
        }
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(matrix_.rows());
        for (int i = 0; i <= nr; ++i) {
            const int k = unknown_[node(i, 0)];
            if (k >= 0) rhs[k] += cell_flux[i];
        }
        for (const auto& link : boundary_links_) rhs[link.unknown] += link.conductance * dirichlet.values[link.node];
        const Eigen::VectorXd x = solver_.solve(rhs);
        if (solver_.info() != Eigen::Success || !x.allFinite()) {
            throw ConvergenceError("solve_linear_degenerate: linear solve failed", 0.0);
        }
        ExtField out(grid_);
        double scale = 1.0;
        for (int j = 0; j <= nt; ++j) {
            for (int i = 0; i <= nr; ++i) {
                const int k = unknown_[node(i, j)];
                out.at(i, j) = k >= 0 ? x[k] : dirichlet.at(i, j);
                scale = std::max(scale, std::abs(out.at(i, j)));
            }
        }
        // Weighted max norm: each equation scaled by its diagonal and the field size.
        const Eigen::VectorXd res = matrix_ * x - rhs;
        double worst = 0.0;
        for (Eigen::Index k = 0; k < res.size(); ++k) worst = std::max(worst, std::abs(res[k]) / diag_[k]);
        out.residual = worst / scale;
        if (!(out.residual <= 1e-10)) {
            throw ConvergenceError("solve_linear_degenerate: residual above 1e-10", out.residual);
        }
        return out;
    }

private:
    struct BoundaryLink {
        int unknown;
        std::size_t node;
        double conductance;
    };

    std::size_t node(int i, int j) const {
        return static_cast<std::size_t>(j) * (grid_->nr() + 1) + static_cast<std::size_t>(i);
    }

    std::shared_ptr<const AxisymGrid> grid_;
    std::vector<int> unknown_;
    std::vector<double> diag_;
    std::vector<BoundaryLink> boundary_links_;
    Eigen::SparseMatrix<double> matrix_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

/// Cell-integrated trace flux int g(r) r^{n-1} dr over each dual cell of the t = 0 line.
/// g may be integrably singular at r = 0.
inline std::vector<double> integrate_trace_flux(const AxisymGrid& grid, const std::function<double(double)>& g) {
    const auto& r = grid.r_nodes();
    const int nr = grid.nr();
    const int n = grid.n();
    std::vector<double> out(nr + 1, 0.0);
    quad::TanhSinhOptions opt;
    opt.rel_tol = 1e-12;
    opt.max_level = 12;
    for (int i = 0; i <= nr; ++i) {
        const double lo = i == 0 ? 0.0 : 0.5 * (r[i - 1] + r[i]);
        const double hi = i == nr ? r[i] : 0.5 * (r[i] + r[i + 1]);
        out[i] = quad::tanh_sinh_value([&](double x) { return g(x) * std::pow(x, n - 1); }, lo, hi, opt,
                                       "trace flux");
    }
    return out;
}

/// Field with `f(r, t)` at every node.
inline ExtField sample_field(std::shared_ptr<const AxisymGrid> grid, const std::function<double(double, double)>& f) {
    ExtField out(std::move(grid));
    for (int j = 0; j <= out.grid->nt(); ++j) {
        for (int i = 0; i <= out.grid->nr(); ++i) out.at(i, j) = f(out.grid->r_nodes()[i], out.grid->t_nodes()[j]);
    }
    return out;
}

/// One-shot weighted solve: Dirichlet data `boundary(r, t)` on and outside the arc,
/// Neumann flux g(r) = -lim t^{1-2s} u_t on the trace.
inline ExtField solve_linear_degenerate(std::shared_ptr<const AxisymGrid> grid,
                                        const std::function<double(double, double)>& boundary,
                                        const std::function<double(double)>& flux) {
    const DegenerateSystem system(grid);
    ExtField data(grid);
    for (int j = 0; j <= grid->nt(); ++j) {
        for (int i = 0; i <= grid->nr(); ++i) {
            if (!grid->active(i, j)) data.at(i, j) = boundary(grid->r_nodes()[i], grid->t_nodes()[j]);
        }
    }
    return system.solve(data, integrate_trace_flux(*grid, flux));
}

}  // namespace fle
