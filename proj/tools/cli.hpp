#pragma once

// Command-line front end: one subcommand per toolkit operation, CSV or JSON tables out.
// Exit codes: 0 success, 1 failed verification or unexpected error, 2 invalid parameters,
// 3 non-convergence.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fle/errors.hpp"
#include "fle/exponents.hpp"
#include "fle/extension.hpp"
#include "fle/fraclap.hpp"
#include "fle/io.hpp"
#include "fle/monotonicity.hpp"
#include "fle/verify.hpp"

namespace fle::cli {

enum ExitCode : int { ok = 0, verification_failed = 1, invalid_parameters = 2, not_converged = 3 };

struct RunConfig {
    std::string command;
    int n = 3;
    double s = 0.5;
    double p = 3.0;
    int grid_nr = 64;
    int grid_nt = 64;
    double tol = 1e-8;
    double lambda = 0.5;
    std::string out;
    std::string format = "csv";
    /// Profile for fraclap / extend: gaussian, bubble or singular.
    std::string function = "gaussian";
    std::vector<double> radii{0.5, 1.0, 2.0};
    std::vector<int> criteria;
    std::string config;

    Params params() const { return Params::make(n, s, p); }

    std::shared_ptr<const AxisymGrid> grid() const {
        return std::make_shared<const AxisymGrid>(n, s, GridOptions{grid_nr, grid_nt});
    }

    void validate() const {
        if (format != "csv" && format != "json") throw DomainError("--format must be csv or json");
        if (!(tol > 0.0)) throw DomainError("--tol must be positive");
        if (function != "gaussian" && function != "bubble" && function != "singular") {
            throw DomainError("--function must be gaussian, bubble or singular");
        }
        if ((command == "minimal" || command == "energy") && !(lambda >= 0.0 && lambda < 1.0)) {
            throw DomainError("--lambda must lie in [0, 1)");
        }
        if (command == "extend" && function == "bubble") throw DomainError("extend: use gaussian or singular");
        if (command == "verify" && grid_nr != grid_nt) throw DomainError("verify: the grid must be square");
    }

    /// Keys of a --config JSON object override the corresponding flags.
    void apply_json(const nlohmann::json& j) {
        if (!j.is_object()) throw DomainError("--config: expected a JSON object");
        for (const auto& [key, value] : j.items()) {
            try {
                if (key == "n") n = value.get<int>();
                else if (key == "s") s = value.get<double>();
                else if (key == "p") p = value.get<double>();
                else if (key == "grid-nr") grid_nr = value.get<int>();
                else if (key == "grid-nt") grid_nt = value.get<int>();
                else if (key == "tol") tol = value.get<double>();
                else if (key == "lambda") lambda = value.get<double>();
                else if (key == "out") out = value.get<std::string>();
                else if (key == "format") format = value.get<std::string>();
                else if (key == "function") function = value.get<std::string>();
                else if (key == "r") radii = value.get<std::vector<double>>();
                else if (key == "criteria") criteria = value.get<std::vector<int>>();
                else throw DomainError("--config: unknown key '" + key + "'");
            } catch (const nlohmann::json::exception&) {
                throw DomainError("--config: bad value for '" + key + "'");
            }
        }
    }
};

inline RadialFunction profile(const RunConfig& cfg) {
    if (cfg.function == "gaussian") return radial::gaussian();
    if (cfg.function == "bubble") return radial::bubble(cfg.n, cfg.s);
    return radial::singular_solution(cfg.params());
}

inline io::Table run_command(const RunConfig& cfg, std::ostream& log) {
    const std::string& c = cfg.command;
    if (c == "exponents") return io::exponents_table(region_table({cfg.n}, {cfg.s}, std::min(cfg.tol, 1e-10)));
    if (c == "stability") {
        const StabilityVerdict v = stability_verdict(cfg.params());
        io::Table t{{"n", "s", "p", "margin", "cond_holds", "singular_solution_stable"}};
        t.add_row({static_cast<long long>(cfg.n), cfg.s, cfg.p, v.margin, v.cond_holds, v.singular_solution_stable});
        return t;
    }
    if (c == "fraclap") {
        const RadialFunction u = profile(cfg);
        io::Table t{{"r", "frac_lap"}};
        for (double r : cfg.radii) t.add_row({r, frac_lap_radial(u, cfg.n, cfg.s, r)});
        t.meta["function"] = cfg.function;
        return t;
    }
    if (c == "extend") {
        const auto grid = cfg.grid();
        ExtField u(grid);
        if (cfg.function == "singular") {
            const HomogeneousExtension e = singular_extension(cfg.params());
            u = sample_field(grid, [&](double r, double t) { return e.value(r, t); });
        } else {
            const RadialFunction g = radial::gaussian();
            u = sample_field(grid, [&](double r, double t) {
                return t == 0.0 ? g(r) : poisson_extend(g, cfg.n, cfg.s, r, t);
            });
        }
        io::Table t = io::field_table(u);
        t.meta["function"] = cfg.function;
        return t;
    }
    if (c == "minimal" || c == "energy") {
        const Params prm = cfg.params();
        const ExtField u = solve_minimal(prm, cfg.lambda, cfg.grid(), cfg.tol, 100000);
        if (c == "minimal") {
            io::Table t = io::field_table(u);
            t.meta["lambda"] = cfg.lambda;
            t.meta["sup"] = u.at(0, 0);
            return t;
        }
        const EnergyReport rep = energy_report(view_of(u), prm, log_grid(0.1, 0.9, 20));
        io::Table t = io::energy_table(rep);
        t.meta["lambda"] = cfg.lambda;
        return t;
    }
    // verify
    verify::VerifyOptions opt;
    opt.grid_cells = cfg.grid_nr;
    opt.tol = cfg.tol;
    io::Table t{{"id", "name", "passed", "detail"}};
    for (const auto& r : verify::run(cfg.criteria, opt, [&](const verify::CriterionResult& r) {
             log << (r.passed ? "PASS " : "FAIL ") << r.id << ' ' << r.name << '\n';
         })) {
        t.add_row({static_cast<long long>(r.id), r.name, r.passed, r.detail});
    }
    return t;
}

inline void emit(const RunConfig& cfg, const io::Table& t, std::ostream& out) {
    auto write = [&](std::ostream& os) {
        if (cfg.format == "json") {
            io::write_json(os, t);
        } else {
            io::write_csv(os, t);
        }
    };
    if (cfg.out.empty()) {
        write(out);
        return;
    }
    std::ofstream file(cfg.out, std::ios::binary);
    if (!file) throw DomainError("cannot open --out path '" + cfg.out + "'");
    write(file);
    if (cfg.format == "csv") {
        std::ofstream meta(cfg.out + ".json", std::ios::binary);
        if (!meta) throw DomainError("cannot open '" + cfg.out + ".json'");
        meta << t.meta.dump(2) << '\n';
    }
}

inline void add_common_options(CLI::App& sub, RunConfig& cfg) {
    sub.add_option("--n", cfg.n, "dimension")->capture_default_str();
    sub.add_option("--s", cfg.s, "fractional order in (0,1)")->capture_default_str();
    sub.add_option("--p", cfg.p, "exponent p > 1")->capture_default_str();
    sub.add_option("--grid-nr", cfg.grid_nr, "cells in r")->capture_default_str();
    sub.add_option("--grid-nt", cfg.grid_nt, "cells in t")->capture_default_str();
    sub.add_option("--tol", cfg.tol, "iteration / solver tolerance")->capture_default_str();
    sub.add_option("--lambda", cfg.lambda, "boundary multiple of the singular solution")->capture_default_str();
    sub.add_option("--out", cfg.out, "output path (default stdout)");
    sub.add_option("--format", cfg.format, "csv or json")->capture_default_str();
    sub.add_option("--config", cfg.config, "JSON file whose keys override the flags");
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    RunConfig cfg;
    CLI::App app{"fle: fractional Lane-Emden toolkit"};
    app.require_subcommand(1);
    const std::vector<std::pair<std::string, std::string>> commands{
        {"exponents", "Sobolev and dividing exponents, tail margin"},
        {"stability", "sign of the stability margin of the singular solution"},
        {"fraclap", "fractional Laplacian of a radial profile"},
        {"extend", "extension of a profile sampled on the (r, t) grid"},
        {"minimal", "minimal solution with boundary data lambda * u_s"},
        {"energy", "monotonicity energy report of the minimal solution"},
        {"verify", "acceptance checks"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        add_common_options(*sub, cfg);
        if (name == "fraclap" || name == "extend") {
            sub->add_option("--function", cfg.function, "gaussian, bubble or singular")->capture_default_str();
        }
        if (name == "fraclap") sub->add_option("--r", cfg.radii, "evaluation radii")->capture_default_str();
        if (name == "verify") sub->add_option("--criteria", cfg.criteria, "subset of criterion ids (default all)");
        sub->callback([&cfg, name = name] { cfg.command = name; });
    }
    // Verification uses the full-size grid unless told otherwise.
    bool grid_given = false;
    try {
        app.parse(argc, argv);
        if (CLI::App* v = app.get_subcommand("verify"); v->parsed()) {
            grid_given = v->count("--grid-nr") > 0 || v->count("--grid-nt") > 0;
        }
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return invalid_parameters;
    }
    try {
        if (!cfg.config.empty()) {
            std::ifstream in(cfg.config);
            if (!in) throw DomainError("--config: cannot open '" + cfg.config + "'");
            nlohmann::json j;
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw DomainError(std::string("--config: ") + e.what());
            }
            grid_given = grid_given || j.contains("grid-nr") || j.contains("grid-nt");
            cfg.apply_json(j);
        }
        if (cfg.command == "verify" && !grid_given) cfg.grid_nr = cfg.grid_nt = verify::VerifyOptions{}.grid_cells;
        cfg.validate();
        const io::Table t = run_command(cfg, err);
        emit(cfg, t, out);
        if (cfg.command == "verify") {
            for (const auto& row : t.rows) {
                if (!std::get<bool>(row[2])) return verification_failed;
            }
        }
        return ok;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return invalid_parameters;
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << '\n';
        return not_converged;
    } catch (const SchemeError& e) {
        err << "error: " << e.what() << '\n';
        return not_converged;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return verification_failed;
    }
}

}  // namespace fle::cli
