#pragma once

// Tabular output: CSV with 17 significant digits and inf/-inf/nan literals, or JSON.

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "fle/errors.hpp"
#include "fle/exponents.hpp"
#include "fle/grid.hpp"
#include "fle/monotonicity.hpp"

namespace fle::io {

using Cell = std::variant<double, long long, bool, std::string>;

struct Table {
    Table() = default;
    explicit Table(std::vector<std::string> cols) : columns(std::move(cols)) {}

    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    /// Run metadata; written next to CSV output or embedded in JSON.
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();

    void add_row(std::vector<Cell> row) {
        if (row.size() != columns.size()) throw DomainError("Table: row width does not match the header");
        rows.push_back(std::move(row));
    }
};

/// Locale-independent shortest-safe rendering: %.17g, with inf, -inf and nan spelled out.
inline std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // %.17g obeys LC_NUMERIC; the toolkit never sets it, but guard against a ',' anyway.
    for (char& c : buf) {
        if (c == ',') c = '.';
    }
    return buf;
}

inline std::string format_cell(const Cell& c) {
    struct Visitor {
        std::string operator()(double v) const { return format_real(v); }
        std::string operator()(long long v) const { return std::to_string(v); }
        std::string operator()(bool v) const { return v ? "true" : "false"; }
        std::string operator()(const std::string& v) const {
            if (v.find_first_of(",\"\n") == std::string::npos) return v;
            std::string out = "\"";
            for (char ch : v) {
                if (ch == '"') out += '"';
                out += ch;
            }
            return out + "\"";
        }
    };
    return std::visit(Visitor{}, c);
}

inline void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t k = 0; k < t.columns.size(); ++k) os << (k ? "," : "") << t.columns[k];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << format_cell(row[k]);
        os << '\n';
    }
}

// JSON has no infinities; non-finite reals become the same strings as in CSV.
inline nlohmann::ordered_json json_cell(const Cell& c) {
    if (const double* v = std::get_if<double>(&c)) {
        if (std::isfinite(*v)) return *v;
        return format_real(*v);
    }
    if (const long long* v = std::get_if<long long>(&c)) return *v;
    if (const bool* v = std::get_if<bool>(&c)) return *v;
    return std::get<std::string>(c);
}

inline nlohmann::ordered_json to_json(const Table& t) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (std::size_t k = 0; k < row.size(); ++k) obj[t.columns[k]] = json_cell(row[k]);
        rows.push_back(std::move(obj));
    }
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    out["meta"] = t.meta;
    out["rows"] = std::move(rows);
    return out;
}

inline void write_json(std::ostream& os, const Table& t) { os << to_json(t).dump(2) << '\n'; }

inline Cell extended_cell(const ExtendedReal& x) { return x.value(); }

inline Table exponents_table(const std::vector<ExponentTableRow>& rows) {
    Table t{{"n", "s", "p_S", "p_c", "tail_margin"}};
    for (const auto& r : rows) {
        t.add_row({static_cast<long long>(r.n), r.s, extended_cell(r.p_sobolev), extended_cell(r.p_critical),
                   r.tail_margin});
        if (r.error) t.meta["errors"].push_back({{"n", r.n}, {"s", r.s}, {"message", *r.error}});
    }
    return t;
}

inline Table field_table(const ExtField& u) {
    Table t{{"r", "t", "u"}};
    const auto& r = u.grid->r_nodes();
    const auto& tn = u.grid->t_nodes();
    for (int j = 0; j <= u.grid->nt(); ++j) {
        for (int i = 0; i <= u.grid->nr(); ++i) t.add_row({r[i], tn[j], u.at(i, j)});
    }
    t.meta["nr"] = u.grid->nr();
    t.meta["nt"] = u.grid->nt();
    t.meta["radius"] = u.grid->radius();
    t.meta["grading"] = u.grid->grading();
    t.meta["iterations"] = u.iterations;
    t.meta["residual"] = u.residual;
    t.meta["last_increment"] = u.last_increment;
    return t;
}

inline Table energy_table(const EnergyReport& rep) {
    Table t{{"lambda", "E", "E1", "E2", "dE_formula", "dE_fd"}};
    for (std::size_t k = 0; k < rep.lambda_grid.size(); ++k) {
        t.add_row({rep.lambda_grid[k], rep.E[k], rep.E1[k], rep.E2[k], rep.dE_formula[k], rep.dE_fd[k]});
    }
    t.meta["min_increment"] = rep.min_increment();
    return t;
}

}  // namespace fle::io
