#ifndef PBIT_IO_HPP
#define PBIT_IO_HPP

// File formats.
//
// CSV: a block of '#' comment lines (tool/version, one-line JSON metadata,
// column names with units), then a plain header row, then data rows.
// Reals are printed with printf("%.9g"), so identical inputs give
// byte-identical files.
//
// Ising problems: JSON {"n", "j", "h", "clamps"} where "j" is either a flat
// row-major array of n*n numbers or a list of [i, j, value] triplets, and
// "clamps" is a list of [index, +1|-1] pairs.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pbit/analysis.hpp"
#include "pbit/config.hpp"
#include "pbit/network.hpp"
#include "pbit/unitcell.hpp"

namespace pbit {

inline std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline const std::vector<std::string>& timeseries_columns() {
    static const std::vector<std::string> c{"time_s", "level", "i_A", "v_in_V", "v_out_V"};
    return c;
}

inline std::vector<std::string> sweep_columns(const SweepResult& r) {
    std::vector<std::string> c{"setpoint_" + r.unit, "v_out_mean_V", "v_out_min_V", "v_out_max_V", "occupancy_ap", "i_mean_A"};
    if (!r.points.empty() && r.points.front().r_mean) {
        c.push_back("r_mean_ohm");
        c.push_back("r_analytic_ohm");
    }
    return c;
}

inline void write_csv_preamble(std::ostream& os, const nlohmann::json& metadata, const std::vector<std::string>& columns) {
    os << "# pbitsim " << kVersion << "\n";
    os << "# metadata: " << metadata.dump() << "\n";
    os << "# columns:";
    for (const auto& c : columns) os << ' ' << c;
    os << "\n";
    for (std::size_t k = 0; k < columns.size(); ++k) os << (k ? "," : "") << columns[k];
    os << "\n";
}

inline void write_timeseries_csv(std::ostream& os, const TimeSeries& ts, const nlohmann::json& metadata) {
    write_csv_preamble(os, metadata, timeseries_columns());
    for (const auto& r : ts.rows)
        os << format_real(r.t) << ',' << static_cast<int>(r.level) << ',' << format_real(r.i) << ','
           << format_real(r.v_in) << ',' << format_real(r.v_out) << '\n';
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& res, const nlohmann::json& metadata) {
    write_csv_preamble(os, metadata, sweep_columns(res));
    for (const auto& p : res.points) {
        os << format_real(p.setpoint) << ',' << format_real(p.v_out_mean) << ',' << format_real(p.v_out_min) << ','
           << format_real(p.v_out_max) << ',' << format_real(p.occupancy_ap) << ',' << format_real(p.i_mean);
        if (p.r_mean) os << ',' << format_real(*p.r_mean) << ',' << format_real(p.r_analytic.value_or(0.0));
        os << '\n';
    }
}

inline void write_energy_csv(std::ostream& os, const SampleStats& st, const nlohmann::json& metadata) {
    write_csv_preamble(os, metadata, {"sweep", "energy"});
    for (std::size_t k = 0; k < st.energy.size(); ++k) os << k << ',' << format_real(st.energy[k]) << '\n';
}

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t k = 0; k < columns.size(); ++k)
            if (columns[k] == name) return k;
        throw std::invalid_argument("CSV has no column '" + name + "'");
    }

    std::vector<double> values(const std::string& name) const {
        const std::size_t c = column(name);
        std::vector<double> v;
        v.reserve(rows.size());
        for (const auto& r : rows) v.push_back(r.at(c));
        return v;
    }
};

/// Reads the CSV format above: '#' lines skipped, first other line is the header.
inline CsvTable read_csv(std::istream& is) {
    CsvTable t;
    std::string line;
    bool have_header = false;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!have_header) {
            t.columns = cells;
            have_header = true;
            continue;
        }
        if (cells.size() != t.columns.size())
            throw std::invalid_argument("CSV line " + std::to_string(line_no) + ": wrong number of fields");
        std::vector<double> row;
        for (const auto& c : cells) {
            char* end = nullptr;
            const double v = std::strtod(c.c_str(), &end);
            if (end == c.c_str()) throw std::invalid_argument("CSV line " + std::to_string(line_no) + ": not a number");
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    if (!have_header) throw std::invalid_argument("CSV has no header row");
    return t;
}

inline CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    return read_csv(in);
}

inline IsingProblem problem_from_json(const nlohmann::json& j) {
    detail::ObjectReader r(j, "problem");
    if (!r.has("n")) throw config_error("problem.n: required");
    std::size_t n = 0;
    r.integer("n", n);
    if (n == 0 || n > 63) throw config_error("problem.n: must be in 1..63");
    IsingProblem p(n);
    if (r.has("j")) {
        const auto& jj = r.sub("j");
        if (!jj.is_array()) throw config_error("problem.j: expected an array");
        const bool dense = !jj.empty() && jj.front().is_number();
        if (dense) {
            if (jj.size() != n * n) throw config_error("problem.j: dense form needs n*n entries");
            for (std::size_t k = 0; k < n * n; ++k) {
                if (!jj[k].is_number()) throw config_error("problem.j: expected numbers");
                p.j[k] = jj[k].get<double>();
            }
        } else {
            std::vector<bool> seen(n * n, false);
            for (const auto& t : jj) {
                if (!t.is_array() || t.size() != 3 || !t[0].is_number_integer() || !t[1].is_number_integer() ||
                    !t[2].is_number())
                    throw config_error("problem.j: triplets must be [i, j, value]");
                const auto a = t[0].get<std::int64_t>(), b = t[1].get<std::int64_t>();
                if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n || static_cast<std::size_t>(b) >= n)
                    throw config_error("problem.j: triplet index out of range");
                if (a == b) throw config_error("problem.j: diagonal couplings are not allowed");
                const auto ia = static_cast<std::size_t>(a), ib = static_cast<std::size_t>(b);
                const double v = t[2].get<double>();
                if (seen[ia * n + ib] && p.coupling(ia, ib) != v) throw config_error("problem.j: conflicting duplicate triplet");
                seen[ia * n + ib] = seen[ib * n + ia] = true;
                p.set_coupling(ia, ib, v);
            }
        }
    }
    if (r.has("h")) {
        const auto& hh = r.sub("h");
        if (!hh.is_array() || hh.size() != n) throw config_error("problem.h: expected n numbers");
        for (std::size_t k = 0; k < n; ++k) {
            if (!hh[k].is_number()) throw config_error("problem.h: expected numbers");
            p.h[k] = hh[k].get<double>();
        }
    }
    if (r.has("clamps")) {
        const auto& cc = r.sub("clamps");
        if (!cc.is_array()) throw config_error("problem.clamps: expected a list of [index, value] pairs");
        for (const auto& c : cc) {
            if (!c.is_array() || c.size() != 2 || !c[0].is_number_integer() || !c[1].is_number_integer())
                throw config_error("problem.clamps: expected [index, +1|-1]");
            const auto idx = c[0].get<std::int64_t>(), val = c[1].get<std::int64_t>();
            if (idx < 0 || static_cast<std::size_t>(idx) >= n) throw config_error("problem.clamps: index out of range");
            if (val != 1 && val != -1) throw config_error("problem.clamps: value must be +1 or -1");
            p.clamp[static_cast<std::size_t>(idx)] = static_cast<std::int8_t>(val);
        }
    }
    std::string ignored;
    r.string("name", ignored);
    r.string("description", ignored);
    r.finish();
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("problem: ") + e.what());
    }
    return p;
}

inline IsingProblem load_problem(const std::string& path) {
    return problem_from_json(parse_json_text(read_text_file(path), path));
}

inline nlohmann::json fit_to_json(const SigmoidFit& f) {
    return {{"y_lo", f.y_lo}, {"y_hi", f.y_hi}, {"x_0", f.x_0}, {"w", f.w}, {"decreasing", f.decreasing},
            {"residual_r2", f.residual_r2}, {"x_min", f.x_min}, {"x_max", f.x_max}};
}

inline SigmoidFit fit_from_json(const nlohmann::json& j) {
    detail::ObjectReader r(j, "fit");
    SigmoidFit f;
    r.number("y_lo", f.y_lo);
    r.number("y_hi", f.y_hi);
    r.number("x_0", f.x_0);
    r.number("w", f.w);
    r.boolean("decreasing", f.decreasing);
    r.number("residual_r2", f.residual_r2);
    r.number("x_min", f.x_min);
    r.number("x_max", f.x_max);
    r.finish();
    return f;
}

/// Histogram record: states ranked by count, with spin strings and energies.
inline nlohmann::json histogram_to_json(const IsingProblem& p, const SampleStats& st, const nlohmann::json& metadata) {
    nlohmann::json states = nlohmann::json::array();
    std::uint64_t total = 0;
    for (const auto& [k, c] : st.histogram) total += c;
    for (std::uint64_t key : ranked_states(st.histogram)) {
        const SpinState s = decode(key, p.n);
        const std::uint64_t c = st.histogram.at(key);
        states.push_back({{"state", key}, {"spins", spin_string(s)}, {"count", c},
                          {"frequency", static_cast<double>(c) / static_cast<double>(total)},
                          {"energy", ising_energy(p, s)}});
    }
    return {{"metadata", metadata}, {"mode", st.mode}, {"seed", st.seed}, {"sweeps", st.sweeps},
            {"samples", total}, {"states", states}};
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write '" + path + "'");
    out << content;
    if (!out) throw io_error("error writing '" + path + "'");
}

}  // namespace pbit

#endif  // PBIT_IO_HPP
