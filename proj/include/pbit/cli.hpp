#ifndef PBIT_CLI_HPP
#define PBIT_CLI_HPP

// pbitsim command-line driver. Exit codes: 0 success, 1 usage,
// 2 configuration, 3 runtime (including unreadable or unwritable files).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pbit/analysis.hpp"
#include "pbit/config.hpp"
#include "pbit/io.hpp"
#include "pbit/network.hpp"
#include "pbit/random.hpp"
#include "pbit/unitcell.hpp"

namespace pbit::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kConfig = 2, kRuntime = 3 };

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string mode;
    std::optional<double> from, to, step;
    std::optional<std::size_t> samples;
    std::optional<std::size_t> decimation;
    std::optional<double> drive, duration, dt;
    // ising
    std::string problem, calibration, energy_out;
    std::optional<std::size_t> sweeps;
    std::optional<double> beta, beta_end;
    bool random_order = false;
    // analyze
    std::string input, column;
    std::optional<double> theta_lo, theta_hi;
};

namespace detail {

inline nlohmann::json metadata(const std::string& subcommand, const RunConfig& cfg) {
    return {{"tool", "pbitsim"}, {"version", kVersion}, {"subcommand", subcommand}, {"config", to_json(cfg)}};
}

inline void emit(const std::string& path, const std::string& content, std::ostream& out) {
    if (path.empty() || path == "-") out << content;
    else write_text_file(path, content);
}

inline void warn_all(const std::vector<std::string>& warnings, std::ostream& err) {
    for (const auto& w : warnings) err << "pbitsim: warning: " << w << "\n";
}

// Applies the sweep-related command-line overrides onto the config.
inline void resolve_sweep(RunConfig& cfg, const std::string& variable, const Options& o,
                          const SweepSpec& defaults) {
    if (!cfg.sweep || cfg.sweep->variable != variable) {
        if (cfg.sweep && cfg.sweep->variable != variable)
            throw config_error("sweep.variable: config sweeps '" + cfg.sweep->variable + "' but the subcommand sweeps '" + variable + "'");
        cfg.sweep = defaults;
    }
    if (o.from) cfg.sweep->from = *o.from;
    if (o.to) cfg.sweep->to = *o.to;
    if (o.step) cfg.sweep->step = *o.step;
    if (o.samples) cfg.sweep->samples_per_point = *o.samples;
    if (o.decimation) cfg.sweep->decimation = *o.decimation;
}

inline SweepSettings settings(const RunConfig& cfg) {
    return {cfg.sweep->samples_per_point, cfg.sim.dt, cfg.sweep->decimation, *cfg.sim.seed};
}

inline RunConfig base_config(const Options& o) {
    RunConfig cfg = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
    if (o.seed) cfg.sim.seed = *o.seed;
    if (!cfg.sim.seed) cfg.sim.seed = entropy_seed();
    if (o.dt) cfg.sim.dt = *o.dt;
    if (o.duration) cfg.sim.duration = *o.duration;
    return cfg;
}

inline void finish_config(RunConfig& cfg) {
    validate(cfg);
}

inline std::string sweep_text(const std::string& sub, const RunConfig& cfg, const SweepResult& res) {
    std::ostringstream os;
    write_sweep_csv(os, res, metadata(sub, cfg));
    return os.str();
}

inline int cmd_trace(const Options& o, std::ostream& out, std::ostream& err) {
    RunConfig cfg = base_config(o);
    if (!o.mode.empty()) cfg.sim.mode = o.mode;
    if (o.decimation) cfg.sim.record_decimation = *o.decimation;
    if (o.drive) cfg.sim.drive = *o.drive;
    finish_config(cfg);
    const UnitCellConfig cell = cfg.cell(parse_cell_mode(cfg.sim.mode));
    if (!cfg.sim.drive) cfg.sim.drive = snap_decimal(balance_drive(cell));
    const TimeSeries ts = simulate(cell, *cfg.sim.drive, cfg.sim.duration, cfg.sim.dt, *cfg.sim.seed, cfg.sim.record_decimation);
    warn_all(ts.warnings, err);
    std::ostringstream os;
    write_timeseries_csv(os, ts, metadata("trace", cfg));
    emit(o.out, os.str(), out);
    return kOk;
}

inline int cmd_sweep_current(const Options& o, std::ostream& out, std::ostream& err) {
    RunConfig cfg = base_config(o);
    resolve_sweep(cfg, "current", o, default_sweep("current"));
    finish_config(cfg);
    const auto& s = *cfg.sweep;
    const SweepResult res = current_sweep(cfg.device, s.from, s.to, s.step, cfg.field.isolated, settings(cfg));
    warn_all(res.warnings, err);
    emit(o.out, sweep_text("sweep-current", cfg, res), out);
    return kOk;
}

inline int cmd_sweep_gate(const Options& o, std::ostream& out, std::ostream& err) {
    RunConfig cfg = base_config(o);
    resolve_sweep(cfg, "gate", o, default_sweep("gate"));
    finish_config(cfg);
    const auto& s = *cfg.sweep;
    const SweepResult res = gate_sweep(cfg.cell(CellMode::single_nmos), s.from, s.to, s.step, settings(cfg));
    warn_all(res.warnings, err);
    emit(o.out, sweep_text("sweep-gate", cfg, res), out);
    return kOk;
}

inline int cmd_sweep_bias(const Options& o, std::ostream& out, std::ostream& err) {
    RunConfig cfg = base_config(o);
    resolve_sweep(cfg, "bias", o, default_sweep("bias"));
    finish_config(cfg);
    const auto& s = *cfg.sweep;
    const SweepResult res = bias_sweep(cfg.cell(CellMode::full_stage), s.from, s.to, s.step, settings(cfg));
    warn_all(res.warnings, err);
    emit(o.out, sweep_text("sweep-bias", cfg, res), out);
    return kOk;
}

inline int cmd_sweep_vdd(const Options& o, std::ostream& out, std::ostream&) {
    RunConfig cfg = base_config(o);
    resolve_sweep(cfg, "vdd", o, default_sweep("vdd"));
    finish_config(cfg);
    const auto& s = *cfg.sweep;
    const SweepResult res = vdd_sweep(cfg.cell(CellMode::full_stage), s.from, s.to, s.step);
    emit(o.out, sweep_text("sweep-vdd", cfg, res), out);
    return kOk;
}

/// Bias sweep of the configured full-stage cell followed by a sigmoid fit.
inline SigmoidFit run_calibration(const RunConfig& cfg, const SweepSpec& s, std::uint64_t seed,
                                  SweepResult* sweep_out = nullptr) {
    SweepSettings st{s.samples_per_point, cfg.sim.dt, s.decimation, seed};
    SweepResult res = bias_sweep(cfg.cell(CellMode::full_stage), s.from, s.to, s.step, st);
    std::vector<double> xs, ys;
    for (const auto& p : res.points) {
        xs.push_back(p.setpoint);
        ys.push_back(p.v_out_mean);
    }
    SigmoidFit fit = fit_sigmoid(xs, ys);
    if (sweep_out) *sweep_out = std::move(res);
    return fit;
}

inline int cmd_calibrate(const Options& o, std::ostream& out, std::ostream& err) {
    RunConfig cfg = base_config(o);
    resolve_sweep(cfg, "bias", o, default_calibration_sweep());
    finish_config(cfg);
    SweepResult res;
    const SigmoidFit fit = run_calibration(cfg, *cfg.sweep, *cfg.sim.seed, &res);
    warn_all(res.warnings, err);
    const nlohmann::json j = {{"metadata", metadata("calibrate", cfg)}, {"fit", fit_to_json(fit)}};
    emit(o.out, j.dump(2) + "\n", out);
    return kOk;
}

inline SigmoidFit load_calibration(const std::string& path) {
    const nlohmann::json j = parse_json_text(read_text_file(path), path);
    if (!j.is_object() || !j.contains("fit")) throw config_error(path + ": calibration file has no 'fit' record");
    return fit_from_json(j.at("fit"));
}

inline std::string energy_path(const Options& o) {
    if (!o.energy_out.empty()) return o.energy_out;
    if (o.out.empty() || o.out == "-") return {};
    std::string base = o.out;
    if (base.size() > 5 && base.substr(base.size() - 5) == ".json") base.resize(base.size() - 5);
    return base + "_energy.csv";
}

inline int cmd_ising(const Options& o, std::ostream& out, std::ostream& err) {
    RunConfig cfg = base_config(o);
    if (!o.problem.empty()) cfg.ising.problem = o.problem;
    if (!o.mode.empty()) cfg.ising.mode = o.mode;
    if (o.sweeps) cfg.ising.sweeps = *o.sweeps;
    if (o.beta) cfg.ising.beta = *o.beta;
    if (o.beta_end) cfg.ising.beta_end = *o.beta_end;
    if (o.random_order) cfg.ising.random_order = true;
    if (!o.calibration.empty()) cfg.ising.calibration = o.calibration;
    finish_config(cfg);
    if (cfg.ising.problem.empty()) throw config_error("ising.problem: required (--problem PATH)");
    const IsingProblem problem = load_problem(cfg.ising.problem);

    SampleOptions opt;
    opt.beta_end = cfg.ising.beta_end;
    opt.random_order = cfg.ising.random_order;
    const std::uint64_t seed = *cfg.sim.seed;
    SampleStats st;
    if (cfg.ising.mode == "behavioral") {
        BehavioralPbits pbits;
        st = sample(problem, cfg.ising.beta, cfg.ising.sweeps, seed, pbits, opt);
    } else {
        const SigmoidFit fit = cfg.ising.calibration.empty()
                                   ? run_calibration(cfg, default_calibration_sweep(), derive_seed(seed, 0xCA11B))
                                   : load_calibration(cfg.ising.calibration);
        const auto fidelity = cfg.ising.mode == "circuit" ? CircuitPbits::Fidelity::quasi_static
                                                          : CircuitPbits::Fidelity::transient;
        CircuitPbits pbits(cfg.cell(CellMode::full_stage), calibrate_bias_mapping(fit), fidelity, 250, cfg.sim.dt);
        st = sample(problem, cfg.ising.beta, cfg.ising.sweeps, seed, pbits, opt);
        if (pbits.clamp_events() > 0)
            err << "pbitsim: warning: " << pbits.clamp_events()
                << " updates requested probabilities outside the calibrated range\n";
    }
    const nlohmann::json meta = metadata("ising", cfg);
    emit(o.out, histogram_to_json(problem, st, meta).dump(2) + "\n", out);
    if (const std::string ep = energy_path(o); !ep.empty()) {
        std::ostringstream os;
        write_energy_csv(os, st, meta);
        write_text_file(ep, os.str());
    }
    return kOk;
}

inline int cmd_analyze(const Options& o, std::ostream& out, std::ostream&) {
    if (o.input.empty()) throw config_error("analyze: --input is required");
    const CsvTable table = read_csv_file(o.input);
    if (table.rows.empty()) throw std::runtime_error("analyze: input has no data rows");
    nlohmann::json result = {{"tool", "pbitsim"}, {"version", kVersion}, {"input", o.input}};

    const bool is_sweep = std::find(table.columns.begin(), table.columns.end(), "v_out_mean_V") != table.columns.end();
    if (is_sweep) {
        std::string col = o.column;
        if (col.empty())
            col = std::find(table.columns.begin(), table.columns.end(), "r_mean_ohm") != table.columns.end()
                      ? "r_mean_ohm" : "v_out_mean_V";
        const auto xs = table.values(table.columns.front());
        const auto ys = table.values(col);
        result["kind"] = "sigmoid_fit";
        result["x_column"] = table.columns.front();
        result["y_column"] = col;
        result["fit"] = fit_to_json(fit_sigmoid(xs, ys));
    } else {
        const std::string col = o.column.empty() ? "level" : o.column;
        const auto values = table.values(col);
        auto [lo, hi] = (o.theta_lo && o.theta_hi) ? std::pair{*o.theta_lo, *o.theta_hi} : default_thresholds(values);
        const auto bits = digitize(values, lo, hi);
        const auto times = table.values(table.columns.front());
        if (times.size() < 2) throw std::runtime_error("analyze: need at least two samples");
        const double dt = times[1] - times[0];
        result["kind"] = "telegraph";
        result["column"] = col;
        result["theta_lo"] = lo;
        result["theta_hi"] = hi;
        result["dt"] = dt;
        result["samples"] = bits.size();
        result["occupancy_high"] = occupancy(bits);
        if (const auto st = dwell_times(bits, dt)) {
            result["transitions"] = st->transition_count;
            result["complete_dwells_high"] = st->dwells_high.size();
            result["complete_dwells_low"] = st->dwells_low.size();
            result["mean_dwell_high"] = std::isnan(st->mean_high) ? nlohmann::json(nullptr) : nlohmann::json(st->mean_high);
            result["mean_dwell_low"] = std::isnan(st->mean_low) ? nlohmann::json(nullptr) : nlohmann::json(st->mean_low);
        } else {
            result["transitions"] = nullptr;
            result["status"] = "insufficient transitions";
        }
    }
    emit(o.out, result.dump(2) + "\n", out);
    return kOk;
}

}  // namespace detail

/// Parses argv and runs one subcommand.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"pbitsim: behavioral simulator of CMOS-integrated sMTJ p-bits"};
    app.set_version_flag("--version", std::string("pbitsim ") + kVersion);
    app.require_subcommand(1, 1);
    Options o;

    auto common = [&](CLI::App* sc) {
        sc->add_option("--config", o.config_path, "JSON run configuration");
        sc->add_option("--seed", o.seed, "64-bit seed (drawn from entropy and recorded when absent)");
        sc->add_option("--out", o.out, "output file (stdout when absent)");
    };
    auto sweep_opts = [&](CLI::App* sc) {
        sc->add_option("--from", o.from, "first setpoint");
        sc->add_option("--to", o.to, "last setpoint");
        sc->add_option("--step", o.step, "setpoint increment");
        sc->add_option("--samples", o.samples, "recorded samples per point");
        sc->add_option("--decimation", o.decimation, "simulation steps per recorded sample");
        sc->add_option("--dt", o.dt, "simulation time step, s");
    };

    auto* trace = app.add_subcommand("trace", "time series of one cell at a fixed drive");
    common(trace);
    trace->add_option("--mode", o.mode, "isolated | single_nmos | full_stage");
    trace->add_option("--drive", o.drive, "current (A) or gate/bias voltage (V); balance point when absent");
    trace->add_option("--duration", o.duration, "simulated time, s");
    trace->add_option("--dt", o.dt, "simulation time step, s");
    trace->add_option("--decimation", o.decimation, "simulation steps per recorded row");

    auto* sc_current = app.add_subcommand("sweep-current", "time-averaged resistance versus junction current");
    auto* sc_gate = app.add_subcommand("sweep-gate", "single-NMOS stage versus gate voltage");
    auto* sc_bias = app.add_subcommand("sweep-bias", "full-stage p-bit versus bias voltage");
    auto* sc_vdd = app.add_subcommand("sweep-vdd", "full-stage output with grounded inputs versus supply");
    auto* sc_cal = app.add_subcommand("calibrate", "bias sweep plus sigmoid fit for circuit-mode p-bits");
    for (auto* sc : {sc_current, sc_gate, sc_bias, sc_vdd, sc_cal}) {
        common(sc);
        sweep_opts(sc);
    }

    auto* ising = app.add_subcommand("ising", "sample an Ising problem with p-bits");
    common(ising);
    ising->add_option("--problem", o.problem, "problem JSON");
    ising->add_option("--mode", o.mode, "behavioral | circuit | circuit-transient");
    ising->add_option("--sweeps", o.sweeps, "number of sweeps");
    ising->add_option("--beta", o.beta, "inverse temperature (start of the ramp when --beta-end is set)");
    ising->add_option("--beta-end", o.beta_end, "inverse temperature at the last sweep");
    ising->add_flag("--random-order", o.random_order, "shuffle the update order every sweep");
    ising->add_option("--calibration", o.calibration, "calibration JSON from 'calibrate'");
    ising->add_option("--energy-out", o.energy_out, "energy trace CSV");
    ising->add_option("--dt", o.dt, "time step for circuit-transient updates, s");

    auto* analyze = app.add_subcommand("analyze", "telegraph statistics of a trace, or a sigmoid fit of a sweep");
    analyze->add_option("--input", o.input, "trace or sweep CSV");
    analyze->add_option("--out", o.out, "output JSON (stdout when absent)");
    analyze->add_option("--column", o.column, "column to analyze");
    analyze->add_option("--theta-lo", o.theta_lo, "lower hysteresis threshold");
    analyze->add_option("--theta-hi", o.theta_hi, "upper hysteresis threshold");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    // Wall-clock time goes to stderr only, so output files stay byte-identical
    // between repeated runs.
    const auto started = std::chrono::steady_clock::now();
    auto timed = [&](const char* name, int code) {
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
        if (!o.out.empty() && o.out != "-")
            err << "pbitsim: " << name << " wrote " << o.out << " in " << elapsed.count() << " s\n";
        return code;
    };
    try {
        if (trace->parsed()) return timed("trace", detail::cmd_trace(o, out, err));
        if (sc_current->parsed()) return timed("sweep-current", detail::cmd_sweep_current(o, out, err));
        if (sc_gate->parsed()) return timed("sweep-gate", detail::cmd_sweep_gate(o, out, err));
        if (sc_bias->parsed()) return timed("sweep-bias", detail::cmd_sweep_bias(o, out, err));
        if (sc_vdd->parsed()) return timed("sweep-vdd", detail::cmd_sweep_vdd(o, out, err));
        if (sc_cal->parsed()) return timed("calibrate", detail::cmd_calibrate(o, out, err));
        if (ising->parsed()) return timed("ising", detail::cmd_ising(o, out, err));
        if (analyze->parsed()) return timed("analyze", detail::cmd_analyze(o, out, err));
    } catch (const config_error& e) {
        err << "pbitsim: config error: " << e.what() << "\n";
        return kConfig;
    } catch (const io_error& e) {
        err << "pbitsim: error: " << e.what() << "\n";
        return kRuntime;
    } catch (const std::exception& e) {
        err << "pbitsim: error: " << e.what() << "\n";
        return kRuntime;
    }
    return kUsage;
}

}  // namespace pbit::cli

#endif  // PBIT_CLI_HPP
