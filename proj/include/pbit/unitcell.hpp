#ifndef PBIT_UNITCELL_HPP
#define PBIT_UNITCELL_HPP

// Co-simulation of the junction with the CMOS stages around it. The CMOS
// settles many orders of magnitude faster than the junction dwells, so the
// circuit is solved algebraically for each of the two junction resistances
// and only the junction carries state from step to step.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbit/circuit.hpp"
#include "pbit/device.hpp"
#include "pbit/random.hpp"

namespace pbit {

enum class CellMode { isolated, single_nmos, full_stage };

inline const char* to_string(CellMode m) noexcept {
    switch (m) {
        case CellMode::isolated: return "isolated";
        case CellMode::single_nmos: return "single_nmos";
        case CellMode::full_stage: return "full_stage";
    }
    return "?";
}

inline CellMode parse_cell_mode(const std::string& s) {
    if (s == "isolated") return CellMode::isolated;
    if (s == "single_nmos") return CellMode::single_nmos;
    if (s == "full_stage") return CellMode::full_stage;
    throw std::invalid_argument("unknown cell mode '" + s + "'");
}

struct UnitCellConfig {
    CellMode mode = CellMode::full_stage;
    SmtjParams smtj;
    NmosParams nmos_bias;
    std::optional<NmosParams> nmos_cas;
    VtcParams vtc;
    InverterParams inverter;
    double v_dd = 1.8;
    double v_cas = 0.0;
    double applied_field = 0.0;  // T, constant for the run

    void validate() const {
        smtj.validate();
        if (!(v_dd > 0)) throw std::invalid_argument("cell: v_dd must be positive");
        if (mode == CellMode::isolated) return;
        nmos_bias.validate();
        if (mode == CellMode::full_stage) {
            if (!nmos_cas) throw std::invalid_argument("cell: full_stage mode requires a cascode transistor");
            nmos_cas->validate();
            vtc.validate();
            inverter.validate();
            if (vtc.v_dd != v_dd) throw std::invalid_argument("cell: vtc.v_dd must equal the cell supply");
        }
    }
};

// Default calibrations. The junction is the same device in every mode; the
// compensating field places its balance current inside the range each
// stage can drive.

inline UnitCellConfig isolated_cell() {
    UnitCellConfig c;
    c.mode = CellMode::isolated;
    return c;
}

/// Single 1 um NMOS under the junction. The field puts the balance point at
/// about 40 uA, where the P/AP swing at the drain is close to 100 mV.
inline UnitCellConfig single_nmos_cell() {
    UnitCellConfig c;
    c.mode = CellMode::single_nmos;
    c.v_dd = 1.8;
    c.applied_field = -5.5e-3;
    return c;
}

/// Cascode stage with 9 um devices, VTC threshold 1.1 V, 1.8 V supply. The
/// VTC separates the two junction states for currents between 140 uA and
/// 280 uA; the field centres the junction's balance point at 200 uA.
inline UnitCellConfig full_stage_cell() {
    UnitCellConfig c;
    c.mode = CellMode::full_stage;
    c.v_dd = 1.8;
    c.v_cas = 1.0;
    c.nmos_bias.w = 9.0;
    c.nmos_cas = NmosParams{};
    c.nmos_cas->w = 9.0;
    c.vtc.threshold_index = 4;
    c.vtc.v_dd = c.v_dd;
    c.applied_field = -21.5e-3;
    return c;
}

/// Circuit response with the junction frozen in one state.
struct LevelResponse {
    double r = 0.0;
    double i = 0.0;
    double v_in = 0.0;   // VTC input (drain node for single_nmos, junction voltage when isolated)
    double v_out = 0.0;
    OperatingPoint op;
};

/// Quasi-static response for both junction states at a given drive: a
/// current (A) when isolated, the gate voltage for single_nmos, the bias
/// voltage for full_stage. Index 0 is P, index 1 is AP.
inline std::array<LevelResponse, 2> level_responses(const UnitCellConfig& cfg, double drive) {
    std::array<LevelResponse, 2> out{};
    for (Level lvl : {Level::P, Level::AP}) {
        LevelResponse& lr = out[static_cast<int>(lvl)];
        lr.r = resistance(lvl, cfg.smtj);
        switch (cfg.mode) {
            case CellMode::isolated:
                lr.i = drive;
                lr.v_in = lr.v_out = drive * lr.r;
                break;
            case CellMode::single_nmos:
                lr.op = series_operating_point(cfg.v_dd, drive, lr.r, cfg.nmos_bias);
                lr.i = lr.op.i;
                lr.v_in = lr.v_out = lr.op.v_out;
                break;
            case CellMode::full_stage:
                lr.op = cascode_operating_point(cfg.v_dd, drive, cfg.v_cas, lr.r, cfg.nmos_bias, *cfg.nmos_cas);
                lr.i = lr.op.i;
                lr.v_in = std::clamp(lr.op.v_out, 0.0, cfg.v_dd);
                lr.v_out = inverter_output(vtc_output(lr.v_in, cfg.vtc), cfg.inverter, cfg.v_dd);
                break;
        }
    }
    return out;
}

/// Stationary AP occupancy of the junction when each state sees its own
/// circuit current.
inline double stationary_ap(const UnitCellConfig& cfg, const std::array<LevelResponse, 2>& lr) {
    const double tau_p = dwell_means(lr[0].i, cfg.applied_field, cfg.smtj).tau_p;
    const double tau_ap = dwell_means(lr[1].i, cfg.applied_field, cfg.smtj).tau_ap;
    return tau_ap / (tau_p + tau_ap);
}

/// Probability that the cell output reads high (v_dd) at a bias voltage,
/// in the quasi-static limit. Full-stage mode only.
inline double prob_output_high(const UnitCellConfig& cfg, double v_bias) {
    if (cfg.mode != CellMode::full_stage) throw std::invalid_argument("prob_output_high: full_stage mode required");
    const auto lr = level_responses(cfg, v_bias);
    const double pa = stationary_ap(cfg, lr);
    const double vol = vol_curve_eval(cfg.v_dd, cfg.inverter);
    const double span = cfg.v_dd - vol;
    auto high = [&](const LevelResponse& r) { return span > 0 ? (r.v_out - vol) / span : 1.0; };
    return (1.0 - pa) * high(lr[0]) + pa * high(lr[1]);
}

/// Drive at which the junction spends equal time in both states. Found by
/// bisection; the stationary occupancy rises monotonically with the drive.
inline double balance_drive(const UnitCellConfig& cfg) {
    cfg.validate();
    if (cfg.mode == CellMode::isolated) return cfg.smtj.i_50 - cfg.smtj.k_h * cfg.applied_field;
    double lo = cfg.nmos_bias.v_t, hi = cfg.v_dd;
    auto occ = [&](double v) { return stationary_ap(cfg, level_responses(cfg, v)); };
    if (occ(hi) < 0.5) throw std::domain_error("balance_drive: the stage cannot reach the junction's balance current");
    for (int it = 0; it < 100 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        (occ(mid) < 0.5 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct TimeSample {
    double t;
    Level level;
    double i;
    double v_in;
    double v_out;
};

struct TimeSeries {
    double dt = 0.0;  // spacing between recorded rows
    std::vector<TimeSample> rows;
    std::vector<std::string> warnings;
};

namespace detail {

// Runs the two-state chain with per-state flip probabilities, calling
// `record(level)` every `decimation` steps, `n_records` times in total.
template <typename Record>
void run_chain(const UnitCellConfig& cfg, const std::array<LevelResponse, 2>& lr, double dt, std::size_t n_records,
               std::size_t decimation, Rng& rng, Record&& record) {
    const double q_p = flip_probability(dwell_means(lr[0].i, cfg.applied_field, cfg.smtj).tau_p, dt);
    const double q_ap = flip_probability(dwell_means(lr[1].i, cfg.applied_field, cfg.smtj).tau_ap, dt);
    Level level = bernoulli(rng, stationary_ap(cfg, lr)) ? Level::AP : Level::P;
    for (std::size_t k = 0; k < n_records; ++k) {
        record(level);
        if (k + 1 == n_records) break;
        for (std::size_t s = 0; s < decimation; ++s) {
            const double q = level == Level::P ? q_p : q_ap;
            if (uniform01(rng) < q) level = flipped(level);
        }
    }
}

// Same chain, sampled with the exact two-state transition probabilities
// over each recording interval instead of stepping. Valid whenever the
// rates are constant; costs one variate per record however long the
// interval, and its stationary occupancy is exactly stationary_ap().
template <typename Record>
void run_exact_chain(const UnitCellConfig& cfg, const std::array<LevelResponse, 2>& lr, double interval,
                     std::size_t n_records, Rng& rng, Record&& record) {
    const double tau_p = dwell_means(lr[0].i, cfg.applied_field, cfg.smtj).tau_p;
    const double tau_ap = dwell_means(lr[1].i, cfg.applied_field, cfg.smtj).tau_ap;
    const double pa = tau_ap / (tau_p + tau_ap);
    const double relax = -std::expm1(-interval * (1.0 / tau_p + 1.0 / tau_ap));
    const double q_p = pa * relax, q_ap = (1.0 - pa) * relax;
    Level level = bernoulli(rng, pa) ? Level::AP : Level::P;
    for (std::size_t k = 0; k < n_records; ++k) {
        record(level);
        if (k + 1 == n_records) break;
        if (uniform01(rng) < (level == Level::P ? q_p : q_ap)) level = flipped(level);
    }
}

inline void check_sim_inputs(double dt, std::size_t decimation) {
    if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
    if (decimation == 0) throw std::invalid_argument("record decimation must be at least 1");
}

}  // namespace detail

/// Transient run at a fixed drive. Rows are recorded every `decimation`
/// steps; the first row is the initial state drawn from the stationary
/// distribution.
inline TimeSeries simulate(const UnitCellConfig& cfg, double drive, double duration, double dt, std::uint64_t seed,
                           std::size_t decimation = 1) {
    cfg.validate();
    detail::check_sim_inputs(dt, decimation);
    const double record_dt = dt * static_cast<double>(decimation);
    const std::size_t n = step_count(duration, record_dt);
    if (n == 0) throw std::invalid_argument("simulate: duration shorter than one recorded step");

    TimeSeries ts;
    ts.dt = record_dt;
    if (is_coarse_step(dt, cfg.smtj)) ts.warnings.push_back(coarse_step_warning(dt, cfg.smtj));
    ts.rows.reserve(n);
    const auto lr = level_responses(cfg, drive);
    Rng rng(seed);
    std::size_t k = 0;
    detail::run_chain(cfg, lr, dt, n, decimation, rng, [&](Level level) {
        const LevelResponse& r = lr[static_cast<int>(level)];
        ts.rows.push_back({static_cast<double>(k++) * record_dt, level, r.i, r.v_in, r.v_out});
    });
    return ts;
}

struct SweepPoint {
    double setpoint = 0.0;
    double v_out_mean = 0.0;
    double v_out_min = 0.0;
    double v_out_max = 0.0;
    double occupancy_ap = 0.0;
    double i_mean = 0.0;
    double v_out_sem = 0.0;  // batch-means standard error of v_out_mean
    std::optional<double> r_mean;      // current sweep only
    std::optional<double> r_analytic;  // current sweep only
};

struct SweepResult {
    std::string variable;
    std::string unit;
    std::vector<SweepPoint> points;
    std::size_t samples_per_point = 0;
    double dt = 0.0;
    std::size_t decimation = 1;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

struct SweepSettings {
    std::size_t samples_per_point = 20000;
    double dt = 20e-6;
    std::size_t decimation = 1;
    std::uint64_t seed = 0;
};

/// Rounds to the nearest 12-significant-digit decimal, so accumulated
/// setpoints such as 16 * 0.05 land on the same double as the literal 0.8.
inline double snap_decimal(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::strtod(buf, nullptr);
}

/// Setpoints from `from` towards `to` in increments of `step`; the last
/// point is the largest multiple of `step` that does not pass `to`.
inline std::vector<double> sweep_setpoints(double from, double to, double step) {
    if (!std::isfinite(from) || !std::isfinite(to) || !std::isfinite(step))
        throw std::invalid_argument("sweep range must be finite");
    if (from == to) return {from};
    if (step == 0 || (to - from) / step < 0) throw std::invalid_argument("sweep step must be non-zero and point from 'from' to 'to'");
    const auto n = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9)) + 1;
    if (n > 10'000'000) throw std::invalid_argument("sweep has too many points");
    std::vector<double> s(n);
    for (std::size_t k = 0; k < n; ++k) s[k] = snap_decimal(from + static_cast<double>(k) * step);
    return s;
}

namespace detail {

struct BatchMeans {
    std::size_t n_batches;
    std::size_t per_batch;
    std::vector<double> sums;
    std::size_t count = 0;

    explicit BatchMeans(std::size_t n) : n_batches(std::clamp<std::size_t>(n, 1, 20)), per_batch(n / n_batches), sums(n_batches, 0.0) {}

    void add(double v) {
        const std::size_t b = std::min(count / per_batch, n_batches - 1);
        sums[b] += v;
        ++count;
    }

    double sem() const {
        if (n_batches < 2) return 0.0;
        std::vector<double> means(n_batches);
        double grand = 0.0;
        for (std::size_t b = 0; b < n_batches; ++b) {
            const std::size_t len = b + 1 < n_batches ? per_batch : count - per_batch * (n_batches - 1);
            means[b] = sums[b] / static_cast<double>(len);
            grand += means[b];
        }
        grand /= static_cast<double>(n_batches);
        double ss = 0.0;
        for (double m : means) ss += (m - grand) * (m - grand);
        return std::sqrt(ss / static_cast<double>(n_batches - 1) / static_cast<double>(n_batches));
    }
};

// Monte-Carlo point common to every stochastic sweep.
inline SweepPoint measure_point(const UnitCellConfig& cfg, double drive, const SweepSettings& s, std::uint64_t seed,
                                bool envelope, bool exact = false) {
    const auto lr = level_responses(cfg, drive);
    Rng rng(seed);
    SweepPoint pt;
    pt.setpoint = drive;
    double sum_v = 0.0, sum_i = 0.0, sum_r = 0.0;
    std::size_t n_ap = 0;
    double v_min = lr[0].v_out, v_max = lr[0].v_out;
    bool first = true;
    BatchMeans bm(s.samples_per_point);
    auto visit = [&](Level level) {
        const LevelResponse& r = lr[static_cast<int>(level)];
        sum_v += r.v_out;
        sum_i += r.i;
        sum_r += r.r;
        n_ap += level == Level::AP;
        bm.add(r.v_out);
        if (first) { v_min = v_max = r.v_out; first = false; }
        v_min = std::min(v_min, r.v_out);
        v_max = std::max(v_max, r.v_out);
    };
    if (exact)
        run_exact_chain(cfg, lr, s.dt * static_cast<double>(s.decimation), s.samples_per_point, rng, visit);
    else
        run_chain(cfg, lr, s.dt, s.samples_per_point, s.decimation, rng, visit);
    const auto n = static_cast<double>(s.samples_per_point);
    pt.v_out_mean = sum_v / n;
    pt.i_mean = sum_i / n;
    pt.occupancy_ap = static_cast<double>(n_ap) / n;
    pt.v_out_sem = bm.sem();
    if (envelope) {
        pt.v_out_min = std::min(lr[0].v_out, lr[1].v_out);
        pt.v_out_max = std::max(lr[0].v_out, lr[1].v_out);
    } else {
        pt.v_out_min = v_min;
        pt.v_out_max = v_max;
    }
    // Guard the ordering invariant against summation rounding on pinned points.
    pt.v_out_mean = std::clamp(pt.v_out_mean, pt.v_out_min, pt.v_out_max);
    if (cfg.mode == CellMode::isolated) {
        pt.r_mean = sum_r / n;
        pt.r_analytic = mean_resistance(drive, cfg.applied_field, cfg.smtj);
    }
    return pt;
}

inline void check_sweep_settings(const SweepSettings& s) {
    check_sim_inputs(s.dt, s.decimation);
    if (s.samples_per_point == 0) throw std::invalid_argument("samples_per_point must be at least 1");
}

template <typename Measure>
SweepResult run_sweep(std::string variable, std::string unit, const std::vector<double>& setpoints,
                      const SweepSettings& s, const SmtjParams& smtj, Measure&& measure) {
    SweepResult res;
    res.variable = std::move(variable);
    res.unit = std::move(unit);
    res.samples_per_point = s.samples_per_point;
    res.dt = s.dt;
    res.decimation = s.decimation;
    res.seed = s.seed;
    if (is_coarse_step(s.dt, smtj)) res.warnings.push_back(coarse_step_warning(s.dt, smtj));
    res.points.reserve(setpoints.size());
    for (std::size_t k = 0; k < setpoints.size(); ++k)
        res.points.push_back(measure(setpoints[k], derive_seed(s.seed, k)));
    return res;
}

}  // namespace detail

/// Time-averaged resistance of the bare junction versus applied current.
/// v_out reports the junction voltage i * R. The bias is constant, so each
/// point samples the telegraph process exactly every dt * decimation rather
/// than stepping it; far from balance the short dwell drops below dt and
/// stepping would over-weight it.
inline SweepResult current_sweep(const SmtjParams& smtj, double i_from, double i_to, double i_step, double h,
                                 const SweepSettings& s) {
    detail::check_sweep_settings(s);
    UnitCellConfig cfg = isolated_cell();
    cfg.smtj = smtj;
    cfg.applied_field = h;
    cfg.validate();
    return detail::run_sweep("current", "A", sweep_setpoints(i_from, i_to, i_step), s, smtj,
                             [&](double i, std::uint64_t seed) { return detail::measure_point(cfg, i, s, seed, false, true); });
}

/// Single-NMOS gate sweep. v_out_min / v_out_max are the state-conditional
/// drain voltages (AP and P branches), not observed extremes.
inline SweepResult gate_sweep(const UnitCellConfig& cfg, double v_from, double v_to, double v_step,
                              const SweepSettings& s) {
    if (cfg.mode != CellMode::single_nmos) throw std::invalid_argument("gate_sweep: single_nmos mode required");
    cfg.validate();
    detail::check_sweep_settings(s);
    return detail::run_sweep("v_gate", "V", sweep_setpoints(v_from, v_to, v_step), s, cfg.smtj,
                             [&](double v, std::uint64_t seed) { return detail::measure_point(cfg, v, s, seed, true); });
}

/// Full-stage bias sweep: the p-bit transfer curve.
inline SweepResult bias_sweep(const UnitCellConfig& cfg, double v_from, double v_to, double v_step,
                              const SweepSettings& s) {
    if (cfg.mode != CellMode::full_stage) throw std::invalid_argument("bias_sweep: full_stage mode required");
    cfg.validate();
    detail::check_sweep_settings(s);
    return detail::run_sweep("v_bias", "V", sweep_setpoints(v_from, v_to, v_step), s, cfg.smtj,
                             [&](double v, std::uint64_t seed) { return detail::measure_point(cfg, v, s, seed, false); });
}

/// Supply sweep with both inputs grounded. No current flows, the VTC input
/// follows the supply, and the reported output is the inverter's output-low
/// level at that supply. Deterministic.
inline SweepResult vdd_sweep(const UnitCellConfig& cfg, double v_dd_from, double v_dd_to, double step) {
    if (cfg.mode != CellMode::full_stage) throw std::invalid_argument("vdd_sweep: full_stage mode required");
    cfg.validate();
    SweepResult res;
    res.variable = "v_dd";
    res.unit = "V";
    for (double v_dd : sweep_setpoints(v_dd_from, v_dd_to, step)) {
        if (!(v_dd >= 0)) throw std::invalid_argument("vdd_sweep: supply must be non-negative");
        SweepPoint pt;
        pt.setpoint = v_dd;
        double i = 0.0;
        if (v_dd > 0) {
            const OperatingPoint op = cascode_operating_point(v_dd, 0.0, 0.0, cfg.smtj.r_p, cfg.nmos_bias, *cfg.nmos_cas);
            i = op.i;
        }
        const double v = vol_curve_eval(v_dd, cfg.inverter);
        pt.v_out_mean = pt.v_out_min = pt.v_out_max = v;
        pt.i_mean = i;
        pt.occupancy_ap = p_ap(i, cfg.applied_field, cfg.smtj);
        res.points.push_back(pt);
    }
    return res;
}

}  // namespace pbit

#endif  // PBIT_UNITCELL_HPP
