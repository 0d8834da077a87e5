#ifndef PBIT_CIRCUIT_HPP
#define PBIT_CIRCUIT_HPP

// Quasi-static DC models of the CMOS stages around the junction.
//
// Series stage:    v_dd -- R -- (v_out) -- M[gate] -- gnd
// Cascode stage:   v_dd -- R -- (v_out) -- M_cas[v_cas] -- (v_mid) -- M_bias[v_bias] -- gnd
//
// v_out of the cascode stage is the input of the variable threshold
// controller (VTC), whose output drives the final inverter.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace pbit {

/// Square-law NMOS. `k` is the transconductance factor of a 1 um wide
/// device; the effective factor scales linearly with `w` (um).
struct NmosParams {
    double v_t = 0.4;      // V
    double k = 0.5e-3;     // A/V^2 per um of width
    double w = 1.0;        // um
    double lambda = 0.1;   // 1/V

    double k_w() const noexcept { return k * w; }

    friend bool operator==(const NmosParams&, const NmosParams&) = default;

    void validate() const {
        if (!std::isfinite(v_t)) throw std::invalid_argument("nmos.v_t must be finite");
        if (!(k > 0) || !std::isfinite(k)) throw std::invalid_argument("nmos.k must be positive");
        if (!(w > 0) || !std::isfinite(w)) throw std::invalid_argument("nmos.w must be positive");
        if (!(lambda >= 0) || !std::isfinite(lambda)) throw std::invalid_argument("nmos.lambda must be non-negative");
    }
};

enum class Region { cutoff, triode, saturation };

inline const char* to_string(Region r) noexcept {
    switch (r) {
        case Region::cutoff: return "cutoff";
        case Region::triode: return "triode";
        case Region::saturation: return "saturation";
    }
    return "?";
}

inline Region region(double v_gs, double v_ds, const NmosParams& p) noexcept {
    if (v_gs <= p.v_t) return Region::cutoff;
    return v_ds < v_gs - p.v_t ? Region::triode : Region::saturation;
}

/// Drain current. Channel-length modulation multiplies both branches so the
/// characteristic stays continuous at v_ds = v_gs - v_t.
inline double nmos_current(double v_gs, double v_ds, const NmosParams& p) {
    if (v_ds < 0) throw std::invalid_argument("nmos_current: v_ds must be non-negative");
    const double ov = v_gs - p.v_t;
    if (ov <= 0) return 0.0;
    const double clm = 1.0 + p.lambda * v_ds;
    if (v_ds < ov) return p.k_w() * (ov * v_ds - 0.5 * v_ds * v_ds) * clm;
    return 0.5 * p.k_w() * ov * ov * clm;
}

struct OperatingPoint {
    double v_out = 0.0;
    std::optional<double> v_mid;  // cascode internal node
    double i = 0.0;
    Region bias_region = Region::cutoff;
    std::optional<Region> cas_region;
};

struct SolverTolerance {
    double voltage = 1e-6;   // V, final bracket width
    double current = 1e-10;  // A, residual at the returned point
};

class solver_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

// Root of a strictly decreasing residual on [lo, hi] with f(lo) >= 0 >= f(hi).
// Stops once the bracket is narrower than tol.voltage and the residual at the
// midpoint is below tol.current, or when the bracket cannot shrink further.
template <typename F>
double bisect_decreasing(F&& f, double lo, double hi, const SolverTolerance& tol) {
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (hi - lo <= tol.voltage && std::abs(fm) <= tol.current) return mid;
        if (mid <= lo || mid >= hi) return mid;
        if (fm > 0) lo = mid; else hi = mid;
    }
    return mid;
}

// Series stage with its source at v_src: solve (v_top - v)/r = I(v_g - v_src, v - v_src).
inline double solve_load_node(double v_top, double v_src, double v_g, double r, const NmosParams& p,
                              const SolverTolerance& tol) {
    if (v_top <= v_src) return v_top;
    if (v_g - v_src <= p.v_t) return v_top;
    auto f = [&](double v) { return (v_top - v) / r - nmos_current(v_g - v_src, v - v_src, p); };
    return bisect_decreasing(f, v_src, v_top, tol);
}

}  // namespace detail

inline OperatingPoint series_operating_point(double v_dd, double v_gate, double r, const NmosParams& p,
                                             const SolverTolerance& tol = {}) {
    if (!(v_dd > 0)) throw std::invalid_argument("series_operating_point: v_dd must be positive");
    if (!(r > 0)) throw std::invalid_argument("series_operating_point: r must be positive");
    p.validate();
    OperatingPoint op;
    if (v_gate <= p.v_t) {
        op.v_out = v_dd;
        return op;
    }
    auto f = [&](double v) { return (v_dd - v) / r - nmos_current(v_gate, v, p); };
    if (f(0.0) < 0 || f(v_dd) > 0) throw solver_error("series_operating_point: residual does not bracket a root");
    op.v_out = detail::bisect_decreasing(f, 0.0, v_dd, tol);
    op.i = nmos_current(v_gate, op.v_out, p);
    op.bias_region = region(v_gate, op.v_out, p);
    return op;
}

/// Two-node cascode solve: outer bisection on v_mid, inner on v_out.
inline OperatingPoint cascode_operating_point(double v_dd, double v_bias, double v_cas, double r,
                                              const NmosParams& p_bias, const NmosParams& p_cas,
                                              const SolverTolerance& tol = {}) {
    if (!(v_dd > 0)) throw std::invalid_argument("cascode_operating_point: v_dd must be positive");
    if (!(r > 0)) throw std::invalid_argument("cascode_operating_point: r must be positive");
    p_bias.validate();
    p_cas.validate();

    OperatingPoint op;
    if (v_bias <= p_bias.v_t || v_cas <= p_cas.v_t) {
        // No path to ground. M_cas sits at its own cutoff edge (or the mid
        // node is grounded by M_bias when only M_cas is off).
        op.v_out = v_dd;
        op.v_mid = v_bias <= p_bias.v_t ? std::clamp(v_cas - p_cas.v_t, 0.0, v_dd) : 0.0;
        op.cas_region = Region::cutoff;
        op.bias_region = region(v_bias, *op.v_mid, p_bias);
        return op;
    }

    // v_out moves by r * g_ds for every volt of v_mid, so with M_bias in
    // triode a v_mid bracket of tol.voltage is not enough: the outer loop
    // also waits for v_out to settle, and the inner solve runs tighter so
    // its error cannot flip the sign of the outer residual.
    const SolverTolerance inner{tol.voltage * 1e-3, tol.current * 1e-3};
    auto load_node = [&](double v_mid) { return detail::solve_load_node(v_dd, v_mid, v_cas, r, p_cas, inner); };
    auto g = [&](double v_mid, double v_out) { return (v_dd - v_out) / r - nmos_current(v_bias, v_mid, p_bias); };

    double lo = 0.0, hi = v_dd;
    double out_lo = load_node(lo), out_hi = load_node(hi);
    if (g(lo, out_lo) < 0 || g(hi, out_hi) > 0) throw solver_error("cascode_operating_point: residual does not bracket a root");
    double v_mid = lo, v_out = out_lo;
    for (int it = 0; it < 200; ++it) {
        v_mid = 0.5 * (lo + hi);
        v_out = load_node(v_mid);
        const double gm = g(v_mid, v_out);
        if (hi - lo <= tol.voltage && std::abs(out_lo - out_hi) <= tol.voltage && std::abs(gm) <= tol.current) break;
        if (v_mid <= lo || v_mid >= hi) break;
        if (gm > 0) {
            lo = v_mid;
            out_lo = v_out;
        } else {
            hi = v_mid;
            out_hi = v_out;
        }
    }
    op.v_out = v_out;
    op.v_mid = v_mid;
    op.i = nmos_current(v_bias, v_mid, p_bias);
    op.bias_region = region(v_bias, v_mid, p_bias);
    op.cas_region = region(v_cas - v_mid, v_out - v_mid, p_cas);
    return op;
}

/// Programmable-threshold inverting comparator. Five thresholds,
/// 0.7 V to 1.1 V in 100 mV steps.
struct VtcParams {
    int threshold_index = 4;
    double v_dd = 1.8;
    double transition_width = 0.0;  // V; 0 gives a hard comparator

    double v_th() const noexcept { return 0.7 + 0.1 * threshold_index; }

    void validate() const {
        if (threshold_index < 0 || threshold_index > 4)
            throw std::invalid_argument("vtc.threshold_index must be in 0..4");
        if (!(v_dd > 0)) throw std::invalid_argument("vtc.v_dd must be positive");
        if (!(transition_width >= 0) || !std::isfinite(transition_width))
            throw std::invalid_argument("vtc.transition_width must be non-negative");
    }
};

/// An input exactly at threshold counts as high (output 0) for the hard comparator.
inline double vtc_output(double v_in, const VtcParams& p) {
    if (!(v_in >= 0 && v_in <= p.v_dd)) throw std::invalid_argument("vtc_output: input outside [0, v_dd]");
    const double v_th = p.v_th();
    const double w = p.transition_width;
    if (w == 0.0) return v_in >= v_th ? 0.0 : p.v_dd;
    if (v_in <= v_th - 0.5 * w) return p.v_dd;
    if (v_in >= v_th + 0.5 * w) return 0.0;
    return p.v_dd * (v_th + 0.5 * w - v_in) / w;
}

/// Output-low level of the inverter as a function of its supply, given as
/// (v_dd, v_ol) breakpoints. The output-high level is always v_dd.
struct InverterParams {
    std::vector<std::pair<double, double>> vol_curve{{0.8, 0.0}, {1.8, 0.45}};

    friend bool operator==(const InverterParams&, const InverterParams&) = default;

    void validate() const {
        if (vol_curve.empty()) throw std::invalid_argument("inverter.vol_curve must not be empty");
        if (vol_curve.front().second != 0.0)
            throw std::invalid_argument("inverter.vol_curve must start at v_ol = 0");
        for (std::size_t k = 0; k < vol_curve.size(); ++k) {
            const auto [vdd, vol] = vol_curve[k];
            if (!std::isfinite(vdd) || !std::isfinite(vol) || vol < 0 || vol > vdd)
                throw std::invalid_argument("inverter.vol_curve: v_ol must lie in [0, v_dd]");
            if (k > 0 && !(vdd > vol_curve[k - 1].first))
                throw std::invalid_argument("inverter.vol_curve: breakpoints must be strictly increasing");
            if (k > 0 && vol < vol_curve[k - 1].second)
                throw std::invalid_argument("inverter.vol_curve: v_ol must be non-decreasing");
        }
    }
};

/// Piecewise-linear interpolation of the output-low curve, flat beyond the ends.
inline double vol_curve_eval(double v_dd, const InverterParams& p) {
    const auto& c = p.vol_curve;
    if (c.empty()) return 0.0;
    if (v_dd <= c.front().first) return c.front().second;
    if (v_dd >= c.back().first) return c.back().second;
    auto hi = std::upper_bound(c.begin(), c.end(), v_dd, [](double v, const auto& bp) { return v < bp.first; });
    auto lo = std::prev(hi);
    const double t = (v_dd - lo->first) / (hi->first - lo->first);
    return lo->second + t * (hi->second - lo->second);
}

/// Input low gives v_dd, input high gives vol(v_dd); linear in between.
inline double inverter_output(double v_in, const InverterParams& p, double v_dd) {
    if (!(v_in >= 0 && v_in <= v_dd)) throw std::invalid_argument("inverter_output: input outside [0, v_dd]");
    const double vol = vol_curve_eval(v_dd, p);
    if (v_in == 0.0) return v_dd;
    if (v_in == v_dd) return vol;
    return v_dd - (v_dd - vol) * (v_in / v_dd);
}

}  // namespace pbit

#endif  // PBIT_CIRCUIT_HPP
