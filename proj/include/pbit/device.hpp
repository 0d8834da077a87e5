#ifndef PBIT_DEVICE_HPP
#define PBIT_DEVICE_HPP

// Superparamagnetic tunnel junction as a two-state continuous-time Markov
// process. The free layer sits either parallel (P, low resistance) or
// antiparallel (AP, high resistance) to the reference layer. Current and
// easy-axis field enter only through the dimensionless activation
//
//     x = (i + k_h * h - i_50) / i_w
//
// and the dwell times follow the symmetric exponential law
//
//     tau_p = tau_n * exp(-x),   tau_ap = tau_n * exp(+x),
//
// so the stationary AP occupancy is logistic(2x).

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbit/random.hpp"

namespace pbit {

struct SmtjParams {
    double r_p = 2.5e3;     // ohm
    double tmr = 1.0;       // r_ap / r_p - 1
    double tau_n = 1e-3;    // s, dwell time at the balance point
    double i_50 = -15e-6;   // A, balance current at zero field
    double i_w = 10e-6;     // A, activation width
    double k_h = 1e-2;      // A/T, equivalent current per unit field

    double r_ap() const noexcept { return r_p * (1.0 + tmr); }

    friend bool operator==(const SmtjParams&, const SmtjParams&) = default;

    void validate() const {
        if (!(r_p > 0) || !std::isfinite(r_p)) throw std::invalid_argument("device.r_p must be positive");
        if (!(tmr > 0) || !std::isfinite(tmr)) throw std::invalid_argument("device.tmr must be positive");
        if (!(tau_n > 0) || !std::isfinite(tau_n)) throw std::invalid_argument("device.tau_n must be positive");
        if (!std::isfinite(i_50)) throw std::invalid_argument("device.i_50 must be finite");
        if (!(i_w > 0) || !std::isfinite(i_w)) throw std::invalid_argument("device.i_w must be positive");
        if (!std::isfinite(k_h)) throw std::invalid_argument("device.k_h must be finite");
    }
};

enum class Level : std::uint8_t { P = 0, AP = 1 };

constexpr Level flipped(Level l) noexcept { return l == Level::P ? Level::AP : Level::P; }

struct SmtjState {
    Level level = Level::P;
    double time_in_state = 0.0;
};

struct TelegraphSample {
    double resistance;
    Level level;
};

/// Uniformly sampled resistance record at a constant (current, field) bias.
struct TelegraphTrace {
    double dt = 0.0;
    double current = 0.0;
    double field = 0.0;
    std::vector<TelegraphSample> samples;
    std::vector<std::string> warnings;
};

/// Numerically stable logistic function.
inline double logistic(double z) noexcept {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double effective_bias(double i, double h, const SmtjParams& p) noexcept {
    return (i + p.k_h * h - p.i_50) / p.i_w;
}

inline double p_ap(double i, double h, const SmtjParams& p) noexcept {
    return logistic(2.0 * effective_bias(i, h, p));
}

struct DwellMeans {
    double tau_p;
    double tau_ap;
};

inline DwellMeans dwell_means(double i, double h, const SmtjParams& p) noexcept {
    const double x = effective_bias(i, h, p);
    return {p.tau_n * std::exp(-x), p.tau_n * std::exp(x)};
}

inline double resistance(Level l, const SmtjParams& p) noexcept {
    return l == Level::P ? p.r_p : p.r_ap();
}

inline double mean_resistance(double i, double h, const SmtjParams& p) noexcept {
    return p.r_p + (p.r_ap() - p.r_p) * p_ap(i, h, p);
}

/// Probability that a memoryless state with mean dwell `tau` ends within `dt`.
inline double flip_probability(double tau, double dt) noexcept {
    return -std::expm1(-dt / tau);
}

/// Steps coarser than tau_n / 20 resolve the telegraph process poorly.
inline bool is_coarse_step(double dt, const SmtjParams& p) noexcept { return dt > p.tau_n / 20.0; }

inline std::string coarse_step_warning(double dt, const SmtjParams& p) {
    return "time step " + std::to_string(dt) + " s exceeds tau_n/20 = " + std::to_string(p.tau_n / 20.0) + " s";
}

/// Advances the device by `dt` with the bias held constant over the step.
/// Consumes exactly one uniform variate.
inline SmtjState step(SmtjState s, double i, double h, double dt, Rng& rng, const SmtjParams& p) {
    if (!(dt > 0)) throw std::invalid_argument("step: dt must be positive");
    const DwellMeans tau = dwell_means(i, h, p);
    const double q = flip_probability(s.level == Level::P ? tau.tau_p : tau.tau_ap, dt);
    if (uniform01(rng) < q) {
        s.level = flipped(s.level);
        s.time_in_state = 0.0;
    } else {
        s.time_in_state += dt;
    }
    return s;
}

/// Number of whole steps of size dt that fit in `duration`, tolerant to
/// rounding in the quotient (duration == 3 * dt gives 3).
inline std::size_t step_count(double duration, double dt) {
    return static_cast<std::size_t>(std::floor(duration / dt * (1.0 + 1e-12)));
}

/// Constant-bias telegraph trace. The initial level is drawn from the
/// stationary distribution, then each subsequent sample is one step() later.
inline TelegraphTrace generate_trace(double i, double h, double duration, double dt, std::uint64_t seed,
                                     const SmtjParams& p) {
    p.validate();
    if (!(dt > 0)) throw std::invalid_argument("generate_trace: dt must be positive");
    if (!(duration >= dt)) throw std::invalid_argument("generate_trace: duration shorter than one step");
    const std::size_t n = step_count(duration, dt);
    if (n == 0) throw std::invalid_argument("generate_trace: empty trace");

    TelegraphTrace trace;
    trace.dt = dt;
    trace.current = i;
    trace.field = h;
    if (is_coarse_step(dt, p)) trace.warnings.push_back(coarse_step_warning(dt, p));
    trace.samples.reserve(n);

    Rng rng(seed);
    SmtjState s;
    s.level = bernoulli(rng, p_ap(i, h, p)) ? Level::AP : Level::P;
    for (std::size_t k = 0; k < n; ++k) {
        trace.samples.push_back({resistance(s.level, p), s.level});
        if (k + 1 < n) s = step(s, i, h, dt, rng, p);
    }
    return trace;
}

}  // namespace pbit

#endif  // PBIT_DEVICE_HPP
