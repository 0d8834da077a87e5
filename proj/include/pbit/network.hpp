#ifndef PBIT_NETWORK_HPP
#define PBIT_NETWORK_HPP

// Ising networks of p-bits.
//
// Energy convention: E(m) = -sum_{i<j} J_ij m_i m_j - sum_i h_i m_i.
// A p-bit update sets m_i = +1 with probability logistic(2 * beta * I_i),
// I_i = h_i + sum_j J_ij m_j, which is the Gibbs conditional of spin i.
//
// Configurations are encoded as integers with bit i set when m_i = +1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbit/analysis.hpp"
#include "pbit/device.hpp"
#include "pbit/random.hpp"
#include "pbit/unitcell.hpp"

namespace pbit {

struct IsingProblem {
    std::size_t n = 0;
    std::vector<double> j;            // n x n, row-major
    std::vector<double> h;            // n
    std::vector<std::int8_t> clamp;   // n; 0 = free, +-1 = fixed value

    IsingProblem() = default;
    explicit IsingProblem(std::size_t n_) : n(n_), j(n_ * n_, 0.0), h(n_, 0.0), clamp(n_, 0) {}

    double coupling(std::size_t a, std::size_t b) const { return j[a * n + b]; }
    void set_coupling(std::size_t a, std::size_t b, double v) { j[a * n + b] = v; j[b * n + a] = v; }
    bool clamped(std::size_t i) const { return clamp[i] != 0; }

    void validate() const {
        if (n == 0) throw std::invalid_argument("ising: n must be positive");
        if (n > 63) throw std::invalid_argument("ising: at most 63 spins are supported");
        if (j.size() != n * n) throw std::invalid_argument("ising: j must be n x n");
        if (h.size() != n) throw std::invalid_argument("ising: h must have n entries");
        if (clamp.size() != n) throw std::invalid_argument("ising: clamp mask must have n entries");
        for (std::size_t a = 0; a < n; ++a) {
            if (coupling(a, a) != 0.0) throw std::invalid_argument("ising: j must have a zero diagonal");
            if (!std::isfinite(h[a])) throw std::invalid_argument("ising: h must be finite");
            if (clamp[a] != 0 && clamp[a] != 1 && clamp[a] != -1) throw std::invalid_argument("ising: clamps must be +-1");
            for (std::size_t b = 0; b < n; ++b) {
                if (!std::isfinite(coupling(a, b))) throw std::invalid_argument("ising: j must be finite");
                if (std::abs(coupling(a, b) - coupling(b, a)) > 1e-12) throw std::invalid_argument("ising: j must be symmetric");
            }
        }
    }
};

struct SpinState {
    std::vector<std::int8_t> m;
};

inline std::uint64_t encode(const SpinState& s) {
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < s.m.size(); ++i)
        if (s.m[i] > 0) key |= std::uint64_t{1} << i;
    return key;
}

inline SpinState decode(std::uint64_t key, std::size_t n) {
    SpinState s{std::vector<std::int8_t>(n)};
    for (std::size_t i = 0; i < n; ++i) s.m[i] = (key >> i) & 1 ? 1 : -1;
    return s;
}

/// "+-+" style rendering, spin 0 first.
inline std::string spin_string(const SpinState& s) {
    std::string out;
    for (auto v : s.m) out.push_back(v > 0 ? '+' : '-');
    return out;
}

inline double ising_energy(const IsingProblem& p, const SpinState& s) {
    if (s.m.size() != p.n) throw std::invalid_argument("ising_energy: dimension mismatch");
    double e = 0.0;
    for (std::size_t a = 0; a < p.n; ++a) {
        double row = 0.0;
        for (std::size_t b = a + 1; b < p.n; ++b) row += p.coupling(a, b) * s.m[b];
        e -= s.m[a] * (row + p.h[a]);
    }
    return e;
}

inline double local_field(const IsingProblem& p, const SpinState& s, std::size_t i) {
    if (i >= p.n) throw std::out_of_range("local_field: spin index out of range");
    if (s.m.size() != p.n) throw std::invalid_argument("local_field: dimension mismatch");
    double f = p.h[i];
    const double* row = &p.j[i * p.n];
    for (std::size_t b = 0; b < p.n; ++b) f += row[b] * s.m[b];
    return f;
}

/// Target probability of +1 for an update with local field `field`.
inline double update_probability(double field, double beta) noexcept {
    if (field == 0.0) return 0.5;
    return logistic(2.0 * beta * field);
}

/// Inverse of a fitted cell transfer curve: desired probability that the
/// output reads high -> bias voltage. Both orientations are handled; the
/// full-stage cell is decreasing (high output at low bias).
struct BiasMapping {
    SigmoidFit fit;
    double epsilon = 1e-6;

    struct Result {
        double v_bias;
        bool clamped;  // probability or bias had to be clamped into range
    };

    Result operator()(double p_high) const {
        bool clamped = false;
        if (!(p_high > epsilon)) { p_high = epsilon; clamped = true; }
        if (!(p_high < 1.0 - epsilon)) { p_high = 1.0 - epsilon; clamped = true; }
        const double logit = std::log(p_high / (1.0 - p_high));
        double v = fit.decreasing ? fit.x_0 - fit.w * logit : fit.x_0 + fit.w * logit;
        if (v < fit.x_min) { v = fit.x_min; clamped = true; }
        if (v > fit.x_max) { v = fit.x_max; clamped = true; }
        return {v, clamped};
    }

    /// Forward direction of the fitted curve, as a probability.
    double forward(double v_bias) const { return fit.fraction(v_bias); }
};

inline BiasMapping calibrate_bias_mapping(const SigmoidFit& fit) {
    if (!(fit.y_lo < fit.y_hi)) throw std::invalid_argument("calibrate_bias_mapping: fit needs y_lo < y_hi");
    if (!(fit.w > 0) || !std::isfinite(fit.w)) throw std::invalid_argument("calibrate_bias_mapping: fit width must be positive");
    if (!(fit.x_min < fit.x_max)) throw std::invalid_argument("calibrate_bias_mapping: fit has an empty bias range");
    return BiasMapping{fit};
}

/// Behavioral p-bits: Bernoulli draws at the target probability.
struct BehavioralPbits {
    static constexpr const char* name = "behavioral";
    bool draw_high(std::size_t /*spin*/, double target, Rng& rng) { return bernoulli(rng, target); }
};

/// P(output high) of a full-stage cell tabulated over the calibrated bias
/// range, linearly interpolated.
class CellProbabilityTable {
  public:
    CellProbabilityTable(const UnitCellConfig& cfg, double v_from, double v_to, std::size_t points = 2001)
        : v_from_(v_from), v_to_(v_to), values_(points) {
        if (points < 2 || !(v_to > v_from)) throw std::invalid_argument("CellProbabilityTable: bad range");
        for (std::size_t k = 0; k < points; ++k)
            values_[k] = prob_output_high(cfg, v_from + (v_to - v_from) * static_cast<double>(k) / static_cast<double>(points - 1));
    }

    double operator()(double v) const {
        const double t = std::clamp((v - v_from_) / (v_to_ - v_from_), 0.0, 1.0) * static_cast<double>(values_.size() - 1);
        const auto k = std::min(static_cast<std::size_t>(t), values_.size() - 2);
        const double f = t - static_cast<double>(k);
        return values_[k] + f * (values_[k + 1] - values_[k]);
    }

  private:
    double v_from_, v_to_;
    std::vector<double> values_;
};

/// Circuit p-bits: the target probability is mapped to a bias voltage
/// through the calibration, and the cell itself decides the output.
///
/// quasi_static draws from the cell's stationary output probability at that
/// bias. transient keeps one junction per spin and simulates it for
/// `hold_steps` steps of `dt` at the new bias before reading the output; it
/// is several orders of magnitude slower.
class CircuitPbits {
  public:
    enum class Fidelity { quasi_static, transient };

    CircuitPbits(UnitCellConfig cfg, BiasMapping mapping, Fidelity fidelity = Fidelity::quasi_static,
                 std::size_t hold_steps = 250, double dt = 20e-6)
        : cfg_(std::move(cfg)), mapping_(std::move(mapping)), fidelity_(fidelity), hold_steps_(hold_steps), dt_(dt) {
        cfg_.validate();
        if (cfg_.mode != CellMode::full_stage) throw std::invalid_argument("CircuitPbits: full_stage cell required");
        if (fidelity_ == Fidelity::quasi_static)
            table_.emplace(cfg_, mapping_.fit.x_min, mapping_.fit.x_max);
        else if (!(dt_ > 0) || hold_steps_ == 0)
            throw std::invalid_argument("CircuitPbits: transient mode needs dt > 0 and hold_steps >= 1");
    }

    const char* name() const { return fidelity_ == Fidelity::quasi_static ? "circuit" : "circuit-transient"; }
    std::size_t clamp_events() const { return clamp_events_; }

    bool draw_high(std::size_t spin, double target, Rng& rng) {
        const auto [v_bias, clamped] = mapping_(target);
        clamp_events_ += clamped;
        if (fidelity_ == Fidelity::quasi_static) return bernoulli(rng, (*table_)(v_bias));

        if (spin >= levels_.size()) levels_.resize(spin + 1, Level::P);
        const auto lr = level_responses(cfg_, v_bias);
        const double q_p = flip_probability(dwell_means(lr[0].i, cfg_.applied_field, cfg_.smtj).tau_p, dt_);
        const double q_ap = flip_probability(dwell_means(lr[1].i, cfg_.applied_field, cfg_.smtj).tau_ap, dt_);
        Level& level = levels_[spin];
        for (std::size_t s = 0; s < hold_steps_; ++s)
            if (uniform01(rng) < (level == Level::P ? q_p : q_ap)) level = flipped(level);
        const double vol = vol_curve_eval(cfg_.v_dd, cfg_.inverter);
        return lr[static_cast<int>(level)].v_out > 0.5 * (cfg_.v_dd + vol);
    }

  private:
    UnitCellConfig cfg_;
    BiasMapping mapping_;
    Fidelity fidelity_;
    std::size_t hold_steps_;
    double dt_;
    std::optional<CellProbabilityTable> table_;
    std::vector<Level> levels_;
    std::size_t clamp_events_ = 0;
};

/// Resamples spin i. Clamped spins are left untouched.
template <typename Pbits>
void pbit_update(const IsingProblem& p, SpinState& s, std::size_t i, double beta, Rng& rng, Pbits& pbits) {
    if (i >= p.n) throw std::out_of_range("pbit_update: spin index out of range");
    if (p.clamped(i)) return;
    const double target = update_probability(local_field(p, s, i), beta);
    s.m[i] = pbits.draw_high(i, target, rng) ? 1 : -1;
}

struct SampleOptions {
    std::optional<double> beta_end;  // linear ramp from beta to beta_end over the run
    bool random_order = false;
};

struct SampleStats {
    std::map<std::uint64_t, std::uint64_t> histogram;
    std::vector<double> energy;  // after each sweep
    std::size_t sweeps = 0;
    std::uint64_t seed = 0;
    std::string mode;
};

inline double schedule_beta(double beta, const SampleOptions& opt, std::size_t sweep, std::size_t n_sweeps) {
    if (!opt.beta_end || n_sweeps < 2) return beta;
    return beta + (*opt.beta_end - beta) * static_cast<double>(sweep) / static_cast<double>(n_sweeps - 1);
}

/// Sequential sweeps over all free spins, recording the configuration after
/// every sweep. Free spins start from independent fair coin flips.
template <typename Pbits>
SampleStats sample(const IsingProblem& p, double beta, std::size_t n_sweeps, std::uint64_t seed, Pbits& pbits,
                   const SampleOptions& opt = {}) {
    p.validate();
    if (n_sweeps == 0) throw std::invalid_argument("sample: n_sweeps must be at least 1");
    if (!(beta >= 0) || (opt.beta_end && !(*opt.beta_end >= 0)))
        throw std::invalid_argument("sample: beta must be non-negative");

    Rng rng(seed);
    SpinState s{std::vector<std::int8_t>(p.n)};
    for (std::size_t i = 0; i < p.n; ++i) s.m[i] = p.clamped(i) ? p.clamp[i] : (bernoulli(rng, 0.5) ? 1 : -1);

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < p.n; ++i)
        if (!p.clamped(i)) order.push_back(i);

    SampleStats st;
    st.sweeps = n_sweeps;
    st.seed = seed;
    if constexpr (requires { Pbits::name; }) st.mode = Pbits::name;
    else st.mode = pbits.name();
    st.energy.reserve(n_sweeps);
    for (std::size_t sweep = 0; sweep < n_sweeps; ++sweep) {
        const double b = schedule_beta(beta, opt, sweep, n_sweeps);
        if (opt.random_order) {
            for (std::size_t k = order.size(); k > 1; --k) {
                const auto r = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(k));
                std::swap(order[k - 1], order[std::min(r, k - 1)]);
            }
        }
        for (std::size_t i : order) pbit_update(p, s, i, b, rng, pbits);
        ++st.histogram[encode(s)];
        st.energy.push_back(ising_energy(p, s));
    }
    return st;
}

/// Exact Boltzmann distribution indexed by configuration code, restricted
/// to configurations that honour the clamp mask.
inline std::vector<double> brute_force_boltzmann(const IsingProblem& p, double beta) {
    p.validate();
    if (p.n > 20) throw std::invalid_argument("brute_force_boltzmann: n > 20 refused");
    const std::uint64_t count = std::uint64_t{1} << p.n;
    std::vector<double> logw(count, -std::numeric_limits<double>::infinity());
    double max_lw = -std::numeric_limits<double>::infinity();
    for (std::uint64_t key = 0; key < count; ++key) {
        const SpinState s = decode(key, p.n);
        bool ok = true;
        for (std::size_t i = 0; i < p.n && ok; ++i) ok = !p.clamped(i) || s.m[i] == p.clamp[i];
        if (!ok) continue;
        logw[key] = -beta * ising_energy(p, s);
        max_lw = std::max(max_lw, logw[key]);
    }
    std::vector<double> prob(count, 0.0);
    double z = 0.0;
    for (std::uint64_t key = 0; key < count; ++key)
        if (std::isfinite(logw[key])) z += (prob[key] = std::exp(logw[key] - max_lw));
    for (double& q : prob) q /= z;
    return prob;
}

inline double total_variation(const std::map<std::uint64_t, std::uint64_t>& histogram, const std::vector<double>& exact) {
    std::uint64_t total = 0;
    for (const auto& [key, c] : histogram) total += c;
    if (total == 0) throw std::invalid_argument("total_variation: empty histogram");
    double tv = 0.0;
    std::vector<double> emp(exact.size(), 0.0);
    for (const auto& [key, c] : histogram) {
        if (key >= exact.size()) throw std::invalid_argument("total_variation: state outside the oracle's range");
        emp[key] = static_cast<double>(c) / static_cast<double>(total);
    }
    for (std::size_t k = 0; k < exact.size(); ++k) tv += std::abs(emp[k] - exact[k]);
    return 0.5 * tv;
}

/// Configuration codes ordered by decreasing count (ties by code).
inline std::vector<std::uint64_t> ranked_states(const std::map<std::uint64_t, std::uint64_t>& histogram) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> v(histogram.begin(), histogram.end());
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::uint64_t> out;
    for (const auto& [key, c] : v) out.push_back(key);
    return out;
}

}  // namespace pbit

#endif  // PBIT_NETWORK_HPP
