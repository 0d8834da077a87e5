#ifndef PBIT_ANALYSIS_HPP
#define PBIT_ANALYSIS_HPP

// Telegraph-trace statistics and sigmoid transfer-curve fitting.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbit/device.hpp"

namespace pbit {

/// Two-level detection with hysteresis. The state goes high above
/// `theta_hi`, low below `theta_lo`, and holds in between. The first sample
/// is classified against the midpoint of the two thresholds.
inline std::vector<std::uint8_t> digitize(std::span<const double> trace, double theta_lo, double theta_hi) {
    if (!(theta_lo < theta_hi)) throw std::invalid_argument("digitize: theta_lo must be below theta_hi");
    std::vector<std::uint8_t> out;
    out.reserve(trace.size());
    if (trace.empty()) return out;
    std::uint8_t state = trace.front() >= 0.5 * (theta_lo + theta_hi) ? 1 : 0;
    for (double v : trace) {
        if (v > theta_hi) state = 1;
        else if (v < theta_lo) state = 0;
        out.push_back(state);
    }
    return out;
}

/// Hysteresis thresholds at 40 % and 60 % of the observed level span.
inline std::pair<double, double> default_thresholds(std::span<const double> trace) {
    if (trace.empty()) throw std::invalid_argument("default_thresholds: empty trace");
    const auto [lo, hi] = std::minmax_element(trace.begin(), trace.end());
    const double span = *hi - *lo;
    if (!(span > 0)) throw std::invalid_argument("default_thresholds: trace has a single level");
    return {*lo + 0.4 * span, *lo + 0.6 * span};
}

struct DwellStats {
    std::vector<double> dwells_high;
    std::vector<double> dwells_low;
    double mean_high = std::numeric_limits<double>::quiet_NaN();  // NaN without a complete high dwell
    double mean_low = std::numeric_limits<double>::quiet_NaN();
    std::size_t transition_count = 0;
};

/// Run-length dwell times. The first and last runs are censored and left
/// out. Returns nullopt when there are fewer than three runs, i.e. no
/// complete dwell at all.
inline std::optional<DwellStats> dwell_times(std::span<const std::uint8_t> seq, double dt) {
    if (seq.empty()) throw std::invalid_argument("dwell_times: empty sequence");
    if (!(dt > 0)) throw std::invalid_argument("dwell_times: dt must be positive");

    std::vector<std::pair<std::uint8_t, std::size_t>> runs;
    for (std::uint8_t v : seq) {
        const std::uint8_t b = v ? 1 : 0;
        if (runs.empty() || runs.back().first != b) runs.push_back({b, 1});
        else ++runs.back().second;
    }
    if (runs.size() < 3) return std::nullopt;

    DwellStats st;
    st.transition_count = runs.size() - 1;
    for (std::size_t k = 1; k + 1 < runs.size(); ++k) {
        const double d = static_cast<double>(runs[k].second) * dt;
        (runs[k].first ? st.dwells_high : st.dwells_low).push_back(d);
    }
    auto mean = [](const std::vector<double>& v) {
        return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                         : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    st.mean_high = mean(st.dwells_high);
    st.mean_low = mean(st.dwells_low);
    return st;
}

inline double occupancy(std::span<const std::uint8_t> seq) {
    if (seq.empty()) throw std::invalid_argument("occupancy: empty sequence");
    const auto high = std::count_if(seq.begin(), seq.end(), [](std::uint8_t v) { return v != 0; });
    return static_cast<double>(high) / static_cast<double>(seq.size());
}

/// y = y_lo + (y_hi - y_lo) * logistic(+-(x - x_0) / w), with the minus sign
/// when `decreasing`. Always y_lo < y_hi and w > 0.
struct SigmoidFit {
    double y_lo = 0.0;
    double y_hi = 1.0;
    double x_0 = 0.0;
    double w = 1.0;
    bool decreasing = false;
    double residual_r2 = 0.0;
    double x_min = 0.0;  // range of the fitted data
    double x_max = 0.0;
    int iterations = 0;

    /// Fraction of the way from y_lo to y_hi at x.
    double fraction(double x) const noexcept {
        const double z = (x - x_0) / w;
        return logistic(decreasing ? -z : z);
    }
    double operator()(double x) const noexcept { return y_lo + (y_hi - y_lo) * fraction(x); }
};

class sigmoid_fit_error : public std::runtime_error {
  public:
    sigmoid_fit_error(const std::string& what, std::optional<SigmoidFit> best = std::nullopt)
        : std::runtime_error(what), best_so_far(std::move(best)) {}
    std::optional<SigmoidFit> best_so_far;
};

namespace detail {

struct SigmoidModel {
    double a, b, x0, w;  // y = a + b * logistic((x - x0) / w), w signed
};

inline double sse(const SigmoidModel& m, std::span<const double> xs, std::span<const double> ys) {
    double s = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double r = m.a + m.b * logistic((xs[k] - m.x0) / m.w) - ys[k];
        s += r * r;
    }
    return s;
}

// Best (a, b) for fixed (x0, w): ordinary linear least squares.
inline SigmoidModel linear_part(double x0, double w, std::span<const double> xs, std::span<const double> ys) {
    double n = 0, s = 0, ss = 0, y = 0, sy = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double g = logistic((xs[k] - x0) / w);
        n += 1; s += g; ss += g * g; y += ys[k]; sy += g * ys[k];
    }
    const double det = n * ss - s * s;
    if (std::abs(det) < 1e-14 * n * n) return {y / n, 0.0, x0, w};
    return {(ss * y - s * sy) / det, (n * sy - s * y) / det, x0, w};
}

// Solves the 4x4 system A d = g in place by Gaussian elimination with
// partial pivoting. Returns false when singular.
inline bool solve4(std::array<std::array<double, 4>, 4> a, std::array<double, 4> g, std::array<double, 4>& d) {
    for (int c = 0; c < 4; ++c) {
        int piv = c;
        for (int r = c + 1; r < 4; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (!(std::abs(a[piv][c]) > 0)) return false;
        std::swap(a[piv], a[c]);
        std::swap(g[piv], g[c]);
        for (int r = c + 1; r < 4; ++r) {
            const double f = a[r][c] / a[c][c];
            for (int k = c; k < 4; ++k) a[r][k] -= f * a[c][k];
            g[r] -= f * g[c];
        }
    }
    for (int r = 3; r >= 0; --r) {
        double v = g[r];
        for (int k = r + 1; k < 4; ++k) v -= a[r][k] * d[k];
        d[r] = v / a[r][r];
    }
    return true;
}

}  // namespace detail

/// Least-squares logistic fit. A coarse grid over (x_0, w), with the
/// amplitudes solved linearly at every node, seeds a Levenberg-Marquardt
/// refinement of all four parameters.
inline SigmoidFit fit_sigmoid(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("fit_sigmoid: xs and ys differ in length");
    if (xs.size() < 5) throw std::invalid_argument("fit_sigmoid: at least 5 points required");
    for (std::size_t k = 0; k < xs.size(); ++k)
        if (!std::isfinite(xs[k]) || !std::isfinite(ys[k])) throw std::invalid_argument("fit_sigmoid: non-finite data");
    const bool up = xs[1] > xs[0];
    for (std::size_t k = 1; k < xs.size(); ++k)
        if (up ? !(xs[k] > xs[k - 1]) : !(xs[k] < xs[k - 1]))
            throw std::invalid_argument("fit_sigmoid: xs must be strictly monotone");

    const auto [ymin_it, ymax_it] = std::minmax_element(ys.begin(), ys.end());
    const double y_span = *ymax_it - *ymin_it;
    const double y_scale = std::max({1.0, std::abs(*ymin_it), std::abs(*ymax_it)});
    if (!(y_span > 1e-12 * y_scale)) throw sigmoid_fit_error("fit_sigmoid: degenerate data (constant ys)");

    const double x_lo = std::min(xs.front(), xs.back());
    const double x_hi = std::max(xs.front(), xs.back());
    const double x_span = x_hi - x_lo;
    const double y_mean = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
    double ss_tot = 0.0;
    for (double y : ys) ss_tot += (y - y_mean) * (y - y_mean);

    detail::SigmoidModel best{};
    double best_sse = std::numeric_limits<double>::infinity();
    constexpr int kCentres = 61, kWidths = 41;
    for (int c = 0; c < kCentres; ++c) {
        const double x0 = x_lo + x_span * c / (kCentres - 1);
        for (int k = 0; k < kWidths; ++k) {
            const double mag = x_span * std::pow(10.0, -3.0 + 3.0 * k / (kWidths - 1));
            for (double sign : {1.0, -1.0}) {
                const auto m = detail::linear_part(x0, sign * mag, xs, ys);
                const double s = detail::sse(m, xs, ys);
                if (s < best_sse) { best_sse = s; best = m; }
            }
        }
    }

    // Levenberg-Marquardt on (a, b, x0, u) with w = sign * exp(u).
    const double w_sign = best.w < 0 ? -1.0 : 1.0;
    std::array<double, 4> theta{best.a, best.b, best.x0, std::log(std::abs(best.w))};
    auto model = [&](const std::array<double, 4>& t) {
        return detail::SigmoidModel{t[0], t[1], t[2], w_sign * std::exp(t[3])};
    };
    double cur = best_sse;
    double mu = 1e-3;
    bool converged = false;
    int it = 0;
    const int max_iter = 1000;
    for (; it < max_iter && !converged; ++it) {
        if (cur <= 1e-30 * std::max(ss_tot, 1e-300)) { converged = true; break; }
        const auto m = model(theta);
        std::array<std::array<double, 4>, 4> jtj{};
        std::array<double, 4> jtr{};
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const double z = (xs[k] - m.x0) / m.w;
            const double g = logistic(z);
            const double dg = g * (1.0 - g);
            const std::array<double, 4> jac{1.0, g, -m.b * dg / m.w, -m.b * dg * z};
            const double r = m.a + m.b * g - ys[k];
            for (int i = 0; i < 4; ++i) {
                jtr[i] += jac[i] * r;
                for (int j = 0; j < 4; ++j) jtj[i][j] += jac[i] * jac[j];
            }
        }
        bool accepted = false;
        while (mu < 1e20) {
            auto a = jtj;
            std::array<double, 4> rhs{};
            for (int i = 0; i < 4; ++i) {
                a[i][i] += mu * std::max(jtj[i][i], 1e-300);
                rhs[i] = -jtr[i];
            }
            std::array<double, 4> d{};
            if (!detail::solve4(a, rhs, d)) { mu *= 10; continue; }
            std::array<double, 4> trial{};
            for (int i = 0; i < 4; ++i) trial[i] = theta[i] + d[i];
            const double s = detail::sse(model(trial), xs, ys);
            if (std::isfinite(s) && s < cur) {
                const bool tiny = std::abs(d[0]) <= 1e-13 * y_span && std::abs(d[1]) <= 1e-13 * y_span &&
                                  std::abs(d[2]) <= 1e-13 * x_span && std::abs(d[3]) <= 1e-13;
                theta = trial;
                const double prev = cur;
                cur = s;
                mu = std::max(mu / 10, 1e-12);
                accepted = true;
                if (tiny || prev - s <= 1e-15 * prev) converged = true;
                break;
            }
            mu *= 10;
        }
        // No descent direction left at working precision: a stationary point.
        if (!accepted) converged = true;
    }

    const auto m = model(theta);
    SigmoidFit fit;
    fit.x_0 = m.x0;
    fit.x_min = x_lo;
    fit.x_max = x_hi;
    fit.iterations = it;
    double w_signed = m.w;
    if (m.b >= 0) {
        fit.y_lo = m.a;
        fit.y_hi = m.a + m.b;
    } else {
        fit.y_lo = m.a + m.b;
        fit.y_hi = m.a;
        w_signed = -w_signed;
    }
    fit.decreasing = w_signed < 0;
    fit.w = std::abs(w_signed);
    fit.residual_r2 = ss_tot > 0 ? std::clamp(1.0 - cur / ss_tot, 0.0, 1.0) : 0.0;
    if (!converged) throw sigmoid_fit_error("fit_sigmoid: no convergence within the iteration limit", fit);
    if (!(fit.y_lo < fit.y_hi)) throw sigmoid_fit_error("fit_sigmoid: fitted amplitude collapsed", fit);
    return fit;
}

}  // namespace pbit

#endif  // PBIT_ANALYSIS_HPP
