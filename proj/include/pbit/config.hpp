#ifndef PBIT_CONFIG_HPP
#define PBIT_CONFIG_HPP

// Run configuration for the command-line front end: JSON in, JSON out,
// every field defaulted, unknown keys rejected.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pbit/circuit.hpp"
#include "pbit/device.hpp"
#include "pbit/unitcell.hpp"

namespace pbit {

inline constexpr const char* kVersion = "0.1.0";

/// Malformed or invalid configuration; the message names the offending key.
class config_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A file that cannot be opened for reading or writing.
class io_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct SweepSpec {
    std::string variable;  // current | gate | bias | vdd
    double from = 0.0;
    double to = 0.0;
    double step = 0.0;
    std::size_t samples_per_point = 0;
    std::size_t decimation = 1;

    friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

/// Defaults for each swept variable. Current: 100 samples 10 ms apart.
/// Gate: 20 000 samples at 10 kHz. Bias: 200 000 samples every step.
inline SweepSpec default_sweep(const std::string& variable) {
    if (variable == "current") return {"current", -80e-6, 50e-6, 3e-6, 100, 500};
    if (variable == "gate") return {"gate", 0.7, 1.0, 0.02, 20000, 5};
    if (variable == "bias") return {"bias", 0.5, 0.8, 0.005, 200000, 1};
    if (variable == "vdd") return {"vdd", 0.0, 1.8, 0.1, 1, 1};
    throw config_error("sweep.variable: unknown variable '" + variable + "'");
}

/// Calibration sweep: the bias range at 1 mV resolution.
inline SweepSpec default_calibration_sweep() { return {"bias", 0.5, 0.8, 0.001, 200000, 1}; }

struct RunConfig {
    SmtjParams device;

    struct Transistors {
        NmosParams single;                                 // single-NMOS stage
        NmosParams bias{0.4, 0.5e-3, 9.0, 0.1};            // full stage, input device
        NmosParams cascode{0.4, 0.5e-3, 9.0, 0.1};         // full stage, cascode device
        friend bool operator==(const Transistors&, const Transistors&) = default;
    } transistors;

    struct Vtc {
        int threshold_index = 4;
        double transition_width = 0.0;
        friend bool operator==(const Vtc&, const Vtc&) = default;
    } vtc;

    InverterParams inverter;

    struct Supply {
        double v_dd = 1.8;
        double v_cas = 1.0;
        friend bool operator==(const Supply&, const Supply&) = default;
    } supply;

    /// Applied easy-axis field per cell mode, tesla.
    struct Field {
        double isolated = 0.0;
        double single_nmos = -5.5e-3;
        double full_stage = -21.5e-3;
        friend bool operator==(const Field&, const Field&) = default;
    } field;

    struct Sim {
        double dt = 20e-6;
        double duration = 0.1;
        std::optional<std::uint64_t> seed;
        std::size_t record_decimation = 1;
        std::string mode = "full_stage";
        std::optional<double> drive;  // A, or V at the gate / bias input
        friend bool operator==(const Sim&, const Sim&) = default;
    } sim;

    std::optional<SweepSpec> sweep;

    struct Ising {
        std::string problem;
        double beta = 1.0;
        std::optional<double> beta_end;
        std::size_t sweeps = 100000;
        std::string mode = "behavioral";  // behavioral | circuit | circuit-transient
        bool random_order = false;
        std::string calibration;          // optional calibration JSON for circuit modes
        friend bool operator==(const Ising&, const Ising&) = default;
    } ising;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;

    UnitCellConfig cell(CellMode mode) const {
        UnitCellConfig c;
        c.mode = mode;
        c.smtj = device;
        c.v_dd = supply.v_dd;
        c.v_cas = supply.v_cas;
        c.vtc.threshold_index = vtc.threshold_index;
        c.vtc.transition_width = vtc.transition_width;
        c.vtc.v_dd = supply.v_dd;
        c.inverter = inverter;
        switch (mode) {
            case CellMode::isolated: c.applied_field = field.isolated; break;
            case CellMode::single_nmos:
                c.nmos_bias = transistors.single;
                c.applied_field = field.single_nmos;
                break;
            case CellMode::full_stage:
                c.nmos_bias = transistors.bias;
                c.nmos_cas = transistors.cascode;
                c.applied_field = field.full_stage;
                break;
        }
        return c;
    }
};

namespace detail {

using nlohmann::json;

// Reads members of one JSON object, remembering which keys were consumed
// so leftovers can be reported as typos.
class ObjectReader {
  public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw config_error(label() + ": expected an object");
    }

    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& sub(const std::string& key) {
        used_.insert(key);
        return j_.at(key);
    }

    void number(const std::string& key, double& out) {
        if (!has(key)) return;
        const json& v = sub(key);
        if (!v.is_number()) throw config_error(key_path(key) + ": expected a number");
        out = v.get<double>();
        if (!std::isfinite(out)) throw config_error(key_path(key) + ": must be finite");
    }

    void number(const std::string& key, std::optional<double>& out) {
        if (!has(key) || sub(key).is_null()) return;
        double v = 0;
        number(key, v);
        out = v;
    }

    template <typename Int>
    void integer(const std::string& key, Int& out) {
        if (!has(key)) return;
        const json& v = sub(key);
        if (!v.is_number_integer()) throw config_error(key_path(key) + ": expected an integer");
        if constexpr (std::is_unsigned_v<Int>) {
            if (v.is_number_unsigned()) out = v.get<Int>();
            else if (v.get<std::int64_t>() < 0) throw config_error(key_path(key) + ": must be non-negative");
            else out = static_cast<Int>(v.get<std::int64_t>());
        } else {
            out = v.get<Int>();
        }
    }

    void seed(const std::string& key, std::optional<std::uint64_t>& out) {
        if (!has(key) || sub(key).is_null()) return;
        std::uint64_t v = 0;
        integer(key, v);
        out = v;
    }

    void string(const std::string& key, std::string& out) {
        if (!has(key)) return;
        const json& v = sub(key);
        if (!v.is_string()) throw config_error(key_path(key) + ": expected a string");
        out = v.get<std::string>();
    }

    void boolean(const std::string& key, bool& out) {
        if (!has(key)) return;
        const json& v = sub(key);
        if (!v.is_boolean()) throw config_error(key_path(key) + ": expected true or false");
        out = v.get<bool>();
    }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!used_.count(k)) throw config_error(key_path(k) + ": unknown key");
    }

  private:
    std::string label() const { return path_.empty() ? "config" : path_; }
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

inline void read_nmos(ObjectReader& parent, const std::string& key, NmosParams& p) {
    if (!parent.has(key)) return;
    ObjectReader r(parent.sub(key), parent.key_path(key));
    r.number("v_t", p.v_t);
    r.number("k", p.k);
    r.number("w", p.w);
    r.number("lambda", p.lambda);
    r.finish();
}

inline void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw config_error(key + ": " + what);
}

inline void validate_nmos(const NmosParams& p, const std::string& path) {
    require(p.k > 0, path + ".k", "must be positive");
    require(p.w > 0, path + ".w", "must be positive");
    require(p.lambda >= 0, path + ".lambda", "must be non-negative");
}

inline void validate_sweep(const SweepSpec& s) {
    require(s.variable == "current" || s.variable == "gate" || s.variable == "bias" || s.variable == "vdd",
            "sweep.variable", "must be one of current, gate, bias, vdd");
    require(s.from == s.to || (s.step != 0 && (s.to - s.from) / s.step > 0), "sweep.step",
            "must be non-zero and point from 'from' to 'to'");
    require(s.samples_per_point >= 1, "sweep.samples_per_point", "must be at least 1");
    require(s.decimation >= 1, "sweep.decimation", "must be at least 1");
}

}  // namespace detail

/// Checks every invariant, naming the first offending key.
inline void validate(const RunConfig& c) {
    using detail::require;
    require(c.device.r_p > 0, "device.r_p", "must be positive");
    require(c.device.tmr > 0, "device.tmr", "must be positive");
    require(c.device.tau_n > 0, "device.tau_n", "must be positive");
    require(c.device.i_w > 0, "device.i_w", "must be positive");
    detail::validate_nmos(c.transistors.single, "transistors.single");
    detail::validate_nmos(c.transistors.bias, "transistors.bias");
    detail::validate_nmos(c.transistors.cascode, "transistors.cascode");
    require(c.vtc.threshold_index >= 0 && c.vtc.threshold_index <= 4, "vtc.threshold_index", "must be in 0..4");
    require(c.vtc.transition_width >= 0, "vtc.transition_width", "must be non-negative");
    try {
        c.inverter.validate();
    } catch (const std::invalid_argument& e) {
        throw config_error(e.what());
    }
    require(c.supply.v_dd > 0, "supply.v_dd", "must be positive");
    require(c.sim.dt > 0, "sim.dt", "must be positive");
    require(c.sim.duration >= c.sim.dt, "sim.duration", "must be at least one time step");
    require(c.sim.record_decimation >= 1, "sim.record_decimation", "must be at least 1");
    require(c.sim.mode == "isolated" || c.sim.mode == "single_nmos" || c.sim.mode == "full_stage", "sim.mode",
            "must be one of isolated, single_nmos, full_stage");
    if (c.sweep) detail::validate_sweep(*c.sweep);
    require(c.ising.beta >= 0, "ising.beta", "must be non-negative");
    require(!c.ising.beta_end || *c.ising.beta_end >= 0, "ising.beta_end", "must be non-negative");
    require(c.ising.sweeps >= 1, "ising.sweeps", "must be at least 1");
    require(c.ising.mode == "behavioral" || c.ising.mode == "circuit" || c.ising.mode == "circuit-transient",
            "ising.mode", "must be one of behavioral, circuit, circuit-transient");
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    using detail::ObjectReader;
    RunConfig c;
    ObjectReader root(j, "");
    if (root.has("device")) {
        ObjectReader r(root.sub("device"), "device");
        r.number("r_p", c.device.r_p);
        r.number("tmr", c.device.tmr);
        r.number("tau_n", c.device.tau_n);
        r.number("i_50", c.device.i_50);
        r.number("i_w", c.device.i_w);
        r.number("k_h", c.device.k_h);
        r.finish();
    }
    if (root.has("transistors")) {
        ObjectReader r(root.sub("transistors"), "transistors");
        detail::read_nmos(r, "single", c.transistors.single);
        detail::read_nmos(r, "bias", c.transistors.bias);
        detail::read_nmos(r, "cascode", c.transistors.cascode);
        r.finish();
    }
    if (root.has("vtc")) {
        ObjectReader r(root.sub("vtc"), "vtc");
        r.integer("threshold_index", c.vtc.threshold_index);
        r.number("transition_width", c.vtc.transition_width);
        r.finish();
    }
    if (root.has("inverter")) {
        ObjectReader r(root.sub("inverter"), "inverter");
        if (r.has("vol_curve")) {
            const auto& arr = r.sub("vol_curve");
            if (!arr.is_array()) throw config_error("inverter.vol_curve: expected an array of [v_dd, v_ol] pairs");
            c.inverter.vol_curve.clear();
            for (const auto& bp : arr) {
                if (!bp.is_array() || bp.size() != 2 || !bp[0].is_number() || !bp[1].is_number())
                    throw config_error("inverter.vol_curve: expected an array of [v_dd, v_ol] pairs");
                c.inverter.vol_curve.emplace_back(bp[0].get<double>(), bp[1].get<double>());
            }
        }
        r.finish();
    }
    if (root.has("supply")) {
        ObjectReader r(root.sub("supply"), "supply");
        r.number("v_dd", c.supply.v_dd);
        r.number("v_cas", c.supply.v_cas);
        r.finish();
    }
    if (root.has("field")) {
        ObjectReader r(root.sub("field"), "field");
        r.number("isolated", c.field.isolated);
        r.number("single_nmos", c.field.single_nmos);
        r.number("full_stage", c.field.full_stage);
        r.finish();
    }
    if (root.has("sim")) {
        ObjectReader r(root.sub("sim"), "sim");
        r.number("dt", c.sim.dt);
        r.number("duration", c.sim.duration);
        r.seed("seed", c.sim.seed);
        r.integer("record_decimation", c.sim.record_decimation);
        r.string("mode", c.sim.mode);
        r.number("drive", c.sim.drive);
        r.finish();
    }
    if (root.has("sweep") && !root.sub("sweep").is_null()) {
        ObjectReader r(root.sub("sweep"), "sweep");
        std::string variable;
        r.string("variable", variable);
        if (variable.empty()) throw config_error("sweep.variable: required");
        SweepSpec s = default_sweep(variable);
        r.number("from", s.from);
        r.number("to", s.to);
        r.number("step", s.step);
        r.integer("samples_per_point", s.samples_per_point);
        r.integer("decimation", s.decimation);
        r.finish();
        c.sweep = s;
    }
    if (root.has("ising")) {
        ObjectReader r(root.sub("ising"), "ising");
        r.string("problem", c.ising.problem);
        r.number("beta", c.ising.beta);
        r.number("beta_end", c.ising.beta_end);
        r.integer("sweeps", c.ising.sweeps);
        r.string("mode", c.ising.mode);
        r.boolean("random_order", c.ising.random_order);
        r.string("calibration", c.ising.calibration);
        r.finish();
    }
    root.finish();
    validate(c);
    return c;
}

inline nlohmann::json to_json(const RunConfig& c) {
    using nlohmann::json;
    auto nmos = [](const NmosParams& p) { return json{{"v_t", p.v_t}, {"k", p.k}, {"w", p.w}, {"lambda", p.lambda}}; };
    json vol = json::array();
    for (const auto& [vdd, vol_v] : c.inverter.vol_curve) vol.push_back({vdd, vol_v});
    json j;
    j["device"] = {{"r_p", c.device.r_p}, {"tmr", c.device.tmr}, {"tau_n", c.device.tau_n},
                   {"i_50", c.device.i_50}, {"i_w", c.device.i_w}, {"k_h", c.device.k_h}};
    j["transistors"] = {{"single", nmos(c.transistors.single)}, {"bias", nmos(c.transistors.bias)},
                        {"cascode", nmos(c.transistors.cascode)}};
    j["vtc"] = {{"threshold_index", c.vtc.threshold_index}, {"transition_width", c.vtc.transition_width}};
    j["inverter"] = {{"vol_curve", vol}};
    j["supply"] = {{"v_dd", c.supply.v_dd}, {"v_cas", c.supply.v_cas}};
    j["field"] = {{"isolated", c.field.isolated}, {"single_nmos", c.field.single_nmos}, {"full_stage", c.field.full_stage}};
    json sim = {{"dt", c.sim.dt}, {"duration", c.sim.duration}, {"record_decimation", c.sim.record_decimation},
                {"mode", c.sim.mode}};
    if (c.sim.seed) sim["seed"] = *c.sim.seed;
    if (c.sim.drive) sim["drive"] = *c.sim.drive;
    j["sim"] = sim;
    if (c.sweep)
        j["sweep"] = {{"variable", c.sweep->variable}, {"from", c.sweep->from}, {"to", c.sweep->to},
                      {"step", c.sweep->step}, {"samples_per_point", c.sweep->samples_per_point},
                      {"decimation", c.sweep->decimation}};
    json ising = {{"problem", c.ising.problem}, {"beta", c.ising.beta}, {"sweeps", c.ising.sweeps},
                  {"mode", c.ising.mode}, {"random_order", c.ising.random_order},
                  {"calibration", c.ising.calibration}};
    if (c.ising.beta_end) ising["beta_end"] = *c.ising.beta_end;
    j["ising"] = ising;
    return j;
}

/// Parses JSON text; syntax errors report line and column.
inline nlohmann::json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t k = 0; k < end; ++k) {
            if (text[k] == '\n') { ++line; col = 1; } else { ++col; }
        }
        throw config_error(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": JSON parse error");
    }
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline RunConfig load_config(const std::string& path) {
    return config_from_json(parse_json_text(read_text_file(path), path));
}

}  // namespace pbit

#endif  // PBIT_CONFIG_HPP
