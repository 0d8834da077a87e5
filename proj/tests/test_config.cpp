#include <gtest/gtest.h>

#include <sstream>

#include "pbit/config.hpp"
#include "pbit/io.hpp"

using namespace pbit;
using nlohmann::json;

namespace {

std::string config_message(const std::string& text) {
    try {
        config_from_json(parse_json_text(text, "cfg.json"));
    } catch (const config_error& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Config, EmptyObjectGivesDefaults) {
    const auto c = config_from_json(json::object());
    EXPECT_EQ(c, RunConfig{});
    EXPECT_EQ(c.device.r_p, 2.5e3);
    EXPECT_EQ(c.supply.v_dd, 1.8);
    EXPECT_FALSE(c.sim.seed.has_value());
}

TEST(Config, InvalidValueNamesTheKey) {
    const auto msg = config_message(R"({"device":{"r_p":-1}})");
    EXPECT_NE(msg.find("device.r_p"), std::string::npos) << msg;
    EXPECT_NE(config_message(R"({"transistors":{"bias":{"w":0}}})").find("transistors.bias.w"), std::string::npos);
    EXPECT_NE(config_message(R"({"sim":{"mode":"bogus"}})").find("sim.mode"), std::string::npos);
    EXPECT_NE(config_message(R"({"vtc":{"threshold_index":7}})").find("vtc.threshold_index"), std::string::npos);
}

TEST(Config, UnknownKeysRejected) {
    EXPECT_NE(config_message(R"({"devcie":{}})").find("devcie"), std::string::npos);
    EXPECT_NE(config_message(R"({"device":{"rp":1}})").find("device.rp"), std::string::npos);
}

TEST(Config, WrongTypesRejected) {
    EXPECT_NE(config_message(R"({"device":{"r_p":"big"}})").find("device.r_p"), std::string::npos);
    EXPECT_NE(config_message(R"({"device":[]})").find("device"), std::string::npos);
}

TEST(Config, ParseErrorsReportLineAndColumn) {
    const auto msg = config_message("{\n  \"device\": {\n    \"r_p\": ,\n  }\n}");
    EXPECT_NE(msg.find("cfg.json:3:"), std::string::npos) << msg;
}

TEST(Config, SerializeRoundTrip) {
    RunConfig c;
    c.device.tau_n = 2e-3;
    c.sim.seed = 18446744073709551615ull;
    c.sim.drive = 0.7;
    c.sweep = default_sweep("bias");
    c.sweep->samples_per_point = 1234;
    c.ising.beta_end = 3.0;
    c.inverter.vol_curve = {{0.8, 0.0}, {1.3, 0.1}, {1.8, 0.45}};
    const auto back = config_from_json(parse_json_text(to_json(c).dump(), "x"));
    EXPECT_EQ(back, c);
    EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
}

TEST(Config, SweepDefaultsFilledPerVariable) {
    const auto c = config_from_json(json::parse(R"({"sweep":{"variable":"current","samples_per_point":7}})"));
    ASSERT_TRUE(c.sweep);
    EXPECT_EQ(c.sweep->from, -80e-6);
    EXPECT_EQ(c.sweep->samples_per_point, 7u);
    EXPECT_NE(config_message(R"({"sweep":{"variable":"temperature"}})").find("sweep.variable"), std::string::npos);
}

TEST(Config, CellProjection) {
    RunConfig c;
    const auto full = c.cell(CellMode::full_stage);
    EXPECT_EQ(full.applied_field, c.field.full_stage);
    ASSERT_TRUE(full.nmos_cas.has_value());
    EXPECT_EQ(full.nmos_cas->w, 9.0);
    const auto single = c.cell(CellMode::single_nmos);
    EXPECT_EQ(single.applied_field, c.field.single_nmos);
    EXPECT_EQ(single.nmos_bias.w, 1.0);
}

TEST(Config, MissingFileIsAnIoError) {
    EXPECT_THROW(load_config("/nonexistent/cfg.json"), io_error);
}

TEST(Config, ShippedExamplesLoad) {
    for (const char* f : {"cell_default.json", "isolated_trace.json", "quick_sweeps.json"})
        EXPECT_NO_THROW(load_config(std::string(PBIT_DATA_DIR) + "/" + f)) << f;
}

TEST(Problem, DenseAndTripletFormsAgree) {
    const auto dense = problem_from_json(json::parse(R"({"n":3,"j":[0,-1,2,-1,0,2,2,2,0],"h":[1,1,-2]})"));
    const auto trip = problem_from_json(json::parse(R"({"n":3,"j":[[0,1,-1],[0,2,2],[1,2,2]],"h":[1,1,-2]})"));
    EXPECT_EQ(dense.j, trip.j);
    EXPECT_EQ(dense.h, trip.h);
    EXPECT_EQ(dense.coupling(2, 0), 2.0);
}

TEST(Problem, ShippedClampedGateLoads) {
    const auto p = load_problem(std::string(PBIT_DATA_DIR) + "/and_gate_clamped.json");
    EXPECT_EQ(p.clamp[2], 1);
    EXPECT_EQ(p.clamp[0], 0);
}

TEST(Problem, MalformedInputsRejected) {
    auto bad = [](const char* text) { EXPECT_THROW(problem_from_json(json::parse(text)), config_error) << text; };
    bad(R"({"j":[]})");
    bad(R"({"n":0})");
    bad(R"({"n":2,"j":[0,1,2,0]})");         // asymmetric
    bad(R"({"n":2,"j":[1,1,1,0]})");         // diagonal
    bad(R"({"n":2,"j":[0,1,1]})");           // wrong size
    bad(R"({"n":2,"j":[[0,0,1]]})");         // diagonal triplet
    bad(R"({"n":2,"j":[[0,2,1]]})");         // out of range
    bad(R"({"n":2,"j":[[0,1,1],[1,0,2]]})");  // conflicting duplicate
    bad(R"({"n":2,"h":[1]})");
    bad(R"({"n":2,"clamps":[[0,0]]})");
    bad(R"({"n":2,"extra":1})");
    EXPECT_NO_THROW(problem_from_json(json::parse(R"({"n":2,"j":[[0,1,1],[1,0,1]]})")));
}

TEST(Csv, WriteReadRoundTrip) {
    SweepResult r;
    r.variable = "bias";
    r.unit = "V";
    SweepPoint p;
    p.setpoint = 0.123456789012;
    p.v_out_mean = 1.5;
    p.v_out_min = 0.45;
    p.v_out_max = 1.8;
    p.occupancy_ap = 0.25;
    p.i_mean = 1e-4;
    r.points = {p, p};
    std::stringstream ss;
    write_sweep_csv(ss, r, json{{"tool", "pbitsim"}});
    const std::string text = ss.str();
    EXPECT_EQ(text.rfind("# ", 0), 0u);
    const auto t = read_csv(ss);
    EXPECT_EQ(t.columns, sweep_columns(r));
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_NEAR(t.values("setpoint_V")[0], 0.123456789, 1e-12);
    EXPECT_EQ(t.values("occupancy_ap")[1], 0.25);
    EXPECT_THROW(t.values("nope"), std::invalid_argument);
}

TEST(Csv, FormatRealUsesNineSignificantDigits) {
    EXPECT_EQ(format_real(0.1), "0.1");
    EXPECT_EQ(format_real(1.0 / 3.0), "0.333333333");
    EXPECT_EQ(format_real(-2.5e-5), "-2.5e-05");
}

TEST(Csv, MalformedRowsRejected) {
    std::stringstream a("x,y\n1,2\n3\n");
    EXPECT_THROW(read_csv(a), std::invalid_argument);
    std::stringstream b("# only comments\n");
    EXPECT_THROW(read_csv(b), std::invalid_argument);
    std::stringstream c("x\nabc\n");
    EXPECT_THROW(read_csv(c), std::invalid_argument);
}

TEST(Calibration, FitJsonRoundTrip) {
    SigmoidFit f;
    f.y_lo = 0.45;
    f.y_hi = 1.8;
    f.x_0 = 0.69;
    f.w = 0.012;
    f.decreasing = true;
    f.residual_r2 = 0.998;
    f.x_min = 0.5;
    f.x_max = 0.8;
    const auto g = fit_from_json(json::parse(fit_to_json(f).dump()));
    EXPECT_EQ(g.x_0, f.x_0);
    EXPECT_EQ(g.w, f.w);
    EXPECT_EQ(g.decreasing, f.decreasing);
    EXPECT_EQ(g.x_max, f.x_max);
}
