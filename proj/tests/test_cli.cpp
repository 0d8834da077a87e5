#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "pbit/cli.hpp"

namespace fs = std::filesystem;
using namespace pbit;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "pbitsim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string data(const char* f) { return std::string(PBIT_DATA_DIR) + "/" + f; }

class CliFiles : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("pbitsim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const char* name) const { return (dir_ / name).string(); }
    void write(const char* name, const std::string& text) const { write_text_file(path(name), text); }

    fs::path dir_;
};

}  // namespace

TEST(Cli, UsageErrorsExitWithOne) {
    EXPECT_EQ(run({}).code, cli::kUsage);
    EXPECT_EQ(run({"frobnicate"}).code, cli::kUsage);
    EXPECT_EQ(run({"trace", "--no-such-flag"}).code, cli::kUsage);
    EXPECT_EQ(run({"trace", "--dt", "fast"}).code, cli::kUsage);
}

TEST(Cli, HelpAndVersionExitWithZero) {
    const auto h = run({"--help"});
    EXPECT_EQ(h.code, cli::kOk);
    EXPECT_NE(h.out.find("sweep-bias"), std::string::npos);
    const auto v = run({"--version"});
    EXPECT_EQ(v.code, cli::kOk);
    EXPECT_NE(v.out.find(kVersion), std::string::npos);
}

TEST(Cli, MissingFilesExitWithThree) {
    EXPECT_EQ(run({"trace", "--config", "/nonexistent/c.json"}).code, cli::kRuntime);
    EXPECT_EQ(run({"analyze", "--input", "/nonexistent/t.csv"}).code, cli::kRuntime);
    EXPECT_EQ(run({"ising", "--problem", "/nonexistent/p.json"}).code, cli::kRuntime);
}

TEST_F(CliFiles, BadConfigExitsWithTwoAndNamesKey) {
    write("bad.json", R"({"device":{"r_p":-1}})");
    const auto r = run({"trace", "--config", path("bad.json")});
    EXPECT_EQ(r.code, cli::kConfig);
    EXPECT_NE(r.err.find("device.r_p"), std::string::npos) << r.err;
    write("syntax.json", "{\n\"sim\": {,}\n}");
    const auto s = run({"trace", "--config", path("syntax.json")});
    EXPECT_EQ(s.code, cli::kConfig);
    EXPECT_NE(s.err.find(":2:"), std::string::npos) << s.err;
}

TEST_F(CliFiles, ConflictingSweepVariableIsAConfigError) {
    write("cfg.json", R"({"sweep":{"variable":"gate"}})");
    EXPECT_EQ(run({"sweep-bias", "--config", path("cfg.json")}).code, cli::kConfig);
}

TEST(Cli, SweepVddAnchors) {
    const auto r = run({"sweep-vdd", "--seed", "1"});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    std::istringstream is(r.out);
    const auto t = read_csv(is);
    const auto x = t.values(t.columns.front());
    const auto y = t.values("v_out_mean_V");
    ASSERT_EQ(x.size(), 19u);
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k] <= 0.8 + 1e-9) {
            EXPECT_EQ(y[k], 0.0) << x[k];
        }
    }
    EXPECT_NEAR(x.back(), 1.8, 1e-12);
    EXPECT_EQ(y.back(), 0.45);
}

TEST(Cli, MetadataEchoesSeedAndConfig) {
    const auto r = run({"trace", "--seed", "12345", "--duration", "0.002"});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_EQ(r.out.rfind("#", 0), 0u);
    EXPECT_NE(r.out.find("12345"), std::string::npos);
    EXPECT_NE(r.out.find("pbitsim"), std::string::npos);
    EXPECT_NE(r.out.find("time_s,level"), std::string::npos);
}

TEST(Cli, SeededRunsAreByteIdentical) {
    const std::vector<std::string> args{"sweep-bias", "--seed", "9", "--from", "0.6", "--to", "0.7", "--step", "0.01",
                                        "--samples", "2000"};
    const auto a = run(args), b = run(args);
    ASSERT_EQ(a.code, cli::kOk) << a.err;
    EXPECT_EQ(a.out, b.out);
    auto c = args;
    c[2] = "10";
    EXPECT_NE(run(c).out, a.out);
}

TEST(Cli, UnseededRunRecordsItsSeed) {
    const auto r = run({"sweep-gate", "--from", "0.7", "--to", "0.72", "--samples", "50"});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_NE(r.out.find("\"seed\""), std::string::npos);
}

TEST_F(CliFiles, AnalyzeTrace) {
    const auto tr = run({"trace", "--mode", "isolated", "--seed", "3", "--duration", "0.5", "--dt", "2e-5",
                         "--drive", "-1.5e-5", "--out", path("trace.csv")});
    ASSERT_EQ(tr.code, cli::kOk) << tr.err;
    EXPECT_NE(tr.err.find("wrote"), std::string::npos);
    const auto an = run({"analyze", "--input", path("trace.csv")});
    ASSERT_EQ(an.code, cli::kOk) << an.err;
    const auto j = nlohmann::json::parse(an.out);
    EXPECT_EQ(j["kind"], "telegraph");
    EXPECT_NEAR(j["occupancy_high"].get<double>(), 0.5, 0.1);
    EXPECT_GT(j["transitions"].get<double>(), 100);
    EXPECT_NEAR(j["mean_dwell_high"].get<double>(), 1e-3, 2.5e-4);
}

TEST_F(CliFiles, AnalyzeFlatTraceReportsInsufficientTransitions) {
    write("flat.csv", "# flat\ntime_s,level\n0,1\n1e-5,1\n2e-5,1\n");
    const auto an = run({"analyze", "--input", path("flat.csv"), "--theta-lo", "0.4", "--theta-hi", "0.6"});
    ASSERT_EQ(an.code, cli::kOk) << an.err;
    EXPECT_EQ(nlohmann::json::parse(an.out)["status"], "insufficient transitions");
}

TEST_F(CliFiles, AnalyzeSweepFitsSigmoid) {
    const auto sw = run({"sweep-bias", "--seed", "5", "--from", "0.6", "--to", "0.78", "--step", "0.005",
                         "--samples", "20000", "--out", path("bias.csv")});
    ASSERT_EQ(sw.code, cli::kOk) << sw.err;
    const auto an = run({"analyze", "--input", path("bias.csv"), "--out", path("fit.json")});
    ASSERT_EQ(an.code, cli::kOk) << an.err;
    const auto j = nlohmann::json::parse(read_text_file(path("fit.json")));
    EXPECT_EQ(j["kind"], "sigmoid_fit");
    EXPECT_TRUE(j["fit"]["decreasing"].get<bool>());
    EXPECT_NEAR(j["fit"]["x_0"].get<double>(), 0.6936, 0.01);
}

TEST_F(CliFiles, IsingWritesHistogramAndEnergy) {
    const auto r = run({"ising", "--problem", data("and_gate.json"), "--sweeps", "20000", "--seed", "4", "--out",
                        path("hist.json")});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    const auto j = nlohmann::json::parse(read_text_file(path("hist.json")));
    EXPECT_EQ(j["samples"], 20000);
    EXPECT_EQ(j["states"].size(), 8u);
    ASSERT_TRUE(fs::exists(path("hist_energy.csv")));
    EXPECT_EQ(read_csv_file(path("hist_energy.csv")).rows.size(), 20000u);
}

TEST_F(CliFiles, IsingCircuitModeUsesCalibrationFile) {
    const auto cal = run({"calibrate", "--seed", "2", "--from", "0.6", "--to", "0.78", "--step", "0.005", "--samples",
                          "5000", "--out", path("cal.json")});
    ASSERT_EQ(cal.code, cli::kOk) << cal.err;
    const auto r = run({"ising", "--problem", data("ferromagnet_pair.json"), "--mode", "circuit", "--calibration",
                        path("cal.json"), "--sweeps", "5000", "--seed", "4"});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_EQ(nlohmann::json::parse(r.out)["mode"], "circuit");
    write("nofit.json", "{}");
    EXPECT_EQ(run({"ising", "--problem", data("ferromagnet_pair.json"), "--mode", "circuit", "--calibration",
                   path("nofit.json")}).code,
              cli::kConfig);
}
