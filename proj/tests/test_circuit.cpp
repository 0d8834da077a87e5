#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pbit/circuit.hpp"

using namespace pbit;

namespace {

oracle::Fet fet(const NmosParams& p) { return {p.v_t, p.k, p.w, p.lambda}; }

NmosParams random_nmos(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> vt(0.3, 0.5), k(0.1e-3, 1e-3), w(1.0, 27.0), lam(0.0, 0.2);
    return {vt(rng), k(rng), w(rng), lam(rng)};
}

}  // namespace

TEST(NmosCurrent, Examples) {
    NmosParams p;
    EXPECT_EQ(nmos_current(p.v_t, 0.5, p), 0.0);
    EXPECT_NEAR(nmos_current(1.0, 1.0, p), 0.099e-3, 1e-12);
    EXPECT_THROW(nmos_current(1.0, -0.1, p), std::invalid_argument);
}

TEST(NmosCurrent, ContinuousAtRegionBoundary) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> vgs(0.5, 2.0);
    for (int k = 0; k < 1000; ++k) {
        const NmosParams p = random_nmos(rng);
        const double v = vgs(rng);
        const double edge = v - p.v_t;
        const double below = nmos_current(v, std::nextafter(edge, 0.0), p);
        const double at = nmos_current(v, edge, p);
        EXPECT_NEAR(below, at, 1e-12 * std::max(at, 1e-9));
        EXPECT_EQ(region(v, edge, p), Region::saturation);
        EXPECT_EQ(region(v, 0.5 * edge, p), Region::triode);
    }
}

TEST(NmosCurrent, MonotoneInBothTerminals) {
    NmosParams p;
    for (double vgs = 0.0; vgs <= 1.8; vgs += 0.05) {
        double prev = -1.0;
        for (double vds = 0.0; vds <= 1.8; vds += 0.01) {
            const double i = nmos_current(vgs, vds, p);
            EXPECT_GE(i, prev);
            EXPECT_GE(i, nmos_current(vgs - 0.05, vds, p));
            prev = i;
        }
    }
}

TEST(NmosCurrent, MatchesOracle) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> v(0.0, 2.0);
    for (int k = 0; k < 2000; ++k) {
        const NmosParams p = random_nmos(rng);
        const double vgs = v(rng), vds = v(rng);
        EXPECT_NEAR(nmos_current(vgs, vds, p), oracle::drain_current(vgs, vds, p.v_t, p.k, p.w, p.lambda), 1e-15);
    }
}

TEST(SeriesOperatingPoint, Cutoff) {
    const auto op = series_operating_point(1.8, 0.4, 2.5e3, NmosParams{});
    EXPECT_EQ(op.i, 0.0);
    EXPECT_EQ(op.v_out, 1.8);
    EXPECT_EQ(op.bias_region, Region::cutoff);
}

TEST(SeriesOperatingPoint, ShortCircuitLimit) {
    const auto op = series_operating_point(1.8, 1.2, 1e-3, NmosParams{});
    EXPECT_NEAR(op.v_out, 1.8, 1e-5);
}

TEST(SeriesOperatingPoint, MatchesGridScanOracleAtDefaults) {
    NmosParams p;
    const auto op = series_operating_point(1.8, 0.85, 2.5e3, p);
    EXPECT_NEAR(op.v_out, oracle::series_vout(1.8, 0.85, 2.5e3, fet(p)), 2e-6);
    EXPECT_NEAR((1.8 - op.v_out) / 2.5e3, op.i, 1e-9);
}

TEST(SeriesOperatingPoint, RejectsBadInputs) {
    EXPECT_THROW(series_operating_point(0.0, 1.0, 1e3, NmosParams{}), std::invalid_argument);
    EXPECT_THROW(series_operating_point(1.8, 1.0, 0.0, NmosParams{}), std::invalid_argument);
}

TEST(SeriesOperatingPoint, RandomDrawsSatisfyResidualAndBounds) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> vdd(0.5, 3.0), frac(0.0, 1.0), logr(std::log(100.0), std::log(1e5));
    for (int k = 0; k < 2000; ++k) {
        const NmosParams p = random_nmos(rng);
        const double v = vdd(rng), g = frac(rng) * v, r = std::exp(logr(rng));
        const auto op = series_operating_point(v, g, r, p);
        EXPECT_GE(op.v_out, 0.0);
        EXPECT_LE(op.v_out, v);
        EXPECT_GE(op.i, 0.0);
        if (op.i > 0) {
            EXPECT_LE(std::abs((v - op.v_out) / r - nmos_current(g, op.v_out, p)), 1e-9);
        }
    }
}

TEST(CascodeOperatingPoint, BothCutoffIsTheGroundedInputCase) {
    const NmosParams p{0.4, 0.5e-3, 9.0, 0.1};
    const auto op = cascode_operating_point(1.8, 0.0, 0.0, 2.5e3, p, p);
    EXPECT_EQ(op.i, 0.0);
    EXPECT_EQ(op.v_out, 1.8);
    ASSERT_TRUE(op.cas_region.has_value());
    EXPECT_EQ(*op.cas_region, Region::cutoff);
}

TEST(CascodeOperatingPoint, PinchOffOfCascodeDevice) {
    const NmosParams p;
    const auto op = cascode_operating_point(1.8, 1.0, 0.3, 2.5e3, p, p);
    EXPECT_EQ(op.i, 0.0);
    EXPECT_EQ(op.v_out, 1.8);
}

TEST(CascodeOperatingPoint, BranchCurrentsAgree) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> vdd(1.0, 3.0), frac(0.2, 1.0), logr(std::log(500.0), std::log(5e4));
    for (int k = 0; k < 500; ++k) {
        const NmosParams pb = random_nmos(rng), pc = random_nmos(rng);
        const double v = vdd(rng), vb = frac(rng) * v, vc = frac(rng) * v, r = std::exp(logr(rng));
        const auto op = cascode_operating_point(v, vb, vc, r, pb, pc);
        ASSERT_TRUE(op.v_mid.has_value());
        EXPECT_GE(op.v_out, *op.v_mid - 1e-12);
        EXPECT_LE(op.v_out, v);
        const double i_r = (v - op.v_out) / r;
        const double i_b = nmos_current(vb, *op.v_mid, pb);
        const double i_c = op.v_out >= *op.v_mid ? nmos_current(vc - *op.v_mid, op.v_out - *op.v_mid, pc) : 0.0;
        EXPECT_LE(std::abs(i_r - i_b), 1e-9);
        EXPECT_LE(std::abs(i_c - i_b), 1e-9);
    }
}

TEST(CascodeOperatingPoint, MatchesGridScanOracle) {
    const NmosParams p{0.4, 0.5e-3, 9.0, 0.1};
    for (double vb : {0.5, 0.65, 0.8}) {
        for (double r : {2.5e3, 5e3}) {
            const auto op = cascode_operating_point(1.8, vb, 1.0, r, p, p);
            const auto ref = oracle::cascode_point(1.8, vb, 1.0, r, fet(p), fet(p));
            EXPECT_NEAR(op.v_out, ref.v_out, 2e-6);
            EXPECT_NEAR(*op.v_mid, ref.v_mid, 2e-6);
            EXPECT_NEAR(op.i, ref.i, 1e-9);
        }
    }
}

TEST(CascodeOperatingPoint, ShieldsCurrentFromResistanceSwapInSaturation) {
    const NmosParams p{0.4, 0.5e-3, 1.0, 0.1};
    const double vdd = 1.8, rp = 2.5e3, rap = 5e3;
    for (double vb = 0.5; vb <= 0.8; vb += 0.05) {
        const auto cp = cascode_operating_point(vdd, vb, 1.2, rp, p, p);
        const auto ca = cascode_operating_point(vdd, vb, 1.2, rap, p, p);
        const auto sp = series_operating_point(vdd, vb, rp, p);
        const auto sa = series_operating_point(vdd, vb, rap, p);
        ASSERT_EQ(cp.bias_region, Region::saturation);
        const double mod_c = std::abs(cp.i - ca.i) / cp.i;
        const double mod_s = std::abs(sp.i - sa.i) / sp.i;
        EXPECT_LT(mod_c, mod_s) << "v_bias=" << vb;
    }
}

TEST(Vtc, Examples) {
    VtcParams p;
    p.threshold_index = 2;
    EXPECT_NEAR(p.v_th(), 0.9, 1e-12);
    EXPECT_EQ(vtc_output(0.0, p), p.v_dd);
    EXPECT_EQ(vtc_output(p.v_th(), p), 0.0);
    p.threshold_index = 4;
    EXPECT_NEAR(p.v_th(), 1.1, 1e-12);
    EXPECT_THROW(vtc_output(-0.1, p), std::invalid_argument);
    EXPECT_THROW(vtc_output(1.9, p), std::invalid_argument);
}

TEST(Vtc, ThresholdSet) {
    VtcParams p;
    for (int k = 0; k <= 4; ++k) {
        p.threshold_index = k;
        EXPECT_NEAR(p.v_th(), 0.7 + 0.1 * k, 1e-12);
        EXPECT_NO_THROW(p.validate());
    }
    p.threshold_index = 5;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Vtc, MonotoneNonIncreasingWithRamp) {
    VtcParams p;
    p.transition_width = 0.1;
    double prev = p.v_dd;
    for (double v = 0.0; v <= p.v_dd; v += 0.001) {
        const double o = vtc_output(v, p);
        EXPECT_LE(o, prev);
        prev = o;
    }
    EXPECT_NEAR(vtc_output(p.v_th(), p), 0.5 * p.v_dd, 1e-12);
}

TEST(Inverter, Examples) {
    InverterParams p;
    EXPECT_EQ(inverter_output(1.8, p, 1.8), 0.45);
    EXPECT_EQ(inverter_output(0.7, p, 0.7), 0.0);
    EXPECT_EQ(inverter_output(0.0, p, 1.8), 1.8);
    EXPECT_EQ(inverter_output(0.0, p, 1.1), 1.1);
}

TEST(Inverter, MonotoneNonIncreasing) {
    InverterParams p;
    double prev = 1.8;
    for (double v = 0.0; v <= 1.8; v += 0.01) {
        const double o = inverter_output(v, p, 1.8);
        EXPECT_LE(o, prev);
        prev = o;
    }
}

TEST(VolCurve, Examples) {
    InverterParams p;
    EXPECT_EQ(vol_curve_eval(0.8, p), 0.0);
    EXPECT_EQ(vol_curve_eval(1.8, p), 0.45);
    EXPECT_NEAR(vol_curve_eval(1.3, p), 0.225, 1e-12);
    EXPECT_EQ(vol_curve_eval(0.0, p), 0.0);
    EXPECT_EQ(vol_curve_eval(2.5, p), 0.45);
}

TEST(VolCurve, ValidationRejectsMalformedCurves) {
    InverterParams p;
    p.vol_curve = {{0.8, 0.0}, {0.8, 0.1}};
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.vol_curve = {{0.8, 0.0}, {1.3, 0.3}, {1.8, 0.2}};
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.vol_curve = {{0.8, 0.1}, {1.8, 0.45}};
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.vol_curve = {{0.8, 0.0}, {1.3, 0.1}, {1.8, 0.45}};
    EXPECT_NO_THROW(p.validate());
    EXPECT_NEAR(vol_curve_eval(1.55, p), 0.275, 1e-12);
}
