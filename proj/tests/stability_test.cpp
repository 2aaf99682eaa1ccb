#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "ldolens/calibration.hpp"
#include "ldolens/config.hpp"
#include "ldolens/stability.hpp"
#include "test_support.hpp"

using namespace ldolens;

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

RationalFunction single_pole(double a, double p) {
    return {Polynomial{a}, Polynomial{1.0, 1.0 / p}};
}

const RunConfig& reference() {
    static const RunConfig cfg = load_config(LDOLENS_CONFIG_DIR "/reference.cfg");
    return cfg;
}

const CalibrationResult& calibrated() {
    static const CalibrationResult r = calibrate(reference().proposed, reference().device,
                                                 reference().calibrate.targets,
                                                 reference().calibrate.options);
    return r;
}

ProposedParams calibrated_at(double il) {
    return at_operating_point(calibrated().params, operating_point(il, calibrated().device));
}

// First |H| = 1 crossing on a 1e4 points/decade scan.
double dense_ugf(const RationalFunction& h) {
    const auto grid = log_grid(1e-2, 1e14, 10000);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (std::abs(eval_jw(h, grid[i])) < 1.0) {
            return std::sqrt(grid[i - 1] * grid[i]);
        }
    }
    return NAN;
}

}  // namespace

TEST(UnityGainFreq, SinglePoleClosedForm) {
    const double a = 1e5, p = 10.0;
    EXPECT_NEAR(unity_gain_freq(single_pole(a, p)) / (p * std::sqrt(a * a - 1.0)), 1.0, 1e-6);
    EXPECT_NEAR(unity_gain_freq(single_pole(1000.0, 1.0)), 999.9995, 1e-3);
}

TEST(UnityGainFreq, CalibratedMatchesDenseScan) {
    const auto h = proposed_tf(calibrated_at(0.1));
    EXPECT_NEAR(unity_gain_freq(h) / dense_ugf(h), 1.0, 1e-3);
}

TEST(UnityGainFreq, MagnitudeIsUnity) {
    std::mt19937_64 rng(8);
    int checked = 0;
    for (int i = 0; i < 200; ++i) {
        const auto h = proposed_tf(testing_support::random_params(rng));
        if (std::abs(h.dc_value()) <= 1.0) {
            EXPECT_THROW(unity_gain_freq(h), LowDcGain);
            continue;
        }
        const double w = unity_gain_freq(h);
        EXPECT_NEAR(std::abs(eval_jw(h, w)), 1.0, 1e-6);
        ++checked;
    }
    EXPECT_GT(checked, 50);
}

TEST(UnityGainFreq, Errors) {
    EXPECT_THROW(unity_gain_freq(single_pole(0.5, 1.0)), LowDcGain);
    // Flat gain of 10 never crosses.
    const RationalFunction flat(Polynomial{10.0}, Polynomial{1.0});
    EXPECT_THROW(unity_gain_freq(flat), NoCrossing);
}

TEST(UnityGainFreq, BisectionAlwaysBrackets) {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 100; ++i) {
        const auto h = proposed_tf(testing_support::random_params(rng));
        if (std::abs(h.dc_value()) <= 1.0) {
            continue;
        }
        int steps = 0;
        unity_gain_freq(h, ScanOptions{}, [&](const BracketStep& s) {
            ++steps;
            EXPECT_LT(s.lo, s.hi);
            EXPECT_GE(s.f_lo, 0.0);
            EXPECT_LT(s.f_hi, 0.0);
            EXPECT_GE(std::abs(eval_jw(h, s.lo)), 1.0);
            EXPECT_LT(std::abs(eval_jw(h, s.hi)), 1.0);
        });
        EXPECT_GT(steps, 1);
    }
}

TEST(PhaseMargin, SinglePole) {
    EXPECT_NEAR(phase_margin(single_pole(1e5, 10.0)), 90.0, 0.2);
}

TEST(PhaseMargin, TwoIdenticalPoles) {
    const double a = 1e5, p = 100.0;
    const RationalFunction h(Polynomial{a}, poly_mul(Polynomial{1.0, 1.0 / p}, Polynomial{1.0, 1.0 / p}));
    const double ugf = p * std::sqrt(a - 1.0);
    EXPECT_NEAR(phase_margin(h), 180.0 - 2.0 * std::atan(ugf / p) * kDeg, 1e-6);
}

TEST(PhaseMargin, CalibratedAtHundredMilliamps) {
    const auto h = proposed_tf(calibrated_at(0.1));
    EXPECT_NEAR(phase_margin(h), 64.0, 1.0);
    EXPECT_NEAR(20.0 * std::log10(h.dc_value()), 58.0, 0.5);
}

TEST(PhaseMargin, ScaleInvariance) {
    const auto h = proposed_tf(ProposedParams{});
    for (double k : {0.01, 0.3, 5.0}) {
        const auto hk = h.scaled(k);
        const auto a = analyze(h);
        const auto b = analyze(hk);
        EXPECT_NEAR(b.dc_gain_db - a.dc_gain_db, 20.0 * std::log10(k), 1e-9);
        EXPECT_NEAR(b.phase_margin, 180.0 + unwrapped_phase(h, b.ugf), 1e-9);
    }
}

// Estimate 90 - (non-dominant pole lag) +/- (zero phase). The complex pair
// uses its second-order Bode phase; the 90 degree dominant term needs
// ugf >> p1, so only loops with at least 40 dB of gain are checked. The
// per-magnitude first-order form is printed for comparison only.
TEST(PhaseMargin, FirstOrderEstimate) {
    std::mt19937_64 rng(13);
    int checked = 0;
    int naive_misses = 0;
    for (int i = 0; i < 2000; ++i) {
        const auto h = proposed_tf(testing_support::random_params(rng));
        if (!(std::abs(h.dc_value()) >= 100.0)) {
            continue;
        }
        StabilityReport r;
        try {
            r = analyze(h);
        } catch (const NoCrossing&) {
            continue;
        }
        if (!pole_ordering_check(r)) {
            continue;
        }
        double est = 90.0;
        double naive = 90.0;
        for (std::size_t k = 1; k < r.poles.size(); ++k) {
            naive -= std::atan(r.ugf / r.poles[k].magnitude()) * kDeg;
        }
        if (r.poles[1].im != 0.0) {
            const double w0 = r.poles[1].magnitude();
            const double zeta = -r.poles[1].re / w0;
            const double x = r.ugf / w0;
            est -= std::atan2(2.0 * zeta * x, 1.0 - x * x) * kDeg;
        } else {
            est = naive;
        }
        for (const auto& z : r.zeros) {
            const double c = std::atan(r.ugf / z.magnitude()) * kDeg;
            est += z.re > 0.0 ? -c : c;
            naive += z.re > 0.0 ? -c : c;
        }
        EXPECT_NEAR(r.phase_margin, est, 2.0) << "set " << i;
        naive_misses += std::abs(r.phase_margin - naive) > 2.0 ? 1 : 0;
        ++checked;
    }
    std::printf("first-order estimate: %d of %d sets off by more than 2 degrees\n", naive_misses, checked);
    EXPECT_GT(checked, 100);
}

TEST(GainMargin, ThreeIdenticalPoles) {
    const Polynomial f{1.0, 1.0};
    const RationalFunction h(Polynomial{10.0}, poly_mul(f, poly_mul(f, f)));
    const auto gm = gain_margin_db(h);
    ASSERT_TRUE(gm.has_value());
    EXPECT_NEAR(*gm, 20.0 * std::log10(8.0 / 10.0), 1e-6);
    EXPECT_FALSE(gain_margin_db(single_pole(1e3, 1.0)).has_value());
}

TEST(PoleOrdering, NominalA) {
    const auto r = analyze(proposed_tf(ProposedParams{}));
    EXPECT_TRUE(pole_ordering_check(r));
    EXPECT_TRUE(r.dominant_pole_ok);
    StabilityReport manual;
    manual.poles = {{-250, 0, 1}, {-5e5, 1e9, 1}, {-5e5, -1e9, 1}};
    manual.zeros = {{5e9, 0, 1}, {-5e9, 0, 1}};
    manual.ugf = 2e5;
    EXPECT_TRUE(pole_ordering_check(manual));
}

TEST(PoleOrdering, Counterexamples) {
    StabilityReport two;
    two.poles = {{-250, 0, 1}, {-300, 0, 1}};
    two.ugf = 1e4;
    EXPECT_FALSE(pole_ordering_check(two));
    StabilityReport zero;
    zero.poles = {{-250, 0, 1}, {-1e9, 0, 1}};
    zero.zeros = {{5e3, 0, 1}};
    zero.ugf = 1e4;
    EXPECT_FALSE(pole_ordering_check(zero));
}

TEST(LoadGrid, EdgeCases) {
    EXPECT_THROW(load_grid(1e-3, 0.2, 1), ParameterError);
    const auto two = load_grid(1e-3, 0.2, 2);
    ASSERT_EQ(two.size(), 2u);
    EXPECT_EQ(two[0], 1e-3);
    EXPECT_EQ(two[1], 0.2);
    EXPECT_EQ(load_grid(0.1, 0.1, 25).size(), 1u);
    EXPECT_THROW(load_grid(0.2, 0.1, 5), ParameterError);
    EXPECT_THROW(load_grid(1e-3, 2.0, 5), ParameterError);
    EXPECT_THROW(load_grid(0.0, 0.1, 5), ParameterError);
    const auto g = load_grid(1e-3, 0.2, 25);
    for (std::size_t i = 1; i < g.size(); ++i) {
        EXPECT_GT(g[i], g[i - 1]);
    }
}

TEST(PmSweep, DeterministicAcrossThreads) {
    const auto a = pm_sweep(calibrated().params, calibrated().device, 1e-3, 0.2, 25, 1);
    const auto b = pm_sweep(calibrated().params, calibrated().device, 1e-3, 0.2, 25, 4);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        ASSERT_EQ(a[i].report.has_value(), b[i].report.has_value());
        EXPECT_EQ(a[i].il, b[i].il);
        if (a[i].report) {
            EXPECT_EQ(a[i].report->ugf, b[i].report->ugf);
            EXPECT_EQ(a[i].report->phase_margin, b[i].report->phase_margin);
            EXPECT_EQ(a[i].report->dc_gain_db, b[i].report->dc_gain_db);
        }
    }
}

TEST(PmSweep, SmallMillerCapacitorDegrades) {
    ProposedParams p = calibrated().params;
    p.cm = 0.4e-12;
    const auto rows = pm_sweep(p, calibrated().device, 1e-3, 0.2, 25);
    bool degraded = false;
    for (const auto& r : rows) {
        degraded = degraded || !r.report || r.report->phase_margin < 50.0 || !r.report->dominant_pole_ok;
    }
    EXPECT_TRUE(degraded);
}

TEST(PmSweep, RowErrorsAreRecorded) {
    ProposedParams p;
    p.gm1 = 1e-12;  // loop gain below unity everywhere
    const auto rows = pm_sweep(p, DeviceModel{}, 1e-3, 0.2, 5);
    ASSERT_EQ(rows.size(), 5u);
    for (const auto& r : rows) {
        EXPECT_FALSE(r.report.has_value());
        EXPECT_FALSE(r.error.empty());
    }
}

TEST(Calibrate, DefaultFreeSetReachesTargets) {
    const auto& r = calibrated();
    EXPECT_LT(r.residual, 0.25);
    EXPECT_NEAR(r.gain_db, 58.0, 0.5);
    EXPECT_NEAR(r.pm_deg, 64.0, 0.5);
    EXPECT_LE(r.evaluations, 2000);
}

TEST(Calibrate, FixedPoint) {
    const auto again = calibrate(calibrated().params, calibrated().device,
                                 reference().calibrate.targets, reference().calibrate.options);
    EXPECT_LT(again.residual, 1e-12);
    EXPECT_EQ(again.improvements, 0);
    EXPECT_EQ(again.params, calibrated().params);
}

TEST(Calibrate, SingleGm1MatchesLinearSolve) {
    const ProposedParams base = reference().proposed;
    const DeviceModel d = reference().device;
    CalibrationTargets t;
    t.pm_weight = 0.0;
    CalibrationOptions o;
    o.free = {FreeParam::gm1};
    const auto r = calibrate(base, d, t, o);
    const double g0 = 20.0 * std::log10(dc_gain(at_operating_point(base, operating_point(t.il, d))));
    const double want = base.gm1 * std::pow(10.0, (t.gain_db - g0) / 20.0);
    EXPECT_NEAR(r.params.gm1 / want, 1.0, 1e-3);
}

TEST(Calibrate, OtherSeedsStayWithinTwiceTheResidual) {
    const double floor = std::max(2.0 * calibrated().residual, reference().calibrate.options.stop_residual);
    for (std::uint64_t seed : {2u, 3u, 17u}) {
        auto o = reference().calibrate.options;
        o.seed = seed;
        const auto r = calibrate(reference().proposed, reference().device, reference().calibrate.targets, o);
        EXPECT_LE(r.residual, floor) << "seed " << seed;
    }
}

TEST(Calibrate, RejectsBadBoundsUpFront) {
    CalibrationOptions o;
    o.free = {FreeParam::gm1, FreeParam::ro2};
    o.bounds[FreeParam::gm1] = {1e-2, 1e-1};  // start value 1e-4 outside
    EXPECT_THROW(calibrate(ProposedParams{}, DeviceModel{}, CalibrationTargets{}, o), ParameterError);
    o.bounds[FreeParam::gm1] = {1e-3, 1e-5};
    EXPECT_THROW(calibrate(ProposedParams{}, DeviceModel{}, CalibrationTargets{}, o), ParameterError);
    o.free.clear();
    EXPECT_THROW(calibrate(ProposedParams{}, DeviceModel{}, CalibrationTargets{}, o), ParameterError);
}

TEST(Calibrate, UnreachableTargetCarriesBestPoint) {
    CalibrationOptions o;
    o.free = {FreeParam::gm1};
    o.bounds[FreeParam::gm1] = {1e-5, 1e-3};
    o.max_evaluations = 200;
    CalibrationTargets t;
    t.gain_db = 200.0;
    try {
        calibrate(reference().proposed, reference().device, t, o);
        FAIL() << "expected CalibrationFailed";
    } catch (const CalibrationFailed& e) {
        EXPECT_GT(e.best().residual, 0.25);
        EXPECT_NEAR(e.best().params.gm1, 1e-3, 1e-9);
    }
}
