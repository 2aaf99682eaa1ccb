#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "ldolens/config.hpp"
#include "ldolens/output.hpp"

namespace fs = std::filesystem;
using namespace ldolens;

namespace {

const fs::path& scratch() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("ldolens_cli_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run ldo_lens(const std::string& args) {
    static int n = 0;
    const auto out = scratch() / ("stdout" + std::to_string(n));
    const auto err = scratch() / ("stderr" + std::to_string(n++));
    const std::string cmd = std::string(LDOLENS_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(out), read_file(err)};
}

fs::path write_cfg(const std::string& name, const std::string& text) {
    const auto p = scratch() / name;
    write_file(p, text);
    return p;
}

std::string ref_cfg() { return std::string(LDOLENS_CONFIG_DIR) + "/reference.cfg"; }
std::string nominal_cfg() { return std::string(LDOLENS_CONFIG_DIR) + "/nominal_a.cfg"; }

nlohmann::json report(const fs::path& dir, const std::string& name) {
    return nlohmann::json::parse(read_file(dir / (name + "_report.json")));
}

std::vector<std::vector<double>> numeric_csv(const fs::path& p) {
    const auto rows = parse_csv(read_file(p));
    std::vector<std::vector<double>> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::vector<double> r;
        for (const auto& f : rows[i]) {
            r.push_back(f.empty() || f == "true" || f == "false" ? (f == "true" ? 1.0 : 0.0) : std::stod(f));
        }
        out.push_back(r);
    }
    return out;
}

// Calibrated reference config, produced once per process.
const fs::path& calibrated_cfg() {
    static const fs::path p = [] {
        const auto dir = scratch() / "cal";
        const auto r = ldo_lens("calibrate --config " + ref_cfg() + " --out " + dir.string());
        if (r.code != 0) {
            throw std::runtime_error("calibrate failed: " + r.err);
        }
        return dir / "calibrated.cfg";
    }();
    return p;
}

}  // namespace

TEST(Cli, Version) {
    const auto r = ldo_lens("--version");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find(LDOLENS_VERSION), std::string::npos);
}

TEST(Cli, UsageErrorsAreConfigErrors) {
    EXPECT_EQ(ldo_lens("frobnicate --config " + nominal_cfg()).code, 2);
    EXPECT_EQ(ldo_lens("bode").code, 2);
    EXPECT_EQ(ldo_lens("bode --config /nonexistent.cfg").code, 2);
    const auto bad = write_cfg("unknown.cfg", "proposed.gm1_s = 1e-4\nproposed.typo = 3\n");
    const auto r = ldo_lens("bode --config " + bad.string() + " --out " + (scratch() / "x").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST(Cli, ZeroCapacitanceRejectedBeforeComputation) {
    const auto cfg = write_cfg("zero_cap.cfg", "proposed.cm_f = 0\n");
    const auto dir = scratch() / "zero_cap";
    const auto r = ldo_lens("poles --config " + cfg.string() + " --out " + dir.string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("cm"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir / "poles.csv"));
}

TEST(Cli, BodeNominalDcRow) {
    const auto dir = scratch() / "bode_a";
    ASSERT_EQ(ldo_lens("bode --config " + nominal_cfg() + " --out " + dir.string()).code, 0);
    const auto rows = numeric_csv(dir / "bode.csv");
    ASSERT_FALSE(rows.empty());
    EXPECT_EQ(rows[0][0], 1e-2);
    EXPECT_NEAR(rows[0][2], 100.0, 0.01);
    EXPECT_TRUE(fs::exists(dir / "bode.svg"));
}

TEST(Cli, BodeCsvReproducesPhaseMargin) {
    const auto dir = scratch() / "bode_pm";
    ASSERT_EQ(ldo_lens("bode --config " + nominal_cfg() + " --out " + dir.string()).code, 0);
    const auto rows = numeric_csv(dir / "bode.csv");
    double pm = NAN;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i - 1][2] >= 0.0 && rows[i][2] < 0.0) {
            const double f = rows[i - 1][2] / (rows[i - 1][2] - rows[i][2]);
            pm = 180.0 + rows[i - 1][3] + f * (rows[i][3] - rows[i - 1][3]);
            break;
        }
    }
    const double reported = report(dir, "bode")["results"]["loop"]["phase_margin_deg"].get<double>();
    EXPECT_NEAR(pm, reported, 0.1);
}

TEST(Cli, PolesNominal) {
    const auto dir = scratch() / "poles_a";
    const auto r = ldo_lens("poles --config " + nominal_cfg() + " --out " + dir.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = parse_csv(read_file(dir / "poles.csv"));
    ASSERT_EQ(rows.size(), 6u);
    EXPECT_EQ(rows[1][0], "pole");
    EXPECT_NEAR(std::stod(rows[1][1]), -250.0, 1e-9);
    EXPECT_NEAR(std::stod(rows[1][3]), -250.0, 1e-6);
    int zeros = 0;
    for (const auto& row : rows) {
        if (row[0] != "zero") continue;
        ++zeros;
        EXPECT_NEAR(std::abs(std::stod(row[1])), 5e9, 5e9 * 1e-3);
        EXPECT_NEAR(std::abs(std::stod(row[3])), 5e9, 5e9 * 1e-3);
    }
    EXPECT_EQ(zeros, 2);
}

TEST(Cli, PolesInconsistencyExit) {
    // Three coincident poles: numeric roots lose about a third of the digits.
    const auto cfg = write_cfg("triple.cfg",
                               "proposed.ro1_ohm = 500\nproposed.cf_f = 4e-4\nproposed.cf_range_override = true\n");
    const auto r = ldo_lens("poles --config " + cfg.string() + " --out " + (scratch() / "triple").string());
    EXPECT_EQ(r.code, 3) << r.out << r.err;
}

TEST(Cli, CalibrateThenBodeShowsTargetGain) {
    const auto dir = scratch() / "bode_cal";
    ASSERT_EQ(ldo_lens("bode --config " + calibrated_cfg().string() + " --out " + dir.string()).code, 0);
    const auto rows = numeric_csv(dir / "bode.csv");
    EXPECT_NEAR(rows[0][2], 58.0, 0.5);
    const auto cal = report(calibrated_cfg().parent_path(), "calibrate")["results"];
    EXPECT_NEAR(cal["gain_db"].get<double>(), 58.0, 0.5);
    EXPECT_NEAR(cal["pm_deg"].get<double>(), 64.0, 0.5);
}

TEST(Cli, RecalibrationIsAFixedPoint) {
    const auto dir = scratch() / "recal";
    const auto r = ldo_lens("calibrate --config " + calibrated_cfg().string() + " --out " + dir.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_LT(report(dir, "calibrate")["results"]["residual"].get<double>(), 1e-12);
    RunConfig a = load_config(calibrated_cfg().string());
    RunConfig b = load_config((dir / "calibrated.cfg").string());
    b.out_dir = a.out_dir;
    EXPECT_TRUE(a == b);
}

TEST(Cli, OtherSeedResidualWithinTwice) {
    const auto dir = scratch() / "seed7";
    ASSERT_EQ(ldo_lens("calibrate --config " + ref_cfg() + " --seed 7 --out " + dir.string()).code, 0);
    const double base = report(calibrated_cfg().parent_path(), "calibrate")["results"]["residual"].get<double>();
    const double other = report(dir, "calibrate")["results"]["residual"].get<double>();
    EXPECT_LE(other, std::max(2.0 * base, 1e-12));
}

TEST(Cli, CalibrationFailureExit) {
    const auto cfg = write_cfg("unreachable.cfg",
                               "calibrate.free = gm1\ncalibrate.bounds.gm1 = 1e-5:1e-3\n"
                               "calibrate.target_gain_db = 200\ncalibrate.max_evaluations = 100\n"
                               "proposed.gm1_s = 1e-4\n");
    const auto dir = scratch() / "unreachable";
    const auto r = ldo_lens("calibrate --config " + cfg.string() + " --out " + dir.string());
    EXPECT_EQ(r.code, 5);
    const std::string text = read_file(dir / "calibrated.cfg");
    EXPECT_EQ(text.rfind("# WARNING", 0), 0u);
    EXPECT_NO_THROW(parse_config(text));
}

TEST(Cli, SweepCalibratedFullLoad) {
    const auto dir = scratch() / "sweep_cal";
    const auto r = ldo_lens("pm-sweep --config " + calibrated_cfg().string() + " --out " + dir.string());
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(numeric_csv(dir / "pm_sweep.csv").size(), 25u);
}

TEST(Cli, SweepSmallMillerCapacitorExit) {
    std::string text = read_file(calibrated_cfg());
    text += "\nproposed.cm_f = 0.4e-12\n";
    const auto cfg = write_cfg("small_cm.cfg", text);
    EXPECT_EQ(ldo_lens("pm-sweep --config " + cfg.string() + " --out " + (scratch() / "small_cm").string()).code, 4);
}

TEST(Cli, SweepSinglePoint) {
    const auto cfg = write_cfg("single.cfg", "sweep.il_lo_a = 0.05\nsweep.il_hi_a = 0.05\n");
    const auto dir = scratch() / "single";
    ldo_lens("pm-sweep --config " + cfg.string() + " --out " + dir.string());
    const auto rows = numeric_csv(dir / "pm_sweep.csv");
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0][0], 0.05);
}

TEST(Cli, ZeroStepIsFlat) {
    std::string text = read_file(calibrated_cfg());
    text += "\ntransient.i_low_a = 0.05\ntransient.i_high_a = 0.05\n";
    const auto cfg = write_cfg("flat.cfg", text);
    const auto dir = scratch() / "flat";
    ASSERT_EQ(ldo_lens("transient --config " + cfg.string() + " --out " + dir.string()).code, 0);
    for (const auto& row : numeric_csv(dir / "transient.csv")) {
        ASSERT_EQ(row[1], 0.0);
    }
    const auto m = report(dir, "transient")["results"]["metrics"];
    EXPECT_EQ(m["peak_dev_v"].get<double>(), 0.0);
    EXPECT_EQ(m["recovery_time_s"].get<double>(), 0.0);
}

TEST(Cli, CalibratedTransientScenario) {
    const auto dir = scratch() / "transient_cal";
    ASSERT_EQ(ldo_lens("transient --config " + calibrated_cfg().string() + " --out " + dir.string()).code, 0);
    const auto res = report(dir, "transient")["results"];
    const double peak = res["metrics"]["peak_dev_v"].get<double>();
    const double rec = res["metrics"]["recovery_time_s"].get<double>();
    EXPECT_NEAR(peak, 0.04, 0.25 * 0.04);
    EXPECT_NEAR(rec, 30e-6, 0.5 * 30e-6);
    EXPECT_LT(peak, res["metrics_off"]["peak_dev_v"].get<double>());
    EXPECT_TRUE(fs::exists(dir / "transient_off.csv"));
    EXPECT_TRUE(fs::exists(dir / "transient.svg"));
}

TEST(Cli, OutputsAreReproducible) {
    for (const char* cmd : {"bode", "pm-sweep", "transient", "compare"}) {
        const auto a = scratch() / (std::string("repro_a_") + cmd);
        const auto b = scratch() / (std::string("repro_b_") + cmd);
        ldo_lens(std::string(cmd) + " --config " + calibrated_cfg().string() + " --out " + a.string());
        ldo_lens(std::string(cmd) + " --config " + calibrated_cfg().string() + " --out " + b.string());
        for (const auto& e : fs::directory_iterator(a)) {
            if (e.path().extension() != ".csv" && e.path().extension() != ".svg") continue;
            EXPECT_EQ(read_file(e.path()), read_file(b / e.path().filename())) << e.path();
        }
    }
}

TEST(Cli, CompareShowsHundredfoldShift) {
    const auto dir = scratch() / "compare";
    ASSERT_EQ(ldo_lens("compare --config " + calibrated_cfg().string() + " --out " + dir.string()).code, 0);
    const double shift =
        report(dir, "compare")["results"]["conventional_output_pole_shift_1ma_to_100ma"].get<double>();
    EXPECT_NEAR(shift, 100.0, 5.0);
}

TEST(Cli, UnwritableOutputDirectory) {
    const auto blocker = write_cfg("blocker", "not a directory\n");
    const auto target = blocker / "sub";
    const auto r = ldo_lens("bode --config " + nominal_cfg() + " --out " + target.string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find(target.string()), std::string::npos) << r.err;
}
