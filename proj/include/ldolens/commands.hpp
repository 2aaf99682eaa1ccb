#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "ldolens/calibration.hpp"
#include "ldolens/config.hpp"
#include "ldolens/error.hpp"
#include "ldolens/frequency_response.hpp"
#include "ldolens/ldo_model.hpp"
#include "ldolens/output.hpp"
#include "ldolens/roots.hpp"
#include "ldolens/stability.hpp"
#include "ldolens/transient.hpp"

#ifndef LDOLENS_VERSION
#define LDOLENS_VERSION "0.0.0"
#endif

namespace ldolens {

enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitConfig = 2,
    kExitInconsistent = 3,
    kExitPmViolation = 4,
    kExitCalibrationFailed = 5,
};

struct CommandResult {
    int exit_code = kExitOk;
    nlohmann::ordered_json results = nlohmann::ordered_json::object();
    std::vector<std::string> files;
    std::string console;  // text for standard output
};

/// Tool version, the fully resolved config, command results and timing.
inline nlohmann::ordered_json run_report(const std::string& command, const RunConfig& cfg,
                                         const CommandResult& r, double wall_s) {
    nlohmann::ordered_json j;
    j["tool"] = "ldo-lens";
    j["version"] = LDOLENS_VERSION;
    j["command"] = command;
    j["exit_code"] = r.exit_code;
    j["config"] = emit_config(cfg);
    j["results"] = r.results;
    j["files"] = r.files;
    j["timings"] = {{"wall_s", wall_s}};
    return j;
}

namespace detail {

inline std::filesystem::path prepare_out_dir(const RunConfig& cfg) {
    const std::filesystem::path dir(cfg.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw IoError(dir.string(), "cannot create output directory" +
                                        (ec ? ": " + ec.message() : std::string()));
    }
    return dir;
}

inline void emit(CommandResult& r, const std::filesystem::path& path, const std::string& text) {
    write_file(path, text);
    r.files.push_back(path.string());
}

inline ProposedParams analysis_params(const RunConfig& cfg) {
    if (cfg.analysis_il) {
        return at_operating_point(cfg.proposed, operating_point(*cfg.analysis_il, cfg.device));
    }
    return cfg.proposed;
}

inline nlohmann::ordered_json roots_json(const std::vector<ComplexRoot>& rs) {
    auto a = nlohmann::ordered_json::array();
    for (const auto& z : rs) {
        a.push_back({z.re, z.im});
    }
    return a;
}

inline double json_number(double v) {
    return std::isfinite(v) ? v : std::numeric_limits<double>::quiet_NaN();
}

inline nlohmann::ordered_json report_json(const StabilityReport& s) {
    nlohmann::ordered_json j;
    j["dc_gain_db"] = s.dc_gain_db;
    j["ugf_rad_s"] = s.ugf;
    j["phase_margin_deg"] = s.phase_margin;
    j["gain_margin_db"] = s.gain_margin_db ? nlohmann::ordered_json(*s.gain_margin_db)
                                           : nlohmann::ordered_json(nullptr);
    j["dominant_pole_ok"] = s.dominant_pole_ok;
    j["poles"] = roots_json(s.poles);
    j["zeros"] = roots_json(s.zeros);
    return j;
}

/// Pairs analytic[i] with numeric[perm[i]] minimizing the largest relative
/// deviation. Sizes must match.
inline std::vector<std::size_t> match_roots(const std::vector<std::complex<double>>& analytic,
                                            const std::vector<std::complex<double>>& numeric) {
    std::vector<std::size_t> perm(numeric.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::size_t> best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            cost = std::max(cost, std::abs(analytic[i] - numeric[perm[i]]) / std::abs(analytic[i]));
        }
        if (cost < best_cost) {
            best_cost = cost;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace detail

// ---------------------------------------------------------------- bode

inline CommandResult cmd_bode(const RunConfig& cfg) {
    validate(cfg);
    CommandResult r;
    const auto dir = detail::prepare_out_dir(cfg);
    const auto p = detail::analysis_params(cfg);
    const auto h = proposed_tf(p);
    const auto grid = log_grid(cfg.bode.omega_min, cfg.bode.omega_max, cfg.bode.points_per_decade);
    const auto pts = bode(h, grid);

    CsvWriter csv({"omega_rad_s", "freq_hz", "mag_db", "phase_deg"});
    Series mag = series("#1f77b4", "|H|");
    Series ph = series("#2ca02c", "phase");
    for (const auto& b : pts) {
        csv.row({csv_number(b.omega), csv_number(b.omega / (2.0 * std::numbers::pi)),
                 csv_number(b.mag_db), csv_number(b.phase_deg)});
        mag.x.push_back(b.omega);
        mag.y.push_back(b.mag_db);
        ph.x.push_back(b.omega);
        ph.y.push_back(b.phase_deg);
    }
    detail::emit(r, dir / "bode.csv", csv.text());

    r.results["dc_gain_db"] = 20.0 * std::log10(std::abs(h.dc_value()));
    std::vector<double> marks;
    try {
        const auto s = analyze(h, cfg.scan);
        r.results["loop"] = detail::report_json(s);
        for (const auto& z : s.poles) marks.push_back(z.magnitude());
        for (const auto& z : s.zeros) marks.push_back(z.magnitude());
    } catch (const Error& e) {
        r.results["loop_error"] = e.what();
    }
    Plot plot = ldolens::plot("Loop gain", "omega (rad/s)", true);
    plot.panels.push_back(panel("magnitude (dB)", {mag}, {0.0}, marks));
    plot.panels.push_back(panel("phase (deg)", {ph}, {-180.0}, marks));
    detail::emit(r, dir / "bode.svg", render_svg(plot));
    char line[128];
    std::snprintf(line, sizeof line, "dc gain %.3f dB", r.results["dc_gain_db"].get<double>());
    r.console = line;
    if (r.results.contains("loop")) {
        std::snprintf(line, sizeof line, ", ugf %.6g rad/s, phase margin %.3f deg",
                      r.results["loop"]["ugf_rad_s"].get<double>(),
                      r.results["loop"]["phase_margin_deg"].get<double>());
        r.console += line;
    }
    r.console += "\n";
    return r;
}

// ---------------------------------------------------------------- poles

struct RootComparison {
    std::string kind;  // "pole" or "zero"
    std::complex<double> analytic;
    std::complex<double> numeric;
    double rel_dev;
};

/// Closed-form poles and zeros next to the root finder's, paired by nearest match.
inline std::vector<RootComparison> compare_roots(const ProposedParams& p) {
    const auto h = proposed_tf(p);
    const auto ap = analytic_poles(p);
    const auto az = analytic_zeros(p);
    std::vector<RootComparison> out;
    auto add = [&](const std::string& kind, const std::vector<std::complex<double>>& a,
                   const std::vector<ComplexRoot>& nr) {
        std::vector<std::complex<double>> n;
        for (const auto& z : nr) n.push_back(z.value());
        if (n.size() != a.size()) {
            throw Error("root count mismatch for " + kind + "s");
        }
        const auto perm = detail::match_roots(a, n);
        for (std::size_t i = 0; i < a.size(); ++i) {
            out.push_back({kind, a[i], n[perm[i]], std::abs(a[i] - n[perm[i]]) / std::abs(a[i])});
        }
    };
    add("pole", {ap.dominant().value(), ap.p23[0].value(), ap.p23[1].value()}, roots(h.den()));
    add("zero", {{az.z1, 0.0}, {az.z2, 0.0}}, roots(h.num()));
    return out;
}

inline CommandResult cmd_poles(const RunConfig& cfg) {
    validate(cfg);
    CommandResult r;
    const auto dir = detail::prepare_out_dir(cfg);
    const auto rows = compare_roots(detail::analysis_params(cfg));

    CsvWriter csv({"kind", "analytic_re", "analytic_im", "numeric_re", "numeric_im", "rel_dev"});
    char line[200];
    std::snprintf(line, sizeof line, "%-5s %24s %24s %24s %24s %10s\n", "kind", "analytic re",
                  "analytic im", "numeric re", "numeric im", "rel dev");
    r.console = line;
    double worst = 0.0;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& c : rows) {
        csv.row({c.kind, csv_number(c.analytic.real()), csv_number(c.analytic.imag()),
                 csv_number(c.numeric.real()), csv_number(c.numeric.imag()), csv_number(c.rel_dev)});
        std::snprintf(line, sizeof line, "%-5s %24.15e %24.15e %24.15e %24.15e %10.2e\n",
                      c.kind.c_str(), c.analytic.real(), c.analytic.imag(), c.numeric.real(),
                      c.numeric.imag(), c.rel_dev);
        r.console += line;
        worst = std::max(worst, c.rel_dev);
        arr.push_back({{"kind", c.kind},
                       {"analytic", {c.analytic.real(), c.analytic.imag()}},
                       {"numeric", {c.numeric.real(), c.numeric.imag()}},
                       {"rel_dev", c.rel_dev}});
    }
    detail::emit(r, dir / "poles.csv", csv.text());
    r.results["roots"] = arr;
    r.results["max_rel_dev"] = worst;
    if (!(worst < 1e-6)) {
        r.exit_code = kExitInconsistent;
        std::snprintf(line, sizeof line, "model inconsistency: max relative deviation %.3e >= 1e-6\n", worst);
        r.console += line;
    }
    return r;
}

// ---------------------------------------------------------------- pm-sweep

inline CommandResult cmd_pm_sweep(const RunConfig& cfg) {
    validate(cfg);
    CommandResult r;
    const auto dir = detail::prepare_out_dir(cfg);
    const auto rows = pm_sweep(cfg.proposed, cfg.device, cfg.sweep.il_lo, cfg.sweep.il_hi,
                               cfg.sweep.n_points, cfg.sweep.threads, cfg.scan);

    CsvWriter csv({"il_a", "gain_db", "ugf_rad_s", "pm_deg", "dominant_pole_ok", "error"});
    Series pm = series("#1f77b4", "phase margin");
    double min_pm = std::numeric_limits<double>::infinity();
    bool all_ok = true;
    int failures = 0;
    for (const auto& row : rows) {
        if (row.report) {
            const auto& s = *row.report;
            csv.row({csv_number(row.il), csv_number(s.dc_gain_db), csv_number(s.ugf),
                     csv_number(s.phase_margin), s.dominant_pole_ok ? "true" : "false", ""});
            pm.x.push_back(row.il);
            pm.y.push_back(s.phase_margin);
            min_pm = std::min(min_pm, s.phase_margin);
            all_ok = all_ok && s.dominant_pole_ok;
        } else {
            csv.row({csv_number(row.il), "", "", "", "", row.error});
            ++failures;
        }
    }
    detail::emit(r, dir / "pm_sweep.csv", csv.text());
    Plot plot = ldolens::plot("Phase margin over load", "load current (A)", true);
    plot.panels.push_back(panel("phase margin (deg)", {pm}, {50.0}));
    detail::emit(r, dir / "pm_sweep.svg", render_svg(plot));

    r.results["points"] = rows.size();
    r.results["failed_rows"] = failures;
    r.results["min_pm_deg"] = failures == static_cast<int>(rows.size())
                                  ? nlohmann::ordered_json(nullptr)
                                  : nlohmann::ordered_json(min_pm);
    r.results["dominant_pole_ok_everywhere"] = all_ok && failures == 0;
    char line[160];
    std::snprintf(line, sizeof line, "%zu points, min phase margin %.3f deg, %d failed rows\n",
                  rows.size(), min_pm, failures);
    r.console = line;
    if (failures > 0 || !(min_pm > 50.0)) {
        r.exit_code = kExitPmViolation;
    }
    return r;
}

// ---------------------------------------------------------------- transient

// Solver output can run to ~1e6 samples; files keep the extreme of each block.
inline constexpr std::size_t kCsvMaxRows = 20000;

inline Waveform decimated(const Waveform& w, std::size_t max_points) {
    if (w.t.size() <= max_points) {
        return w;
    }
    Waveform out;
    const std::size_t stride = (w.t.size() + max_points - 1) / max_points;
    for (std::size_t i = 0; i < w.t.size(); i += stride) {
        // Keep the extreme sample of each block so peaks survive.
        std::size_t k = i;
        for (std::size_t j = i; j < std::min(i + stride, w.t.size()); ++j) {
            if (std::abs(w.vout[j]) > std::abs(w.vout[k])) k = j;
        }
        out.t.push_back(w.t[k]);
        out.vout.push_back(w.vout[k]);
        out.il.push_back(w.il[k]);
    }
    return out;
}

inline std::string waveform_csv(const Waveform& w) {
    CsvWriter csv({"t_s", "vout_dev_v", "il_a"});
    for (std::size_t i = 0; i < w.t.size(); ++i) {
        csv.row({csv_number(w.t[i]), csv_number(w.vout[i]), csv_number(w.il[i])});
    }
    return csv.text();
}

inline nlohmann::ordered_json metrics_json(const TransientMetrics& m) {
    return {{"peak_dev_v", m.peak_dev},
            {"recovery_time_s", m.recovery_time},
            {"settling_band_v", m.settling_band}};
}

inline CommandResult cmd_transient(const RunConfig& cfg) {
    validate(cfg);
    CommandResult r;
    const auto dir = detail::prepare_out_dir(cfg);
    const auto& tr = cfg.transient;
    const double band = cfg.settling_band();
    const auto model = build_state_model(cfg.proposed, cfg.device, cfg.fast, cfg.model);
    const auto wave = simulate(model, tr.step, tr.t_end, tr.tol);
    const auto m = metrics(wave, tr.step, band);
    detail::emit(r, dir / "transient.csv", waveform_csv(decimated(wave, kCsvMaxRows)));
    r.results["fast_path_enabled"] = cfg.fast.enabled;
    r.results["samples"] = wave.t.size();
    r.results["metrics"] = metrics_json(m);

    char line[200];
    std::snprintf(line, sizeof line, "fast path %s: peak %.3f mV, recovery %.3f us\n",
                  cfg.fast.enabled ? "on" : "off", m.peak_dev * 1e3, m.recovery_time * 1e6);
    r.console = line;

    auto to_us_mv = [](const Waveform& w, const std::string& color, const std::string& label) {
        Series s = series(color, label);
        for (std::size_t i = 0; i < w.t.size(); ++i) {
            s.x.push_back(w.t[i] * 1e6);
            s.y.push_back(w.vout[i] * 1e3);
        }
        return s;
    };
    const auto shown = decimated(wave, 4000);
    Panel vp = panel("output deviation (mV)",
                     {to_us_mv(shown, "#1f77b4", cfg.fast.enabled ? "fast path on" : "fast path off")},
                     {band * 1e3, -band * 1e3});
    Panel ip = panel("load current (mA)", {});
    Series il = series("#7f7f7f", "load");
    for (std::size_t i = 0; i < shown.t.size(); ++i) {
        il.x.push_back(shown.t[i] * 1e6);
        il.y.push_back(shown.il[i] * 1e3);
    }
    ip.series.push_back(il);

    if (tr.compare && cfg.fast.enabled) {
        FastPathParams off = cfg.fast;
        off.enabled = false;
        const auto model_off = build_state_model(cfg.proposed, cfg.device, off, cfg.model);
        const auto wave_off = simulate(model_off, tr.step, tr.t_end, tr.tol);
        const auto m_off = metrics(wave_off, tr.step, band);
        detail::emit(r, dir / "transient_off.csv", waveform_csv(decimated(wave_off, kCsvMaxRows)));
        vp.series.push_back(to_us_mv(decimated(wave_off, 4000), "#ff7f0e", "fast path off"));
        r.results["metrics_off"] = metrics_json(m_off);
        r.results["peak_delta_v"] = m.peak_dev - m_off.peak_dev;
        r.results["recovery_delta_s"] = m.recovery_time - m_off.recovery_time;
        std::snprintf(line, sizeof line, "fast path off: peak %.3f mV, recovery %.3f us\n",
                      m_off.peak_dev * 1e3, m_off.recovery_time * 1e6);
        r.console += line;
    }
    Plot plot = ldolens::plot("Load transient", "time (us)", false);
    plot.panels.push_back(vp);
    plot.panels.push_back(ip);
    detail::emit(r, dir / "transient.svg", render_svg(plot));
    return r;
}

// ---------------------------------------------------------------- calibrate

struct CalibrationOutcome {
    RunConfig calibrated;
    CalibrationResult loop;
    bool loop_ok = false;
    std::optional<FastPathFit> fast;
};

/// Loop calibration at the target load, then (optionally) the fast-path gain
/// fit against the transient peak target. Never throws CalibrationFailed;
/// `loop_ok` reports it.
inline CalibrationOutcome calibrate_config(const RunConfig& cfg) {
    validate(cfg);
    CalibrationOutcome out;
    try {
        out.loop = calibrate(cfg.proposed, cfg.device, cfg.calibrate.targets, cfg.calibrate.options);
        out.loop_ok = true;
    } catch (const CalibrationFailed& e) {
        out.loop = e.best();
    }
    out.calibrated = cfg;
    out.calibrated.proposed = out.loop.params;
    out.calibrated.device = out.loop.device;
    out.calibrated.analysis_il = cfg.calibrate.targets.il;
    if (out.loop_ok && cfg.calibrate.fast_path) {
        const auto& tr = cfg.transient;
        out.fast = calibrate_fast_path(out.loop.params, out.loop.device, cfg.fast, cfg.model, tr.step,
                                       tr.t_end, tr.tol, cfg.settling_band(),
                                       cfg.calibrate.target_peak, cfg.calibrate.g_fast_lo,
                                       cfg.calibrate.g_fast_hi);
        out.calibrated.fast.g_fast = out.fast->g_fast;
        out.calibrated.fast.enabled = true;
    }
    return out;
}

inline CommandResult cmd_calibrate(const RunConfig& cfg) {
    validate(cfg);
    CommandResult r;
    const auto dir = detail::prepare_out_dir(cfg);
    const auto out = calibrate_config(cfg);
    const bool fast_ok = !out.fast || out.fast->converged;
    const bool ok = out.loop_ok && fast_ok;

    std::string text;
    if (!ok) {
        text += "# WARNING: calibration failed; these are the best parameters found.\n";
        if (!out.loop_ok) {
            text += "# WARNING: loop residual " + format_double(out.loop.residual) +
                    " exceeds calibrate.fail_residual.\n";
        }
        if (!fast_ok) {
            text += "# WARNING: fast-path gain did not reach the target peak within its range.\n";
        }
    }
    text += "# calibrated by ldo-lens " LDOLENS_VERSION "\n";
    text += emit_config(out.calibrated);
    detail::emit(r, dir / "calibrated.cfg", text);

    r.results["residual"] = out.loop.residual;
    r.results["evaluations"] = out.loop.evaluations;
    r.results["improvements"] = out.loop.improvements;
    r.results["gain_db"] = detail::json_number(out.loop.gain_db);
    r.results["pm_deg"] = detail::json_number(out.loop.pm_deg);
    r.results["loop_converged"] = out.loop_ok;
    for (FreeParam f : cfg.calibrate.options.free) {
        ProposedParams p = out.loop.params;
        DeviceModel d = out.loop.device;
        r.results["free"][std::string(to_string(f))] = detail::free_slot(f, p, d);
    }
    char line[240];
    std::snprintf(line, sizeof line,
                  "loop: residual %.3e after %d evaluations, gain %.4f dB, phase margin %.4f deg%s\n",
                  out.loop.residual, out.loop.evaluations, out.loop.gain_db, out.loop.pm_deg,
                  out.loop_ok ? "" : " (FAILED)");
    r.console = line;
    if (out.fast) {
        r.results["fast_path"] = {{"g_fast_s", out.fast->g_fast},
                                  {"peak_dev_v", out.fast->peak_dev},
                                  {"recovery_time_s", out.fast->recovery_time},
                                  {"simulations", out.fast->simulations},
                                  {"converged", out.fast->converged}};
        std::snprintf(line, sizeof line,
                      "fast path: g_fast %.6g S, peak %.3f mV, recovery %.3f us after %d simulations%s\n",
                      out.fast->g_fast, out.fast->peak_dev * 1e3, out.fast->recovery_time * 1e6,
                      out.fast->simulations, out.fast->converged ? "" : " (FAILED)");
        r.console += line;
    }
    if (!ok) {
        r.exit_code = kExitCalibrationFailed;
    }
    return r;
}

// ---------------------------------------------------------------- compare

/// Output-pole frequency ratio of the baseline between two load currents,
/// using the pure device mapping Ro = VA / IL.
inline double conventional_pole_shift(const ConventionalParams& c, DeviceModel d, double il_lo,
                                      double il_hi) {
    d.rload_ext.reset();
    const auto lo = conventional_corners(at_operating_point(c, operating_point(il_lo, d)));
    const auto hi = conventional_corners(at_operating_point(c, operating_point(il_hi, d)));
    return hi.output_pole / lo.output_pole;
}

inline CommandResult cmd_compare(const RunConfig& cfg) {
    validate(cfg);
    CommandResult r;
    const auto dir = detail::prepare_out_dir(cfg);
    const auto hp = proposed_tf(detail::analysis_params(cfg));
    ConventionalParams conv = cfg.conventional;
    if (cfg.analysis_il) {
        conv = at_operating_point(conv, operating_point(*cfg.analysis_il, cfg.device));
    }
    for (const auto& w : conv.warnings()) {
        r.console += "warning: " + w + "\n";
    }
    const auto hc = conventional_tf(conv);
    const auto grid = log_grid(cfg.bode.omega_min, cfg.bode.omega_max, cfg.bode.points_per_decade);
    const auto bp = bode(hp, grid);
    const auto bc = bode(hc, grid);

    CsvWriter csv({"omega_rad_s", "freq_hz", "conventional_mag_db", "conventional_phase_deg",
                   "proposed_mag_db", "proposed_phase_deg"});
    Series cm = series("#ff7f0e", "conventional");
    Series pm = series("#1f77b4", "proposed");
    Series cph = series("#ff7f0e", "conventional");
    Series pph = series("#1f77b4", "proposed");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        csv.row({csv_number(grid[i]), csv_number(grid[i] / (2.0 * std::numbers::pi)),
                 csv_number(bc[i].mag_db), csv_number(bc[i].phase_deg), csv_number(bp[i].mag_db),
                 csv_number(bp[i].phase_deg)});
        cm.x.push_back(grid[i]);
        cm.y.push_back(bc[i].mag_db);
        pm.x.push_back(grid[i]);
        pm.y.push_back(bp[i].mag_db);
        cph.x.push_back(grid[i]);
        cph.y.push_back(bc[i].phase_deg);
        pph.x.push_back(grid[i]);
        pph.y.push_back(bp[i].phase_deg);
    }
    detail::emit(r, dir / "compare.csv", csv.text());
    Plot plot = ldolens::plot("Conventional vs proposed loop gain", "omega (rad/s)", true);
    plot.panels.push_back(panel("magnitude (dB)", {cm, pm}, {0.0}));
    plot.panels.push_back(panel("phase (deg)", {cph, pph}, {-180.0}));
    detail::emit(r, dir / "compare.svg", render_svg(plot));

    for (const auto& [name, h] : {std::pair{"conventional", hc}, std::pair{"proposed", hp}}) {
        try {
            r.results[name] = detail::report_json(analyze(h, cfg.scan));
        } catch (const Error& e) {
            r.results[name] = {{"error", e.what()}};
        }
    }
    const auto corners = conventional_corners(conv);
    r.results["conventional_corners_rad_s"] = {{"amp_pole", corners.amp_pole},
                                               {"output_pole", corners.output_pole},
                                               {"esr_zero", corners.esr_zero}};
    const double shift = conventional_pole_shift(cfg.conventional, cfg.device, 1e-3, 0.1);
    r.results["conventional_output_pole_shift_1ma_to_100ma"] = shift;
    char line[160];
    std::snprintf(line, sizeof line, "conventional output pole moves %.4gx from 1 mA to 100 mA\n", shift);
    r.console += line;
    return r;
}

// ---------------------------------------------------------------- dispatch

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"bode", "poles", "pm-sweep", "transient", "calibrate",
                                                "compare"};
    return names;
}

inline CommandResult run_command(const std::string& name, const RunConfig& cfg) {
    if (name == "bode") return cmd_bode(cfg);
    if (name == "poles") return cmd_poles(cfg);
    if (name == "pm-sweep") return cmd_pm_sweep(cfg);
    if (name == "transient") return cmd_transient(cfg);
    if (name == "calibrate") return cmd_calibrate(cfg);
    if (name == "compare") return cmd_compare(cfg);
    throw ConfigError("unknown command '" + name + "'");
}

}  // namespace ldolens
