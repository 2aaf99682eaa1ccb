#pragma once

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ldolens/calibration.hpp"
#include "ldolens/error.hpp"
#include "ldolens/ldo_model.hpp"
#include "ldolens/stability.hpp"
#include "ldolens/transient.hpp"

namespace ldolens {

struct BodeSettings {
    double omega_min = 1e-2;  // rad/s
    double omega_max = 1e12;  // rad/s
    int points_per_decade = 50;

    friend bool operator==(const BodeSettings&, const BodeSettings&) = default;
};

struct SweepSettings {
    double il_lo = 1e-3;  // A
    double il_hi = 0.2;   // A
    int n_points = 25;
    unsigned threads = 0;  // 0 = hardware concurrency

    friend bool operator==(const SweepSettings&, const SweepSettings&) = default;
};

struct TransientSettings {
    LoadStep step;
    double t_end = 100e-6;  // s
    double tol = 1e-6;
    std::optional<double> band;  // V; unset means 1% of meta.vout_nominal
    bool compare = true;         // also run with the fast path off

    friend bool operator==(const TransientSettings&, const TransientSettings&) = default;
};

struct CalibrateSettings {
    CalibrationTargets targets;
    CalibrationOptions options;
    bool fast_path = true;        // also fit g_fast to the transient peak target
    double target_peak = 0.04;    // V
    double g_fast_lo = 1e-6;      // S
    double g_fast_hi = 1.0;       // S

    friend bool operator==(const CalibrateSettings& a, const CalibrateSettings& b) {
        return a.targets.gain_db == b.targets.gain_db && a.targets.pm_deg == b.targets.pm_deg &&
               a.targets.il == b.targets.il && a.targets.pm_weight == b.targets.pm_weight &&
               a.options.free == b.options.free && a.options.seed == b.options.seed &&
               a.options.max_evaluations == b.options.max_evaluations &&
               a.options.restarts == b.options.restarts &&
               a.options.fail_residual == b.options.fail_residual &&
               a.options.stop_residual == b.options.stop_residual &&
               bounds_equal(a.options.bounds, b.options.bounds) && a.fast_path == b.fast_path &&
               a.target_peak == b.target_peak && a.g_fast_lo == b.g_fast_lo &&
               a.g_fast_hi == b.g_fast_hi;
    }

private:
    static bool bounds_equal(const std::map<FreeParam, Bounds>& a,
                             const std::map<FreeParam, Bounds>& b) {
        if (a.size() != b.size()) {
            return false;
        }
        for (const auto& [k, v] : a) {
            const auto it = b.find(k);
            if (it == b.end() || it->second.lo != v.lo || it->second.hi != v.hi) {
                return false;
            }
        }
        return true;
    }
};

/// Documentation-only figures of the reference chip.
struct MetaSettings {
    double vout_nominal = 1.25;  // V
    double vin = -15.0;          // V
    double quiescent = 45e-6;    // A

    friend bool operator==(const MetaSettings&, const MetaSettings&) = default;
};

struct RunConfig {
    ProposedParams proposed;
    ConventionalParams conventional;
    DeviceModel device;
    FastPathParams fast;
    ModelOptions model;
    ScanOptions scan;
    BodeSettings bode;
    SweepSettings sweep;
    TransientSettings transient;
    CalibrateSettings calibrate;
    MetaSettings meta;
    // When set, bode/poles/compare map the proposed parameters to this load
    // current through the device model first.
    std::optional<double> analysis_il;
    std::string out_dir = "out";

    double settling_band() const { return transient.band.value_or(0.01 * meta.vout_nominal); }

    friend bool operator==(const RunConfig& a, const RunConfig& b) {
        return a.proposed == b.proposed && a.conventional == b.conventional &&
               a.device == b.device && a.fast == b.fast && a.model.c_int1 == b.model.c_int1 &&
               a.model.i_max == b.model.i_max && a.model.law == b.model.law &&
               a.model.open_loop == b.model.open_loop && a.model.i_ea == b.model.i_ea &&
               a.scan.lo == b.scan.lo && a.scan.hi == b.scan.hi &&
               a.scan.points_per_decade == b.scan.points_per_decade &&
               a.scan.rel_tol == b.scan.rel_tol && a.bode == b.bode && a.sweep == b.sweep &&
               a.transient == b.transient && a.calibrate == b.calibrate && a.meta == b.meta &&
               a.analysis_il == b.analysis_il && a.out_dir == b.out_dir;
    }
};

/// Shortest text that parses back to exactly `v`.
inline std::string format_double(double v) {
    char buf[32];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) {
            break;
        }
    }
    return buf;
}

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(x)) {
        throw ConfigError(key + ": expected a finite number, got '" + v + "'");
    }
    return x;
}

inline long long parse_integer(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
    return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        out.push_back(trim(cur));
    }
    return out;
}

struct Field {
    std::string key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field real(std::string key, T RunConfig::*section, double T::*member) {
    return {key,
            [=](RunConfig& c, const std::string& v) { (c.*section).*member = parse_double(key, v); },
            [=](const RunConfig& c) { return format_double((c.*section).*member); }};
}

template <typename T>
Field maybe_real(std::string key, T RunConfig::*section, std::optional<double> T::*member) {
    return {key,
            [=](RunConfig& c, const std::string& v) {
                (c.*section).*member =
                    v == "none" ? std::nullopt : std::optional<double>(parse_double(key, v));
            },
            [=](const RunConfig& c) {
                const auto& o = (c.*section).*member;
                return o ? format_double(*o) : std::string("none");
            }};
}

template <typename T, typename I>
Field integer(std::string key, T RunConfig::*section, I T::*member, long long lo, long long hi) {
    return {key,
            [=](RunConfig& c, const std::string& v) {
                const long long x = parse_integer(key, v);
                if (x < lo || x > hi) {
                    throw ConfigError(key + ": value " + v + " out of range [" +
                                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
                }
                (c.*section).*member = static_cast<I>(x);
            },
            [=](const RunConfig& c) { return std::to_string((c.*section).*member); }};
}

template <typename T>
Field boolean(std::string key, T RunConfig::*section, bool T::*member) {
    return {key,
            [=](RunConfig& c, const std::string& v) { (c.*section).*member = parse_bool(key, v); },
            [=](const RunConfig& c) {
                return std::string((c.*section).*member ? "true" : "false");
            }};
}

inline const std::vector<Field>& fields() {
    static const std::vector<Field> f = [] {
        using C = RunConfig;
        std::vector<Field> v{
            real("proposed.gm1_s", &C::proposed, &ProposedParams::gm1),
            real("proposed.gm2_s", &C::proposed, &ProposedParams::gm2),
            real("proposed.gmp_s", &C::proposed, &ProposedParams::gmp),
            real("proposed.ro1_ohm", &C::proposed, &ProposedParams::ro1),
            real("proposed.ro2_ohm", &C::proposed, &ProposedParams::ro2),
            real("proposed.ro_ohm", &C::proposed, &ProposedParams::ro),
            real("proposed.cm_f", &C::proposed, &ProposedParams::cm),
            real("proposed.cp_f", &C::proposed, &ProposedParams::cp),
            real("proposed.cf_f", &C::proposed, &ProposedParams::cf),
            boolean("proposed.cf_range_override", &C::proposed, &ProposedParams::cf_range_override),

            real("conventional.ra_ohm", &C::conventional, &ConventionalParams::ra),
            real("conventional.ca_f", &C::conventional, &ConventionalParams::ca),
            real("conventional.ro_ohm", &C::conventional, &ConventionalParams::ro),
            real("conventional.cl_f", &C::conventional, &ConventionalParams::cl),
            real("conventional.r_esr_ohm", &C::conventional, &ConventionalParams::r_esr),
            real("conventional.adc", &C::conventional, &ConventionalParams::adc),

            real("device.vt_v", &C::device, &DeviceModel::vt),
            real("device.va_v", &C::device, &DeviceModel::va),
            real("device.cp0_f", &C::device, &DeviceModel::cp0),
            maybe_real("device.rload_ext_ohm", &C::device, &DeviceModel::rload_ext),

            real("fast.c1_f", &C::fast, &FastPathParams::c1),
            real("fast.r_hp_ohm", &C::fast, &FastPathParams::r_hp),
            real("fast.g_fast_s", &C::fast, &FastPathParams::g_fast),
            real("fast.i_bias_fast_a", &C::fast, &FastPathParams::i_bias_fast),
            boolean("fast.enabled", &C::fast, &FastPathParams::enabled),

            real("model.c_int1_f", &C::model, &ModelOptions::c_int1),
            real("model.i_max_a", &C::model, &ModelOptions::i_max),
            real("model.i_ea_a", &C::model, &ModelOptions::i_ea),
            Field{"model.pass_law",
                  [](C& c, const std::string& v) {
                      if (v == "exponential") c.model.law = PassLaw::exponential;
                      else if (v == "linear") c.model.law = PassLaw::linear;
                      else throw ConfigError("model.pass_law: expected exponential or linear, got '" + v + "'");
                  },
                  [](const C& c) {
                      return std::string(c.model.law == PassLaw::linear ? "linear" : "exponential");
                  }},
            boolean("model.open_loop", &C::model, &ModelOptions::open_loop),

            real("scan.lo_rad_s", &C::scan, &ScanOptions::lo),
            real("scan.hi_rad_s", &C::scan, &ScanOptions::hi),
            integer("scan.points_per_decade", &C::scan, &ScanOptions::points_per_decade, 1, 100000),
            real("scan.rel_tol", &C::scan, &ScanOptions::rel_tol),

            real("bode.omega_min_rad_s", &C::bode, &BodeSettings::omega_min),
            real("bode.omega_max_rad_s", &C::bode, &BodeSettings::omega_max),
            integer("bode.points_per_decade", &C::bode, &BodeSettings::points_per_decade, 1, 100000),

            real("sweep.il_lo_a", &C::sweep, &SweepSettings::il_lo),
            real("sweep.il_hi_a", &C::sweep, &SweepSettings::il_hi),
            integer("sweep.n_points", &C::sweep, &SweepSettings::n_points, 2, 1000000),
            integer("sweep.threads", &C::sweep, &SweepSettings::threads, 0, 4096),

            Field{"transient.i_low_a",
                  [](C& c, const std::string& v) { c.transient.step.i_low = parse_double("transient.i_low_a", v); },
                  [](const C& c) { return format_double(c.transient.step.i_low); }},
            Field{"transient.i_high_a",
                  [](C& c, const std::string& v) { c.transient.step.i_high = parse_double("transient.i_high_a", v); },
                  [](const C& c) { return format_double(c.transient.step.i_high); }},
            Field{"transient.t_step_s",
                  [](C& c, const std::string& v) { c.transient.step.t_step = parse_double("transient.t_step_s", v); },
                  [](const C& c) { return format_double(c.transient.step.t_step); }},
            Field{"transient.t_rise_s",
                  [](C& c, const std::string& v) { c.transient.step.t_rise = parse_double("transient.t_rise_s", v); },
                  [](const C& c) { return format_double(c.transient.step.t_rise); }},
            Field{"transient.direction",
                  [](C& c, const std::string& v) {
                      if (v == "low_to_high") c.transient.step.direction = StepDirection::low_to_high;
                      else if (v == "high_to_low") c.transient.step.direction = StepDirection::high_to_low;
                      else throw ConfigError("transient.direction: expected low_to_high or high_to_low, got '" + v + "'");
                  },
                  [](const C& c) {
                      return std::string(c.transient.step.direction == StepDirection::high_to_low
                                             ? "high_to_low" : "low_to_high");
                  }},
            real("transient.t_end_s", &C::transient, &TransientSettings::t_end),
            real("transient.tol", &C::transient, &TransientSettings::tol),
            maybe_real("transient.band_v", &C::transient, &TransientSettings::band),
            boolean("transient.compare", &C::transient, &TransientSettings::compare),

            Field{"calibrate.target_gain_db",
                  [](C& c, const std::string& v) { c.calibrate.targets.gain_db = parse_double("calibrate.target_gain_db", v); },
                  [](const C& c) { return format_double(c.calibrate.targets.gain_db); }},
            Field{"calibrate.target_pm_deg",
                  [](C& c, const std::string& v) { c.calibrate.targets.pm_deg = parse_double("calibrate.target_pm_deg", v); },
                  [](const C& c) { return format_double(c.calibrate.targets.pm_deg); }},
            Field{"calibrate.target_il_a",
                  [](C& c, const std::string& v) { c.calibrate.targets.il = parse_double("calibrate.target_il_a", v); },
                  [](const C& c) { return format_double(c.calibrate.targets.il); }},
            Field{"calibrate.pm_weight",
                  [](C& c, const std::string& v) { c.calibrate.targets.pm_weight = parse_double("calibrate.pm_weight", v); },
                  [](const C& c) { return format_double(c.calibrate.targets.pm_weight); }},
            Field{"calibrate.free",
                  [](C& c, const std::string& v) {
                      std::vector<FreeParam> free;
                      for (const auto& name : split(v, ',')) {
                          const auto f = free_param_from_string(name);
                          if (!f) {
                              throw ConfigError("calibrate.free: unknown parameter '" + name + "'");
                          }
                          if (std::find(free.begin(), free.end(), *f) != free.end()) {
                              throw ConfigError("calibrate.free: '" + name + "' listed twice");
                          }
                          free.push_back(*f);
                      }
                      c.calibrate.options.free = free;
                  },
                  [](const C& c) {
                      std::string s;
                      for (FreeParam f : c.calibrate.options.free) {
                          s += (s.empty() ? "" : ",") + std::string(to_string(f));
                      }
                      return s;
                  }},
            Field{"calibrate.seed",
                  [](C& c, const std::string& v) {
                      errno = 0;
                      char* end = nullptr;
                      const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
                      if (v.empty() || v[0] == '-' || end != v.c_str() + v.size() || errno == ERANGE) {
                          throw ConfigError("calibrate.seed: expected an unsigned 64-bit integer, got '" + v + "'");
                      }
                      c.calibrate.options.seed = x;
                  },
                  [](const C& c) { return std::to_string(c.calibrate.options.seed); }},
            Field{"calibrate.max_evaluations",
                  [](C& c, const std::string& v) {
                      const long long x = parse_integer("calibrate.max_evaluations", v);
                      if (x < 1 || x > 100000000) throw ConfigError("calibrate.max_evaluations: out of range");
                      c.calibrate.options.max_evaluations = static_cast<int>(x);
                  },
                  [](const C& c) { return std::to_string(c.calibrate.options.max_evaluations); }},
            Field{"calibrate.restarts",
                  [](C& c, const std::string& v) {
                      const long long x = parse_integer("calibrate.restarts", v);
                      if (x < 0 || x > 1000) throw ConfigError("calibrate.restarts: out of range");
                      c.calibrate.options.restarts = static_cast<int>(x);
                  },
                  [](const C& c) { return std::to_string(c.calibrate.options.restarts); }},
            Field{"calibrate.fail_residual",
                  [](C& c, const std::string& v) { c.calibrate.options.fail_residual = parse_double("calibrate.fail_residual", v); },
                  [](const C& c) { return format_double(c.calibrate.options.fail_residual); }},
            boolean("calibrate.fast_path", &C::calibrate, &CalibrateSettings::fast_path),
            real("calibrate.target_peak_v", &C::calibrate, &CalibrateSettings::target_peak),
            real("calibrate.g_fast_lo_s", &C::calibrate, &CalibrateSettings::g_fast_lo),
            real("calibrate.g_fast_hi_s", &C::calibrate, &CalibrateSettings::g_fast_hi),

            real("meta.vout_nominal_v", &C::meta, &MetaSettings::vout_nominal),
            real("meta.vin_v", &C::meta, &MetaSettings::vin),
            real("meta.quiescent_a", &C::meta, &MetaSettings::quiescent),

            Field{"analysis.il_a",
                  [](C& c, const std::string& v) {
                      c.analysis_il = v == "none" ? std::nullopt
                                                  : std::optional<double>(parse_double("analysis.il_a", v));
                  },
                  [](const C& c) { return c.analysis_il ? format_double(*c.analysis_il) : std::string("none"); }},
            Field{"output.dir", [](C& c, const std::string& v) { c.out_dir = v; },
                  [](const C& c) { return c.out_dir; }},
        };
        // Per-parameter calibration bounds: "lo:hi", or "default".
        for (FreeParam fp : kAllFreeParams) {
            const std::string key = "calibrate.bounds." + std::string(to_string(fp));
            v.push_back(Field{
                key,
                [key, fp](C& c, const std::string& val) {
                    if (val == "default") {
                        c.calibrate.options.bounds.erase(fp);
                        return;
                    }
                    const auto parts = split(val, ':');
                    if (parts.size() != 2) {
                        throw ConfigError(key + ": expected lo:hi, got '" + val + "'");
                    }
                    c.calibrate.options.bounds[fp] =
                        Bounds{parse_double(key, parts[0]), parse_double(key, parts[1])};
                },
                [fp](const C& c) {
                    const auto it = c.calibrate.options.bounds.find(fp);
                    if (it == c.calibrate.options.bounds.end()) {
                        return std::string("default");
                    }
                    return format_double(it->second.lo) + ":" + format_double(it->second.hi);
                }});
        }
        return v;
    }();
    return f;
}

}  // namespace detail

/// Checks every numeric field against its module's constraints.
inline void validate(const RunConfig& c) {
    c.proposed.validate();
    c.conventional.validate();
    c.device.validate();
    c.fast.validate();
    detail::require_positive("model.i_max_a", c.model.i_max);
    if (!(c.model.c_int1 >= 0.0)) throw ParameterError("model.c_int1_f", "must be >= 0");
    if (!(c.model.i_ea >= 0.0)) throw ParameterError("model.i_ea_a", "must be >= 0");
    if (!(c.scan.lo > 0.0) || !(c.scan.hi > c.scan.lo)) {
        throw ParameterError("scan", "need 0 < scan.lo_rad_s < scan.hi_rad_s");
    }
    if (!(c.scan.rel_tol > 0.0 && c.scan.rel_tol < 1.0)) {
        throw ParameterError("scan.rel_tol", "must lie in (0, 1)");
    }
    if (!(c.bode.omega_min > 0.0) || !(c.bode.omega_max > c.bode.omega_min)) {
        throw ParameterError("bode", "need 0 < bode.omega_min_rad_s < bode.omega_max_rad_s");
    }
    if (c.analysis_il) detail::require_positive("analysis.il_a", *c.analysis_il);
    load_grid(c.sweep.il_lo, c.sweep.il_hi, c.sweep.n_points);
    c.transient.step.validate();
    if (!(c.transient.t_end > c.transient.step.t_step + c.transient.step.t_rise)) {
        throw ParameterError("transient.t_end_s", "must exceed t_step + t_rise");
    }
    if (!(c.transient.tol >= 1e-10 && c.transient.tol <= 1e-3)) {
        throw ParameterError("transient.tol", "must lie in [1e-10, 1e-3]");
    }
    detail::require_positive("transient.band_v", c.settling_band());
    detail::require_positive("calibrate.target_il_a", c.calibrate.targets.il);
    detail::require_positive("calibrate.target_peak_v", c.calibrate.target_peak);
    detail::require_positive("calibrate.g_fast_lo_s", c.calibrate.g_fast_lo);
    if (!(c.calibrate.g_fast_hi > c.calibrate.g_fast_lo)) {
        throw ParameterError("calibrate.g_fast_hi_s", "must exceed calibrate.g_fast_lo_s");
    }
    if (c.calibrate.options.free.empty()) {
        throw ParameterError("calibrate.free", "at least one free parameter is required");
    }
    for (const auto& [f, b] : c.calibrate.options.bounds) {
        if (!(b.lo > 0.0) || !(b.hi >= b.lo)) {
            throw ParameterError("calibrate.bounds." + std::string(to_string(f)),
                                 "bounds must satisfy 0 < lo <= hi");
        }
    }
    if (c.out_dir.empty()) {
        throw ParameterError("output.dir", "must not be empty");
    }
}

/// Parses `key = value` lines. Later keys override earlier ones; unknown keys
/// are errors. The result is not validated.
inline RunConfig parse_config(std::string_view text, RunConfig base = {}) {
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        const std::string t = detail::trim(line);
        if (t.empty()) {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = detail::trim(std::string_view(t).substr(0, eq));
        const std::string val = detail::trim(std::string_view(t).substr(eq + 1));
        const auto& fs = detail::fields();
        const auto it = std::find_if(fs.begin(), fs.end(), [&](const auto& f) { return f.key == key; });
        if (it == fs.end()) {
            throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        try {
            it->set(base, val);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return base;
}

/// Every key with its resolved value, in a fixed order.
inline std::string emit_config(const RunConfig& c) {
    std::string out;
    std::string section;
    for (const auto& f : detail::fields()) {
        const std::string sec = f.key.substr(0, f.key.find('.'));
        if (sec != section) {
            out += (section.empty() ? "" : "\n") + std::string("# ") + sec + "\n";
            section = sec;
        }
        out += f.key + " = " + f.get(c) + "\n";
    }
    return out;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(path, "cannot open config file");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace ldolens
