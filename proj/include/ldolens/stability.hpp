#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ldolens/error.hpp"
#include "ldolens/frequency_response.hpp"
#include "ldolens/ldo_model.hpp"
#include "ldolens/polynomial.hpp"
#include "ldolens/roots.hpp"

namespace ldolens {

struct ScanOptions {
    double lo = 1e-2;  // rad/s
    double hi = 1e14;  // rad/s
    int points_per_decade = 100;
    double rel_tol = 1e-9;
};

/// One bisection step of a crossing search: f(lo) and f(hi) must straddle.
struct BracketStep {
    double lo;
    double hi;
    double f_lo;
    double f_hi;
};

/// Bisects [lo, hi] in log-frequency for a sign change of f (f(lo) >= 0 > f(hi))
/// until hi/lo - 1 <= rel_tol. `on_step` sees every bracket, including the first.
template <typename F, typename OnStep>
double bisect_log(F&& f, double lo, double hi, double rel_tol, OnStep&& on_step) {
    double f_lo = f(lo);
    double f_hi = f(hi);
    on_step(BracketStep{lo, hi, f_lo, f_hi});
    while (hi / lo - 1.0 > rel_tol) {
        const double mid = std::sqrt(lo * hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        const double f_mid = f(mid);
        if (f_mid >= 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
        on_step(BracketStep{lo, hi, f_lo, f_hi});
    }
    return std::sqrt(lo * hi);
}

/// Smallest frequency with |H(jw)| = 1.
template <typename OnStep>
double unity_gain_freq(const RationalFunction& h, const ScanOptions& opt, OnStep&& on_step) {
    const double dc = std::abs(h.dc_value());
    if (!(dc > 1.0)) {
        throw LowDcGain("unity_gain_freq: |H(0)| = " + std::to_string(dc) + " is not above 1");
    }
    // log|H| changes sign at the crossing.
    auto f = [&h](double w) { return std::log(std::abs(eval_jw(h, w))); };
    const auto grid = log_grid(opt.lo, opt.hi, opt.points_per_decade);
    if (f(grid.front()) < 0.0) {
        throw NoCrossing("unity_gain_freq: |H| already below 1 at the scan start");
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (f(grid[i]) < 0.0) {
            return bisect_log(f, grid[i - 1], grid[i], opt.rel_tol, on_step);
        }
    }
    throw NoCrossing("unity_gain_freq: no unity-gain crossing in [" + std::to_string(opt.lo) +
                     ", " + std::to_string(opt.hi) + "] rad/s");
}

inline double unity_gain_freq(const RationalFunction& h, const ScanOptions& opt = {}) {
    return unity_gain_freq(h, opt, [](const BracketStep&) {});
}

/// Phase of H(jw) in degrees, unwrapped along a log grid that starts from the
/// DC value (0 for positive H(0), 180 for negative).
inline double unwrapped_phase(const RationalFunction& h, double omega, const ScanOptions& opt = {}) {
    double phase = h.dc_value() >= 0.0 ? 0.0 : 180.0;
    if (omega <= 0.0) {
        return phase;
    }
    const double start = std::min(opt.lo, omega);
    std::vector<double> grid{start};
    if (omega > start) {
        grid = log_grid(start, omega, opt.points_per_decade);
    }
    for (double w : grid) {
        phase = unwrap_step(phase, std::arg(eval_jw(h, w)) * kRadToDeg);
    }
    return phase;
}

/// 180 + unwrapped phase at the unity-gain frequency.
inline double phase_margin(const RationalFunction& h, const ScanOptions& opt = {}) {
    return 180.0 + unwrapped_phase(h, unity_gain_freq(h, opt), opt);
}

/// -|H| in dB where the unwrapped phase first reaches -180 degrees, or nullopt.
inline std::optional<double> gain_margin_db(const RationalFunction& h, const ScanOptions& opt = {}) {
    const auto grid = log_grid(opt.lo, opt.hi, opt.points_per_decade);
    double phase = h.dc_value() >= 0.0 ? 0.0 : 180.0;
    std::vector<double> phases;
    phases.reserve(grid.size());
    for (double w : grid) {
        phase = unwrap_step(phase, std::arg(eval_jw(h, w)) * kRadToDeg);
        phases.push_back(phase);
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (phases[i] <= -180.0 && phases[i - 1] > -180.0) {
            // Within one grid cell the phase moves less than 180 degrees, so a
            // local unwrap against the left end is exact.
            const double ref = phases[i - 1];
            auto f = [&](double w) {
                return unwrap_step(ref, std::arg(eval_jw(h, w)) * kRadToDeg) + 180.0;
            };
            const double w180 = bisect_log(f, grid[i - 1], grid[i], opt.rel_tol,
                                           [](const BracketStep&) {});
            return -20.0 * std::log10(std::abs(eval_jw(h, w180)));
        }
    }
    return std::nullopt;
}

struct StabilityReport {
    double dc_gain_db = 0.0;
    double ugf = 0.0;           // rad/s
    double phase_margin = 0.0;  // degrees
    std::optional<double> gain_margin_db;
    std::vector<ComplexRoot> poles;
    std::vector<ComplexRoot> zeros;
    bool dominant_pole_ok = false;  // exactly one pole below the UGF
};

inline int poles_below(const std::vector<ComplexRoot>& poles, double ugf) {
    return static_cast<int>(std::count_if(poles.begin(), poles.end(),
                                          [ugf](const ComplexRoot& r) { return r.magnitude() < ugf; }));
}

/// Loop metrics of `h` at one operating point.
inline StabilityReport analyze(const RationalFunction& h, const ScanOptions& opt = {}) {
    StabilityReport r;
    r.dc_gain_db = 20.0 * std::log10(std::abs(h.dc_value()));
    r.ugf = unity_gain_freq(h, opt);
    r.phase_margin = 180.0 + unwrapped_phase(h, r.ugf, opt);
    r.gain_margin_db = gain_margin_db(h, opt);
    r.poles = roots(h.den());
    if (h.num().degree().value_or(0) >= 1) {
        r.zeros = roots(h.num());
    }
    r.dominant_pole_ok = poles_below(r.poles, r.ugf) == 1;
    return r;
}

/// Exactly one pole below the UGF and every zero above it.
inline bool pole_ordering_check(const StabilityReport& report) {
    if (poles_below(report.poles, report.ugf) != 1) {
        return false;
    }
    return std::all_of(report.zeros.begin(), report.zeros.end(),
                       [&](const ComplexRoot& z) { return z.magnitude() > report.ugf; });
}

struct SweepRow {
    double il = 0.0;  // A
    std::optional<StabilityReport> report;
    std::string error;  // empty when report is set
};

/// `n` log-spaced load currents from lo to hi with exact endpoints. A
/// degenerate range (lo == hi) yields a single point.
inline std::vector<double> load_grid(double lo, double hi, int n) {
    if (n < 2) {
        throw ParameterError("n_points", "a sweep needs at least 2 points");
    }
    if (!(lo > 0.0) || !(hi <= 1.0) || !(lo <= hi)) {
        throw ParameterError("il_range", "load range must satisfy 0 < lo <= hi <= 1 A");
    }
    if (lo == hi) {
        return {lo};
    }
    std::vector<double> g(static_cast<std::size_t>(n));
    const double ratio = std::log(hi / lo);
    for (int i = 0; i < n; ++i) {
        g[static_cast<std::size_t>(i)] = lo * std::exp(ratio * i / (n - 1));
    }
    g.front() = lo;
    g.back() = hi;
    return g;
}

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers. `fn` must only
/// write to slot i of its output.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                fn(i);
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
}

/// Phase-margin sweep over load current. Each row maps IL to the pass-device
/// operating point, builds the loop gain and analyzes it. Row failures are
/// recorded in the row.
inline std::vector<SweepRow> pm_sweep(const ProposedParams& base, const DeviceModel& d,
                                      double il_lo, double il_hi, int n_points,
                                      unsigned threads = 0, const ScanOptions& opt = {}) {
    d.validate();
    const auto grid = load_grid(il_lo, il_hi, n_points);
    std::vector<SweepRow> rows(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        rows[i].il = grid[i];
        try {
            const auto p = at_operating_point(base, operating_point(grid[i], d));
            rows[i].report = analyze(proposed_tf(p), opt);
        } catch (const std::exception& e) {
            rows[i].error = e.what();
        }
    });
    return rows;
}

}  // namespace ldolens
