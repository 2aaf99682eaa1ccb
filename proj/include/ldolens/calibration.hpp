#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ldolens/error.hpp"
#include "ldolens/ldo_model.hpp"
#include "ldolens/stability.hpp"

namespace ldolens {

enum class FreeParam { gm1, gm2, ro1, ro2, cp0, va, rload_ext };

inline constexpr std::array kAllFreeParams{FreeParam::gm1, FreeParam::gm2, FreeParam::ro1,
                                           FreeParam::ro2, FreeParam::cp0, FreeParam::va,
                                           FreeParam::rload_ext};

inline std::string_view to_string(FreeParam f) {
    switch (f) {
        case FreeParam::gm1: return "gm1";
        case FreeParam::gm2: return "gm2";
        case FreeParam::ro1: return "ro1";
        case FreeParam::ro2: return "ro2";
        case FreeParam::cp0: return "cp0";
        case FreeParam::va: return "va";
        case FreeParam::rload_ext: return "rload_ext";
    }
    return "?";
}

inline std::optional<FreeParam> free_param_from_string(std::string_view s) {
    for (FreeParam f : kAllFreeParams) {
        if (to_string(f) == s) {
            return f;
        }
    }
    return std::nullopt;
}

struct Bounds {
    double lo;
    double hi;
};

inline Bounds default_bounds(FreeParam f) {
    switch (f) {
        case FreeParam::gm1: return {1e-7, 1e-2};
        case FreeParam::gm2: return {1e-7, 1e-1};
        case FreeParam::ro1: return {1e3, 1e9};
        case FreeParam::ro2: return {1e1, 1e8};
        case FreeParam::cp0: return {1e-13, 1e-9};
        case FreeParam::va: return {5.0, 200.0};
        case FreeParam::rload_ext: return {1.0, 1e6};
    }
    return {1.0, 1.0};
}

struct CalibrationTargets {
    double gain_db = 58.0;
    double pm_deg = 64.0;
    double il = 0.1;  // A
    double pm_weight = 1.0;
};

struct CalibrationOptions {
    std::vector<FreeParam> free{FreeParam::gm1, FreeParam::ro2, FreeParam::cp0};
    std::map<FreeParam, Bounds> bounds;  // missing entries use default_bounds
    std::uint64_t seed = 1;
    int max_evaluations = 2000;
    int restarts = 3;
    double fail_residual = 0.25;
    double stop_residual = 1e-12;
};

struct CalibrationResult {
    ProposedParams params;
    DeviceModel device;
    double residual = 0.0;
    double gain_db = 0.0;
    double pm_deg = 0.0;
    int evaluations = 0;
    int improvements = 0;
};

class CalibrationFailed : public Error {
public:
    explicit CalibrationFailed(CalibrationResult best)
        : Error("calibration failed: residual " + std::to_string(best.residual) +
                " above threshold"),
          best_(std::move(best)) {}

    const CalibrationResult& best() const noexcept { return best_; }

private:
    CalibrationResult best_;
};

namespace detail {

inline double& free_slot(FreeParam f, ProposedParams& p, DeviceModel& d) {
    switch (f) {
        case FreeParam::gm1: return p.gm1;
        case FreeParam::gm2: return p.gm2;
        case FreeParam::ro1: return p.ro1;
        case FreeParam::ro2: return p.ro2;
        case FreeParam::cp0: return d.cp0;
        case FreeParam::va: return d.va;
        case FreeParam::rload_ext: return d.rload_ext.value();
    }
    return p.gm1;
}

// Bounded Nelder-Mead in a box, with vertices projected onto the box.
class BoxNelderMead {
public:
    using Point = std::vector<double>;

    BoxNelderMead(std::function<double(const Point&)> f, Point lo, Point hi, int budget)
        : f_(std::move(f)), lo_(std::move(lo)), hi_(std::move(hi)), budget_(budget) {}

    int evaluations() const noexcept { return evals_; }
    bool exhausted() const noexcept { return evals_ >= budget_; }

    double eval(Point x) {
        project(x);
        ++evals_;
        return f_(x);
    }

    // Minimizes from `simplex`; returns the best vertex and value.
    std::pair<Point, double> run(std::vector<Point> simplex, double stop_value) {
        const std::size_t n = simplex.size() - 1;
        std::vector<double> fv(simplex.size());
        for (std::size_t i = 0; i < simplex.size(); ++i) {
            project(simplex[i]);
            fv[i] = eval(simplex[i]);
        }
        std::vector<std::size_t> order(simplex.size());
        while (!exhausted()) {
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
            const std::size_t best = order.front();
            const std::size_t worst = order.back();
            const std::size_t second = order[n - (n > 0 ? 1 : 0)];
            if (fv[best] <= stop_value || converged(simplex, fv, best)) {
                break;
            }
            Point centroid(n, 0.0);
            for (std::size_t i = 0; i < simplex.size(); ++i) {
                if (i == worst) {
                    continue;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    centroid[k] += simplex[i][k] / static_cast<double>(n);
                }
            }
            auto along = [&](double t) {
                Point x(n);
                for (std::size_t k = 0; k < n; ++k) {
                    x[k] = centroid[k] + t * (simplex[worst][k] - centroid[k]);
                }
                project(x);
                return x;
            };
            const Point xr = along(-1.0);
            const double fr = eval(xr);
            if (fr < fv[best]) {
                const Point xe = along(-2.0);
                const double fe = eval(xe);
                if (fe < fr) {
                    simplex[worst] = xe;
                    fv[worst] = fe;
                } else {
                    simplex[worst] = xr;
                    fv[worst] = fr;
                }
                continue;
            }
            if (fr < fv[second]) {
                simplex[worst] = xr;
                fv[worst] = fr;
                continue;
            }
            const bool outside = fr < fv[worst];
            const Point xc = along(outside ? -0.5 : 0.5);
            const double fc = eval(xc);
            if (fc < (outside ? fr : fv[worst])) {
                simplex[worst] = xc;
                fv[worst] = fc;
                continue;
            }
            for (std::size_t i = 0; i < simplex.size(); ++i) {
                if (i == best) {
                    continue;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
                }
                fv[i] = eval(simplex[i]);
                if (exhausted()) {
                    break;
                }
            }
        }
        const auto it = std::min_element(fv.begin(), fv.end());
        return {simplex[static_cast<std::size_t>(it - fv.begin())], *it};
    }

    void project(Point& x) const {
        for (std::size_t k = 0; k < x.size(); ++k) {
            x[k] = std::clamp(x[k], lo_[k], hi_[k]);
        }
    }

private:
    static bool converged(const std::vector<Point>& s, const std::vector<double>& fv,
                          std::size_t best) {
        double spread = 0.0;
        double size = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            spread = std::max(spread, std::abs(fv[i] - fv[best]));
            for (std::size_t k = 0; k < s[i].size(); ++k) {
                size = std::max(size, std::abs(s[i][k] - s[best][k]));
            }
        }
        return spread <= 1e-16 && size <= 1e-12;
    }

    std::function<double(const Point&)> f_;
    Point lo_;
    Point hi_;
    int budget_;
    int evals_ = 0;
};

}  // namespace detail

/// Loop gain (dB) and phase margin (deg) of `base` at load `il`.
inline std::pair<double, double> loop_metrics_at(const ProposedParams& base, const DeviceModel& d,
                                                 double il) {
    const auto h = proposed_tf(at_operating_point(base, operating_point(il, d)));
    return {20.0 * std::log10(std::abs(h.dc_value())), phase_margin(h)};
}

/// Fits the free parameters so the loop gain and phase margin at `targets.il`
/// match the targets. The search runs in log10 space: one Nelder-Mead pass from
/// the starting point followed by `restarts` passes from the incumbent, each
/// with a simplex drawn from a generator seeded by `opt.seed`.
///
/// Throws CalibrationFailed (carrying the best point) when the final residual
/// exceeds `opt.fail_residual`.
inline CalibrationResult calibrate(const ProposedParams& base, const DeviceModel& device,
                                   const CalibrationTargets& targets,
                                   const CalibrationOptions& opt = {}) {
    if (opt.free.empty()) {
        throw ParameterError("free", "at least one free parameter is required");
    }
    if (!(targets.il > 0.0)) {
        throw ParameterError("targets.il", "target load current must be positive");
    }
    base.validate();
    device.validate();

    ProposedParams p0 = base;
    DeviceModel d0 = device;
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<double> x0;
    for (FreeParam f : opt.free) {
        const auto it = opt.bounds.find(f);
        const Bounds b = it != opt.bounds.end() ? it->second : default_bounds(f);
        const std::string name(to_string(f));
        if (!(b.lo > 0.0) || !(b.hi >= b.lo) || !std::isfinite(b.hi)) {
            throw ParameterError("bounds." + name, "bounds must satisfy 0 < lo <= hi");
        }
        if (f == FreeParam::rload_ext && !d0.rload_ext) {
            d0.rload_ext = std::sqrt(b.lo * b.hi);
        }
        const double v = detail::free_slot(f, p0, d0);
        if (v < b.lo || v > b.hi) {
            throw ParameterError("bounds." + name, "starting value " + std::to_string(v) +
                                                       " lies outside its bounds");
        }
        lo.push_back(std::log10(b.lo));
        hi.push_back(std::log10(b.hi));
        x0.push_back(std::log10(v));
    }

    auto apply = [&](const std::vector<double>& x) {
        ProposedParams p = p0;
        DeviceModel d = d0;
        for (std::size_t k = 0; k < opt.free.size(); ++k) {
            detail::free_slot(opt.free[k], p, d) = std::pow(10.0, x[k]);
        }
        return std::pair{p, d};
    };
    auto residual_of = [&](double gain_db, double pm) {
        const double eg = gain_db - targets.gain_db;
        const double ep = pm - targets.pm_deg;
        return eg * eg + targets.pm_weight * ep * ep;
    };

    double best_f = std::numeric_limits<double>::infinity();
    std::vector<double> best_x = x0;
    int improvements = -1;
    auto objective = [&](const std::vector<double>& x) {
        double f = 1e6;
        try {
            const auto [p, d] = apply(x);
            const auto [g, pm] = loop_metrics_at(p, d, targets.il);
            f = residual_of(g, pm);
        } catch (const Error&) {
        }
        if (f < best_f) {
            best_f = f;
            best_x = x;
            ++improvements;
        }
        return f;
    };

    detail::BoxNelderMead nm(objective, lo, hi, opt.max_evaluations);
    nm.eval(x0);
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> step_size(0.05, 0.5);
    std::bernoulli_distribution flip(0.5);
    for (int pass = 0; pass <= opt.restarts && best_f > opt.stop_residual && !nm.exhausted();
         ++pass) {
        std::vector<std::vector<double>> simplex{best_x};
        for (std::size_t k = 0; k < best_x.size(); ++k) {
            auto v = best_x;
            const double step = step_size(rng) * (flip(rng) ? 1.0 : -1.0);
            v[k] += (v[k] + step > hi[k] || v[k] + step < lo[k]) ? -step : step;
            simplex.push_back(v);
        }
        nm.run(simplex, opt.stop_residual);
    }

    const auto [p, d] = apply(best_x);
    CalibrationResult r;
    r.params = p;
    r.device = d;
    r.residual = best_f;
    r.evaluations = nm.evaluations();
    r.improvements = std::max(0, improvements);
    try {
        std::tie(r.gain_db, r.pm_deg) = loop_metrics_at(p, d, targets.il);
    } catch (const Error&) {
        r.gain_db = std::numeric_limits<double>::quiet_NaN();
        r.pm_deg = std::numeric_limits<double>::quiet_NaN();
    }
    if (!(r.residual <= opt.fail_residual)) {
        throw CalibrationFailed(r);
    }
    return r;
}

}  // namespace ldolens
