#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "ldolens/error.hpp"

namespace ldolens {

template <std::size_t N>
using State = std::array<double, N>;

struct OdeOptions {
    double rtol = 1e-6;
    double atol = 1e-9;
    double h_min = 1e-15;
    double h_max = std::numeric_limits<double>::infinity();
    double h_init = 0.0;  // 0 picks a starting step automatically
    // The integrator lands exactly on each of these times (e.g. kinks in the input).
    std::vector<double> breakpoints;
    std::size_t max_steps = 50'000'000;
};

struct OdeStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evals = 0;
};

namespace dopri {

inline constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                        a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                        a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
inline constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                        b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
// Difference between the 5th- and embedded 4th-order weights.
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                        e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

}  // namespace dopri

/// Dormand-Prince 5(4) with FSAL and a standard I-controller. `rhs(t, y)`
/// returns dy/dt; `observe(t, y)` is called at t0 and after every accepted step.
/// Throws StiffnessError when the step size falls below `h_min`.
template <std::size_t N, typename Rhs, typename Observer>
OdeStats integrate_dopri5(Rhs&& rhs, double t0, State<N> y, double t_end, const OdeOptions& opt,
                          Observer&& observe) {
    using namespace dopri;
    OdeStats stats;
    std::vector<double> breaks;
    for (double b : opt.breakpoints) {
        if (b > t0 && b < t_end) {
            breaks.push_back(b);
        }
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.push_back(t_end);
    std::size_t next_break = 0;

    auto err_norm = [&](const State<N>& y0, const State<N>& y1, const State<N>& e) {
        double acc = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = opt.atol + opt.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
            acc += (e[i] / sc) * (e[i] / sc);
        }
        return std::sqrt(acc / static_cast<double>(N));
    };

    double t = t0;
    observe(t, y);
    State<N> k1 = rhs(t, y);
    ++stats.rhs_evals;

    double h = opt.h_init;
    if (h <= 0.0) {
        double d0 = 0.0;
        double d1 = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = opt.atol + opt.rtol * std::abs(y[i]);
            d0 = std::max(d0, std::abs(y[i]) / sc);
            d1 = std::max(d1, std::abs(k1[i]) / sc);
        }
        h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * (t_end - t0) : 0.01 * d0 / d1;
    }
    h = std::min(h, opt.h_max);

    State<N> k2, k3, k4, k5, k6, k7, tmp, y_new, err;
    while (t < t_end) {
        if (stats.accepted + stats.rejected >= opt.max_steps) {
            throw StiffnessError(t, h);
        }
        const double target = breaks[next_break];
        const double h_planned = h;
        bool hits_break = false;
        if (t + h >= target || (target - (t + h)) < 1e-12 * std::abs(target)) {
            h = target - t;
            hits_break = true;
        }
        if (h < opt.h_min && !hits_break) {
            throw StiffnessError(t, h);
        }

        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        k2 = rhs(t + c2 * h, tmp);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        k3 = rhs(t + c3 * h, tmp);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        k4 = rhs(t + c4 * h, tmp);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        k5 = rhs(t + c5 * h, tmp);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                 a65 * k5[i]);
        k6 = rhs(t + h, tmp);
        for (std::size_t i = 0; i < N; ++i)
            y_new[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        const double t_new = hits_break ? target : t + h;
        k7 = rhs(t_new, y_new);
        stats.rhs_evals += 6;
        for (std::size_t i = 0; i < N; ++i)
            err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                          e7 * k7[i]);

        const double en = err_norm(y, y_new, err);
        if (!std::isfinite(en)) {
            ++stats.rejected;
            h *= 0.1;
            continue;
        }
        const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
        if (en <= 1.0) {
            ++stats.accepted;
            t = t_new;
            y = y_new;
            k1 = k7;
            if (hits_break) {
                ++next_break;
            }
            observe(t, y);
            h = std::min(hits_break ? std::max(h * factor, h_planned) : h * factor, opt.h_max);
        } else {
            ++stats.rejected;
            h *= std::min(1.0, factor);
        }
    }
    return stats;
}

}  // namespace ldolens
