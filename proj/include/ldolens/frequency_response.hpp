#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "ldolens/error.hpp"
#include "ldolens/polynomial.hpp"

namespace ldolens {

inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;

/// H(jw) = num(jw) / den(jw).
inline std::complex<double> eval_jw(const RationalFunction& h, double omega) {
    if (!(omega >= 0.0) || !std::isfinite(omega)) {
        throw ParameterError("omega", "frequency must be finite and >= 0");
    }
    const std::complex<double> s(0.0, omega);
    const std::complex<double> d = h.den()(s);
    if (std::abs(d) <= std::numeric_limits<double>::min() * h.den().max_abs_coeff()) {
        throw PoleHit(omega);
    }
    return h.num()(s) / d;
}

/// `points_per_decade` log-spaced samples from lo to hi, endpoints included.
inline std::vector<double> log_grid(double lo, double hi, int points_per_decade) {
    if (!(lo > 0.0) || !(hi > lo)) {
        throw ParameterError("grid", "log grid needs 0 < lo < hi");
    }
    const double decades = std::log10(hi / lo);
    const auto n = static_cast<std::size_t>(std::ceil(decades * points_per_decade)) + 1;
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = lo * std::pow(10.0, decades * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    g.front() = lo;
    g.back() = hi;
    return g;
}

/// Shifts `next` by a multiple of 360 so it lies within 180 degrees of `prev`.
inline double unwrap_step(double prev, double next) {
    double delta = next - prev;
    while (delta > 180.0) {
        delta -= 360.0;
    }
    while (delta < -180.0) {
        delta += 360.0;
    }
    return prev + delta;
}

struct BodePoint {
    double omega;
    double mag_db;
    double phase_deg;
    std::complex<double> value;
};

/// Magnitude in dB and unwrapped phase in degrees on a strictly increasing grid.
inline std::vector<BodePoint> bode(const RationalFunction& h, std::span<const double> grid) {
    std::vector<BodePoint> out;
    out.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
            throw ParameterError("grid", "Bode grid must be positive and strictly increasing");
        }
        const std::complex<double> v = eval_jw(h, grid[i]);
        double phase = std::arg(v) * kRadToDeg;
        if (!out.empty()) {
            phase = unwrap_step(out.back().phase_deg, phase);
        }
        out.push_back({grid[i], 20.0 * std::log10(std::abs(v)), phase, v});
    }
    return out;
}

}  // namespace ldolens
