#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ldolens/error.hpp"
#include "ldolens/polynomial.hpp"
#include "ldolens/roots.hpp"

namespace ldolens {

namespace detail {

inline void require_positive(const char* field, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ParameterError(field, "must be strictly positive and finite (got " +
                                        std::to_string(v) + ")");
    }
}

}  // namespace detail

/// Small-signal parameters of the three-stage Miller-compensated regulator.
/// Stage 1 (error amplifier) is gm1/ro1, stage 2 is gm2/ro2 loaded by the pass
/// device's base capacitance cp, and the pass device is gmp/ro loaded by cf.
/// cm is the Miller capacitor from the output back to the stage-1 output.
/// Defaults are the round-number reference set used throughout the tests.
struct ProposedParams {
    double gm1 = 1e-4;   // S
    double gm2 = 1e-3;   // S
    double gmp = 1.0;    // S
    double ro1 = 1e6;    // ohm
    double ro2 = 1e5;    // ohm
    double ro = 10.0;    // ohm
    double cm = 4e-12;   // F
    double cp = 1e-11;   // F
    double cf = 1e-10;   // F
    // The output parasitic is normally 10 pF to 100 pF; set to accept anything positive.
    bool cf_range_override = false;

    void validate() const {
        detail::require_positive("gm1", gm1);
        detail::require_positive("gm2", gm2);
        detail::require_positive("gmp", gmp);
        detail::require_positive("ro1", ro1);
        detail::require_positive("ro2", ro2);
        detail::require_positive("ro", ro);
        detail::require_positive("cm", cm);
        detail::require_positive("cp", cp);
        detail::require_positive("cf", cf);
        if (!cf_range_override && (cf < 1e-11 || cf > 1e-10)) {
            throw ParameterError("cf", "output parasitic must lie in [1e-11, 1e-10] F "
                                       "unless cf_range_override is set");
        }
    }

    friend bool operator==(const ProposedParams&, const ProposedParams&) = default;
};

/// ESR-compensated baseline: error amplifier pole (ra, ca), output pole
/// (ro, cl) and the ESR zero (r_esr, cl).
struct ConventionalParams {
    double ra = 1e6;     // ohm
    double ca = 1e-11;   // F
    double ro = 1.0;     // ohm
    double cl = 1e-6;    // F
    double r_esr = 0.1;  // ohm
    double adc = 1e3;

    void validate() const {
        detail::require_positive("ra", ra);
        detail::require_positive("ca", ca);
        detail::require_positive("ro", ro);
        detail::require_positive("cl", cl);
        detail::require_positive("r_esr", r_esr);
        detail::require_positive("adc", adc);
    }

    /// Non-fatal findings.
    std::vector<std::string> warnings() const {
        std::vector<std::string> w;
        if (cl < 10.0 * ca) {
            w.emplace_back("cl is less than 10x ca; the output pole may not be the low one");
        }
        return w;
    }

    friend bool operator==(const ConventionalParams&, const ConventionalParams&) = default;
};

/// Assumed NPN pass-device physics. None of these values are published for the
/// reference design, so they are explicit configuration.
struct DeviceModel {
    double vt = 0.02585;  // thermal voltage, V
    double va = 50.0;     // Early voltage, V
    double cp0 = 10e-12;  // base parasitic, F
    std::optional<double> rload_ext;  // ohm, in parallel with the device output resistance

    void validate() const {
        detail::require_positive("vt", vt);
        detail::require_positive("va", va);
        detail::require_positive("cp0", cp0);
        if (rload_ext) {
            detail::require_positive("rload_ext", *rload_ext);
        }
    }

    friend bool operator==(const DeviceModel&, const DeviceModel&) = default;
};

struct OperatingPoint {
    double il;         // A
    double gmp;        // S
    double ro_device;  // ohm, VA / IL
    double ro;         // ohm, including rload_ext
    double cp;         // F
};

/// Pass-device small-signal values at load current `il`.
inline OperatingPoint operating_point(double il, const DeviceModel& d) {
    if (!(il > 0.0) || !std::isfinite(il)) {
        throw ParameterError("il", "load current must be positive");
    }
    d.validate();
    OperatingPoint op{};
    op.il = il;
    op.gmp = il / d.vt;
    op.ro_device = d.va / il;
    op.ro = d.rload_ext ? 1.0 / (1.0 / op.ro_device + 1.0 / *d.rload_ext) : op.ro_device;
    op.cp = d.cp0;
    return op;
}

/// `base` with its load-dependent fields replaced by `op`.
inline ProposedParams at_operating_point(ProposedParams base, const OperatingPoint& op) {
    base.gmp = op.gmp;
    base.ro = op.ro;
    base.cp = op.cp;
    return base;
}

/// Low-frequency loop gain gm1 gm2 gmp ro1 ro2 ro.
inline double dc_gain(const ProposedParams& p) {
    p.validate();
    return p.gm1 * p.gm2 * p.gmp * p.ro1 * p.ro2 * p.ro;
}

/// Dominant-pole time constant cm ro1 gm2 gmp ro2 ro (Miller-multiplied cm).
inline double dominant_time_constant(const ProposedParams& p) {
    return p.cm * p.ro1 * p.gm2 * p.gmp * p.ro2 * p.ro;
}

/// Loop gain
///
///   H(s) = Adc (1 - cm/(gm2 gmp ro2) s - cm cp/(gm2 gmp) s^2)
///          / ((1 + tau1 s) (1 + cf/(gm2 gmp ro2) s + cf cp/(gm2 gmp) s^2))
///
/// with tau1 = dominant_time_constant(p), expanded to coefficient form.
inline RationalFunction proposed_tf(const ProposedParams& p) {
    const double adc = dc_gain(p);
    const double g = p.gm2 * p.gmp;
    const Polynomial num{adc, -adc * p.cm / (g * p.ro2), -adc * p.cm * p.cp / g};
    const Polynomial dominant{1.0, dominant_time_constant(p)};
    const Polynomial output{1.0, p.cf / (g * p.ro2), p.cf * p.cp / g};
    return {num, poly_mul(dominant, output)};
}

namespace detail {

// Roots of a s^2 + b s + c with a, b > 0, without cancellation in the
// real-root case. The first entry is the smaller-magnitude root when real.
inline std::array<ComplexRoot, 2> stable_quadratic(double a, double b, double c) {
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) {
        const double re = -b / (2.0 * a);
        const double im = std::sqrt(-disc) / (2.0 * a);
        return {ComplexRoot{re, im, 1}, ComplexRoot{re, -im, 1}};
    }
    const double q = -0.5 * (b + std::sqrt(disc));
    const double r_big = q / a;
    const double r_small = c / q;
    return {ComplexRoot{r_small, 0.0, 1}, ComplexRoot{r_big, 0.0, 1}};
}

}  // namespace detail

struct AnalyticPoles {
    double p1;  // dominant pole frequency, rad/s (positive; the pole itself sits at -p1)
    std::array<ComplexRoot, 2> p23;

    ComplexRoot dominant() const noexcept { return {-p1, 0.0, 1}; }
};

/// Closed-form poles of proposed_tf:
///   p1   = 1 / (cm ro1 gm2 gmp ro2 ro)
///   p2,3 = (-cf +/- sqrt(cf^2 - 4 cf cp ro2^2 gm2 gmp)) / (2 cf cp ro2)
/// The real-root branch of p2,3 is evaluated in cancellation-free form.
inline AnalyticPoles analytic_poles(const ProposedParams& p) {
    p.validate();
    const double g = p.gm2 * p.gmp;
    AnalyticPoles out{};
    out.p1 = 1.0 / dominant_time_constant(p);
    out.p23 = detail::stable_quadratic(p.cf * p.cp * p.ro2, p.cf, g * p.ro2);
    return out;
}

struct AnalyticZeros {
    double z1;  // right-half-plane zero, > 0
    double z2;  // left-half-plane zero, < 0
};

/// Closed-form zeros of proposed_tf:
///   z1,2 = (-cm +/- sqrt(cm^2 + 4 cm cp ro2^2 gm2 gmp)) / (2 cm cp ro2)
/// The discriminant always exceeds cm^2, so one zero is in each half plane.
inline AnalyticZeros analytic_zeros(const ProposedParams& p) {
    p.validate();
    const double g = p.gm2 * p.gmp;
    const double a = p.cm * p.cp * p.ro2;
    const double disc = p.cm * p.cm + 4.0 * p.cm * p.cp * p.ro2 * p.ro2 * g;
    const double q = -0.5 * (p.cm + std::sqrt(disc));
    return {(-g * p.ro2) / q, q / a};
}

/// Adc (1 + s r_esr cl) / ((1 + s ra ca) (1 + s ro cl)).
inline RationalFunction conventional_tf(const ConventionalParams& c) {
    c.validate();
    const Polynomial num{c.adc, c.adc * c.r_esr * c.cl};
    const Polynomial den = poly_mul(Polynomial{1.0, c.ra * c.ca}, Polynomial{1.0, c.ro * c.cl});
    return {num, den};
}

/// Closed-form pole and zero frequencies of the baseline, rad/s.
struct ConventionalCorners {
    double amp_pole;
    double output_pole;
    double esr_zero;
};

inline ConventionalCorners conventional_corners(const ConventionalParams& c) {
    c.validate();
    return {1.0 / (c.ra * c.ca), 1.0 / (c.ro * c.cl), 1.0 / (c.r_esr * c.cl)};
}

/// `base` with its output resistance taken from `op`.
inline ConventionalParams at_operating_point(ConventionalParams base, const OperatingPoint& op) {
    base.ro = op.ro;
    return base;
}

}  // namespace ldolens
