#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "ldolens/error.hpp"
#include "ldolens/ldo_model.hpp"
#include "ldolens/ode.hpp"

namespace ldolens {

/// Behavioral model of the transient-enhancement path: the output is
/// high-pass sensed through c1 into r_hp, and the sensed voltage drives a
/// transconductance g_fast into the pass-device base node.
struct FastPathParams {
    double c1 = 1e-12;        // F
    double r_hp = 1e6;        // ohm
    double g_fast = 0.0;      // S
    double i_bias_fast = 0.0; // A, quiescent draw; bookkeeping only
    bool enabled = false;

    void validate() const {
        detail::require_positive("fast.c1", c1);
        detail::require_positive("fast.r_hp", r_hp);
        if (!(g_fast >= 0.0) || !std::isfinite(g_fast)) {
            throw ParameterError("fast.g_fast", "must be finite and >= 0");
        }
        if (!(i_bias_fast >= 0.0)) {
            throw ParameterError("fast.i_bias_fast", "must be >= 0");
        }
    }

    double corner() const noexcept { return 1.0 / (r_hp * c1); }  // rad/s

    friend bool operator==(const FastPathParams&, const FastPathParams&) = default;
};

enum class StepDirection { low_to_high, high_to_low };

/// Load current ramp between two levels.
struct LoadStep {
    double i_low = 1e-3;    // A
    double i_high = 0.1;    // A
    double t_step = 10e-6;  // s, ramp start
    double t_rise = 10e-6;  // s, ramp duration
    StepDirection direction = StepDirection::low_to_high;

    // i_low == i_high is accepted as a null disturbance.
    void validate() const {
        if (!(i_low > 0.0) || !(i_low <= i_high) || !(i_high <= 0.2)) {
            throw ParameterError("step", "load levels must satisfy 0 < i_low <= i_high <= 0.2 A");
        }
        if (!(t_rise > 0.0)) {
            throw ParameterError("step.t_rise", "must be positive");
        }
        if (!(t_step >= 0.0)) {
            throw ParameterError("step.t_step", "must be >= 0");
        }
    }

    double initial() const noexcept {
        return direction == StepDirection::low_to_high ? i_low : i_high;
    }
    double final() const noexcept {
        return direction == StepDirection::low_to_high ? i_high : i_low;
    }

    double at(double t) const noexcept {
        if (t <= t_step) {
            return initial();
        }
        if (t >= t_step + t_rise) {
            return final();
        }
        return initial() + (final() - initial()) * (t - t_step) / t_rise;
    }

    friend bool operator==(const LoadStep&, const LoadStep&) = default;
};

struct Waveform {
    std::vector<double> t;     // s
    std::vector<double> vout;  // V, deviation from nominal
    std::vector<double> il;    // A
};

struct TransientMetrics {
    double peak_dev = 0.0;       // V
    double recovery_time = 0.0;  // s, from t_step
    double settling_band = 0.0;  // V
};

enum class PassLaw {
    // i = i_ref exp(v2 / vt): the small-signal gm follows the actual current.
    exponential,
    // i = i_ref + gmp v2 with gmp frozen at i_ref.
    linear,
};

struct ModelOptions {
    double c_int1 = 0.0;  // F; 0 selects cp0 / 1000
    double i_max = 0.4;   // A, pass-device current clamp
    PassLaw law = PassLaw::exponential;
    bool open_loop = false;  // drop the gm1 feedback term
    // Error-amplifier output current limit (tail current), A. The stage-1
    // current is i_ea tanh(gm1 vout / i_ea); 0 leaves it linear.
    double i_ea = 0.0;
};

/// Four-state nodal model of the regulator, in deviations from the initial
/// operating point:
///
///   node 1 (v1):   (c_int1 + cm) v1' - cm vout' = gm1 vout - v1/ro1
///   node 2 (v2):   cp v2'                        = -gm2 v1 - v2/ro2 - g_fast vhp
///   output (vout): (cf + cm) vout' - cm v1'      = i_pass(v2) - i_load(t) - g_out vout
///   sensor (vhp):  vhp' = vout' - vhp / (r_hp c1)
///
/// cm is wired from the output back to the stage-1 output. The output
/// conductance g_out is i_pass / va plus the optional external load.
class StateModel {
public:
    static constexpr std::size_t kStates = 4;
    enum Index : std::size_t { v1 = 0, v2 = 1, vout = 2, vhp = 3 };

    StateModel(const ProposedParams& p, const DeviceModel& d, const FastPathParams& f,
               const ModelOptions& o)
        : p_(p), d_(d), f_(f), o_(o) {
        p_.validate();
        d_.validate();
        f_.validate();
        cp_ = d_.cp0;
        c_int1_ = o_.c_int1 > 0.0 ? o_.c_int1 : cp_ / 1000.0;
        detail::require_positive("i_max", o_.i_max);
        if (!(o_.i_ea >= 0.0)) {
            throw ParameterError("i_ea", "must be >= 0");
        }
        Eigen::Matrix3d m;
        m << c_int1_ + p_.cm, 0.0, -p_.cm,
             0.0, cp_, 0.0,
             -p_.cm, 0.0, p_.cf + p_.cm;
        m_inv_ = m.inverse();
        g_fast_ = f_.enabled ? f_.g_fast : 0.0;
        g_ext_ = d_.rload_ext ? 1.0 / *d_.rload_ext : 0.0;
    }

    const ProposedParams& params() const noexcept { return p_; }
    const DeviceModel& device() const noexcept { return d_; }
    const FastPathParams& fast_path() const noexcept { return f_; }
    const ModelOptions& options() const noexcept { return o_; }
    double c_int1() const noexcept { return c_int1_; }

    /// Pass-device current and output conductance at base deviation v2.
    std::pair<double, double> pass(double v2, double i_ref) const {
        double ip;
        double g_out;
        if (o_.law == PassLaw::exponential) {
            const double x = std::min(v2 / d_.vt, std::log(o_.i_max / i_ref) + 1.0);
            ip = std::min(i_ref * std::exp(x), o_.i_max);
            g_out = ip / d_.va + g_ext_;
        } else {
            ip = std::clamp(i_ref + i_ref / d_.vt * v2, 0.0, o_.i_max);
            g_out = i_ref / d_.va + g_ext_;
        }
        return {ip, g_out};
    }

    State<kStates> derivative(const State<kStates>& y, double i_load, double i_ref) const {
        const auto [ip, g_out] = pass(y[v2], i_ref);
        double fb = 0.0;
        if (!o_.open_loop) {
            fb = o_.i_ea > 0.0 ? o_.i_ea * std::tanh(p_.gm1 * y[vout] / o_.i_ea)
                               : p_.gm1 * y[vout];
        }
        const Eigen::Vector3d i(fb - y[v1] / p_.ro1,
                                -p_.gm2 * y[v1] - y[v2] / p_.ro2 - g_fast_ * y[vhp],
                                ip - i_load - g_out * y[vout]);
        const Eigen::Vector3d dv = m_inv_ * i;
        return {dv[0], dv[1], dv[2], dv[2] - y[vhp] * f_.corner()};
    }

    /// Jacobian at the equilibrium carrying `i_ref` through the pass device.
    Eigen::Matrix4d jacobian(double i_ref) const {
        const double gmp = i_ref / d_.vt;
        const double g_out = i_ref / d_.va + g_ext_;
        Eigen::Matrix<double, 3, 4> di = Eigen::Matrix<double, 3, 4>::Zero();
        di(0, 0) = -1.0 / p_.ro1;
        di(0, 2) = o_.open_loop ? 0.0 : p_.gm1;
        di(1, 0) = -p_.gm2;
        di(1, 1) = -1.0 / p_.ro2;
        di(1, 3) = -g_fast_;
        di(2, 1) = gmp;
        di(2, 2) = -g_out;
        Eigen::Matrix4d j = Eigen::Matrix4d::Zero();
        j.topRows<3>() = m_inv_ * di;
        j.row(3) = j.row(2);
        j(3, 3) -= f_.corner();
        return j;
    }

private:
    ProposedParams p_;
    DeviceModel d_;
    FastPathParams f_;
    ModelOptions o_;
    double cp_ = 0.0;
    double c_int1_ = 0.0;
    double g_fast_ = 0.0;
    double g_ext_ = 0.0;
    Eigen::Matrix3d m_inv_;
};

inline StateModel build_state_model(const ProposedParams& p, const DeviceModel& d,
                                    const FastPathParams& f, const ModelOptions& o = {}) {
    return StateModel(p, d, f, o);
}

struct SimulationOptions {
    // Upper bound on the step as a fraction of the window, so peaks are sampled.
    int min_samples = 5000;
};

/// Load-step response from equilibrium at step.initial(). Integrates with
/// Dormand-Prince at relative tolerance `tol` and an absolute floor of 1 nV,
/// landing exactly on both corners of the load ramp.
inline Waveform simulate(const StateModel& model, const LoadStep& step, double t_end, double tol,
                         const SimulationOptions& so = {}) {
    step.validate();
    if (!(t_end > step.t_step + step.t_rise)) {
        throw ParameterError("t_end", "must exceed t_step + t_rise");
    }
    if (!(tol >= 1e-10 && tol <= 1e-3)) {
        throw ParameterError("tol", "relative tolerance must lie in [1e-10, 1e-3]");
    }
    const double i_ref = step.initial();
    OdeOptions opt;
    opt.rtol = tol;
    opt.atol = 1e-9;
    opt.h_max = t_end / so.min_samples;
    opt.breakpoints = {step.t_step, step.t_step + step.t_rise};

    Waveform w;
    auto rhs = [&](double t, const State<4>& y) {
        return model.derivative(y, step.at(t), i_ref);
    };
    integrate_dopri5<4>(rhs, 0.0, State<4>{}, t_end, opt, [&](double t, const State<4>& y) {
        w.t.push_back(t);
        w.vout.push_back(y[StateModel::vout]);
        w.il.push_back(step.at(t));
    });
    return w;
}

/// Peak |vout| after t_step, and the time from t_step until |vout| last leaves
/// the band (linearly interpolated between samples). A waveform that ends
/// outside the band reports its full span after t_step.
inline TransientMetrics metrics(const Waveform& w, const LoadStep& step, double band) {
    if (w.t.empty() || w.t.size() != w.vout.size()) {
        throw ParameterError("waveform", "waveform must be nonempty with matching columns");
    }
    if (!(band > 0.0)) {
        throw ParameterError("band", "settling band must be positive");
    }
    TransientMetrics m;
    m.settling_band = band;
    std::size_t last_out = w.t.size();
    for (std::size_t i = 0; i < w.t.size(); ++i) {
        const double a = std::abs(w.vout[i]);
        if (w.t[i] >= step.t_step) {
            m.peak_dev = std::max(m.peak_dev, a);
        }
        if (a > band) {
            last_out = i;
        }
    }
    if (last_out == w.t.size()) {
        return m;
    }
    double t_exit = w.t[last_out];
    if (last_out + 1 < w.t.size()) {
        const double a0 = std::abs(w.vout[last_out]);
        const double a1 = std::abs(w.vout[last_out + 1]);
        const double frac = (a0 - band) / (a0 - a1);
        t_exit += frac * (w.t[last_out + 1] - w.t[last_out]);
    }
    m.recovery_time = std::max(0.0, t_exit - step.t_step);
    return m;
}

struct AbComparison {
    TransientMetrics on;
    TransientMetrics off;
    Waveform wave_on;
    Waveform wave_off;
    double peak_delta = 0.0;      // on - off, V
    double recovery_delta = 0.0;  // on - off, s
};

/// Runs the same load step through two models that differ only in the fast path.
inline AbComparison ab_compare(const StateModel& model_on, const StateModel& model_off,
                               const LoadStep& step, double t_end, double tol, double band) {
    if (!(model_on.params() == model_off.params()) ||
        !(model_on.device() == model_off.device())) {
        throw ParameterError("ab_compare", "models must share loop and device parameters");
    }
    AbComparison r;
    r.wave_on = simulate(model_on, step, t_end, tol);
    r.wave_off = simulate(model_off, step, t_end, tol);
    r.on = metrics(r.wave_on, step, band);
    r.off = metrics(r.wave_off, step, band);
    r.peak_delta = r.on.peak_dev - r.off.peak_dev;
    r.recovery_delta = r.on.recovery_time - r.off.recovery_time;
    return r;
}

struct FastPathFit {
    double g_fast = 0.0;  // S
    double peak_dev = 0.0;  // V, at g_fast
    double recovery_time = 0.0;
    int simulations = 0;
    bool converged = false;
};

/// Fits g_fast so the fast-path-on peak deviation equals `target_peak`.
/// Regula falsi on log(peak) against log(g) over [g_lo, g_hi], assuming the
/// peak falls as g rises. Stops at 0.2% relative peak error. When the target is
/// not bracketed, returns the nearer end with converged = false. A positive
/// f.g_fast that already meets the target is returned unchanged.
inline FastPathFit calibrate_fast_path(const ProposedParams& p, const DeviceModel& d,
                                       FastPathParams f, const ModelOptions& o,
                                       const LoadStep& step, double t_end, double tol,
                                       double band, double target_peak, double g_lo,
                                       double g_hi, int max_simulations = 40) {
    detail::require_positive("target_peak", target_peak);
    detail::require_positive("g_fast_lo", g_lo);
    if (!(g_hi > g_lo)) {
        throw ParameterError("g_fast_hi", "must exceed g_fast_lo");
    }
    const double g_start = f.g_fast;
    f.enabled = true;
    FastPathFit fit;
    auto run = [&](double g) {
        f.g_fast = g;
        const auto m = metrics(simulate(build_state_model(p, d, f, o), step, t_end, tol), step, band);
        ++fit.simulations;
        return m;
    };
    auto record = [&](double g, const TransientMetrics& m) {
        fit.g_fast = g;
        fit.peak_dev = m.peak_dev;
        fit.recovery_time = m.recovery_time;
    };
    const double ly = std::log(target_peak);
    if (g_start > 0.0) {
        const auto m = run(g_start);
        record(g_start, m);
        if (std::abs(std::log(m.peak_dev) - ly) < std::log1p(2e-3)) {
            fit.converged = true;
            return fit;
        }
    }
    double xa = std::log(g_lo);
    double xb = std::log(g_hi);
    const auto ma = run(g_lo);
    const auto mb = run(g_hi);
    double fa = std::log(ma.peak_dev) - ly;
    double fb = std::log(mb.peak_dev) - ly;
    if (!(fa > 0.0)) {
        record(g_lo, ma);
        return fit;
    }
    if (!(fb < 0.0)) {
        record(g_hi, mb);
        return fit;
    }
    int side = 0;
    while (fit.simulations < max_simulations) {
        const double x = (xa * fb - xb * fa) / (fb - fa);
        const auto m = run(std::exp(x));
        const double fx = std::log(m.peak_dev) - ly;
        record(std::exp(x), m);
        if (std::abs(fx) < std::log1p(2e-3)) {
            fit.converged = true;
            break;
        }
        // Illinois modification keeps both ends moving.
        if (fx > 0.0) {
            xa = x;
            fa = fx;
            if (side == 1) fb *= 0.5;
            side = 1;
        } else {
            xb = x;
            fb = fx;
            if (side == -1) fa *= 0.5;
            side = -1;
        }
    }
    return fit;
}

}  // namespace ldolens
