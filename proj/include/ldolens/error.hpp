#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace ldolens {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter record or argument failed validation. `field()` names the offender.
class ParameterError : public Error {
public:
    ParameterError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Root finding was asked for the roots of a zero or constant polynomial.
class DegeneratePolynomial : public Error {
public:
    using Error::Error;
};

/// Evaluation hit (or came numerically too close to) a pole on the jw axis.
class PoleHit : public Error {
public:
    explicit PoleHit(double omega)
        : Error("transfer function denominator vanishes at omega = " + std::to_string(omega) +
                " rad/s"),
          omega_(omega) {}

    double omega() const noexcept { return omega_; }

private:
    double omega_;
};

/// No unity-gain crossing exists in the scan range.
class NoCrossing : public Error {
public:
    using Error::Error;
};

/// |H(0)| <= 1, so a unity-gain frequency is undefined.
class LowDcGain : public Error {
public:
    using Error::Error;
};

/// The adaptive integrator's step size collapsed.
class StiffnessError : public Error {
public:
    StiffnessError(double t, double h)
        : Error("step size underflow (h = " + std::to_string(h) + " s at t = " +
                std::to_string(t) +
                " s); the system is too stiff for explicit integration at this tolerance. "
                "Loosen the tolerance or review the internal capacitances (C_int1, Cp, CF)."),
          t_(t) {}

    double time() const noexcept { return t_; }

private:
    double t_;
};

/// Malformed configuration text or an unknown key.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A file could not be read or written.
class IoError : public Error {
public:
    IoError(std::string path, const std::string& what)
        : Error(path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace ldolens
