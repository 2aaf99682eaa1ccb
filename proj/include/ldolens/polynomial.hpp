#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ldolens/error.hpp"

namespace ldolens {

// Real polynomial in the Laplace variable s, stored in ascending powers:
// coeffs()[k] multiplies s^k. Trailing zeros are trimmed on construction, so
// the zero polynomial has an empty coefficient vector and no degree.
class Polynomial {
public:
    Polynomial() = default;

    explicit Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
        for (double c : coeffs_) {
            if (!std::isfinite(c)) {
                throw ParameterError("coeffs", "polynomial coefficients must be finite");
            }
        }
        while (!coeffs_.empty() && coeffs_.back() == 0.0) {
            coeffs_.pop_back();
        }
    }

    Polynomial(std::initializer_list<double> coeffs) : Polynomial(std::vector<double>(coeffs)) {}

    static Polynomial constant(double c) { return Polynomial({c}); }

    const std::vector<double>& coeffs() const noexcept { return coeffs_; }

    bool is_zero() const noexcept { return coeffs_.empty(); }

    /// nullopt for the zero polynomial.
    std::optional<std::size_t> degree() const noexcept {
        if (coeffs_.empty()) {
            return std::nullopt;
        }
        return coeffs_.size() - 1;
    }

    /// Coefficient of s^k; zero beyond the stored degree.
    double operator[](std::size_t k) const noexcept {
        return k < coeffs_.size() ? coeffs_[k] : 0.0;
    }

    double leading() const noexcept { return coeffs_.empty() ? 0.0 : coeffs_.back(); }

    double max_abs_coeff() const noexcept {
        double m = 0.0;
        for (double c : coeffs_) {
            m = std::max(m, std::abs(c));
        }
        return m;
    }

    template <typename T>
    T operator()(T s) const {
        T acc{0};
        for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
            acc = acc * s + T(*it);
        }
        return acc;
    }

    Polynomial scaled(double k) const {
        std::vector<double> out(coeffs_);
        for (double& c : out) {
            c *= k;
        }
        return Polynomial(std::move(out));
    }

    friend bool operator==(const Polynomial&, const Polynomial&) = default;

private:
    std::vector<double> coeffs_;
};

/// Coefficient convolution. Total: the zero polynomial absorbs.
inline Polynomial poly_mul(const Polynomial& a, const Polynomial& b) {
    if (a.is_zero() || b.is_zero()) {
        return {};
    }
    const auto& x = a.coeffs();
    const auto& y = b.coeffs();
    std::vector<double> out(x.size() + y.size() - 1, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = 0; j < y.size(); ++j) {
            out[i + j] += x[i] * y[j];
        }
    }
    return Polynomial(std::move(out));
}

/// num/den with no implicit common-factor cancellation.
class RationalFunction {
public:
    RationalFunction(Polynomial num, Polynomial den) : num_(std::move(num)), den_(std::move(den)) {
        if (den_.is_zero()) {
            throw ParameterError("den", "denominator must not be the zero polynomial");
        }
    }

    const Polynomial& num() const noexcept { return num_; }
    const Polynomial& den() const noexcept { return den_; }

    /// H(0). Requires a nonzero constant term in the denominator.
    double dc_value() const {
        if (den_[0] == 0.0) {
            throw PoleHit(0.0);
        }
        return num_[0] / den_[0];
    }

    RationalFunction scaled(double k) const { return {num_.scaled(k), den_}; }

private:
    Polynomial num_;
    Polynomial den_;
};

}  // namespace ldolens
