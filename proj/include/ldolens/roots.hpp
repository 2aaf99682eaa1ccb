#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "ldolens/error.hpp"
#include "ldolens/polynomial.hpp"

namespace ldolens {

/// A root location in the s-plane (rad/s).
struct ComplexRoot {
    double re = 0.0;
    double im = 0.0;
    int multiplicity_hint = 1;

    std::complex<double> value() const noexcept { return {re, im}; }
    double magnitude() const noexcept { return std::hypot(re, im); }
    bool is_real() const noexcept { return im == 0.0; }
};

/// The eigenvalue iteration did not converge or the backward-error check failed.
/// `best()` holds the last available estimate.
class RootNonConvergence : public Error {
public:
    RootNonConvergence(const std::string& what, std::vector<ComplexRoot> best)
        : Error(what), best_(std::move(best)) {}

    const std::vector<ComplexRoot>& best() const noexcept { return best_; }

private:
    std::vector<ComplexRoot> best_;
};

struct RootOptions {
    double tol = 1e-9;
    int max_iterations = 500;
    int polish_steps = 4;
};

namespace detail {

// Parlett-Reinsch balancing with radix-2 factors, so the similarity transform
// is exact in floating point.
inline void balance(Eigen::MatrixXd& a) {
    const Eigen::Index n = a.rows();
    constexpr double radix = 2.0;
    constexpr double sqrdx = radix * radix;
    bool done = false;
    while (!done) {
        done = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            double r = 0.0;
            double c = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j != i) {
                    c += std::abs(a(j, i));
                    r += std::abs(a(i, j));
                }
            }
            if (c == 0.0 || r == 0.0) {
                continue;
            }
            double g = r / radix;
            double f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= sqrdx;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                g = 1.0 / f;
                a.row(i) *= g;
                a.col(i) *= f;
            }
        }
    }
}

// Eigenvalues of a real quasi-triangular Schur factor.
inline std::vector<std::complex<double>> schur_eigenvalues(const Eigen::MatrixXd& t) {
    std::vector<std::complex<double>> out;
    const Eigen::Index n = t.rows();
    Eigen::Index i = 0;
    while (i < n) {
        if (i + 1 < n && t(i + 1, i) != 0.0) {
            const double p = 0.5 * (t(i, i) - t(i + 1, i + 1));
            const double bc = t(i, i + 1) * t(i + 1, i);
            const double mid = t(i + 1, i + 1) + p;
            const std::complex<double> z = std::sqrt(std::complex<double>(p * p + bc, 0.0));
            out.emplace_back(mid + z);
            out.emplace_back(mid - z);
            i += 2;
        } else {
            out.emplace_back(t(i, i), 0.0);
            i += 1;
        }
    }
    return out;
}

struct HornerResult {
    std::complex<double> value;
    std::complex<double> derivative;
};

inline HornerResult horner(const std::vector<double>& c, std::complex<double> z) {
    std::complex<double> p = 0.0;
    std::complex<double> dp = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) {
        dp = dp * z + p;
        p = p * z + *it;
    }
    return {p, dp};
}

inline std::complex<double> newton_polish(const std::vector<double>& c, std::complex<double> z,
                                          int steps) {
    double best_res = std::abs(horner(c, z).value);
    for (int k = 0; k < steps && best_res > 0.0; ++k) {
        const auto [p, dp] = horner(c, z);
        if (dp == 0.0) {
            break;
        }
        std::complex<double> next = z - p / dp;
        if (z.imag() == 0.0) {
            next = {next.real(), 0.0};
        }
        const double res = std::abs(horner(c, next).value);
        if (!(res < best_res)) {
            break;
        }
        z = next;
        best_res = res;
    }
    return z;
}

inline bool root_less(const ComplexRoot& a, const ComplexRoot& b) {
    const double ma = a.magnitude();
    const double mb = b.magnitude();
    if (ma != mb) {
        return ma < mb;
    }
    if (a.re != b.re) {
        return a.re < b.re;
    }
    return a.im > b.im;
}

// Force exact conjugate symmetry on a root set of a real polynomial.
inline void pair_conjugates(std::vector<std::complex<double>>& z) {
    const std::size_t n = z.size();
    std::vector<bool> used(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (used[i] || z[i].imag() <= 0.0) {
            continue;
        }
        std::size_t best = n;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || used[j] || z[j].imag() >= 0.0) {
                continue;
            }
            const double d = std::abs(z[j] - std::conj(z[i]));
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        if (best == n) {
            continue;
        }
        const double re = 0.5 * (z[i].real() + z[best].real());
        const double im = 0.5 * (z[i].imag() - z[best].imag());
        z[i] = {re, im};
        z[best] = {re, -im};
        used[i] = used[best] = true;
    }
}

}  // namespace detail

/// All roots of `p`, counted with multiplicity.
///
/// The polynomial is rescaled by a power-of-two substitution s = sigma * s' so
/// that its roots cluster around unit magnitude, made monic, and turned into a
/// balanced companion matrix whose eigenvalues are the scaled roots. Each root
/// is then Newton-polished against the unscaled coefficients and checked for
/// backward error |p(r)| <= tol * max|c| * max(1, |r|)^degree.
///
/// Output order is ascending magnitude, then real part, then imaginary part
/// (positive first).
inline std::vector<ComplexRoot> roots(const Polynomial& p, const RootOptions& opt = {}) {
    const auto deg = p.degree();
    if (!deg || *deg == 0) {
        throw DegeneratePolynomial("roots: polynomial must have degree >= 1");
    }
    const std::vector<double>& c = p.coeffs();
    const std::size_t n = *deg;

    std::size_t zero_roots = 0;
    while (c[zero_roots] == 0.0) {
        ++zero_roots;
    }
    const std::vector<double> q(c.begin() + static_cast<std::ptrdiff_t>(zero_roots), c.end());
    const std::size_t m = q.size() - 1;

    std::vector<std::complex<double>> z(zero_roots, {0.0, 0.0});
    if (m > 0) {
        const double ratio = std::abs(q.front()) / std::abs(q.back());
        const int scale_exp =
            static_cast<int>(std::lround(std::log2(ratio) / static_cast<double>(m)));
        const double sigma = std::ldexp(1.0, scale_exp);

        // q'_j = q_j sigma^j, monic in s'.
        std::vector<double> scaled(m + 1);
        for (std::size_t j = 0; j <= m; ++j) {
            scaled[j] = std::ldexp(q[j], scale_exp * static_cast<int>(j));
        }
        const double lead = scaled[m];

        const auto dim = static_cast<Eigen::Index>(m);
        Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(dim, dim);
        for (Eigen::Index i = 1; i < dim; ++i) {
            comp(i, i - 1) = 1.0;
        }
        for (Eigen::Index i = 0; i < dim; ++i) {
            comp(i, dim - 1) = -scaled[static_cast<std::size_t>(i)] / lead;
        }
        detail::balance(comp);

        Eigen::RealSchur<Eigen::MatrixXd> schur(dim);
        schur.setMaxIterations(opt.max_iterations);
        schur.compute(comp, /*computeU=*/false);
        auto eig = detail::schur_eigenvalues(schur.matrixT());
        for (auto& e : eig) {
            e *= sigma;
        }
        if (schur.info() != Eigen::Success) {
            std::vector<ComplexRoot> best;
            for (const auto& e : eig) {
                best.push_back({e.real(), e.imag(), 1});
            }
            throw RootNonConvergence("roots: eigenvalue iteration cap reached", std::move(best));
        }
        for (auto& e : eig) {
            e = detail::newton_polish(q, e, opt.polish_steps);
        }
        detail::pair_conjugates(eig);
        z.insert(z.end(), eig.begin(), eig.end());
    }

    const double cmax = p.max_abs_coeff();
    std::vector<ComplexRoot> out;
    out.reserve(n);
    bool ok = true;
    for (const auto& r : z) {
        const double bound =
            opt.tol * cmax * std::pow(std::max(1.0, std::abs(r)), static_cast<double>(n));
        if (!(std::abs(p(r)) <= bound)) {
            ok = false;
        }
        out.push_back({r.real(), r.imag(), 1});
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        int count = 0;
        for (std::size_t j = 0; j < out.size(); ++j) {
            const double scale = std::max(out[i].magnitude(), out[j].magnitude());
            if (std::abs(out[i].value() - out[j].value()) <= 1e-6 * scale) {
                ++count;
            }
        }
        out[i].multiplicity_hint = count;
    }
    std::sort(out.begin(), out.end(), detail::root_less);
    if (!ok) {
        throw RootNonConvergence("roots: backward error above tolerance", std::move(out));
    }
    return out;
}

struct CancelledPair {
    ComplexRoot zero;
    ComplexRoot pole;
    double rel_sep;  // |zero - pole| / max(|zero|, |pole|)
};

struct Cancellation {
    std::vector<ComplexRoot> zeros;
    std::vector<ComplexRoot> poles;
    std::vector<CancelledPair> pairs;
};

/// Explicit pole/zero cancellation: each zero within `rel_tol` of a remaining
/// pole removes the closest such pole. Nothing is cancelled implicitly
/// elsewhere; callers decide whether to apply this.
inline Cancellation cancel_common_roots(const std::vector<ComplexRoot>& zeros,
                                        const std::vector<ComplexRoot>& poles,
                                        double rel_tol = 1e-9) {
    Cancellation out;
    out.poles = poles;
    for (const auto& z : zeros) {
        std::size_t best = out.poles.size();
        double best_sep = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < out.poles.size(); ++i) {
            const double scale = std::max(z.magnitude(), out.poles[i].magnitude());
            const double sep =
                scale > 0.0 ? std::abs(z.value() - out.poles[i].value()) / scale : 0.0;
            if (sep <= rel_tol && sep < best_sep) {
                best = i;
                best_sep = sep;
            }
        }
        if (best == out.poles.size()) {
            out.zeros.push_back(z);
            continue;
        }
        out.pairs.push_back({z, out.poles[best], best_sep});
        out.poles.erase(out.poles.begin() + static_cast<std::ptrdiff_t>(best));
    }
    return out;
}

}  // namespace ldolens
