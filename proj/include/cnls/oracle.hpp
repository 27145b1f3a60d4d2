#pragma once

// Finite-difference Newton solver for the stationary system. Shares only
// the problem description with the Green's-function pipeline.

#include "cnls/error.hpp"
#include "cnls/model.hpp"
#include "cnls/operator.hpp" // WavePair only

#include <lapacke.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <vector>

namespace cnls {

enum class Boundary { full_line, half_line };

struct OracleOptions {
    std::size_t max_iter = 50;
    double step_tol = 1e-10; // max |update|
};

struct OracleResult {
    WavePair u; // full grid; odd extension for the half line
    std::size_t iterations = 0;
    double residual = 0.0; // sup of the discrete equations at exit
};

namespace oracle_detail {

/// (1/h) * integral of the field over [x_j - h/2, x_j + h/2].
inline double cell_average(const CoefficientField& field, const Grid& grid, std::size_t j) {
    const double h = grid.spacing();
    return field.integral(grid.x(j) - 0.5 * h, grid.x(j) + 0.5 * h) / h;
}

/// d(F u1, H u2)/d(u1, u2) row-major.
inline std::array<double, 4> source_derivative(const Nonlinearity& nl, double u1, double u2) {
    switch (nl.kind()) {
    case Nonlinearity::Kind::decoupled_cubic:
        return {3.0 * u1 * u1, 0.0, 0.0, 3.0 * u2 * u2};
    case Nonlinearity::Kind::spinor_cubic: {
        const double cross = 2.0 * u1 * u2;
        return {3.0 * u1 * u1 + u2 * u2, cross, cross, u1 * u1 + 3.0 * u2 * u2};
    }
    case Nonlinearity::Kind::custom:
        break;
    }
    const double eps = 1e-7 * std::max(1.0, std::max(std::abs(u1), std::abs(u2)));
    const auto p1 = nl.sources(u1 + eps, u2), m1 = nl.sources(u1 - eps, u2);
    const auto p2 = nl.sources(u1, u2 + eps), m2 = nl.sources(u1, u2 - eps);
    return {(p1[0] - m1[0]) / (2 * eps), (p2[0] - m2[0]) / (2 * eps), (p1[1] - m1[1]) / (2 * eps),
            (p2[1] - m2[1]) / (2 * eps)};
}

/// Discrete system on the interior nodes [lo, hi) of the grid; unknowns are
/// interleaved (u1_j, u2_j) so the Jacobian has two sub- and super-diagonals.
class System {
public:
    static constexpr int kBand = 2;

    System(const Problem& p, Boundary bc, const WavePair* forcing)
        : p_(p), lo_(bc == Boundary::full_line ? 1 : p.grid().center() + 1), hi_(p.grid().size() - 1) {
        const Grid& g = p.grid();
        const std::size_t n = hi_ - lo_;
        a_.resize(n), b_.resize(n), c_.resize(n), d_.resize(n), e_.resize(n), f_.resize(n);
        s1_.assign(n, 0.0), s2_.assign(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t j = lo_ + k;
            a_[k] = cell_average(p.a(), g, j);
            b_[k] = cell_average(p.b(), g, j);
            c_[k] = cell_average(p.c(), g, j);
            d_[k] = cell_average(p.d(), g, j);
            e_[k] = cell_average(p.e(), g, j);
            f_[k] = cell_average(p.f(), g, j);
            if (forcing) {
                s1_[k] = forcing->u1[j];
                s2_[k] = forcing->u2[j];
            }
        }
    }

    [[nodiscard]] std::size_t nodes() const noexcept { return hi_ - lo_; }
    [[nodiscard]] std::size_t unknowns() const noexcept { return 2 * nodes(); }
    [[nodiscard]] std::size_t first_node() const noexcept { return lo_; }

    [[nodiscard]] std::vector<double> residual(const std::vector<double>& z) const {
        const double ih2 = 1.0 / (p_.grid().spacing() * p_.grid().spacing());
        const std::size_t n = nodes();
        std::vector<double> r(2 * n);
        for (std::size_t k = 0; k < n; ++k) {
            const double u1 = z[2 * k], u2 = z[2 * k + 1];
            const double l1 = k > 0 ? z[2 * k - 2] : 0.0, l2 = k > 0 ? z[2 * k - 1] : 0.0;
            const double r1 = k + 1 < n ? z[2 * k + 2] : 0.0, r2 = k + 1 < n ? z[2 * k + 3] : 0.0;
            const auto src = p_.nonlinearity().sources(u1, u2);
            r[2 * k] = -(l1 - 2 * u1 + r1) * ih2 + a_[k] * u1 - b_[k] * u2 - c_[k] * src[0] - s1_[k];
            r[2 * k + 1] = -(l2 - 2 * u2 + r2) * ih2 + d_[k] * u2 - e_[k] * u1 - f_[k] * src[1] - s2_[k];
        }
        return r;
    }

    /// Jacobian in LAPACK general-band storage with room for pivoting fill.
    [[nodiscard]] std::vector<double> band_jacobian(const std::vector<double>& z) const {
        const int m = static_cast<int>(unknowns());
        const int ld = ldab();
        std::vector<double> ab(static_cast<std::size_t>(ld) * static_cast<std::size_t>(m), 0.0);
        auto at = [&](int i, int j) -> double& {
            return ab[static_cast<std::size_t>(2 * kBand + i - j) + static_cast<std::size_t>(j) * ld];
        };
        const double ih2 = 1.0 / (p_.grid().spacing() * p_.grid().spacing());
        const std::size_t n = nodes();
        for (std::size_t k = 0; k < n; ++k) {
            const int i1 = static_cast<int>(2 * k), i2 = i1 + 1;
            const auto ds = source_derivative(p_.nonlinearity(), z[2 * k], z[2 * k + 1]);
            at(i1, i1) = 2 * ih2 + a_[k] - c_[k] * ds[0];
            at(i1, i2) = -b_[k] - c_[k] * ds[1];
            at(i2, i1) = -e_[k] - f_[k] * ds[2];
            at(i2, i2) = 2 * ih2 + d_[k] - f_[k] * ds[3];
            if (k > 0) {
                at(i1, i1 - 2) = -ih2;
                at(i2, i2 - 2) = -ih2;
            }
            if (k + 1 < n) {
                at(i1, i1 + 2) = -ih2;
                at(i2, i2 + 2) = -ih2;
            }
        }
        return ab;
    }

    /// J v from the band storage.
    [[nodiscard]] std::vector<double> jacobian_times(const std::vector<double>& z, const std::vector<double>& v) const {
        const auto ab = band_jacobian(z);
        const int m = static_cast<int>(unknowns());
        const int ld = ldab();
        std::vector<double> out(v.size(), 0.0);
        for (int i = 0; i < m; ++i)
            for (int j = std::max(0, i - kBand); j <= std::min(m - 1, i + kBand); ++j)
                out[static_cast<std::size_t>(i)] +=
                    ab[static_cast<std::size_t>(2 * kBand + i - j) + static_cast<std::size_t>(j) * ld] *
                    v[static_cast<std::size_t>(j)];
        return out;
    }

    /// The nonlinear terms (c F u1, f H u2) alone and their derivative along v.
    [[nodiscard]] std::vector<double> nonlinear_terms(const std::vector<double>& z) const {
        std::vector<double> out(z.size());
        for (std::size_t k = 0; k < nodes(); ++k) {
            const auto src = p_.nonlinearity().sources(z[2 * k], z[2 * k + 1]);
            out[2 * k] = c_[k] * src[0];
            out[2 * k + 1] = f_[k] * src[1];
        }
        return out;
    }

    [[nodiscard]] std::vector<double> nonlinear_times(const std::vector<double>& z, const std::vector<double>& v) const {
        std::vector<double> out(z.size());
        for (std::size_t k = 0; k < nodes(); ++k) {
            const auto ds = source_derivative(p_.nonlinearity(), z[2 * k], z[2 * k + 1]);
            out[2 * k] = c_[k] * (ds[0] * v[2 * k] + ds[1] * v[2 * k + 1]);
            out[2 * k + 1] = f_[k] * (ds[2] * v[2 * k] + ds[3] * v[2 * k + 1]);
        }
        return out;
    }

    [[nodiscard]] static int ldab() noexcept { return 3 * kBand + 1; }

    [[nodiscard]] std::vector<double> pack(const WavePair& full) const {
        std::vector<double> z(unknowns());
        for (std::size_t k = 0; k < nodes(); ++k) {
            z[2 * k] = full.u1[lo_ + k];
            z[2 * k + 1] = full.u2[lo_ + k];
        }
        return z;
    }

    [[nodiscard]] WavePair unpack(const std::vector<double>& z) const {
        const Grid& g = p_.grid();
        WavePair full(g.size());
        for (std::size_t k = 0; k < nodes(); ++k) {
            full.u1[lo_ + k] = z[2 * k];
            full.u2[lo_ + k] = z[2 * k + 1];
        }
        if (lo_ != 1) { // odd extension about the centre node
            const std::size_t c = g.center();
            for (std::size_t j = c + 1; j < g.size(); ++j) {
                full.u1[2 * c - j] = -full.u1[j];
                full.u2[2 * c - j] = -full.u2[j];
            }
        }
        return full;
    }

private:
    const Problem& p_;
    std::size_t lo_, hi_;
    std::vector<double> a_, b_, c_, d_, e_, f_, s1_, s2_;
};

inline double sup(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace oracle_detail

/// Damped Newton on the central-difference discretization of the system
/// with u = 0 at x = +-L (and at x = 0 on the half line). `forcing`, when
/// given, holds nodal right-hand sides on the full grid.
inline OracleResult oracle_solve(const Problem& p, const WavePair& init, Boundary bc = Boundary::full_line,
                                 const WavePair* forcing = nullptr, OracleOptions opts = {}) {
    if (init.size() != p.grid().size())
        throw Error(ErrorCode::invalid_grid, "initial guess is not sampled on the problem grid");
    const oracle_detail::System sys(p, bc, forcing);
    const int m = static_cast<int>(sys.unknowns());
    const int kl = oracle_detail::System::kBand;
    std::vector<double> z = sys.pack(init);
    std::vector<double> r = sys.residual(z);
    std::vector<lapack_int> ipiv(static_cast<std::size_t>(m));

    for (std::size_t it = 1; it <= opts.max_iter; ++it) {
        auto ab = sys.band_jacobian(z);
        std::vector<double> step(r);
        for (double& v : step) v = -v;
        const lapack_int info = LAPACKE_dgbsv(LAPACK_COL_MAJOR, m, kl, kl, 1, ab.data(),
                                              oracle_detail::System::ldab(), ipiv.data(), step.data(), m);
        if (info > 0) throw Error(ErrorCode::singular_jacobian, "Jacobian is singular (fold point?)");
        if (info < 0) throw Error(ErrorCode::newton_divergence, "banded solve rejected its arguments");

        // Armijo backtracking on the Euclidean residual norm.
        const double base = oracle_detail::norm2(r);
        double alpha = 1.0;
        std::vector<double> trial(z.size()), trial_r;
        for (int halvings = 0;; ++halvings) {
            for (std::size_t i = 0; i < z.size(); ++i) trial[i] = z[i] + alpha * step[i];
            trial_r = sys.residual(trial);
            if (oracle_detail::norm2(trial_r) <= (1.0 - 1e-4 * alpha) * base || halvings == 30) break;
            alpha *= 0.5;
        }
        const double update = alpha * oracle_detail::sup(step);
        if (!std::isfinite(update) || !std::isfinite(oracle_detail::sup(trial_r)))
            throw Error(ErrorCode::newton_divergence, "Newton iterate is no longer finite");
        z.swap(trial);
        r.swap(trial_r);
        if (update <= opts.step_tol)
            return OracleResult{sys.unpack(z), it, oracle_detail::sup(r)};
    }
    throw Error(ErrorCode::newton_divergence, "Newton did not converge within the iteration limit");
}

/// Max relative discrepancy between analytic Jacobian-vector products and
/// central differences (step 1e-6), over a few fixed pseudo-random
/// directions. The full discrete Jacobian and its nonlinear block are
/// checked separately so the 1/h^2 stencil cannot mask the latter.
inline double jacobian_check(const Problem& p, const WavePair& u, Boundary bc = Boundary::full_line) {
    const oracle_detail::System sys(p, bc, nullptr);
    const std::vector<double> z = sys.pack(u);
    std::mt19937_64 rng(20240917);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    constexpr double step = 1e-6;
    double worst = 0.0;
    auto compare = [&](const std::vector<double>& analytic, const std::vector<double>& plus,
                       const std::vector<double>& minus) {
        double diff = 0.0;
        for (std::size_t i = 0; i < analytic.size(); ++i)
            diff = std::max(diff, std::abs((plus[i] - minus[i]) / (2 * step) - analytic[i]));
        const double scale = oracle_detail::sup(analytic);
        worst = std::max(worst, scale > 0.0 ? diff / scale : diff);
    };
    for (int trial = 0; trial < 4; ++trial) {
        std::vector<double> v(z.size());
        for (double& x : v) x = dist(rng);
        std::vector<double> zp(z), zm(z);
        for (std::size_t i = 0; i < z.size(); ++i) {
            zp[i] += step * v[i];
            zm[i] -= step * v[i];
        }
        compare(sys.jacobian_times(z, v), sys.residual(zp), sys.residual(zm));
        compare(sys.nonlinear_times(z, v), sys.nonlinear_terms(zp), sys.nonlinear_terms(zm));
    }
    return worst;
}

} // namespace cnls
