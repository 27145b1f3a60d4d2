#pragma once

// Reference computations used only by the tests. None of them goes through
// the library's Green's-function or quadrature code.

#include "cnls/model.hpp"
#include "cnls/operator.hpp"
#include "cnls/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <vector>

namespace testing_support {

using cnls::CoefficientField;
using cnls::Grid;

inline const double kE = std::exp(1.0);

/// (1/(2 sqrt(a))) e^{-sqrt(a)|x-s|}
inline double constant_green(double a, double x, double s) {
    const double k = std::sqrt(a);
    return std::exp(-k * std::abs(x - s)) / (2.0 * k);
}

/// Decaying solutions of -phi'' + a phi = 0 by classical RK4 from both ends,
/// normalized to Wronskian -1 and phi1 = phi2 at the crossing, sampled at
/// the requested points. Jumps of a must fall on step boundaries.
struct Rk4Basis {
    std::vector<double> x, phi1, phi2;

    [[nodiscard]] double at(const std::vector<double>& v, double pos) const {
        const double t = (pos - x.front()) / (x[1] - x[0]);
        const auto j = static_cast<std::size_t>(std::lround(t));
        return v[j];
    }
};

inline Rk4Basis rk4_basis(const CoefficientField& a, double L, std::size_t steps) {
    const double h = 2.0 * L / static_cast<double>(steps);
    auto integrate = [&](double x0, double dir, double slope) {
        std::vector<double> out(steps + 1);
        double y = 1.0, yp = slope * dir;
        out[0] = y;
        double x = x0;
        for (std::size_t k = 0; k < steps; ++k) {
            // Coefficient of the current step, read at its midpoint.
            const double av = a(x + dir * 0.5 * h);
            auto f = [&](double yy, double ypp) { return std::array<double, 2>{ypp, av * yy}; };
            const double hh = dir * h;
            const auto k1 = f(y, yp);
            const auto k2 = f(y + 0.5 * hh * k1[0], yp + 0.5 * hh * k1[1]);
            const auto k3 = f(y + 0.5 * hh * k2[0], yp + 0.5 * hh * k2[1]);
            const auto k4 = f(y + hh * k3[0], yp + hh * k3[1]);
            y += hh / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
            yp += hh / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
            x += hh;
            out[k + 1] = y;
        }
        return std::pair{out, yp};
    };
    const double left_slope = std::sqrt(a(-L));
    const double right_slope = std::sqrt(a(L));
    auto [up, up_end] = integrate(-L, 1.0, left_slope);
    auto [down_rev, down_end] = integrate(L, -1.0, right_slope);
    (void)up_end;
    (void)down_end;

    Rk4Basis b;
    b.x.resize(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) b.x[k] = -L + h * static_cast<double>(k);
    b.phi1 = up;
    b.phi2.assign(down_rev.rbegin(), down_rev.rend());

    // Wronskian at the centre from a 4th-order centred derivative.
    const std::size_t c = steps / 2;
    auto deriv = [&](const std::vector<double>& v) {
        return (-v[c + 2] + 8 * v[c + 1] - 8 * v[c - 1] + v[c - 2]) / (12 * h);
    };
    const double w = b.phi1[c] * deriv(b.phi2) - deriv(b.phi1) * b.phi2[c];
    // Scale so W = -1 and the two meet at their crossing: phi1 *= s1, phi2 *= s2
    // with s1 s2 = -1/w and s1 phi1(x0) = s2 phi2(x0).
    std::size_t cross = 0;
    for (std::size_t k = 0; k < steps; ++k)
        if ((b.phi1[k] - b.phi2[k]) * (b.phi1[k + 1] - b.phi2[k + 1]) <= 0) {
            cross = k;
            break;
        }
    // log-linear interpolation of the crossing
    const double g0 = std::log(b.phi1[cross]) - std::log(b.phi2[cross]);
    const double g1 = std::log(b.phi1[cross + 1]) - std::log(b.phi2[cross + 1]);
    const double t = g0 / (g0 - g1);
    const double l1 = std::log(b.phi1[cross]) * (1 - t) + std::log(b.phi1[cross + 1]) * t;
    const double l2 = std::log(b.phi2[cross]) * (1 - t) + std::log(b.phi2[cross + 1]) * t;
    const double prod = -1.0 / w;
    const double ratio = std::exp(l2 - l1); // s1/s2
    const double s2 = std::sqrt(prod / ratio);
    const double s1 = prod / s2;
    for (auto& v : b.phi1) v *= s1;
    for (auto& v : b.phi2) v *= s2;
    return b;
}

/// Pseudo-random piecewise-constant potential with values in [lo, hi] and
/// at most `max_pieces` pieces, breakpoints inside [-span, span].
inline CoefficientField random_potential(std::mt19937_64& rng, double lo, double hi, std::size_t max_pieces,
                                         double span) {
    std::uniform_int_distribution<std::size_t> pieces(1, max_pieces);
    std::uniform_real_distribution<double> value(lo, hi), pos(-span, span);
    const std::size_t n = pieces(rng);
    if (n == 1) return CoefficientField::constant(value(rng));
    std::vector<double> br;
    while (br.size() + 1 < n) {
        const double x = pos(rng);
        bool clash = false;
        for (double y : br) clash = clash || std::abs(x - y) < 0.05;
        if (!clash) br.push_back(x);
    }
    std::sort(br.begin(), br.end());
    std::vector<double> vals(n);
    for (double& v : vals) v = value(rng);
    return CoefficientField::piecewise(br, vals);
}

/// Random compact interval of length in [0.2, 2] inside [-span, span].
inline cnls::Interval random_interval(std::mt19937_64& rng, double span) {
    std::uniform_real_distribution<double> len(0.2, 2.0);
    const double l = len(rng);
    std::uniform_real_distribution<double> lo(-span, span - l);
    const double a = lo(rng);
    return {a, a + l};
}

/// Scalar FD Newton for -u'' + a u = c u^3 with u(+-L) = 0, cell-averaged
/// coefficients, tridiagonal (Thomas) solves.
inline std::vector<double> scalar_fd_newton(const CoefficientField& a, const CoefficientField& c, const Grid& g,
                                            std::vector<double> u) {
    const std::size_t n = g.size();
    const double h = g.spacing();
    std::vector<double> av(n), cv(n);
    for (std::size_t j = 0; j < n; ++j) {
        av[j] = a.integral(g.x(j) - h / 2, g.x(j) + h / 2) / h;
        cv[j] = c.integral(g.x(j) - h / 2, g.x(j) + h / 2) / h;
    }
    u.front() = u.back() = 0.0;
    for (int it = 0; it < 60; ++it) {
        std::vector<double> r(n, 0.0), lower(n, 0.0), diag(n, 1.0), upper(n, 0.0);
        for (std::size_t j = 1; j + 1 < n; ++j) {
            r[j] = -(u[j - 1] - 2 * u[j] + u[j + 1]) / (h * h) + av[j] * u[j] - cv[j] * u[j] * u[j] * u[j];
            lower[j] = upper[j] = -1.0 / (h * h);
            diag[j] = 2.0 / (h * h) + av[j] - 3.0 * cv[j] * u[j] * u[j];
        }
        lower[1] = 0.0;
        upper[n - 2] = 0.0;
        // Thomas on rows 1..n-2
        std::vector<double> cp(n, 0.0), dp(n, 0.0);
        for (std::size_t j = 1; j + 1 < n; ++j) {
            const double m = diag[j] - lower[j] * cp[j - 1];
            cp[j] = upper[j] / m;
            dp[j] = (-r[j] - lower[j] * dp[j - 1]) / m;
        }
        std::vector<double> d(n, 0.0);
        double step = 0.0;
        for (std::size_t j = n - 2; j >= 1; --j) {
            d[j] = dp[j] - cp[j] * d[j + 1];
            step = std::max(step, std::abs(d[j]));
        }
        for (std::size_t j = 1; j + 1 < n; ++j) u[j] += d[j];
        if (step <= 1e-12) break;
    }
    return u;
}

inline double sup_diff(const std::vector<double>& x, const std::vector<double>& y) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
    return m;
}

/// Spinor preset with b = e = 0.5 and c = f = 1 on [-1, 1], L = 15.
inline cnls::Problem manufactured_problem(std::size_t N) {
    cnls::PresetFields pf;
    pf.b = CoefficientField::bump(0.5, {-1, 1});
    pf.c = CoefficientField::bump(1.0, {-1, 1});
    pf.e = pf.b;
    pf.f = pf.c;
    pf.grid = Grid(15.0, N);
    return cnls::preset_problem(cnls::Preset::spinor, pf);
}

inline double sech(double x) { return 1 / std::cosh(x); }

// u1 = sech x - sech L, u2 = (sech^2 x - sech^2 L) / 2; both vanish at +-L.
struct Manufactured {
    double L;
    [[nodiscard]] double u1(double x) const { return sech(x) - sech(L); }
    [[nodiscard]] double u2(double x) const { return 0.5 * (sech(x) * sech(x) - sech(L) * sech(L)); }
    [[nodiscard]] double u1pp(double x) const { return sech(x) * (1 - 2 * sech(x) * sech(x)); }
    [[nodiscard]] double u2pp(double x) const {
        const double s2 = sech(x) * sech(x);
        return 0.5 * (4 * s2 - 6 * s2 * s2);
    }
};

inline double cell_avg(const CoefficientField& f, const Grid& g, std::size_t j) {
    const double h = g.spacing();
    return f.integral(g.x(j) - h / 2, g.x(j) + h / 2) / h;
}

// Forcing making the manufactured pair satisfy the system; `discrete`
// replaces u'' by the centred second difference (exact recovery expected).
inline cnls::WavePair forcing_for(const cnls::Problem& p, const Manufactured& m, bool discrete) {
    const Grid& g = p.grid();
    const double h = g.spacing();
    cnls::WavePair out(g.size());
    for (std::size_t j = 1; j + 1 < g.size(); ++j) {
        const double x = g.x(j);
        const double v1 = m.u1(x), v2 = m.u2(x);
        const double lap1 = discrete ? (m.u1(x - h) - 2 * v1 + m.u1(x + h)) / (h * h) : m.u1pp(x);
        const double lap2 = discrete ? (m.u2(x - h) - 2 * v2 + m.u2(x + h)) / (h * h) : m.u2pp(x);
        const double rho = v1 * v1 + v2 * v2; // spinor
        out.u1[j] = -lap1 + cell_avg(p.a(), g, j) * v1 - cell_avg(p.b(), g, j) * v2 - cell_avg(p.c(), g, j) * rho * v1;
        out.u2[j] = -lap2 + cell_avg(p.d(), g, j) * v2 - cell_avg(p.e(), g, j) * v1 - cell_avg(p.f(), g, j) * rho * v2;
    }
    return out;
}

inline double manufactured_error(std::size_t N, bool discrete) {
    const auto p = manufactured_problem(N);
    const Manufactured m{15.0};
    const auto forcing = forcing_for(p, m, discrete);
    // The forced cubic system has a second solution (norm ~0.31) that Newton
    // reaches from zero, so start from a 10% perturbation of the profile.
    cnls::WavePair init(p.grid().size());
    for (std::size_t j = 1; j + 1 < init.size(); ++j) {
        init.u1[j] = 0.9 * m.u1(p.grid().x(j));
        init.u2[j] = 1.1 * m.u2(p.grid().x(j));
    }
    const auto r = cnls::oracle_solve(p, init, cnls::Boundary::full_line, &forcing);
    double err = 0.0;
    for (std::size_t j = 0; j < p.grid().size(); ++j) {
        const double x = p.grid().x(j);
        err = std::max({err, std::abs(r.u.u1[j] - m.u1(x)), std::abs(r.u.u2[j] - m.u2(x))});
    }
    return err;
}

} // namespace testing_support
