#pragma once

#include "cnls/greens.hpp"
#include "cnls/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace cnls {

/// Nodal samples of (u1, u2) on a grid or on a half-grid.
struct WavePair {
    std::vector<double> u1;
    std::vector<double> u2;

    WavePair() = default;
    WavePair(std::vector<double> first, std::vector<double> second) : u1(std::move(first)), u2(std::move(second)) {}
    explicit WavePair(std::size_t n) : u1(n, 0.0), u2(n, 0.0) {}

    [[nodiscard]] std::size_t size() const noexcept { return u1.size(); }
    [[nodiscard]] const std::vector<double>& component(std::size_t i) const { return i == 0 ? u1 : u2; }
    [[nodiscard]] std::vector<double>& component(std::size_t i) { return i == 0 ? u1 : u2; }

    [[nodiscard]] static double sup(std::span<const double> v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }
    [[nodiscard]] double norm(std::size_t i) const { return sup(component(i)); }
    /// ||u|| = max_i ||u_i||_inf
    [[nodiscard]] double norm() const { return std::max(sup(u1), sup(u2)); }

    friend bool operator==(const WavePair&, const WavePair&) = default;
};

inline double distance(const WavePair& a, const WavePair& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max({m, std::abs(a.u1[i] - b.u1[i]), std::abs(a.u2[i] - b.u2[i])});
    return m;
}

/// The operator T = (T1, T2),
///   T1 u = int G1(x, s) [b u2 + c F(u) u1] ds,  T2 u = int G2(x, s) [e u1 + f H(u) u2] ds,
/// on the full line or, for odd waves, on the half line with u(0) = 0.
/// Samples passed in and returned live on the nodes of the domain.
class FixedPointMap {
public:
    using Domain = LinearBasis::Domain;

    static FixedPointMap build(const Problem& p, Domain domain = Domain::full_line) {
        return FixedPointMap(p, domain);
    }

    FixedPointMap(const FixedPointMap&) = delete;
    FixedPointMap& operator=(const FixedPointMap&) = delete;
    FixedPointMap(FixedPointMap&&) noexcept = default;

    [[nodiscard]] const Problem& problem() const noexcept { return problem_; }
    [[nodiscard]] Domain domain() const noexcept { return domain_; }
    [[nodiscard]] const GreensKernel& kernel(std::size_t i) const { return kernels_[i]; }
    [[nodiscard]] std::size_t first() const noexcept { return kernels_[0].basis().first(); }
    [[nodiscard]] std::size_t size() const noexcept { return kernels_[0].size(); }
    [[nodiscard]] double x(std::size_t local) const { return problem_.grid().x(first() + local); }

    /// M, or M intersected with the positive axis on the half line.
    [[nodiscard]] const SupportSet& support() const noexcept { return support_; }

    [[nodiscard]] const ConeConstants& cone() const {
        if (!cone_) throw Error(ErrorCode::empty_support, "cone constants need a non-empty set M");
        return *cone_;
    }
    [[nodiscard]] bool has_cone() const noexcept { return cone_.has_value(); }

    /// Local indices of the nodes lying in the support set.
    [[nodiscard]] const std::vector<std::size_t>& support_nodes() const noexcept { return support_nodes_; }

    [[nodiscard]] WavePair apply(const WavePair& u) const {
        const auto& nl = problem_.nonlinearity();
        const std::size_t n = size();
        std::vector<double> g1(n), g2(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto s = nl.sources(u.u1[i], u.u2[i]);
            g1[i] = s[0];
            g2[i] = s[1];
        }
        return combine(u.u2, g1, u.u1, g2);
    }

    /// Directional derivative T'(u) v.
    [[nodiscard]] WavePair derivative(const WavePair& u, const WavePair& v) const {
        const auto& nl = problem_.nonlinearity();
        const std::size_t n = size();
        std::vector<double> g1(n), g2(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto j = nl.source_jacobian(u.u1[i], u.u2[i]);
            g1[i] = j[0] * v.u1[i] + j[1] * v.u2[i];
            g2[i] = j[2] * v.u1[i] + j[3] * v.u2[i];
        }
        return combine(v.u2, g1, v.u1, g2);
    }

    /// Linear pieces G1 b, G2 e and nonlinear weights G1 c, G2 f applied to 1.
    [[nodiscard]] std::array<std::vector<double>, 4> unit_integrals() const {
        const std::vector<double> ones(size(), 1.0);
        auto one = [&](std::size_t k, const SourceQuadrature& q) {
            const SourceTerm t{&q, ones};
            return greens_apply(kernels_[k], std::span<const SourceTerm>(&t, 1));
        };
        return {one(0, quad_b_), one(1, quad_e_), one(0, quad_c_), one(1, quad_f_)};
    }

private:
    FixedPointMap(const Problem& p, Domain domain)
        : problem_(p), domain_(domain),
          kernels_{GreensKernel(LinearBasis::build(p.a(), p.grid(), domain)),
                   GreensKernel(LinearBasis::build(p.d(), p.grid(), domain))},
          quad_b_(kernels_[0], &problem_.b()), quad_c_(kernels_[0], &problem_.c()),
          quad_e_(kernels_[1], &problem_.e()), quad_f_(kernels_[1], &problem_.f()) {
        support_ = p.coupling_support();
        if (domain == Domain::half_line) support_ = support_.positive_part();
        if (!support_.empty())
            cone_ = cone_constants(kernels_[0].basis(), kernels_[1].basis(), support_);
        for (std::size_t i = 0; i < size(); ++i)
            if (support_.contains(x(i))) support_nodes_.push_back(i);
    }

    [[nodiscard]] WavePair combine(std::span<const double> lin1, std::span<const double> nonlin1,
                                   std::span<const double> lin2, std::span<const double> nonlin2) const {
        const SourceTerm t1[] = {{&quad_b_, lin1}, {&quad_c_, nonlin1}};
        const SourceTerm t2[] = {{&quad_e_, lin2}, {&quad_f_, nonlin2}};
        return WavePair(greens_apply(kernels_[0], t1), greens_apply(kernels_[1], t2));
    }

    Problem problem_;
    Domain domain_;
    std::array<GreensKernel, 2> kernels_;
    SourceQuadrature quad_b_, quad_c_, quad_e_, quad_f_;
    SupportSet support_;
    std::optional<ConeConstants> cone_;
    std::vector<std::size_t> support_nodes_;
};

inline WavePair apply_T(const FixedPointMap& map, const WavePair& u) { return map.apply(u); }

/// min over M of u_i minus m_i p0_i ||u_i||; both entries >= 0 certify
/// membership in the cone (u >= 0 is checked separately).
inline std::array<double, 2> cone_gap(const WavePair& u, const ConeConstants& cone,
                                      std::span<const std::size_t> support_nodes) {
    std::array<double, 2> gap{};
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& v = u.component(i);
        double lowest = kInfinity;
        for (std::size_t k : support_nodes) lowest = std::min(lowest, v[k]);
        if (support_nodes.empty()) lowest = 0.0;
        gap[i] = lowest - cone.product(i) * u.norm(i);
    }
    return gap;
}

inline std::array<double, 2> cone_gap(const FixedPointMap& map, const WavePair& u) {
    return cone_gap(u, map.cone(), map.support_nodes());
}

namespace detail {

/// Weights (w_{j-1}, w_j, w_{j+1}) with
/// sum_k w_k g_k == (1/h) int field(s) hat_j(s) interp(g)(s) ds,
/// hat_j the piecewise-linear hat centred at x_j. Testing the equation
/// against hat_j turns -u'' into the centred second difference exactly for
/// any C1 profile, so the residual stays O(h^2) across coefficient jumps.
inline std::array<double, 3> hat_weights(const CoefficientField& field, const Grid& grid, std::size_t j) {
    const double h = grid.spacing();
    std::array<double, 3> w{};
    const auto& br = field.breakpoints();
    // On [x_lo, x_lo + h] with t = (s - x_lo)/h: int t^2 and int t(1 - t).
    auto cell = [&](double x_lo, bool hat_rises, std::size_t outer) {
        const double x_hi = x_lo + h;
        double left = x_lo;
        auto it = std::upper_bound(br.begin(), br.end(), x_lo);
        while (left < x_hi) {
            const double right = (it != br.end() && *it < x_hi) ? *it : x_hi;
            const double v = field.value_right_of(left);
            if (v != 0.0) {
                double t0 = (left - x_lo) / h, t1 = (right - x_lo) / h;
                if (!hat_rises) {
                    std::swap(t0, t1);
                    t0 = 1.0 - t0;
                    t1 = 1.0 - t1;
                }
                const double sq = (t1 * t1 * t1 - t0 * t0 * t0) / 3.0;
                const double mixed = (t1 * t1 - t0 * t0) / 2.0 - sq;
                w[1] += v * sq;
                w[outer] += v * mixed;
            }
            left = right;
            if (it != br.end()) ++it;
        }
    };
    cell(grid.x(j - 1), true, 0);
    cell(grid.x(j), false, 2);
    return w;
}

} // namespace detail

struct ResidualReport {
    WavePair values;        // zero at the two end nodes
    double interior_sup = 0.0;
    double boundary_max = 0.0; // max |u_i| at x = +-L
};

/// Finite-difference residual of the stationary system on the full grid:
///   -D2 u1 + <a u1> - <b u2> - <c F(u) u1>, and likewise for u2,
/// where D2 is the centred second difference and <.> the hat-weighted
/// average over [x_j - h, x_j + h] with nodal values interpolated linearly.
inline ResidualReport residual(const Problem& p, const WavePair& u) {
    const Grid& grid = p.grid();
    const std::size_t n = grid.size();
    const double h2 = grid.spacing() * grid.spacing();
    const auto& nl = p.nonlinearity();

    std::vector<double> g1(n), g2(n);
    for (std::size_t j = 0; j < n; ++j) {
        const auto s = nl.sources(u.u1[j], u.u2[j]);
        g1[j] = s[0];
        g2[j] = s[1];
    }

    ResidualReport out;
    out.values = WavePair(n);
    auto avg = [&](const CoefficientField& f, const std::vector<double>& g, std::size_t j) {
        const auto w = detail::hat_weights(f, grid, j);
        return w[0] * g[j - 1] + w[1] * g[j] + w[2] * g[j + 1];
    };
    for (std::size_t j = 1; j + 1 < n; ++j) {
        const double lap1 = (u.u1[j - 1] - 2.0 * u.u1[j] + u.u1[j + 1]) / h2;
        const double lap2 = (u.u2[j - 1] - 2.0 * u.u2[j] + u.u2[j + 1]) / h2;
        const double r1 = -lap1 + avg(p.a(), u.u1, j) - avg(p.b(), u.u2, j) - avg(p.c(), g1, j);
        const double r2 = -lap2 + avg(p.d(), u.u2, j) - avg(p.e(), u.u1, j) - avg(p.f(), g2, j);
        out.values.u1[j] = r1;
        out.values.u2[j] = r2;
        out.interior_sup = std::max({out.interior_sup, std::abs(r1), std::abs(r2)});
    }
    out.boundary_max = std::max({std::abs(u.u1.front()), std::abs(u.u1.back()), std::abs(u.u2.front()),
                                 std::abs(u.u2.back())});
    return out;
}

/// Odd extension of half-line samples (nodes x >= 0) to the full grid.
inline WavePair odd_extension(const WavePair& half, const Grid& grid) {
    const std::size_t n = grid.size();
    const std::size_t c = grid.center();
    WavePair full(n);
    for (std::size_t i = 0; i < half.size(); ++i) {
        for (std::size_t k = 0; k < 2; ++k) {
            if (i == 0) continue; // u(0) = 0
            const double v = half.component(k)[i];
            full.component(k)[c + i] = v;
            full.component(k)[c - i] = -v;
        }
    }
    return full;
}

/// Restriction of full-grid samples to the half-line nodes.
inline WavePair restrict_to_half_line(const WavePair& full, const Grid& grid) {
    const std::size_t c = grid.center();
    return WavePair(std::vector<double>(full.u1.begin() + static_cast<std::ptrdiff_t>(c), full.u1.end()),
                    std::vector<double>(full.u2.begin() + static_cast<std::ptrdiff_t>(c), full.u2.end()));
}

} // namespace cnls
