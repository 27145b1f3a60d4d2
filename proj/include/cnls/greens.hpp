#pragma once

#include "cnls/error.hpp"
#include "cnls/model.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace cnls {

namespace detail {

/// Solution value and slope stored as exp(log_scale) * (v0, v1), with
/// max(|v0|, |v1|) == 1 after every step.
struct ScaledState {
    double log_scale = 0.0;
    double v0 = 1.0;
    double v1 = 0.0;

    [[nodiscard]] double log_value() const { return log_scale + std::log(v0); }
};

/// Exact flow of -phi'' + k^2 phi = 0 over a signed distance t.
inline void advance(ScaledState& s, double k, double t) {
    const double kt = k * t;
    const double ch = std::cosh(kt);
    const double sh = std::sinh(kt);
    const double v0 = ch * s.v0 + sh / k * s.v1;
    const double v1 = k * sh * s.v0 + ch * s.v1;
    const double n = std::max(std::abs(v0), std::abs(v1));
    s.v0 = v0 / n;
    s.v1 = v1 / n;
    s.log_scale += std::log(n);
}

/// Propagates through the piecewise-constant potential from `from` to `to`,
/// splitting at every jump in between.
inline void propagate(ScaledState& s, const CoefficientField& potential, double from, double to) {
    if (from == to) return;
    const auto& br = potential.breakpoints();
    if (to > from) {
        auto it = std::upper_bound(br.begin(), br.end(), from);
        double left = from;
        while (left < to) {
            const double right = (it != br.end() && *it < to) ? *it : to;
            advance(s, std::sqrt(potential.value_right_of(left)), right - left);
            left = right;
            if (it != br.end()) ++it;
        }
    } else {
        auto it = std::lower_bound(br.begin(), br.end(), from);
        double right = from;
        while (right > to) {
            const double left = (it != br.begin() && *(it - 1) > to) ? *(it - 1) : to;
            advance(s, std::sqrt(potential.value_left_of(right)), left - right);
            right = left;
            if (it != br.begin()) --it;
        }
    }
}

// 5-point Gauss-Legendre rule on [-1, 1].
inline constexpr std::array<double, 5> kGaussNodes{-0.9061798459386640, -0.5384693101056831, 0.0,
                                                   0.5384693101056831, 0.9061798459386640};
inline constexpr std::array<double, 5> kGaussWeights{0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                                     0.4786286704993665, 0.2369268850561891};

} // namespace detail

/// The two positive decaying solutions of -phi'' + a(x) phi = 0.
///
/// phi1 is increasing and vanishes at the left end of the domain (-inf on
/// the full line, the origin on the half line); phi2 is decreasing and
/// decays at +inf. Both are normalized so that the Wronskian
/// phi1 phi2' - phi1' phi2 equals -1 and phi1(x0) == phi2(x0) at their
/// unique crossing x0. Values are stored at the grid nodes of the domain
/// and evaluated exactly elsewhere by propagating through the potential.
class LinearBasis {
public:
    enum class Domain { full_line, half_line };

    static LinearBasis build(const CoefficientField& potential, const Grid& grid,
                             Domain domain = Domain::full_line) {
        if (!(potential.infimum() > 0.0))
            throw Error(ErrorCode::non_positive_potential, "potential must have a positive essential infimum");
        LinearBasis out(potential, grid, domain);
        out.integrate();
        return out;
    }

    [[nodiscard]] Domain domain() const noexcept { return domain_; }
    [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
    [[nodiscard]] const CoefficientField& potential() const noexcept { return potential_; }

    /// Global index of the first node of the domain and the node count.
    [[nodiscard]] std::size_t first() const noexcept { return first_; }
    [[nodiscard]] std::size_t size() const noexcept { return s1_.size(); }
    [[nodiscard]] double left() const noexcept { return grid_.x(first_); }

    [[nodiscard]] double node_log_phi1(std::size_t j) const { return s1_[j - first_].log_value(); }
    [[nodiscard]] double node_log_phi2(std::size_t j) const { return s2_[j - first_].log_value(); }
    /// Logarithmic derivatives phi'/phi at a node.
    [[nodiscard]] double node_dlog_phi1(std::size_t j) const { return s1_[j - first_].v1 / s1_[j - first_].v0; }
    [[nodiscard]] double node_dlog_phi2(std::size_t j) const { return s2_[j - first_].v1 / s2_[j - first_].v0; }

    [[nodiscard]] double log_phi1(double x) const { return evaluate(s1_, x); }
    [[nodiscard]] double log_phi2(double x) const { return evaluate(s2_, x); }
    [[nodiscard]] double phi1(double x) const { return std::exp(log_phi1(x)); }
    [[nodiscard]] double phi2(double x) const { return std::exp(log_phi2(x)); }

    /// p(x) = 1/phi2(x) for x <= x0 and 1/phi1(x) beyond, i.e. 1/max(phi1, phi2).
    [[nodiscard]] double weight(double x) const { return std::exp(-std::max(log_phi1(x), log_phi2(x))); }

    [[nodiscard]] double crossing() const noexcept { return crossing_; }

    /// Wronskian at a node; -1 up to rounding.
    [[nodiscard]] double wronskian_at(std::size_t j) const {
        const auto& a = s1_[j - first_];
        const auto& b = s2_[j - first_];
        return std::exp(a.log_scale + b.log_scale) * (a.v0 * b.v1 - a.v1 * b.v0);
    }

    [[nodiscard]] double wronskian_deviation() const {
        double worst = 0.0;
        for (std::size_t j = first_; j < grid_.size(); ++j)
            worst = std::max(worst, std::abs(wronskian_at(j) + 1.0));
        return worst;
    }

private:
    LinearBasis(CoefficientField potential, Grid grid, Domain domain)
        : potential_(std::move(potential)), grid_(grid), domain_(domain),
          first_(domain == Domain::full_line ? 0 : grid.center()) {}

    void integrate() {
        const std::size_t n = grid_.size() - first_;
        s1_.resize(n);
        s2_.resize(n);

        detail::ScaledState s;
        if (domain_ == Domain::full_line) {
            s.v1 = std::sqrt(potential_.value_right_of(left()));
        } else {
            s.v0 = 0.0;
            s.v1 = 1.0;
        }
        s1_[0] = s;
        for (std::size_t i = 1; i < n; ++i) {
            detail::propagate(s, potential_, grid_.x(first_ + i - 1), grid_.x(first_ + i));
            s1_[i] = s;
        }

        const double L = grid_.half_width();
        s = detail::ScaledState{0.0, 1.0, -std::sqrt(potential_.value_left_of(L))};
        s2_[n - 1] = s;
        for (std::size_t i = n - 1; i-- > 0;) {
            detail::propagate(s, potential_, grid_.x(first_ + i + 1), grid_.x(first_ + i));
            s2_[i] = s;
        }

        // Crossing of the raw solutions: log(phi1/phi2) increases strictly.
        std::size_t hit = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (s1_[i].log_value() - s2_[i].log_value() > 0.0) {
                hit = i;
                break;
            }
        }
        if (hit == 0 || hit == n)
            throw Error(ErrorCode::integration_overflow, "decaying solutions do not cross inside the grid");
        const double d_lo = s1_[hit - 1].log_value() - s2_[hit - 1].log_value();
        const double d_hi = s1_[hit].log_value() - s2_[hit].log_value();
        const double x_lo = grid_.x(first_ + hit - 1);
        crossing_ = grid_.x(first_ + hit);
        if (std::isfinite(d_lo)) {
            // Bracketed refinement with exact propagation inside the cell.
            auto gap = [&](double x) { return evaluate(s1_, x) - evaluate(s2_, x); };
            std::uintmax_t iters = 100;
            const auto [lo, hi] = boost::math::tools::toms748_solve(
                gap, x_lo, crossing_, d_lo, d_hi, boost::math::tools::eps_tolerance<double>(52), iters);
            crossing_ = 0.5 * (lo + hi);
        }

        const std::size_t ref = std::isfinite(d_lo) ? hit - 1 : hit;
        const auto& a = s1_[ref];
        const auto& b = s2_[ref];
        const double log_minus_w = a.log_scale + b.log_scale + std::log(a.v1 * b.v0 - a.v0 * b.v1);
        if (!std::isfinite(log_minus_w))
            throw Error(ErrorCode::integration_overflow, "Wronskian is not representable");
        const double shift = -0.5 * log_minus_w;
        for (std::size_t i = 0; i < n; ++i) {
            s1_[i].log_scale += shift;
            s2_[i].log_scale += shift;
            if (!std::isfinite(s1_[i].log_scale) || !std::isfinite(s2_[i].log_scale))
                throw Error(ErrorCode::integration_overflow, "non-finite scale during propagation");
        }
    }

    [[nodiscard]] double evaluate(const std::vector<detail::ScaledState>& states, double x) const {
        const std::size_t last_cell = grid_.size() - 2;
        std::size_t j = grid_.cell_of(x);
        j = std::clamp(j, first_, last_cell);
        detail::ScaledState s = states[j - first_];
        detail::propagate(s, potential_, grid_.x(j), x);
        return s.log_value();
    }

    CoefficientField potential_;
    Grid grid_;
    Domain domain_;
    std::size_t first_;
    std::vector<detail::ScaledState> s1_;
    std::vector<detail::ScaledState> s2_;
    double crossing_ = 0.0;
};

inline LinearBasis build_linear_basis(const CoefficientField& potential, const Grid& grid,
                                      LinearBasis::Domain domain = LinearBasis::Domain::full_line) {
    return LinearBasis::build(potential, grid, domain);
}

/// G(x, s) = phi1(min(x, s)) phi2(max(x, s)), plus the per-cell factors used
/// by the O(N) two-sweep application.
class GreensKernel {
public:
    explicit GreensKernel(LinearBasis basis) : basis_(std::move(basis)) {
        const std::size_t n = basis_.size();
        const std::size_t f = basis_.first();
        diag_.resize(n);
        up_.resize(n - 1);
        down_.resize(n - 1);
        for (std::size_t i = 0; i < n; ++i)
            diag_[i] = std::exp(basis_.node_log_phi1(f + i) + basis_.node_log_phi2(f + i));
        for (std::size_t i = 0; i + 1 < n; ++i) {
            up_[i] = std::exp(basis_.node_log_phi2(f + i + 1) - basis_.node_log_phi2(f + i));
            down_[i] = std::exp(basis_.node_log_phi1(f + i) - basis_.node_log_phi1(f + i + 1));
        }
    }

    [[nodiscard]] const LinearBasis& basis() const noexcept { return basis_; }
    [[nodiscard]] std::size_t size() const noexcept { return basis_.size(); }

    [[nodiscard]] double operator()(double x, double s) const {
        return std::exp(basis_.log_phi1(std::min(x, s)) + basis_.log_phi2(std::max(x, s)));
    }

    /// Kernel between two nodes given by global grid indices.
    [[nodiscard]] double node(std::size_t j, std::size_t k) const {
        return std::exp(basis_.node_log_phi1(std::min(j, k)) + basis_.node_log_phi2(std::max(j, k)));
    }

    // Local-index factors: G(x_i, x_i), phi2(x_{i+1})/phi2(x_i), phi1(x_i)/phi1(x_{i+1}).
    [[nodiscard]] std::span<const double> diagonal() const noexcept { return diag_; }
    [[nodiscard]] std::span<const double> step_up() const noexcept { return up_; }
    [[nodiscard]] std::span<const double> step_down() const noexcept { return down_; }

private:
    LinearBasis basis_;
    std::vector<double> diag_;
    std::vector<double> up_;
    std::vector<double> down_;
};

inline double greens_eval(const GreensKernel& kernel, double x, double s) { return kernel(x, s); }

/// Quadrature of w(s) phi(s) l(s) over each grid cell, for a fixed kernel
/// and a piecewise-constant weight w, where l are the two linear hat
/// functions of the cell. Cells on which w vanishes are dropped, and cells
/// are split at every jump of w and of the potential, so support
/// boundaries are integrated exactly.
class SourceQuadrature {
public:
    struct Cell {
        std::size_t index;    // local index i of the cell [x_i, x_{i+1}]
        double left_up = 0;   // int w phi1(s)/phi1(x_{i+1}) (x_{i+1}-s)/h
        double right_up = 0;  // int w phi1(s)/phi1(x_{i+1}) (s-x_i)/h
        double left_down = 0; // int w phi2(s)/phi2(x_i) (x_{i+1}-s)/h
        double right_down = 0;
    };

    /// weight == nullptr stands for w == 1.
    SourceQuadrature(const GreensKernel& kernel, const CoefficientField* weight) {
        const LinearBasis& basis = kernel.basis();
        const Grid& grid = basis.grid();
        const double h = grid.spacing();
        const auto& pot_breaks = basis.potential().breakpoints();
        std::vector<double> cuts;
        for (std::size_t i = 0; i + 1 < basis.size(); ++i) {
            const std::size_t j = basis.first() + i;
            const double xl = grid.x(j);
            const double xr = grid.x(j + 1);
            if (weight && weight->integral(xl, xr) == 0.0) continue;

            cuts.assign({xl, xr});
            auto add_cuts = [&](const std::vector<double>& br) {
                for (auto it = std::upper_bound(br.begin(), br.end(), xl); it != br.end() && *it < xr; ++it)
                    cuts.push_back(*it);
            };
            add_cuts(pot_breaks);
            if (weight) add_cuts(weight->breakpoints());
            std::sort(cuts.begin(), cuts.end());

            const double log1_ref = basis.node_log_phi1(j + 1);
            const double log2_ref = basis.node_log_phi2(j);
            Cell cell{i};
            for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
                const double lo = cuts[k];
                const double hi = cuts[k + 1];
                if (!(hi > lo)) continue;
                const double wv = weight ? weight->value_right_of(lo) : 1.0;
                if (wv == 0.0) continue;
                const double half = 0.5 * (hi - lo);
                const double mid = 0.5 * (hi + lo);
                for (std::size_t q = 0; q < detail::kGaussNodes.size(); ++q) {
                    const double s = mid + half * detail::kGaussNodes[q];
                    const double wq = wv * half * detail::kGaussWeights[q];
                    const double e1 = std::exp(basis.log_phi1(s) - log1_ref);
                    const double e2 = std::exp(basis.log_phi2(s) - log2_ref);
                    const double hat_l = (xr - s) / h;
                    const double hat_r = (s - xl) / h;
                    cell.left_up += wq * e1 * hat_l;
                    cell.right_up += wq * e1 * hat_r;
                    cell.left_down += wq * e2 * hat_l;
                    cell.right_down += wq * e2 * hat_r;
                }
            }
            cells_.push_back(cell);
        }
    }

    [[nodiscard]] const std::vector<Cell>& cells() const noexcept { return cells_; }

private:
    std::vector<Cell> cells_;
};

/// One term w(s) * interp(g)(s) of a source; samples are nodal values of g
/// on the kernel's nodes.
struct SourceTerm {
    const SourceQuadrature* quadrature;
    std::span<const double> samples;
};

/// u(x) = phi2(x) int_{left}^{x} phi1 h + phi1(x) int_{x}^{L} phi2 h at every
/// node, accumulated as scaled prefix sums so no intermediate overflows.
inline std::vector<double> greens_apply(const GreensKernel& kernel, std::span<const SourceTerm> terms) {
    const std::size_t n = kernel.size();
    std::vector<double> up(n - 1, 0.0);
    std::vector<double> down(n - 1, 0.0);
    for (const auto& term : terms) {
        const auto g = term.samples;
        for (const auto& c : term.quadrature->cells()) {
            up[c.index] += c.left_up * g[c.index] + c.right_up * g[c.index + 1];
            down[c.index] += c.left_down * g[c.index] + c.right_down * g[c.index + 1];
        }
    }
    const auto diag = kernel.diagonal();
    const auto step_up = kernel.step_up();
    const auto step_down = kernel.step_down();

    std::vector<double> u(n, 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        acc = step_up[i] * acc + diag[i + 1] * up[i];
        u[i + 1] = acc;
    }
    acc = 0.0;
    for (std::size_t i = n - 1; i-- > 0;) {
        acc = step_down[i] * acc + diag[i] * down[i];
        u[i] += acc;
    }
    return u;
}

/// Applies the kernel to nodal samples of h, interpolated linearly.
inline std::vector<double> greens_apply(const GreensKernel& kernel, std::span<const double> h) {
    const SourceQuadrature quad(kernel, nullptr);
    const SourceTerm term{&quad, h};
    return greens_apply(kernel, std::span<const SourceTerm>(&term, 1));
}

/// Applies the kernel to a piecewise-constant source given exactly.
inline std::vector<double> greens_apply(const GreensKernel& kernel, const CoefficientField& h) {
    const SourceQuadrature quad(kernel, &h);
    const std::vector<double> ones(kernel.size(), 1.0);
    const SourceTerm term{&quad, ones};
    return greens_apply(kernel, std::span<const SourceTerm>(&term, 1));
}

/// Constants of the cone: m_i = min(phi1(inf M), phi2(sup M)) and
/// p0_i = inf over M of p_i, for both components.
struct ConeConstants {
    Interval M;
    std::array<double, 2> m{};
    std::array<double, 2> p0{};

    [[nodiscard]] double product(std::size_t i) const { return m[i] * p0[i]; }
};

inline ConeConstants cone_constants(const LinearBasis& first, const LinearBasis& second, const SupportSet& M) {
    const auto hull = M.hull();
    if (!hull) throw Error(ErrorCode::empty_support, "cone constants need a non-empty set M");
    ConeConstants out{*hull, {}, {}};
    const LinearBasis* bases[] = {&first, &second};
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& b = *bases[i];
        const double l1_lo = b.log_phi1(hull->lo);
        const double l2_lo = b.log_phi2(hull->lo);
        const double l1_hi = b.log_phi1(hull->hi);
        const double l2_hi = b.log_phi2(hull->hi);
        // p = 1/max(phi1, phi2) peaks at x0, so its infimum sits at an end of M.
        out.m[i] = std::exp(std::min(l1_lo, l2_hi));
        out.p0[i] = std::exp(-std::max(std::max(l1_lo, l2_lo), std::max(l1_hi, l2_hi)));
        const double prod = out.product(i);
        if (!(prod > 0.0 && prod < 1.0))
            throw Error(ErrorCode::integration_overflow, "cone product m p0 outside (0, 1)");
    }
    return out;
}

} // namespace cnls
