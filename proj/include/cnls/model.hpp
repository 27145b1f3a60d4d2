#pragma once

#include "cnls/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cnls {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Closed interval [lo, hi]; either end may be infinite.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] bool contains(double x) const noexcept { return lo <= x && x <= hi; }
    [[nodiscard]] double length() const noexcept { return hi - lo; }
    [[nodiscard]] bool bounded() const noexcept { return std::isfinite(lo) && std::isfinite(hi); }

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Finite union of disjoint closed intervals, kept sorted.
class SupportSet {
public:
    SupportSet() = default;

    static SupportSet everywhere() { return SupportSet({{-kInfinity, kInfinity}}); }

    explicit SupportSet(std::vector<Interval> pieces) : pieces_(std::move(pieces)) { normalize(); }

    [[nodiscard]] bool empty() const noexcept { return pieces_.empty(); }
    [[nodiscard]] bool bounded() const noexcept {
        return std::all_of(pieces_.begin(), pieces_.end(), [](const Interval& i) { return i.bounded(); });
    }
    [[nodiscard]] const std::vector<Interval>& pieces() const noexcept { return pieces_; }

    [[nodiscard]] bool contains(double x) const noexcept {
        return std::any_of(pieces_.begin(), pieces_.end(), [x](const Interval& i) { return i.contains(x); });
    }

    [[nodiscard]] std::optional<Interval> hull() const {
        if (pieces_.empty()) return std::nullopt;
        return Interval{pieces_.front().lo, pieces_.back().hi};
    }

    [[nodiscard]] SupportSet unite(const SupportSet& other) const {
        std::vector<Interval> all = pieces_;
        all.insert(all.end(), other.pieces_.begin(), other.pieces_.end());
        return SupportSet(std::move(all));
    }

    /// Closure of the part lying in (0, +inf).
    [[nodiscard]] SupportSet positive_part() const {
        std::vector<Interval> out;
        for (const auto& i : pieces_)
            if (i.hi > 0.0) out.push_back({std::max(i.lo, 0.0), i.hi});
        return SupportSet(std::move(out));
    }

    friend bool operator==(const SupportSet&, const SupportSet&) = default;

private:
    void normalize() {
        std::sort(pieces_.begin(), pieces_.end(),
                  [](const Interval& l, const Interval& r) { return l.lo < r.lo; });
        std::vector<Interval> merged;
        for (const auto& i : pieces_) {
            if (!merged.empty() && i.lo <= merged.back().hi)
                merged.back().hi = std::max(merged.back().hi, i.hi);
            else
                merged.push_back(i);
        }
        pieces_ = std::move(merged);
    }

    std::vector<Interval> pieces_;
};

struct Bump {
    Interval support;
    double value = 0.0;

    friend bool operator==(const Bump&, const Bump&) = default;
};

/// Non-negative piecewise-constant coefficient. Three construction kinds share
/// one canonical representation: sorted jump locations plus the value on each
/// open piece between them. Piecewise fields are right-closed at their
/// breakpoints; bumps are closed intervals (overlapping bumps add).
class CoefficientField {
public:
    enum class Kind { constant, piecewise, bump };

    static CoefficientField constant(double value) {
        check_value(value);
        CoefficientField f;
        f.kind_ = Kind::constant;
        f.values_ = {value};
        return f;
    }

    static CoefficientField piecewise(std::vector<double> breakpoints, std::vector<double> values) {
        if (values.size() != breakpoints.size() + 1)
            throw Error(ErrorCode::invalid_coefficient,
                        "piecewise field needs exactly one more value than breakpoints");
        for (std::size_t k = 0; k < breakpoints.size(); ++k) {
            if (!std::isfinite(breakpoints[k]))
                throw Error(ErrorCode::invalid_coefficient, "breakpoints must be finite");
            if (k > 0 && !(breakpoints[k] > breakpoints[k - 1]))
                throw Error(ErrorCode::invalid_coefficient, "breakpoints must be strictly increasing");
        }
        for (double v : values) check_value(v);
        CoefficientField f;
        f.kind_ = Kind::piecewise;
        f.breaks_ = std::move(breakpoints);
        f.values_ = std::move(values);
        return f;
    }

    static CoefficientField bump(double value, Interval support) { return bumps({{support, value}}); }

    static CoefficientField bumps(std::vector<Bump> list) {
        std::vector<double> ends;
        for (const auto& b : list) {
            check_value(b.value);
            if (!b.support.bounded() || !(b.support.hi > b.support.lo))
                throw Error(ErrorCode::invalid_coefficient,
                            "bump support must be a bounded interval with lo < hi");
            ends.push_back(b.support.lo);
            ends.push_back(b.support.hi);
        }
        std::sort(ends.begin(), ends.end());
        ends.erase(std::unique(ends.begin(), ends.end()), ends.end());

        CoefficientField f;
        f.kind_ = Kind::bump;
        f.bumps_ = std::move(list);
        f.breaks_ = ends;
        f.values_.assign(ends.size() + 1, 0.0);
        for (std::size_t k = 1; k < ends.size(); ++k) {
            const double mid = 0.5 * (ends[k - 1] + ends[k]);
            double v = 0.0;
            for (const auto& b : f.bumps_)
                if (b.support.contains(mid)) v += b.value;
            f.values_[k] = v;
        }
        return f;
    }

    static CoefficientField zero() { return bumps({}); }

    [[nodiscard]] Kind kind() const noexcept { return kind_; }

    double operator()(double x) const {
        if (kind_ == Kind::bump) {
            double v = 0.0;
            for (const auto& b : bumps_)
                if (b.support.contains(x)) v += b.value;
            return v;
        }
        return values_[piece_index(x)];
    }

    /// Index of the canonical piece containing x under the right-closed rule.
    [[nodiscard]] std::size_t piece_index(double x) const {
        return static_cast<std::size_t>(std::upper_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin());
    }

    /// Value on the open piece just right (resp. left) of x; equals the
    /// value almost everywhere near x.
    [[nodiscard]] double value_right_of(double x) const { return values_[piece_index(x)]; }
    [[nodiscard]] double value_left_of(double x) const {
        return values_[static_cast<std::size_t>(std::lower_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin())];
    }

    [[nodiscard]] const std::vector<double>& breakpoints() const noexcept { return breaks_; }
    [[nodiscard]] const std::vector<double>& piece_values() const noexcept { return values_; }
    [[nodiscard]] const std::vector<Bump>& bump_list() const noexcept { return bumps_; }

    /// Exact integral over [lo, hi].
    [[nodiscard]] double integral(double lo, double hi) const {
        if (hi <= lo) return 0.0;
        double total = 0.0;
        double left = lo;
        std::size_t k = piece_index(lo);
        while (left < hi) {
            const double right = k < breaks_.size() ? std::min(breaks_[k], hi) : hi;
            total += values_[k] * (right - left);
            left = right;
            ++k;
        }
        return total;
    }

    [[nodiscard]] double average(double lo, double hi) const { return integral(lo, hi) / (hi - lo); }

    [[nodiscard]] double infimum() const { return *std::min_element(values_.begin(), values_.end()); }
    [[nodiscard]] double supremum() const { return *std::max_element(values_.begin(), values_.end()); }

    /// Closure of the set where the field is positive.
    [[nodiscard]] SupportSet support() const {
        std::vector<Interval> out;
        for (std::size_t k = 0; k < values_.size(); ++k) {
            if (values_[k] <= 0.0) continue;
            const double lo = k == 0 ? -kInfinity : breaks_[k - 1];
            const double hi = k == breaks_.size() ? kInfinity : breaks_[k];
            out.push_back({lo, hi});
        }
        return SupportSet(std::move(out));
    }

    /// Evenness up to measure zero: compares values at mirrored piece midpoints.
    [[nodiscard]] bool is_even() const {
        std::vector<double> pts = breaks_;
        for (double b : breaks_) pts.push_back(-b);
        pts.push_back(0.0);
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        std::vector<double> probes{pts.front() - 1.0, pts.back() + 1.0};
        for (std::size_t k = 1; k < pts.size(); ++k) probes.push_back(0.5 * (pts[k - 1] + pts[k]));
        return std::all_of(probes.begin(), probes.end(),
                           [this](double x) { return value_right_of(x) == value_right_of(-x); });
    }

    [[nodiscard]] CoefficientField scaled(double factor) const {
        if (!(factor >= 0.0) || !std::isfinite(factor))
            throw Error(ErrorCode::invalid_coefficient, "scale factor must be finite and non-negative");
        switch (kind_) {
        case Kind::constant: return constant(values_[0] * factor);
        case Kind::piecewise: {
            auto v = values_;
            for (double& x : v) x *= factor;
            return piecewise(breaks_, std::move(v));
        }
        case Kind::bump: {
            auto list = bumps_;
            for (auto& b : list) b.value *= factor;
            return bumps(std::move(list));
        }
        }
        return *this;
    }

    friend bool operator==(const CoefficientField&, const CoefficientField&) = default;

private:
    CoefficientField() = default;

    static void check_value(double v) {
        if (!std::isfinite(v) || v < 0.0)
            throw Error(ErrorCode::invalid_coefficient, "coefficient values must be finite and non-negative");
    }

    Kind kind_ = Kind::constant;
    std::vector<double> breaks_;
    std::vector<double> values_{0.0};
    std::vector<Bump> bumps_;
};

/// The pair (F, H) in -u1'' + a u1 - b u2 = c F(u) u1, -u2'' + d u2 - e u1 = f H(u) u2.
class Nonlinearity {
public:
    enum class Kind { decoupled_cubic, spinor_cubic, custom };
    using Function = std::function<double(double, double)>;

    static Nonlinearity decoupled_cubic() { return Nonlinearity(Kind::decoupled_cubic); }
    static Nonlinearity spinor_cubic() { return Nonlinearity(Kind::spinor_cubic); }
    static Nonlinearity custom(Function f, Function h) {
        Nonlinearity n(Kind::custom);
        n.f_ = std::move(f);
        n.h_ = std::move(h);
        return n;
    }

    [[nodiscard]] Kind kind() const noexcept { return kind_; }

    [[nodiscard]] double F(double u1, double u2) const {
        switch (kind_) {
        case Kind::decoupled_cubic: return u1 * u1;
        case Kind::spinor_cubic: return u1 * u1 + u2 * u2;
        case Kind::custom: return f_(u1, u2);
        }
        return 0.0;
    }

    [[nodiscard]] double H(double u1, double u2) const {
        switch (kind_) {
        case Kind::decoupled_cubic: return u2 * u2;
        case Kind::spinor_cubic: return u1 * u1 + u2 * u2;
        case Kind::custom: return h_(u1, u2);
        }
        return 0.0;
    }

    /// Source terms F(u) u1 and H(u) u2.
    [[nodiscard]] std::array<double, 2> sources(double u1, double u2) const {
        return {F(u1, u2) * u1, H(u1, u2) * u2};
    }

    /// Row-major Jacobian of the source terms with respect to (u1, u2).
    [[nodiscard]] std::array<double, 4> source_jacobian(double u1, double u2) const {
        switch (kind_) {
        case Kind::decoupled_cubic: return {3.0 * u1 * u1, 0.0, 0.0, 3.0 * u2 * u2};
        case Kind::spinor_cubic: {
            const double cross = 2.0 * u1 * u2;
            return {3.0 * u1 * u1 + u2 * u2, cross, cross, u1 * u1 + 3.0 * u2 * u2};
        }
        case Kind::custom: break;
        }
        const double s1 = 1e-6 * std::max(1.0, std::abs(u1));
        const double s2 = 1e-6 * std::max(1.0, std::abs(u2));
        const auto p1 = sources(u1 + s1, u2), m1 = sources(u1 - s1, u2);
        const auto p2 = sources(u1, u2 + s2), m2 = sources(u1, u2 - s2);
        return {(p1[0] - m1[0]) / (2 * s1), (p2[0] - m2[0]) / (2 * s2),
                (p1[1] - m1[1]) / (2 * s1), (p2[1] - m2[1]) / (2 * s2)};
    }

private:
    explicit Nonlinearity(Kind k) : kind_(k) {}

    Kind kind_;
    Function f_;
    Function h_;
};

/// Uniform grid on [-L, L] with an odd number of nodes, so x = 0 is a node
/// and x(N-1-j) == -x(j) exactly.
class Grid {
public:
    Grid(double half_width, std::size_t points) : half_width_(half_width), points_(points) {
        if (!(half_width > 0.0) || !std::isfinite(half_width))
            throw Error(ErrorCode::invalid_grid, "half-width L must be positive and finite");
        if (points < 3 || points % 2 == 0)
            throw Error(ErrorCode::invalid_grid, "point count N must be odd and at least 3");
    }

    [[nodiscard]] double half_width() const noexcept { return half_width_; }
    [[nodiscard]] std::size_t size() const noexcept { return points_; }
    [[nodiscard]] double spacing() const noexcept { return 2.0 * half_width_ / static_cast<double>(points_ - 1); }
    [[nodiscard]] std::size_t center() const noexcept { return (points_ - 1) / 2; }

    [[nodiscard]] double x(std::size_t j) const noexcept {
        const auto n = static_cast<double>(points_ - 1);
        return (2.0 * static_cast<double>(j) - n) * half_width_ / n;
    }

    [[nodiscard]] std::vector<double> nodes() const {
        std::vector<double> out(points_);
        for (std::size_t j = 0; j < points_; ++j) out[j] = x(j);
        return out;
    }

    /// Index of the cell [x_j, x_{j+1}] containing x (clamped to the grid).
    [[nodiscard]] std::size_t cell_of(double x) const noexcept {
        const double t = (x + half_width_) / spacing();
        if (!(t > 0.0)) return 0;
        return std::min(static_cast<std::size_t>(t), points_ - 2);
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    double half_width_;
    std::size_t points_;
};

inline constexpr double kDefaultDecayMargin = 10.0;

/// A validated instance of the stationary coupled system. Construction
/// enforces positivity of a and d, non-negativity everywhere, bounded
/// supports for b, c, e, f and the tail margin of the grid. An empty
/// coupling support is representable; it is reported by the hypothesis
/// checks and by support_union.
class Problem {
public:
    static Problem create(CoefficientField a, CoefficientField b, CoefficientField c, CoefficientField d,
                          CoefficientField e, CoefficientField f, Nonlinearity nonlinearity, Grid grid,
                          double decay_margin = kDefaultDecayMargin) {
        Problem p(std::move(a), std::move(b), std::move(c), std::move(d), std::move(e), std::move(f),
                  std::move(nonlinearity), grid, decay_margin);
        p.validate();
        return p;
    }

    [[nodiscard]] const CoefficientField& a() const noexcept { return a_; }
    [[nodiscard]] const CoefficientField& b() const noexcept { return b_; }
    [[nodiscard]] const CoefficientField& c() const noexcept { return c_; }
    [[nodiscard]] const CoefficientField& d() const noexcept { return d_; }
    [[nodiscard]] const CoefficientField& e() const noexcept { return e_; }
    [[nodiscard]] const CoefficientField& f() const noexcept { return f_; }
    [[nodiscard]] const Nonlinearity& nonlinearity() const noexcept { return nonlinearity_; }
    [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
    [[nodiscard]] double decay_margin() const noexcept { return decay_margin_; }

    /// M = Supp(b) u Supp(c) u Supp(e) u Supp(f), possibly empty.
    [[nodiscard]] SupportSet coupling_support() const {
        return b_.support().unite(c_.support()).unite(e_.support()).unite(f_.support());
    }

    [[nodiscard]] Problem with_grid(Grid grid) const {
        return create(a_, b_, c_, d_, e_, f_, nonlinearity_, grid, decay_margin_);
    }

    /// Multiplies the coupling fields (b, e) and the nonlinear fields (c, f).
    [[nodiscard]] Problem scaled(double linear_factor, double nonlinear_factor) const {
        return create(a_, b_.scaled(linear_factor), c_.scaled(nonlinear_factor), d_, e_.scaled(linear_factor),
                      f_.scaled(nonlinear_factor), nonlinearity_, grid_, decay_margin_);
    }

    /// Field-by-field equality; custom nonlinearities never compare equal.
    friend bool operator==(const Problem& x, const Problem& y) {
        const auto kind = x.nonlinearity_.kind();
        return x.a_ == y.a_ && x.b_ == y.b_ && x.c_ == y.c_ && x.d_ == y.d_ && x.e_ == y.e_ && x.f_ == y.f_ &&
               kind == y.nonlinearity_.kind() && kind != Nonlinearity::Kind::custom && x.grid_ == y.grid_ &&
               x.decay_margin_ == y.decay_margin_;
    }

private:
    Problem(CoefficientField a, CoefficientField b, CoefficientField c, CoefficientField d, CoefficientField e,
            CoefficientField f, Nonlinearity nl, Grid grid, double margin)
        : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d)), e_(std::move(e)),
          f_(std::move(f)), nonlinearity_(std::move(nl)), grid_(grid), decay_margin_(margin) {}

    void validate() const {
        if (!(a_.infimum() > 0.0)) throw Error(ErrorCode::invalid_coefficient, "a must have positive infimum");
        if (!(d_.infimum() > 0.0)) throw Error(ErrorCode::invalid_coefficient, "d must have positive infimum");
        const std::pair<const char*, const CoefficientField*> compact[] = {
            {"b", &b_}, {"c", &c_}, {"e", &e_}, {"f", &f_}};
        for (const auto& [name, field] : compact)
            if (!field->support().bounded())
                throw Error(ErrorCode::invalid_coefficient, std::string(name) + " must have bounded support");

        const auto hull = coupling_support().hull();
        if (!hull) return;
        const double L = grid_.half_width();
        const double reach = std::max(std::abs(hull->lo), std::abs(hull->hi));
        if (!(reach < L))
            throw Error(ErrorCode::invalid_grid, "grid half-width must exceed the coupling support");
        const double decay = std::sqrt(std::min(a_.infimum(), d_.infimum())) * (L - reach);
        if (decay < decay_margin_)
            throw Error(ErrorCode::invalid_grid, "grid too short for the decay margin (sqrt(a_*)(L - max|M|) = " +
                                                     std::to_string(decay) + ")");
    }

    CoefficientField a_, b_, c_, d_, e_, f_;
    Nonlinearity nonlinearity_;
    Grid grid_;
    double decay_margin_;
};

/// Smallest closed interval containing M.
inline Interval support_union(const Problem& p) {
    const auto hull = p.coupling_support().hull();
    if (!hull) throw Error(ErrorCode::empty_support, "Supp(b) u Supp(c) u Supp(e) u Supp(f) is empty");
    return *hull;
}

enum class Preset { weakly_coupled, spinor };

struct PresetFields {
    CoefficientField a = CoefficientField::constant(1.0);
    CoefficientField b = CoefficientField::zero();
    CoefficientField c = CoefficientField::zero();
    CoefficientField d = CoefficientField::constant(1.0);
    CoefficientField e = CoefficientField::zero();
    CoefficientField f = CoefficientField::zero();
    Grid grid{15.0, 3001};
    double decay_margin = kDefaultDecayMargin;
};

inline Problem preset_problem(Preset kind, PresetFields fields) {
    auto nl = kind == Preset::weakly_coupled ? Nonlinearity::decoupled_cubic() : Nonlinearity::spinor_cubic();
    return Problem::create(std::move(fields.a), std::move(fields.b), std::move(fields.c), std::move(fields.d),
                           std::move(fields.e), std::move(fields.f), std::move(nl), fields.grid,
                           fields.decay_margin);
}

} // namespace cnls
