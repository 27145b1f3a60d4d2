#pragma once

#include "cnls/error.hpp"
#include "cnls/greens.hpp"
#include "cnls/model.hpp"
#include "cnls/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cnls {

/// Strict inequalities on grid maxima are tested against 1 - margin.
inline constexpr double kStrictMargin = 1e-9;

enum class Status { pass, fail, not_applicable };

constexpr const char* to_string(Status s) noexcept {
    switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::not_applicable: return "n/a";
    }
    return "?";
}

struct HypothesisEntry {
    std::string id; // "i" .. "vi", "vi'"
    Status status = Status::not_applicable;
    std::string note;
    std::vector<std::pair<std::string, double>> witnesses;

    HypothesisEntry() = default;
    explicit HypothesisEntry(std::string name, Status s = Status::not_applicable) : id(std::move(name)), status(s) {}

    [[nodiscard]] double witness(const std::string& key) const {
        for (const auto& [k, v] : witnesses)
            if (k == key) return v;
        return std::numeric_limits<double>::quiet_NaN();
    }
};

struct HypothesisReport {
    std::vector<HypothesisEntry> entries;

    void add(HypothesisEntry e) { entries.push_back(std::move(e)); }

    [[nodiscard]] const HypothesisEntry* find(const std::string& id) const {
        for (const auto& e : entries)
            if (e.id == id) return &e;
        return nullptr;
    }

    [[nodiscard]] bool passes(const std::string& id) const {
        const auto* e = find(id);
        return e && e->status == Status::pass;
    }

    /// (i)-(vi) of the existence theorem.
    [[nodiscard]] bool all_required_pass() const {
        for (const char* id : {"i", "ii", "iii", "iv", "v", "vi"})
            if (!passes(id)) return false;
        return true;
    }
};

/// (i) positivity of a_*, d_*; (ii) M non-empty and compact; (iii) F, H >= 0
/// on a lattice of [0, 10]^2.
inline HypothesisReport check_structural(const Problem& p) {
    HypothesisReport report;

    HypothesisEntry i{"i"};
    const double a_inf = p.a().infimum();
    const double d_inf = p.d().infimum();
    double others = kInfinity;
    for (const auto* f : {&p.b(), &p.c(), &p.e(), &p.f()}) others = std::min(others, f->infimum());
    i.status = (a_inf > 0.0 && d_inf > 0.0 && others >= 0.0) ? Status::pass : Status::fail;
    i.witnesses = {{"a_inf", a_inf}, {"d_inf", d_inf}, {"bcef_inf", others}};
    report.add(i);

    HypothesisEntry ii{"ii"};
    const SupportSet M = p.coupling_support();
    if (M.empty()) {
        ii.status = Status::fail;
        ii.note = "EmptySupport";
    } else if (!M.bounded()) {
        ii.status = Status::fail;
        ii.note = "unbounded support";
    } else {
        ii.status = Status::pass;
        ii.witnesses = {{"M_lo", M.hull()->lo}, {"M_hi", M.hull()->hi}};
    }
    report.add(ii);

    HypothesisEntry iii{"iii", Status::pass};
    const auto& nl = p.nonlinearity();
    constexpr int steps = 40;
    for (int s = 0; s <= steps && iii.status == Status::pass; ++s) {
        for (int t = 0; t <= steps; ++t) {
            const double u1 = 10.0 * s / steps;
            const double u2 = 10.0 * t / steps;
            const double fv = nl.F(u1, u2);
            const double hv = nl.H(u1, u2);
            if (fv < 0.0 || hv < 0.0 || !std::isfinite(fv) || !std::isfinite(hv)) {
                iii.status = Status::fail;
                iii.note = fv < 0.0 ? "F negative" : "H negative";
                iii.witnesses = {{"u1", u1}, {"u2", u2}, {"F", fv}, {"H", hv}};
                break;
            }
        }
    }
    report.add(iii);
    return report;
}

/// (vi): max over x of int_M G1 b and int_M G2 e, each below 1.
inline HypothesisEntry check_linear_smallness(const FixedPointMap& map) {
    const auto integrals = map.unit_integrals();
    const double v1 = WavePair::sup(integrals[0]);
    const double v2 = WavePair::sup(integrals[1]);
    HypothesisEntry e{"vi"};
    e.status = (v1 < 1.0 - kStrictMargin && v2 < 1.0 - kStrictMargin) ? Status::pass : Status::fail;
    e.witnesses = {{"max_G1b", v1}, {"max_G2e", v2}};
    return e;
}

namespace detail {

/// sup of num/den over [-L, L]; exact for piecewise-constant fields.
inline double ratio_sup(const CoefficientField& num, const CoefficientField& den, double L) {
    std::vector<double> pts{-L, L};
    for (const auto* f : {&num, &den})
        for (double b : f->breakpoints())
            if (b > -L && b < L) pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    std::vector<double> probes = pts;
    for (std::size_t k = 1; k < pts.size(); ++k) probes.push_back(0.5 * (pts[k - 1] + pts[k]));
    double best = 0.0;
    for (double x : probes) {
        const double n = num(x);
        const double d = den(x);
        if (!(d > 0.0)) throw Error(ErrorCode::division_domain, "denominator vanishes at x = " + std::to_string(x));
        best = std::max(best, n / d);
    }
    return best;
}

} // namespace detail

/// (vi'): sup b/a < 1 and sup e/d < 1.
inline HypothesisEntry check_ratio_condition(const Problem& p) {
    const double L = p.grid().half_width();
    const double r1 = detail::ratio_sup(p.b(), p.a(), L);
    const double r2 = detail::ratio_sup(p.e(), p.d(), L);
    HypothesisEntry e{"vi'"};
    e.status = (r1 < 1.0 && r2 < 1.0) ? Status::pass : Status::fail;
    e.witnesses = {{"sup_b_over_a", r1}, {"sup_e_over_d", r2}};
    return e;
}

/// Constants of the small-norm bound F, H < k r^gamma (||u|| < r < r0) and
/// the componentwise large-norm bound F > K R^delta when u1 lies in
/// [m1 p0_1 R, R] (likewise H with u2).
struct GrowthConstants {
    double gamma = 0.0;
    double k = 0.0;
    double r0 = kInfinity;
    double delta = 0.0;
    double K = 0.0;
    double R0 = 0.0;
};

inline GrowthConstants growth_constants(const Nonlinearity& nl, const ConeConstants& cone) {
    const double shell = std::min(cone.product(0), cone.product(1));
    switch (nl.kind()) {
    case Nonlinearity::Kind::decoupled_cubic: return {2.0, 1.0, kInfinity, 2.0, shell * shell, 0.0};
    case Nonlinearity::Kind::spinor_cubic: return {2.0, 2.0, kInfinity, 2.0, shell * shell, 0.0};
    case Nonlinearity::Kind::custom: break;
    }
    throw Error(ErrorCode::unsupported_nonlinearity, "growth constants of a custom nonlinearity must be supplied");
}

/// Grid maxima entering the annulus estimates.
struct LinearWitnesses {
    double B = 0.0;     // max_x of (int G1 b, int G2 e)
    double C_max = 0.0; // max_x of (int G1 c, int G2 f)
    double C_min = 0.0; // min over components of max_{x in M} of the same
    double C1_M = 0.0;  // max_{x in M} int G1 c
};

inline LinearWitnesses linear_witnesses(const FixedPointMap& map) {
    const auto v = map.unit_integrals();
    LinearWitnesses w;
    w.B = std::max(WavePair::sup(v[0]), WavePair::sup(v[1]));
    w.C_max = std::max(WavePair::sup(v[2]), WavePair::sup(v[3]));
    double c1 = 0.0, c2 = 0.0;
    for (std::size_t k : map.support_nodes()) {
        c1 = std::max(c1, v[2][k]);
        c2 = std::max(c2, v[3][k]);
    }
    w.C_min = std::min(c1, c2);
    w.C1_M = c1;
    return w;
}

struct AnnulusRadii {
    double r = 0.0;
    double R = 0.0;
};

/// r = ((1 - B)/(k C_max))^(1/gamma), R = (1/(K C_min))^(1/delta), with R
/// enlarged to exceed r if needed.
inline AnnulusRadii annulus_radii(const LinearWitnesses& w, const GrowthConstants& gc) {
    if (!(w.B < 1.0)) throw Error(ErrorCode::hypothesis_failure, "(vi) fails: B = " + std::to_string(w.B));
    if (!(w.C_min > 0.0))
        throw Error(ErrorCode::hypothesis_failure, "(v) cannot hold: nonlinear coefficient integral vanishes on M");
    AnnulusRadii out;
    out.r = std::pow((1.0 - w.B) / (gc.k * w.C_max), 1.0 / gc.gamma);
    out.R = std::pow(1.0 / (gc.K * w.C_min), 1.0 / gc.delta);
    if (!(out.R > out.r)) out.R = 2.0 * out.r;
    return out;
}

inline AnnulusRadii annulus_radii(const FixedPointMap& map, const GrowthConstants& gc) {
    return annulus_radii(linear_witnesses(map), gc);
}

enum class BranchVariant { nonlinear_scaled, fully_scaled };

struct BranchBounds {
    double r = 0.0;
    double R = 0.0;
    double parameter_bound = kInfinity; // m = 1/B for the fully scaled family
};

/// Bounds for the lambda-families
///   nonlinear-scaled: -u'' + a u = b v + lambda c u^3,
///   fully-scaled:     -u'' + a u = lambda (b v + c u^3),
/// computed from the witnesses of the unscaled problem.
inline BranchBounds branch_bounds(const LinearWitnesses& w, const ConeConstants& cone, const GrowthConstants& gc,
                                  double lambda, BranchVariant variant) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw Error(ErrorCode::parameter_out_of_range, "lambda must be positive and finite");
    if (!(w.C_max > 0.0) || !(w.C1_M > 0.0))
        throw Error(ErrorCode::hypothesis_failure, "nonlinear coefficient integral vanishes on M");
    BranchBounds out;
    double linear = w.B;
    if (variant == BranchVariant::fully_scaled) {
        out.parameter_bound = w.B > 0.0 ? 1.0 / w.B : kInfinity;
        if (!(lambda < out.parameter_bound))
            throw Error(ErrorCode::parameter_out_of_range,
                        "lambda must lie in (0, m), m = " + std::to_string(out.parameter_bound));
        linear = lambda * w.B;
    } else if (!(w.B < 1.0)) {
        throw Error(ErrorCode::hypothesis_failure, "(vi) fails: B = " + std::to_string(w.B));
    }
    out.r = std::sqrt((1.0 - linear) / (lambda * gc.k * w.C_max));
    out.R = std::sqrt(1.0 / (lambda * cone.product(0) * w.C1_M));
    out.R = std::max(out.R, out.r);
    return out;
}

inline BranchBounds branch_bounds(const FixedPointMap& map, double lambda, BranchVariant variant) {
    const auto gc = growth_constants(map.problem().nonlinearity(), map.cone());
    return branch_bounds(linear_witnesses(map), map.cone(), gc, lambda, variant);
}

/// Everything the existence theorem needs, in one report.
struct TheoremCheck {
    HypothesisReport report;
    std::optional<GrowthConstants> growth;
    std::optional<LinearWitnesses> witnesses;
    std::optional<AnnulusRadii> annulus;
};

inline TheoremCheck check_theorem(const FixedPointMap& map) {
    TheoremCheck out;
    out.report = check_structural(map.problem());
    const auto smallness = check_linear_smallness(map);

    HypothesisEntry iv{"iv"}, v{"v"};
    if (map.has_cone()) {
        try {
            const auto gc = growth_constants(map.problem().nonlinearity(), map.cone());
            out.growth = gc;
            iv.status = Status::pass;
            iv.witnesses = {{"gamma", gc.gamma}, {"k", gc.k}, {"r0", gc.r0}};
            v.witnesses = {{"delta", gc.delta}, {"K", gc.K}, {"R0", gc.R0}};
            const auto w = linear_witnesses(map);
            out.witnesses = w;
            v.status = w.C_min > 0.0 ? Status::pass : Status::fail;
            if (v.status == Status::fail) v.note = "nonlinear coefficient integral vanishes on M";
        } catch (const Error& err) {
            iv.status = v.status = Status::not_applicable;
            iv.note = v.note = err.what();
        }
    } else {
        iv.note = v.note = "needs a non-empty M";
    }
    out.report.add(iv);
    out.report.add(v);
    out.report.add(smallness);
    out.report.add(check_ratio_condition(map.problem()));

    if (out.growth && out.witnesses && out.report.all_required_pass())
        out.annulus = annulus_radii(*out.witnesses, *out.growth);
    return out;
}

} // namespace cnls
