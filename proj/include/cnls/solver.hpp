#pragma once

#include "cnls/error.hpp"
#include "cnls/hypotheses.hpp"
#include "cnls/model.hpp"
#include "cnls/operator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cnls {

enum class Symmetry { none, odd };

struct SolverConfig {
    double theta = 0.5;            // Picard damping
    std::size_t max_iter = 500;    // Picard iterations per seed
    double tol = 1e-8;             // sup |u - T u|
    std::size_t ladder = 8;        // seed norms, geometric in [r, R]
    bool newton_fallback = true;
    Symmetry symmetry = Symmetry::none;
    std::size_t stall_window = 10;
    double residual_tol = 1e-6;    // finite-difference certificate
    std::size_t newton_max_iter = 40;
    bool override_hypotheses = false;

    friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

enum class Method { picard, newton_polished };

constexpr const char* to_string(Method m) noexcept { return m == Method::picard ? "picard" : "newton-polished"; }

struct SolutionDiagnostics {
    std::size_t iterations = 0;  // Picard steps plus Newton steps
    double update_norm = 0.0;    // sup |u - T u| at exit
    double residual = 0.0;       // interior FD residual
    double boundary = 0.0;       // max |u_i(+-L)|
    std::array<double, 2> cone_gap{};
    double norm = 0.0;
    double min_value = 0.0;
    double clipped = 0.0;        // largest negative part removed by the cone projection
    Method method = Method::picard;
    std::size_t seed_index = 0;
    double seed_norm = 0.0;
    AnnulusRadii annulus;
    bool residual_ok = false;
};

struct Solution {
    WavePair wave; // full grid; odd extension for odd waves
    SolutionDiagnostics diagnostics;
};

namespace detail {

inline std::vector<double> flatten(const WavePair& u) {
    std::vector<double> out(u.u1);
    out.insert(out.end(), u.u2.begin(), u.u2.end());
    return out;
}

inline WavePair unflatten(const std::vector<double>& v) {
    const auto n = static_cast<std::ptrdiff_t>(v.size() / 2);
    return WavePair(std::vector<double>(v.begin(), v.begin() + n), std::vector<double>(v.begin() + n, v.end()));
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Restarted GMRES for A x = b from x = 0, Givens-rotation form.
inline std::vector<double> gmres(const std::function<std::vector<double>(const std::vector<double>&)>& apply,
                                 const std::vector<double>& b, double rel_tol, std::size_t restart,
                                 std::size_t max_cycles) {
    const std::size_t n = b.size();
    std::vector<double> x(n, 0.0);
    const double b_norm = std::sqrt(dot(b, b));
    if (b_norm == 0.0) return x;

    for (std::size_t cycle = 0; cycle < max_cycles; ++cycle) {
        std::vector<double> r = b;
        if (cycle > 0) {
            const auto ax = apply(x);
            for (std::size_t i = 0; i < n; ++i) r[i] -= ax[i];
        }
        const double beta = std::sqrt(dot(r, r));
        if (beta <= rel_tol * b_norm) break;

        std::vector<std::vector<double>> V{r};
        for (double& v : V[0]) v /= beta;
        std::vector<std::vector<double>> H;
        std::vector<double> cs, sn, g{beta};
        std::size_t k = 0;
        for (; k < restart; ++k) {
            std::vector<double> w = apply(V[k]);
            std::vector<double> hcol(k + 2, 0.0);
            for (std::size_t i = 0; i <= k; ++i) { // modified Gram-Schmidt
                hcol[i] = dot(w, V[i]);
                for (std::size_t t = 0; t < n; ++t) w[t] -= hcol[i] * V[i][t];
            }
            hcol[k + 1] = std::sqrt(dot(w, w));
            for (std::size_t i = 0; i < k; ++i) {
                const double tmp = cs[i] * hcol[i] + sn[i] * hcol[i + 1];
                hcol[i + 1] = -sn[i] * hcol[i] + cs[i] * hcol[i + 1];
                hcol[i] = tmp;
            }
            const double denom = std::hypot(hcol[k], hcol[k + 1]);
            cs.push_back(denom == 0.0 ? 1.0 : hcol[k] / denom);
            sn.push_back(denom == 0.0 ? 0.0 : hcol[k + 1] / denom);
            hcol[k] = denom;
            g.push_back(-sn[k] * g[k]);
            g[k] *= cs[k];
            const double next = hcol[k + 1];
            hcol.pop_back();
            H.push_back(std::move(hcol));
            const bool done = std::abs(g[k + 1]) <= rel_tol * b_norm || next == 0.0;
            if (!done) {
                for (double& v : w) v /= next;
                V.push_back(std::move(w));
            }
            if (done) {
                ++k;
                break;
            }
        }
        const std::size_t m = std::min(k, H.size());
        std::vector<double> y(m, 0.0);
        for (std::size_t i = m; i-- > 0;) {
            double s = g[i];
            for (std::size_t j = i + 1; j < m; ++j) s -= H[j][i] * y[j];
            y[i] = s / H[i][i];
        }
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t t = 0; t < n; ++t) x[t] += y[j] * V[j][t];
        if (std::abs(g[m]) <= rel_tol * b_norm) break;
    }
    return x;
}

struct NewtonOutcome {
    WavePair u;
    std::size_t steps = 0;
    double update_norm = kInfinity;
};

/// Newton-GMRES on u - T(u) = 0 with backtracking on ||u - T u||_2.
inline std::optional<NewtonOutcome> newton_fixed_point(const FixedPointMap& map, WavePair u, double tol,
                                                       std::size_t max_steps) {
    auto defect = [&](const WavePair& v) {
        auto tv = map.apply(v);
        for (std::size_t i = 0; i < v.size(); ++i) {
            tv.u1[i] = v.u1[i] - tv.u1[i];
            tv.u2[i] = v.u2[i] - tv.u2[i];
        }
        return tv;
    };
    auto norm2 = [](const WavePair& v) { return std::sqrt(dot(v.u1, v.u1) + dot(v.u2, v.u2)); };

    WavePair phi = defect(u);
    NewtonOutcome out;
    for (std::size_t step = 0; step <= max_steps; ++step) {
        const double sup = phi.norm();
        if (!std::isfinite(sup)) return std::nullopt;
        if (sup <= 1e-3 * tol) {
            out.u = std::move(u);
            out.steps = step;
            out.update_norm = sup;
            return out;
        }
        if (step == max_steps) break;

        auto jac = [&](const std::vector<double>& v) {
            const WavePair vv = unflatten(v);
            const WavePair tv = map.derivative(u, vv);
            std::vector<double> r = v;
            const std::size_t n = vv.size();
            for (std::size_t i = 0; i < n; ++i) {
                r[i] -= tv.u1[i];
                r[n + i] -= tv.u2[i];
            }
            return r;
        };
        std::vector<double> rhs = flatten(phi);
        for (double& v : rhs) v = -v;
        const WavePair delta = unflatten(gmres(jac, rhs, 1e-12, 80, 20));

        const double base = norm2(phi);
        double alpha = 1.0;
        WavePair trial, trial_phi;
        bool accepted = false;
        while (alpha >= 1.0 / 1024.0) {
            trial = u;
            for (std::size_t i = 0; i < u.size(); ++i) {
                trial.u1[i] += alpha * delta.u1[i];
                trial.u2[i] += alpha * delta.u2[i];
            }
            trial_phi = defect(trial);
            if (norm2(trial_phi) <= (1.0 - 1e-4 * alpha) * base) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            // Stagnation at rounding level still counts when within tolerance.
            if (sup <= tol) {
                out.u = std::move(u);
                out.steps = step;
                out.update_norm = sup;
                return out;
            }
            return std::nullopt;
        }
        u = std::move(trial);
        phi = std::move(trial_phi);
    }
    if (phi.norm() <= tol) {
        out.update_norm = phi.norm();
        out.u = std::move(u);
        out.steps = max_steps;
        return out;
    }
    return std::nullopt;
}

struct LocalSolution {
    WavePair u; // domain nodes
    std::size_t iterations = 0;
    double update_norm = 0.0;
    double clipped = 0.0;
    Method method = Method::picard;
};

/// Damped Picard with cone projection from one seed, falling back to
/// Newton from the best iterate when the update norm stops decreasing.
/// Returns nothing when the iteration collapses towards zero or fails.
inline std::optional<LocalSolution> solve_from_seed(const FixedPointMap& map, const WavePair& seed,
                                                    const SolverConfig& cfg, double collapse_norm) {
    WavePair u = seed;
    WavePair best = seed;
    double best_update = kInfinity;
    double clipped = 0.0;
    std::vector<double> history;
    std::size_t it = 0;
    bool stalled = false;
    for (; it < cfg.max_iter; ++it) {
        WavePair tu = map.apply(u);
        const double update = distance(tu, u);
        if (!std::isfinite(update)) {
            stalled = true;
            break;
        }
        if (update < best_update) {
            best_update = update;
            best = u;
        }
        if (update <= cfg.tol) {
            if (u.norm() < collapse_norm) return std::nullopt;
            return LocalSolution{std::move(u), it, update, clipped, Method::picard};
        }
        if (u.norm() < collapse_norm) return std::nullopt;
        history.push_back(update);
        if (history.size() > cfg.stall_window &&
            history.back() >= history[history.size() - 1 - cfg.stall_window]) {
            stalled = true;
            break;
        }
        for (std::size_t i = 0; i < u.size(); ++i) {
            for (std::size_t k = 0; k < 2; ++k) {
                double v = (1.0 - cfg.theta) * u.component(k)[i] + cfg.theta * tu.component(k)[i];
                if (v < 0.0) {
                    clipped = std::max(clipped, -v);
                    v = 0.0;
                }
                u.component(k)[i] = v;
            }
        }
    }
    if (!cfg.newton_fallback) return std::nullopt;
    (void)stalled; // exhausted iterations fall back as well
    auto polished = newton_fixed_point(map, best, cfg.tol, cfg.newton_max_iter);
    if (!polished || polished->update_norm > cfg.tol) return std::nullopt;
    const double lowest = std::min(*std::min_element(polished->u.u1.begin(), polished->u.u1.end()),
                                   *std::min_element(polished->u.u2.begin(), polished->u.u2.end()));
    if (polished->u.norm() < collapse_norm || lowest < -1e-9 * std::max(1.0, polished->u.norm()))
        return std::nullopt;
    return LocalSolution{std::move(polished->u), it + polished->steps, polished->update_norm, clipped,
                         Method::newton_polished};
}

/// Seed profile: G_i applied to the indicator of M, each scaled to sup 1.
inline WavePair seed_shape(const FixedPointMap& map) {
    std::vector<Bump> bumps;
    for (const auto& piece : map.support().pieces()) bumps.push_back({piece, 1.0});
    WavePair w(map.size());
    if (bumps.empty()) return w;
    const auto indicator = CoefficientField::bumps(bumps);
    for (std::size_t i = 0; i < 2; ++i) {
        auto v = greens_apply(map.kernel(i), indicator);
        const double s = WavePair::sup(v);
        if (s > 0.0)
            for (double& x : v) x /= s;
        w.component(i) = std::move(v);
    }
    return w;
}

inline Solution finalize(const FixedPointMap& map, const LocalSolution& local, const SolverConfig& cfg,
                         const AnnulusRadii& annulus, std::size_t seed_index, double seed_norm) {
    const Problem& p = map.problem();
    Solution s;
    s.wave = map.domain() == LinearBasis::Domain::half_line ? odd_extension(local.u, p.grid()) : local.u;
    auto& d = s.diagnostics;
    d.iterations = local.iterations;
    d.update_norm = local.update_norm;
    d.method = local.method;
    d.clipped = local.clipped;
    d.seed_index = seed_index;
    d.seed_norm = seed_norm;
    d.annulus = annulus;
    d.norm = s.wave.norm();
    d.min_value = std::min(*std::min_element(local.u.u1.begin(), local.u.u1.end()),
                           *std::min_element(local.u.u2.begin(), local.u.u2.end()));
    if (map.has_cone()) d.cone_gap = cone_gap(map, local.u);
    const auto res = residual(p, s.wave);
    d.residual = res.interior_sup;
    d.boundary = res.boundary_max;
    d.residual_ok = res.interior_sup <= cfg.residual_tol;
    return s;
}

inline AnnulusRadii search_annulus(const FixedPointMap& map, const SolverConfig& cfg) {
    const auto check = check_theorem(map);
    if (check.annulus) return *check.annulus;
    if (!cfg.override_hypotheses) {
        std::string failed;
        for (const auto& e : check.report.entries)
            if (e.id != "vi'" && e.status != Status::pass) failed += " (" + e.id + ")";
        throw Error(ErrorCode::hypothesis_failure, "hypotheses not satisfied:" + failed);
    }
    return {1e-2, 1e2}; // exploration range when the estimates are unavailable
}

inline std::vector<double> ladder_norms(const AnnulusRadii& radii, std::size_t count) {
    std::vector<double> out;
    if (count == 1) return {std::sqrt(radii.r * radii.R)};
    for (std::size_t k = 0; k < count; ++k)
        out.push_back(radii.r * std::pow(radii.R / radii.r, static_cast<double>(k) / static_cast<double>(count - 1)));
    return out;
}

inline std::vector<Solution> run_ladder(const FixedPointMap& map, const SolverConfig& cfg,
                                        const AnnulusRadii& radii, bool stop_at_first) {
    if (!(cfg.tol > 0.0)) throw Error(ErrorCode::parameter_out_of_range, "tolerance must be positive");
    if (!(cfg.theta > 0.0 && cfg.theta <= 1.0))
        throw Error(ErrorCode::parameter_out_of_range, "damping theta must lie in (0, 1]");
    const WavePair shape = seed_shape(map);
    std::vector<Solution> found;
    const auto norms = ladder_norms(radii, std::max<std::size_t>(cfg.ladder, 1));
    for (std::size_t k = 0; k < norms.size(); ++k) {
        WavePair seed = shape;
        for (std::size_t i = 0; i < seed.size(); ++i) {
            seed.u1[i] *= norms[k];
            seed.u2[i] *= norms[k];
        }
        auto local = solve_from_seed(map, seed, cfg, 0.5 * radii.r);
        if (!local) continue;
        Solution s = finalize(map, *local, cfg, radii, k, norms[k]);
        const bool duplicate = std::any_of(found.begin(), found.end(), [&](const Solution& o) {
            return distance(o.wave, s.wave) <= 1e3 * cfg.tol * std::max(1.0, s.diagnostics.norm);
        });
        if (!duplicate) found.push_back(std::move(s));
        if (stop_at_first && !found.empty()) break;
    }
    return found;
}

inline void require_odd_admissible(const Problem& p) {
    const std::pair<const char*, const CoefficientField*> fields[] = {{"a", &p.a()}, {"b", &p.b()}, {"c", &p.c()},
                                                                     {"d", &p.d()}, {"e", &p.e()}, {"f", &p.f()}};
    for (const auto& [name, field] : fields)
        if (!field->is_even()) throw Error(ErrorCode::symmetry_violation, std::string(name) + " is not even");
    if (p.coupling_support().contains(0.0))
        throw Error(ErrorCode::support_contains_origin, "0 lies in M; odd waves need 0 outside M");
}

} // namespace detail

/// Positive solution of the full-line system inside the annulus of the
/// existence theorem.
inline Solution solve_ground_state(const Problem& p, const SolverConfig& cfg) {
    const auto map = FixedPointMap::build(p);
    const auto radii = detail::search_annulus(map, cfg);
    auto found = detail::run_ladder(map, cfg, radii, true);
    if (found.empty())
        throw Error(ErrorCode::no_nontrivial_solution, "every seed collapsed to zero or failed to converge");
    return std::move(found.front());
}

/// Odd solution: positive on the half line with u(0) = 0, extended oddly.
inline Solution solve_odd(const Problem& p, const SolverConfig& cfg) {
    detail::require_odd_admissible(p);
    if (!cfg.override_hypotheses) {
        const auto full = FixedPointMap::build(p);
        (void)detail::search_annulus(full, cfg);
    }
    const auto half = FixedPointMap::build(p, LinearBasis::Domain::half_line);
    SolverConfig relaxed = cfg;
    relaxed.override_hypotheses = true;
    const auto radii = detail::search_annulus(half, relaxed);
    auto found = detail::run_ladder(half, cfg, radii, true);
    if (found.empty())
        throw Error(ErrorCode::no_nontrivial_solution, "every seed collapsed to zero or failed to converge");
    return std::move(found.front());
}

inline Solution solve(const Problem& p, const SolverConfig& cfg) {
    return cfg.symmetry == Symmetry::odd ? solve_odd(p, cfg) : solve_ground_state(p, cfg);
}

/// Every distinct fixed point reached from the seed ladder.
inline std::vector<Solution> explore_seeds(const Problem& p, const SolverConfig& cfg) {
    const bool odd = cfg.symmetry == Symmetry::odd;
    if (odd) detail::require_odd_admissible(p);
    const auto map = FixedPointMap::build(p, odd ? LinearBasis::Domain::half_line : LinearBasis::Domain::full_line);
    const auto radii = detail::search_annulus(map, cfg);
    return detail::run_ladder(map, cfg, radii, false);
}

/// Solve starting from a given full-grid seed (Picard, then Newton).
inline std::optional<Solution> solve_from(const Problem& p, const SolverConfig& cfg, const WavePair& seed,
                                          const AnnulusRadii& radii) {
    const bool odd = cfg.symmetry == Symmetry::odd;
    const auto map = FixedPointMap::build(p, odd ? LinearBasis::Domain::half_line : LinearBasis::Domain::full_line);
    const WavePair local_seed = odd ? restrict_to_half_line(seed, p.grid()) : seed;
    auto local = detail::solve_from_seed(map, local_seed, cfg, 0.5 * radii.r);
    if (!local) return std::nullopt;
    return detail::finalize(map, *local, cfg, radii, 0, seed.norm());
}

} // namespace cnls
