#pragma once

#include "cnls/error.hpp"
#include "cnls/hypotheses.hpp"
#include "cnls/model.hpp"
#include "cnls/operator.hpp"
#include "cnls/solver.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cnls {

struct BranchPoint {
    double lambda = 0.0;
    std::optional<Solution> solution; // empty when no nontrivial solution was found
    BranchBounds bounds;
    double norm = 0.0;
    std::string failure;

    [[nodiscard]] bool converged() const noexcept { return solution.has_value(); }
};

/// u / sqrt(lambda): maps a solution of the nonlinear-scaled system at
/// parameter 1 onto the one at lambda.
inline WavePair scaling_seed(const WavePair& u, double lambda) {
    if (!(lambda > 0.0)) throw Error(ErrorCode::parameter_out_of_range, "lambda must be positive");
    const double s = 1.0 / std::sqrt(lambda);
    WavePair out = u;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.u1[i] *= s;
        out.u2[i] *= s;
    }
    return out;
}

/// The lambda-member of a family built on p.
inline Problem branch_problem(const Problem& p, double lambda, BranchVariant variant) {
    return variant == BranchVariant::nonlinear_scaled ? p.scaled(1.0, lambda) : p.scaled(lambda, lambda);
}

/// Solves the family at each lambda in order. The nonlinear-scaled family
/// is seeded from the previous point through the exact scaling map, the
/// fully scaled one from the previous point as is.
inline std::vector<BranchPoint> trace_branch(const Problem& p, std::span<const double> lambdas,
                                             BranchVariant variant, const SolverConfig& cfg) {
    const bool odd = cfg.symmetry == Symmetry::odd;
    if (odd) detail::require_odd_admissible(p);
    const auto base = FixedPointMap::build(p, odd ? LinearBasis::Domain::half_line : LinearBasis::Domain::full_line);
    const auto gc = growth_constants(p.nonlinearity(), base.cone());
    const auto witnesses = linear_witnesses(base);

    std::vector<BranchBounds> bounds;
    for (double lambda : lambdas) bounds.push_back(branch_bounds(witnesses, base.cone(), gc, lambda, variant));

    std::vector<BranchPoint> out;
    out.reserve(lambdas.size()); // keeps `previous` valid
    const BranchPoint* previous = nullptr;
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        BranchPoint pt;
        pt.lambda = lambdas[k];
        pt.bounds = bounds[k];
        const Problem member = branch_problem(p, pt.lambda, variant);
        const AnnulusRadii radii{bounds[k].r, bounds[k].R};
        try {
            if (previous) {
                const WavePair seed = variant == BranchVariant::nonlinear_scaled
                                          ? scaling_seed(previous->solution->wave, pt.lambda / previous->lambda)
                                          : previous->solution->wave;
                pt.solution = solve_from(member, cfg, seed, radii);
            }
            if (!pt.solution) pt.solution = solve(member, cfg);
            pt.norm = pt.solution->diagnostics.norm;
        } catch (const Error& err) {
            if (err.code() != ErrorCode::no_nontrivial_solution && err.code() != ErrorCode::hypothesis_failure)
                throw;
            pt.solution.reset();
            pt.failure = err.what();
        }
        out.push_back(std::move(pt));
        if (out.back().converged()) previous = &out.back();
    }
    return out;
}

} // namespace cnls
