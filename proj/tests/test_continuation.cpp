#include "cnls/continuation.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace cnls;
namespace ts = testing_support;

namespace {

const Interval kUnit{-1, 1};

Problem preset(Preset kind, std::size_t N = 3001) {
    PresetFields pf;
    pf.b = CoefficientField::bump(0.5, kUnit);
    pf.c = CoefficientField::bump(1.0, kUnit);
    pf.e = CoefficientField::bump(0.5, kUnit);
    pf.f = CoefficientField::bump(1.0, kUnit);
    pf.grid = Grid(15.0, N);
    return preset_problem(kind, pf);
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::parse_error;
}

} // namespace

TEST(ScalingSeed, Examples) {
    WavePair u(std::vector<double>{0.0, 2.0, -4.0}, std::vector<double>{1.0, 8.0, 6.0});
    const auto same = scaling_seed(u, 1.0);
    EXPECT_EQ(same.u1, u.u1);
    EXPECT_EQ(same.u2, u.u2);
    const auto half = scaling_seed(u, 4.0);
    EXPECT_EQ(half.u1, (std::vector<double>{0.0, 1.0, -2.0}));
    EXPECT_EQ(half.u2, (std::vector<double>{0.5, 4.0, 3.0}));
    EXPECT_EQ(code_of([&] { (void)scaling_seed(u, 0.0); }), ErrorCode::parameter_out_of_range);
    EXPECT_EQ(code_of([&] { (void)scaling_seed(u, -1.0); }), ErrorCode::parameter_out_of_range);
}

TEST(ScalingSeed, SolutionMapsToSolution) {
    const auto p = preset(Preset::weakly_coupled, 12001);
    const auto s = solve_ground_state(p, SolverConfig{});
    ASSERT_LE(s.diagnostics.residual, 1e-6);
    for (double lam : {0.25, 4.0}) {
        const auto q = branch_problem(p, lam, BranchVariant::nonlinear_scaled);
        EXPECT_LE(residual(q, scaling_seed(s.wave, lam)).interior_sup, 2e-6); // r_1 / sqrt(lambda)
    }
}

// residual_lambda(u / sqrt(lambda)) == residual_1(u) / sqrt(lambda), pointwise.
TEST(ContinuationProperty, ExactResidualScaling) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> val(0.0, 2.0);
    for (auto kind : {Preset::weakly_coupled, Preset::spinor}) {
        const auto p = preset(kind, 1501);
        WavePair u(p.grid().size());
        for (std::size_t j = 1; j + 1 < u.size(); ++j) {
            u.u1[j] = val(rng);
            u.u2[j] = val(rng);
        }
        const auto r1 = residual(p, u);
        for (double lam : {0.1, 0.5, 3.0, 17.0}) {
            const auto rl = residual(branch_problem(p, lam, BranchVariant::nonlinear_scaled), scaling_seed(u, lam));
            double worst = 0.0;
            for (std::size_t j = 0; j < u.size(); ++j)
                for (std::size_t i = 0; i < 2; ++i)
                    worst = std::max(worst, std::abs(rl.values.component(i)[j] - r1.values.component(i)[j] / std::sqrt(lam)));
            EXPECT_LE(worst, 1e-10 * r1.interior_sup);
        }
    }
}

TEST(TraceBranch, NonlinearScaledNormRatios) {
    const auto p = preset(Preset::weakly_coupled);
    const std::vector<double> lambdas{0.25, 1.0, 4.0};
    const auto pts = trace_branch(p, lambdas, BranchVariant::nonlinear_scaled, SolverConfig{});
    ASSERT_EQ(pts.size(), 3u);
    for (const auto& pt : pts) ASSERT_TRUE(pt.converged()) << pt.failure;
    EXPECT_NEAR(pts[0].norm / pts[1].norm, 2.0, 1e-6);
    EXPECT_NEAR(pts[2].norm / pts[1].norm, 0.5, 1e-6);
    for (const auto& pt : pts) {
        EXPECT_EQ(pt.norm, pt.solution->wave.norm());
        EXPECT_GE(pt.norm, pt.bounds.r * (1 - 1e-6));
        EXPECT_LE(pt.norm, pt.bounds.R * (1 + 1e-6));
    }
}

TEST(TraceBranch, NormIncreasesAsLambdaShrinks) {
    const auto p = preset(Preset::spinor);
    const std::vector<double> lambdas{2.0, 1.0, 0.5, 0.2, 0.1};
    const auto pts = trace_branch(p, lambdas, BranchVariant::nonlinear_scaled, SolverConfig{});
    for (std::size_t k = 1; k < pts.size(); ++k) {
        ASSERT_TRUE(pts[k].converged());
        EXPECT_GT(pts[k].norm, pts[k - 1].norm);
        EXPECT_EQ(pts[k].lambda, lambdas[k]);
    }
}

TEST(TraceBranch, FullyScaledBoundAndOrder) {
    const auto p = preset(Preset::weakly_coupled);
    const auto m = branch_bounds(FixedPointMap::build(p), 0.5, BranchVariant::fully_scaled).parameter_bound;
    const std::vector<double> bad{0.5, m};
    EXPECT_EQ(code_of([&] { (void)trace_branch(p, bad, BranchVariant::fully_scaled, SolverConfig{}); }),
              ErrorCode::parameter_out_of_range);
    const std::vector<double> good{0.6, 0.9, 1.2};
    const auto pts = trace_branch(p, good, BranchVariant::fully_scaled, SolverConfig{});
    ASSERT_EQ(pts.size(), 3u);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        EXPECT_EQ(pts[k].lambda, good[k]);
        EXPECT_EQ(pts[k].bounds.parameter_bound, m);
        if (pts[k].converged()) {
            EXPECT_LE(pts[k].solution->diagnostics.residual, 1e-4);
        } else {
            EXPECT_FALSE(pts[k].failure.empty());
        }
    }
}

TEST(TraceBranch, BoundsTimesSqrtLambdaConstant) {
    const auto map = FixedPointMap::build(preset(Preset::weakly_coupled));
    const auto ref = branch_bounds(map, 1.0, BranchVariant::nonlinear_scaled);
    for (double lam : {0.01, 0.3, 2.0, 50.0}) {
        const auto b = branch_bounds(map, lam, BranchVariant::nonlinear_scaled);
        EXPECT_NEAR(b.r * std::sqrt(lam), ref.r, 1e-12 * ref.r);
        EXPECT_NEAR(b.R * std::sqrt(lam), ref.R, 1e-12 * ref.R);
    }
}

TEST(TraceBranch, OddBranchStaysOdd) {
    PresetFields pf;
    pf.b = CoefficientField::bumps({{{-2, -1}, 0.5}, {{1, 2}, 0.5}});
    pf.c = CoefficientField::bumps({{{-2, -1}, 1.0}, {{1, 2}, 1.0}});
    pf.e = pf.b;
    pf.f = pf.c;
    pf.grid = Grid(16.0, 3201);
    const auto p = preset_problem(Preset::weakly_coupled, pf);
    SolverConfig cfg;
    cfg.symmetry = Symmetry::odd;
    const std::vector<double> lambdas{0.5, 1.0, 2.0};
    const auto pts = trace_branch(p, lambdas, BranchVariant::nonlinear_scaled, cfg);
    for (const auto& pt : pts) {
        ASSERT_TRUE(pt.converged()) << pt.failure;
        const auto& w = pt.solution->wave;
        const std::size_t n = w.size();
        for (std::size_t j = 0; j < n; ++j) {
            ASSERT_EQ(w.u1[j], -w.u1[n - 1 - j]);
            ASSERT_EQ(w.u2[j], -w.u2[n - 1 - j]);
        }
    }
    EXPECT_NEAR(pts[0].norm / pts[1].norm, std::sqrt(2.0), 1e-6);
}
