#include "cnls/oracle.hpp"
#include "cnls/solver.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace cnls;
namespace ts = testing_support;

namespace {

const Interval kUnit{-1, 1};

Problem preset(Preset kind, std::size_t N) {
    PresetFields pf;
    pf.b = CoefficientField::bump(0.5, kUnit);
    pf.c = CoefficientField::bump(1.0, kUnit);
    pf.e = CoefficientField::bump(0.5, kUnit);
    pf.f = CoefficientField::bump(1.0, kUnit);
    pf.grid = Grid(15.0, N);
    return preset_problem(kind, pf);
}

Problem odd_problem(std::size_t N) {
    const auto two = CoefficientField::bumps({{{-2, -1}, 1.0}, {{1, 2}, 1.0}});
    const auto half = CoefficientField::bumps({{{-2, -1}, 0.5}, {{1, 2}, 0.5}});
    PresetFields pf;
    pf.b = half;
    pf.c = two;
    pf.e = half;
    pf.f = two;
    pf.grid = Grid(16.0, N);
    return preset_problem(Preset::weakly_coupled, pf);
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

void expect_invariants(const Problem& p, const Solution& s) {
    const auto map = FixedPointMap::build(p);
    const auto& d = s.diagnostics;
    EXPECT_GE(d.min_value, -1e-9);
    EXPECT_GE(d.cone_gap[0], -1e-9);
    EXPECT_GE(d.cone_gap[1], -1e-9);
    EXPECT_LE(d.boundary, 1e-5);
    EXPECT_GE(d.norm, d.annulus.r / 2);
    EXPECT_LE(d.norm, 2 * d.annulus.R);
    EXPECT_LE(distance(s.wave, map.apply(s.wave)), SolverConfig{}.tol);
    EXPECT_EQ(d.clipped, 0.0);
}

} // namespace

TEST(GroundState, TrivialCouplingHasNoNontrivialSolution) {
    const auto z = CoefficientField::zero();
    const auto p = Problem::create(CoefficientField::constant(1.0), z, z, CoefficientField::constant(1.0), z, z,
                                   Nonlinearity::decoupled_cubic(), Grid(15.0, 1501));
    EXPECT_EQ(code_of([&] { (void)solve_ground_state(p, SolverConfig{}); }), ErrorCode::hypothesis_failure);
    SolverConfig cfg;
    cfg.override_hypotheses = true;
    EXPECT_EQ(code_of([&] { (void)solve_ground_state(p, cfg); }), ErrorCode::no_nontrivial_solution);
}

TEST(GroundState, HypothesisFailureWithoutOverride) {
    PresetFields pf;
    pf.b = CoefficientField::bump(2.0, kUnit);
    pf.c = CoefficientField::bump(1.0, kUnit);
    const auto p = preset_problem(Preset::weakly_coupled, pf);
    try {
        (void)solve_ground_state(p, SolverConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::hypothesis_failure);
        EXPECT_NE(std::string(e.what()).find("vi"), std::string::npos);
    }
}

TEST(GroundState, InvalidConfigRejected) {
    SolverConfig cfg;
    cfg.tol = 0.0;
    EXPECT_EQ(code_of([&] { (void)solve_ground_state(preset(Preset::weakly_coupled, 1501), cfg); }),
              ErrorCode::parameter_out_of_range);
    cfg = SolverConfig{};
    cfg.theta = 1.5;
    EXPECT_EQ(code_of([&] { (void)solve_ground_state(preset(Preset::weakly_coupled, 1501), cfg); }),
              ErrorCode::parameter_out_of_range);
}

class PresetSolve : public ::testing::TestWithParam<Preset> {};

TEST_P(PresetSolve, ResidualAnnulusAndOracleAgreement) {
    const auto p = preset(GetParam(), 12001);
    const auto s = solve_ground_state(p, SolverConfig{});
    EXPECT_LE(s.diagnostics.residual, 1e-6);
    EXPECT_TRUE(s.diagnostics.residual_ok);
    EXPECT_GE(s.diagnostics.norm, s.diagnostics.annulus.r);
    EXPECT_LE(s.diagnostics.norm, s.diagnostics.annulus.R);
    expect_invariants(p, s);
    // positive and even (the problem is even)
    const std::size_t n = s.wave.size();
    for (std::size_t j = 1; j + 1 < n; ++j) EXPECT_GT(s.wave.u1[j], 0.0);
    EXPECT_NEAR(s.wave.u1[100], s.wave.u1[n - 101], 1e-10);

    const auto o = oracle_solve(p, s.wave);
    EXPECT_LE(o.iterations, 5u);
    EXPECT_LE(ts::sup_diff(o.u.u1, s.wave.u1), 1e-5);
    EXPECT_LE(ts::sup_diff(o.u.u2, s.wave.u2), 1e-5);
}

INSTANTIATE_TEST_SUITE_P(Presets, PresetSolve, ::testing::Values(Preset::weakly_coupled, Preset::spinor),
                         [](const auto& info) { return info.param == Preset::spinor ? "Spinor" : "WeaklyCoupled"; });

TEST(GroundState, DecoupledMatchesScalarNewton) {
    PresetFields pf;
    pf.c = CoefficientField::bump(1.0, kUnit);
    pf.f = CoefficientField::bump(1.0, kUnit);
    pf.grid = Grid(15.0, 12001);
    const auto p = preset_problem(Preset::weakly_coupled, pf);
    const auto s = solve_ground_state(p, SolverConfig{});
    const auto scalar = ts::scalar_fd_newton(p.a(), p.c(), p.grid(), s.wave.u1);
    EXPECT_LE(ts::sup_diff(scalar, s.wave.u1), 1e-5);
    EXPECT_LE(ts::sup_diff(s.wave.u1, s.wave.u2), 1e-12); // identical components
    EXPECT_GT(s.wave.norm(), 0.5);
}

TEST(GroundState, Deterministic) {
    const auto p = preset(Preset::spinor, 3001);
    const auto a = solve_ground_state(p, SolverConfig{});
    const auto b = solve_ground_state(p, SolverConfig{});
    EXPECT_EQ(a.wave.u1, b.wave.u1);
    EXPECT_EQ(a.wave.u2, b.wave.u2);
    EXPECT_EQ(a.diagnostics.iterations, b.diagnostics.iterations);
}

TEST(GroundState, PicardOnlyStillReportsDiagnostics) {
    const auto p = preset(Preset::weakly_coupled, 3001);
    SolverConfig cfg;
    cfg.newton_fallback = false;
    cfg.max_iter = 50;
    try {
        const auto s = solve_ground_state(p, cfg);
        EXPECT_EQ(s.diagnostics.method, Method::picard);
        EXPECT_LE(s.diagnostics.update_norm, cfg.tol);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::no_nontrivial_solution);
    }
}

TEST(ExploreSeeds, DistinctFixedPoints) {
    const auto p = preset(Preset::weakly_coupled, 3001);
    const auto all = explore_seeds(p, SolverConfig{});
    ASSERT_FALSE(all.empty());
    for (std::size_t i = 0; i < all.size(); ++i)
        for (std::size_t k = i + 1; k < all.size(); ++k) EXPECT_GT(distance(all[i].wave, all[k].wave), 1e-6);
    const auto first = solve_ground_state(p, SolverConfig{});
    EXPECT_EQ(all.front().wave.u1, first.wave.u1);
}

TEST(OddWave, SolvesAndIsOdd) {
    const auto p = odd_problem(32001);
    SolverConfig cfg;
    cfg.symmetry = Symmetry::odd;
    const auto s = solve(p, cfg);
    const std::size_t n = s.wave.size(), c = p.grid().center();
    EXPECT_EQ(s.wave.u1[c], 0.0);
    EXPECT_EQ(s.wave.u2[c], 0.0);
    double sym = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        sym = std::max({sym, std::abs(s.wave.u1[j] + s.wave.u1[n - 1 - j]), std::abs(s.wave.u2[j] + s.wave.u2[n - 1 - j])});
    EXPECT_LE(sym, 1e-8);
    EXPECT_LE(s.diagnostics.residual, 1e-6); // full-line residual of the extension
    EXPECT_GT(s.wave.u1[c + 1000], 0.0);

    const auto o = oracle_solve(p, s.wave);
    EXPECT_LE(ts::sup_diff(o.u.u1, s.wave.u1), 1e-5);
    EXPECT_LE(ts::sup_diff(o.u.u2, s.wave.u2), 1e-5);
}

TEST(OddWave, AdmissibilityErrors) {
    SolverConfig cfg;
    cfg.symmetry = Symmetry::odd;
    EXPECT_EQ(code_of([&] { (void)solve(preset(Preset::weakly_coupled, 1501), cfg); }),
              ErrorCode::support_contains_origin);
    PresetFields pf;
    pf.b = CoefficientField::bump(0.5, {0, 1});
    pf.c = CoefficientField::bump(1.0, {0, 1});
    EXPECT_EQ(code_of([&] { (void)solve(preset_problem(Preset::weakly_coupled, pf), cfg); }),
              ErrorCode::symmetry_violation);
}

TEST(Gmres, SolvesSmallNonsymmetricSystem) {
    const std::size_t n = 60;
    auto apply = [&](const std::vector<double>& x) {
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = 4 * x[i];
            if (i > 0) y[i] -= 1.3 * x[i - 1];
            if (i + 1 < n) y[i] -= 0.7 * x[i + 1];
        }
        return y;
    };
    std::vector<double> truth(n);
    for (std::size_t i = 0; i < n; ++i) truth[i] = std::sin(0.3 * static_cast<double>(i));
    const auto x = detail::gmres(apply, apply(truth), 1e-13, 20, 50);
    EXPECT_LE(ts::sup_diff(x, truth), 1e-11);
    EXPECT_EQ(detail::gmres(apply, std::vector<double>(n, 0.0), 1e-13, 20, 5), std::vector<double>(n, 0.0));
}
