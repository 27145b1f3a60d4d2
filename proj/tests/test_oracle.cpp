#include "cnls/oracle.hpp"
#include "cnls/solver.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace cnls;
namespace ts = testing_support;

namespace {

const Interval kUnit{-1, 1};

Problem preset(Preset kind, std::size_t N, double L = 15.0) {
    PresetFields pf;
    pf.b = CoefficientField::bump(0.5, kUnit);
    pf.c = CoefficientField::bump(1.0, kUnit);
    pf.e = CoefficientField::bump(0.5, kUnit);
    pf.f = CoefficientField::bump(1.0, kUnit);
    pf.grid = Grid(L, N);
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

TEST(OracleSolve, ZeroIsAFixedPoint) {
    for (auto kind : {Preset::weakly_coupled, Preset::spinor}) {
        const auto p = preset(kind, 1501);
        const auto r = oracle_solve(p, WavePair(p.grid().size()));
        EXPECT_EQ(r.u.norm(), 0.0);
        EXPECT_EQ(r.iterations, 1u);
    }
}

TEST(OracleSolve, PolishesSolverOutputQuickly) {
    const auto p = preset(Preset::weakly_coupled, 6001);
    const auto s = solve_ground_state(p, SolverConfig{});
    const auto r = oracle_solve(p, s.wave);
    EXPECT_LE(r.iterations, 5u);
    EXPECT_LE(distance(r.u, s.wave), 1e-5);
    EXPECT_LE(r.residual, 1e-8);
}

TEST(OracleSolve, HalfLineGivesOddProfile) {
    PresetFields pf;
    pf.b = CoefficientField::bumps({{{-2, -1}, 0.5}, {{1, 2}, 0.5}});
    pf.c = CoefficientField::bumps({{{-2, -1}, 1.0}, {{1, 2}, 1.0}});
    pf.e = pf.b;
    pf.f = pf.c;
    pf.grid = Grid(16.0, 6401);
    const auto p = preset_problem(Preset::weakly_coupled, pf);
    SolverConfig cfg;
    cfg.symmetry = Symmetry::odd;
    const auto s = solve(p, cfg);
    const auto half = oracle_solve(p, s.wave, Boundary::half_line);
    const auto full = oracle_solve(p, s.wave, Boundary::full_line);
    EXPECT_LE(distance(half.u, full.u), 1e-9);
    EXPECT_EQ(half.u.u1[p.grid().center()], 0.0);
}

TEST(OracleSolve, ManufacturedDiscreteSolutionRecovered) {
    EXPECT_LE(ts::manufactured_error(3001, true), 1e-8);
}

TEST(OracleSolve, ManufacturedRefinementIsSecondOrder) {
    const double e1 = ts::manufactured_error(1501, false);
    const double e2 = ts::manufactured_error(3001, false);
    const double e3 = ts::manufactured_error(6001, false);
    EXPECT_GE(e1 / e2, 3.6);
    EXPECT_LE(e1 / e2, 4.4);
    EXPECT_GE(e2 / e3, 3.6);
    EXPECT_LE(e2 / e3, 4.4);
}

TEST(OracleSolve, SingularJacobianAtFold) {
    // One interior node, h = 2: the first equation is 3 u - u^3 with slope 0 at u = 1.
    const auto z = CoefficientField::zero();
    const auto p = Problem::create(CoefficientField::constant(2.5), z, CoefficientField::bump(1.0, kUnit),
                                   CoefficientField::constant(1.0), z, z, Nonlinearity::decoupled_cubic(),
                                   Grid(2.0, 3), 0.0);
    WavePair init(3);
    init.u1[1] = 1.0;
    EXPECT_EQ(code_of([&] { (void)oracle_solve(p, init); }), ErrorCode::singular_jacobian);
}

TEST(OracleSolve, IterationLimitIsDivergence) {
    const auto p = preset(Preset::spinor, 1501);
    WavePair init(p.grid().size());
    for (std::size_t j = 1; j + 1 < init.size(); ++j) init.u1[j] = init.u2[j] = 40.0 * std::exp(-std::pow(p.grid().x(j), 2));
    OracleOptions opts;
    opts.max_iter = 2;
    EXPECT_EQ(code_of([&] { (void)oracle_solve(p, init, Boundary::full_line, nullptr, opts); }),
              ErrorCode::newton_divergence);
    EXPECT_EQ(code_of([&] { (void)oracle_solve(p, WavePair(5)); }), ErrorCode::invalid_grid);
}

TEST(JacobianCheck, ZeroWave) {
    for (auto kind : {Preset::weakly_coupled, Preset::spinor}) {
        const auto p = preset(kind, 1501);
        EXPECT_LE(jacobian_check(p, WavePair(p.grid().size())), 1e-8);
    }
}

TEST(JacobianCheck, RandomWaves) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> val(-2.0, 2.0);
    for (auto kind : {Preset::weakly_coupled, Preset::spinor}) {
        const auto p = preset(kind, 1501);
        WavePair u(p.grid().size());
        for (std::size_t j = 0; j < u.size(); ++j) {
            u.u1[j] = val(rng);
            u.u2[j] = val(rng);
        }
        EXPECT_LE(jacobian_check(p, u), 1e-6);
        EXPECT_LE(jacobian_check(p, u, Boundary::half_line), 1e-6);
    }
}

// Custom nonlinearity: the finite-difference Jacobian path still matches.
TEST(JacobianCheck, CustomNonlinearity) {
    const auto nl = Nonlinearity::custom([](double u, double v) { return u * u + 0.5 * v; },
                                         [](double u, double v) { return std::abs(u) + v * v; });
    const auto one = CoefficientField::bump(1.0, kUnit);
    const auto p = Problem::create(CoefficientField::constant(1.0), one, one, CoefficientField::constant(1.0), one,
                                   one, nl, Grid(15.0, 601));
    WavePair u(p.grid().size());
    for (std::size_t j = 0; j < u.size(); ++j) {
        u.u1[j] = 1 + std::sin(p.grid().x(j));
        u.u2[j] = 0.5 + std::cos(p.grid().x(j));
    }
    EXPECT_LE(jacobian_check(p, u), 1e-6);
}
