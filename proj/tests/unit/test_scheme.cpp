#include "chemofem/config.hpp"
#include "chemofem/manufactured.hpp"
#include "chemofem/scheme.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace chemofem;

namespace {

std::shared_ptr<Discretization> unit_square(std::size_t k) {
    return std::make_shared<Discretization>(build_rect_mesh(1.0, 1.0, k, k));
}

InitialData constant_data(double eta, double c) {
    return {ScalarFunction::constant(eta), ScalarFunction::constant(c), VectorFunction::constant({0, 0}),
            VectorFunction::constant({0, 0}), std::nullopt};
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace

TEST(TimeGrid, IntegerStepCount) {
    const auto g = TimeGrid::from_final_time(0.01, 2e-4);
    EXPECT_EQ(g.n_steps, 50u);
    EXPECT_EQ(TimeGrid::from_final_time(30e-5, 1e-5).n_steps, 30u);
    EXPECT_THROW(TimeGrid::from_final_time(0.01, 3e-4), InvalidArgument);
    EXPECT_THROW(TimeGrid::from_final_time(0.01, 0.0), InvalidArgument);
}

TEST(ModelParams, RejectsNonPositive) {
    ModelParams p;
    EXPECT_NO_THROW(p.validate());
    p.D_u = 0.0;
    EXPECT_THROW(p.validate(), InvalidArgument);
    ModelParams q;
    q.rho = -1.0;
    EXPECT_THROW(Scheme(unit_square(2), q, 1e-3), InvalidArgument);
    EXPECT_THROW(Scheme(unit_square(2), ModelParams{}, 0.0), InvalidArgument);
    EXPECT_THROW(Scheme(unit_square(2), ModelParams{}, 1e-3, 9), InvalidArgument);
}

TEST(Mass, OfConstantFluctuation) {
    const Discretization d(build_rect_mesh(2.0, 1.0, 3, 2));
    State s;
    s.alpha = 3.0;
    s.n.assign(d.layout_n().n_dofs, 0.0);
    EXPECT_NEAR(mass_of_eta(s, d), 6.0, 1e-14);
}

TEST(Init, ConstantChemicalIsReproduced) {
    const auto d = unit_square(6);
    for (auto mode : {InitMode::EllipticProjection, InitMode::Nodal}) {
        const State s = init_state(*d, ModelParams{}, constant_data(2.0, 4.25), mode);
        for (double c : s.c) EXPECT_NEAR(c, 4.25, 1e-13);
        EXPECT_NEAR(s.alpha, 2.0, 1e-14);
        EXPECT_LE(max_abs(s.n), 1e-13);
    }
}

TEST(Init, StokesProjectionIsDiscretelyDivergenceFree) {
    const auto d = unit_square(10);
    const ExactSolution ex;
    const State s = init_state(*d, ModelParams{}, ex.initial_data(), InitMode::EllipticProjection);
    EXPECT_LE(max_divergence_residual(s, *d), 1e-10);
    for (std::size_t k : d->layout_u().constrained_dofs) EXPECT_EQ(s.u[k], 0.0);
    for (std::size_t k : d->layout_sigma().constrained_dofs) EXPECT_EQ(s.sigma[k], 0.0);
    EXPECT_NEAR(d->integral_p1(std::span(s.pi).first(d->mesh().n_nodes())), 0.0, 1e-12);
    EXPECT_NEAR(d->integral_p1(std::span(s.n).first(d->mesh().n_nodes())), 0.0, 1e-12);
}

TEST(Init, EllipticAndNodalDifferAtSecondOrder) {
    const ExactSolution ex;
    std::vector<double> diff;
    for (std::size_t k : {10, 20, 40}) {
        const auto d = unit_square(k);
        const auto a = init_state(*d, ModelParams{}, ex.initial_data(), InitMode::EllipticProjection);
        const auto b = init_state(*d, ModelParams{}, ex.initial_data(), InitMode::Nodal);
        std::vector<double> e(a.c.size());
        for (std::size_t i = 0; i < e.size(); ++i) e[i] = a.c[i] - b.c[i];
        diff.push_back(std::sqrt(oracle::quad_form(d->mass_p1(), e)));
    }
    EXPECT_GE(std::log2(diff[0] / diff[1]), 2.0 - 0.05);
    EXPECT_GE(std::log2(diff[1] / diff[2]), 2.0 - 0.05);
}

TEST(Step, ZeroStateStaysZero) {
    const auto d = unit_square(5);
    ModelParams p;
    p.grad_phi = VectorFunction::constant({3.0, -1000.0});
    const Scheme scheme(d, p, 1e-3);
    const State s0 = init_state(*d, p, constant_data(0.0, 0.0), InitMode::EllipticProjection);
    auto traj = run(scheme, s0, 3);
    for (const auto& s : traj.states) {
        EXPECT_EQ(max_abs(s.n), 0.0);
        EXPECT_EQ(max_abs(s.c), 0.0);
        EXPECT_EQ(max_abs(s.sigma), 0.0);
        EXPECT_EQ(max_abs(s.u), 0.0);
        EXPECT_EQ(max_abs(s.pi), 0.0);
    }
}

TEST(Step, ConstantChemicalDecaysGeometrically) {
    const auto d = unit_square(6);
    ModelParams p;
    p.gamma = 2.0;
    const double alpha = 1.5, cbar = 3.0, dt = 1e-2;
    const Scheme scheme(d, p, dt);
    State s = init_state(*d, p, constant_data(alpha, cbar), InitMode::EllipticProjection);
    double expected = cbar;
    for (int m = 1; m <= 5; ++m) {
        s = scheme.step(s);
        expected *= 1.0 - p.gamma * alpha * dt;
        const auto [lo, hi] = std::minmax_element(s.c.begin(), s.c.end());
        EXPECT_LE(*hi - *lo, 1e-12);
        EXPECT_NEAR(s.c[0], expected, 1e-12 * cbar);
        EXPECT_LE(max_abs(s.n), 1e-12);
        EXPECT_LE(max_abs(s.u), 1e-12);
        EXPECT_LE(max_abs(s.sigma), 1e-12);
    }
}

TEST(Step, ManufacturedStepMeetsSolverTolerances) {
    const auto d = unit_square(10);
    const ModelParams p;
    const Scheme scheme(d, p, 2e-4);
    const ExactSolution ex;
    StepReport rep;
    const State s1 =
        scheme.step(init_state(*d, p, ex.initial_data(), InitMode::EllipticProjection),
                    ManufacturedForcing(p).step_forcing(), &rep);
    for (const auto* r : {&rep.n, &rep.sigma, &rep.c, &rep.u}) EXPECT_LE(r->residual_norm, r->tolerance);
    EXPECT_EQ(s1.m, 1u);
    EXPECT_NEAR(s1.t, 2e-4, 1e-18);
    EXPECT_LE(max_divergence_residual(s1, *d), 1e-9);
}

TEST(Run, ZeroStepsReturnsInitialState) {
    const auto d = unit_square(3);
    const Scheme scheme(d, ModelParams{}, 1e-3);
    const State s0 = init_state(*d, ModelParams{}, constant_data(1.0, 1.0), InitMode::Nodal);
    const auto traj = run(scheme, s0, 0);
    ASSERT_EQ(traj.states.size(), 1u);
    EXPECT_EQ(traj.states[0].c, s0.c);
    EXPECT_EQ(traj.diagnostics.size(), 1u);
    EXPECT_TRUE(traj.reports.empty());
}

TEST(Run, UnforcedMassIsConserved) {
    const auto d = unit_square(8);
    const ModelParams p;
    const Scheme scheme(d, p, 2e-4);
    const ExactSolution ex;
    const auto traj = run(scheme, init_state(*d, p, ex.initial_data(), InitMode::EllipticProjection), 10);
    const double m0 = traj.diagnostics.front().mass;
    for (const auto& g : traj.diagnostics) EXPECT_LE(std::abs(g.mass - m0), 1e-10 * std::abs(m0));
}

TEST(Run, ShortGravityRunStaysFiniteAndConservative) {
    auto cfg = test1_config();
    cfg.kx = 20;
    cfg.ky = 10;
    auto d = std::make_shared<Discretization>(build_rect_mesh(cfg.lx, cfg.ly, cfg.kx, cfg.ky));
    const Scheme scheme(d, cfg.params(), cfg.dt);
    const auto traj = run(scheme, init_state(*d, cfg.params(), initial_data(cfg), cfg.init_mode), 4);
    const double m0 = traj.diagnostics.front().mass;
    for (const auto& s : traj.states)
        for (const auto* v : {&s.n, &s.c, &s.sigma, &s.u, &s.pi})
            for (double x : *v) ASSERT_TRUE(std::isfinite(x));
    for (const auto& g : traj.diagnostics) EXPECT_LE(std::abs(g.mass - m0), 1e-10 * m0);
}

TEST(Run, Deterministic) {
    const auto d = unit_square(5);
    const ModelParams p;
    const Scheme scheme(d, p, 1e-3);
    const ExactSolution ex;
    const auto f = ManufacturedForcing(p).step_forcing();
    const State s0 = init_state(*d, p, ex.initial_data(), InitMode::EllipticProjection);
    const auto a = run(scheme, s0, 3, f).states.back();
    const auto b = run(scheme, s0, 3, f).states.back();
    EXPECT_EQ(a.n, b.n);
    EXPECT_EQ(a.c, b.c);
    EXPECT_EQ(a.sigma, b.sigma);
    EXPECT_EQ(a.u, b.u);
    EXPECT_EQ(a.pi, b.pi);
}

TEST(Run, ObserverSeesEveryLevel) {
    const auto d = unit_square(3);
    const Scheme scheme(d, ModelParams{}, 1e-3);
    std::vector<std::size_t> seen;
    run(scheme, init_state(*d, ModelParams{}, constant_data(1.0, 1.0), InitMode::Nodal), 4, {}, false,
        [&](const State& s, const StepDiagnostics& g) {
            EXPECT_EQ(s.m, g.m);
            seen.push_back(s.m);
        });
    EXPECT_EQ(seen, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
}
