// Acceptance suite: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.
#include "chemofem/driver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

using namespace chemofem;

namespace {

int g_failures = 0;

void report(int id, bool ok, const std::string& what) {
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

// Published values, meshes 10..50.
struct Published {
    const char* name;
    double linf_l2[5];
    double order_linf_l2[4];
    double l2_h1[5];
    double order_l2_h1[4];
    double linf_h1[5];
    double order_linf_h1[4];
};

constexpr double kUH1[5] = {2.3353, 1.1882, 7.9477e-1, 5.9675e-1, 4.7765e-1};
constexpr double kUH1Order[4] = {0.9747, 0.9920, 0.9960, 0.9976};

const Published kTables[4] = {
    {"eta",
     {5.7265e-2, 1.4350e-2, 6.3060e-3, 3.4829e-3, 2.1757e-3},
     {1.9966, 2.0279, 2.0635, 2.1085},
     {1.1682e-1, 5.7520e-2, 3.8242e-2, 2.8656e-2, 2.2915e-2},
     {1.0223, 1.0067, 1.0031, 1.0017},
     {},
     {}},
    {"c",
     {3.5731e-2, 8.9904e-3, 4.0004e-3, 2.2512e-3, 1.4410e-3},
     {1.9907, 1.9971, 1.9986, 1.9991},
     {1.1338e-1, 5.7106e-2, 3.8126e-2, 2.8610e-2, 2.2894e-2},
     {0.9895, 0.9964, 0.9981, 0.9989},
     {},
     {}},
    {"u1",
     {4.1118e-2, 1.0106e-2, 4.4569e-3, 2.4902e-3, 1.5822e-3},
     {2.0245, 2.0192, 2.0234, 2.0324},
     {1.5654e-1, 7.7874e-2, 5.1820e-2, 3.8827e-2, 3.1043e-2},
     {1.0074, 1.0045, 1.0034, 1.0027},
     {kUH1[0], kUH1[1], kUH1[2], kUH1[3], kUH1[4]},
     {kUH1Order[0], kUH1Order[1], kUH1Order[2], kUH1Order[3]}},
    {"u2",
     {4.1175e-2, 1.0125e-2, 4.4658e-3, 2.4952e-3, 1.5855e-3},
     {2.0238, 2.0190, 2.0232, 2.0322},
     {1.5655e-1, 7.7875e-2, 5.1821e-2, 3.8827e-2, 3.1043e-2},
     {1.0075, 1.0046, 1.0034, 1.0027},
     {kUH1[0], kUH1[1], kUH1[2], kUH1[3], kUH1[4]},
     {kUH1Order[0], kUH1Order[1], kUH1Order[2], kUH1Order[3]}},
};

void convergence_criteria() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = convergence_study({10, 20, 30, 40, 50}, 2e-4, 0.01, InitMode::EllipticProjection, ModelParams{},
                                       [](const ConvergenceRow& r) {
                                           std::printf("  converge: k=%zu done\n", r.k);
                                           std::fflush(stdout);
                                       });
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const VariableTable* tables[4] = {&rep.eta, &rep.c, &rep.u1, &rep.u2};

    for (int v = 0; v < 4; ++v) {
        std::printf("  %-4s", kTables[v].name);
        for (const auto& r : tables[v]->rows) std::printf(" %.4e", r.norms.linf_l2);
        std::printf(" | orders");
        for (std::size_t i = 1; i < 5; ++i) std::printf(" %.4f", tables[v]->order_linf_l2(i));
        std::printf("\n");
    }

    // 1: l_inf(L2) orders.
    bool ok1 = true;
    double worst_dev = 0.0, min_finest = 1e9;
    for (int v = 0; v < 4; ++v) {
        for (std::size_t i = 1; i < 5; ++i) {
            const double dev = std::abs(tables[v]->order_linf_l2(i) - kTables[v].order_linf_l2[i - 1]);
            worst_dev = std::max(worst_dev, dev);
            ok1 = ok1 && dev <= 0.25;
        }
        min_finest = std::min(min_finest, tables[v]->order_linf_l2(4));
    }
    ok1 = ok1 && min_finest >= 1.85;
    report(1, ok1,
           fmt("l_inf(L2) orders: max deviation from published %.4f (<= 0.25), min finest-pair order %.4f (>= 1.85), "
               "study took %.0f s",
               worst_dev, min_finest, secs));

    // 2: H1 orders at the finest pair.
    bool ok2 = true;
    double lo = 1e9, hi = -1e9;
    for (int v = 0; v < 4; ++v) {
        std::vector<double> orders{tables[v]->order_l2_h1(4)};
        if (tables[v]->has_linf_h1) orders.push_back(tables[v]->order_linf_h1(4));
        for (double o : orders) {
            lo = std::min(lo, o);
            hi = std::max(hi, o);
            ok2 = ok2 && o >= 0.90 && o <= 1.10;
        }
    }
    report(2, ok2, fmt("H1 orders at the finest pair lie in [%.4f, %.4f] (required within [0.90, 1.10])", lo, hi));

    // 3: magnitudes within a factor of two.
    bool ok3 = true;
    double worst_ratio = 1.0;
    for (int v = 0; v < 4; ++v) {
        for (std::size_t i = 0; i < 5; ++i) {
            for (double ratio : {tables[v]->rows[i].norms.linf_l2 / kTables[v].linf_l2[i],
                                 tables[v]->rows[i].norms.l2_h1 / kTables[v].l2_h1[i]}) {
                const double r = std::max(ratio, 1.0 / ratio);
                worst_ratio = std::max(worst_ratio, r);
                ok3 = ok3 && r <= 2.0;
            }
        }
    }
    report(3, ok3, fmt("error magnitudes within a factor %.4f of the published tables (<= 2)", worst_ratio));
}

void mass_criterion() {
    // Gravity-driven run, 30 steps at dt = 1e-5 on the 80x40 mesh.
    RunConfig cfg = test1_config();
    cfg.output_dir = (std::filesystem::temp_directory_path() / "chemofem_acceptance_test1").string();
    const auto t1 = run_config(cfg);
    std::printf("  test1: max c_h per snapshot level:");
    for (const auto& g : t1.diagnostics)
        if (g.m % 6 == 0) std::printf(" t=%.0e:%.4f", g.t, g.c_max);
    std::printf("\n  test1 (soft diagnostic): max c_h non-increasing after the first step: %s\n",
                t1.c_max_nonincreasing ? "yes" : "no");
    std::printf("  test1: all fields finite: %s\n", t1.finite ? "yes" : "no");

    // Manufactured data without forcing, 50 steps on 20x20.
    auto disc = std::make_shared<Discretization>(build_rect_mesh(1, 1, 20, 20));
    const ModelParams unit;
    const Scheme scheme(disc, unit, 2e-4);
    const auto traj = run(scheme, init_state(*disc, unit, ExactSolution{}.initial_data(), InitMode::EllipticProjection),
                          50, {}, false);
    double drift2 = 0.0;
    for (const auto& g : traj.diagnostics)
        drift2 = std::max(drift2, std::abs(g.mass - traj.diagnostics.front().mass) / traj.diagnostics.front().mass);

    // Forced: mass changes by exactly dt * integral(g_n).
    const auto forced = run_manufactured(20, 2e-4, 0.01, InitMode::EllipticProjection, unit);

    const bool ok = t1.finite && t1.max_mass_drift <= 1e-10 && drift2 <= 1e-10 && forced.mass_balance_defect <= 1e-10;
    report(4, ok,
           fmt("relative mass drift: test1 %.2e, test2 unforced %.2e, test2 forced balance defect %.2e (<= 1e-10)",
               t1.max_mass_drift, drift2, forced.mass_balance_defect));
}

void solvability_criterion() {
    int failures = 0, cases = 0;
    double worst = 0.0;
    for (double dt : {1e-5, 1e-4, 1e-3, 1e-2}) {
        for (std::size_t k : {5, 10, 20}) {
            ++cases;
            RunConfig cfg = test1_config();
            cfg.kx = cfg.ky = k;
            auto disc = std::make_shared<Discretization>(build_rect_mesh(cfg.lx, cfg.ly, k, k));
            try {
                const Scheme scheme(disc, cfg.params(), dt);
                const auto traj =
                    run(scheme, init_state(*disc, cfg.params(), initial_data(cfg), cfg.init_mode), 3, {}, false);
                for (const auto& r : traj.reports)
                    for (const auto* s : {&r.n, &r.sigma, &r.c, &r.u}) worst = std::max(worst, s->residual_norm / s->tolerance);
            } catch (const std::exception& e) {
                ++failures;
                std::printf("  dt=%g k=%zu failed: %s\n", dt, k, e.what());
            }
        }
    }
    report(5, failures == 0 && worst <= 1.0,
           fmt("%.0f of %.0f cases solved, worst residual / scaled tolerance %.2e (<= 1)", cases - failures, cases, worst));
}

void skew_criterion() {
    const auto m = build_rect_mesh(1, 1, 10, 10);
    const auto Lc = build_layout(m, SpaceKind::ScalarP1);
    const auto Lu = build_layout(m, SpaceKind::VelocityMini);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    auto random = [&](std::size_t n) {
        std::vector<double> v(n);
        for (double& x : v) x = U(rng);
        return v;
    };
    double worst = 0.0;
    for (int f = 0; f < 20; ++f) {
        const auto v = random(Lu.n_dofs);
        const VectorField vel(DiscreteField{&Lu, v});
        for (const auto& N : {assemble_skew_A(m, Lc, vel), assemble_skew_B(m, Lu, vel)}) {
            const double nf = N.frobenius_norm();
            for (int k = 0; k < 100; ++k) {
                const auto x = random(N.rows());
                const auto Nx = N.multiply(x);
                double q = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) q += x[i] * Nx[i];
                const double nx = norm2(x);
                worst = std::max(worst, std::abs(q) / (nf * nx * nx));
            }
        }
    }
    report(6, worst <= 1e-12, fmt("max |x^T N x| / (|N|_F |x|^2) = %.2e over 20 x 100 samples (<= 1e-12)", worst));
}

void incompressibility_criterion() {
    const auto r = run_manufactured(20, 2e-4, 0.01, InitMode::EllipticProjection);
    report(7, r.max_divergence <= 1e-9,
           fmt("max over steps and pressure basis of |(psi, div u_h)| = %.2e (<= 1e-9)", r.max_divergence));
}

// Fourth-order differences of the primitive exact fields.
template <class F>
double dd(F&& f, Vec2 p, double t, int dir) {
    const double h = 1e-3;
    auto g = [&](double s) {
        return dir == 0 ? f(Vec2{p.x + s, p.y}, t) : dir == 1 ? f(Vec2{p.x, p.y + s}, t) : f(p, t + s);
    };
    return (-g(2 * h) + 8 * g(h) - 8 * g(-h) + g(-2 * h)) / (12 * h);
}
template <class F>
double lap(F&& f, Vec2 p, double t) {
    const double h = 1e-3;
    auto gx = [&](double s) { return f(Vec2{p.x + s, p.y}, t); };
    auto gy = [&](double s) { return f(Vec2{p.x, p.y + s}, t); };
    auto d2 = [&](auto& g) { return (-g(2 * h) + 16 * g(h) - 30 * g(0) + 16 * g(-h) - g(-2 * h)) / (12 * h * h); };
    return d2(gx) + d2(gy);
}

void forcing_criterion() {
    ModelParams P;
    P.chi = 1.7;
    P.D_n = 0.6;
    P.D_c = 1.3;
    P.D_u = 0.8;
    P.rho = 1.4;
    P.gamma = 2.2;
    P.grad_phi = VectorFunction::constant({0.5, -3.0});
    const ManufacturedForcing F(P);
    auto eta = [](Vec2 p, double t) { return exact::eta(p, t); };
    auto c = [](Vec2 p, double t) { return exact::c(p, t); };
    auto pr = [](Vec2 p, double t) { return exact::pressure(p, t); };
    auto u1 = [](Vec2 p, double t) { return exact::u(p, t).x; };
    auto u2 = [](Vec2 p, double t) { return exact::u(p, t).y; };
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const Vec2 x{U(rng), U(rng)};
        const double t = 0.01 * U(rng);
        const Vec2 u = exact::u(x, t);
        auto fx = [&](Vec2 p, double s) { return eta(p, s) * dd(c, p, s, 0); };
        auto fy = [&](Vec2 p, double s) { return eta(p, s) * dd(c, p, s, 1); };
        const double gn = dd(eta, x, t, 2) + u.x * dd(eta, x, t, 0) + u.y * dd(eta, x, t, 1) - P.D_n * lap(eta, x, t) +
                          P.chi * (dd(fx, x, t, 0) + dd(fy, x, t, 1));
        const double gc = dd(c, x, t, 2) + u.x * dd(c, x, t, 0) + u.y * dd(c, x, t, 1) - P.D_c * lap(c, x, t) +
                          P.gamma * eta(x, t) * c(x, t);
        const Vec2 gphi = P.grad_phi.value(x, t);
        const double gu1 = dd(u1, x, t, 2) + u.x * dd(u1, x, t, 0) + u.y * dd(u1, x, t, 1) -
                           P.D_u / P.rho * lap(u1, x, t) + dd(pr, x, t, 0) / P.rho - eta(x, t) * gphi.x / P.rho;
        const double gu2 = dd(u2, x, t, 2) + u.x * dd(u2, x, t, 0) + u.y * dd(u2, x, t, 1) -
                           P.D_u / P.rho * lap(u2, x, t) + dd(pr, x, t, 1) / P.rho - eta(x, t) * gphi.y / P.rho;
        auto gcf = [&](Vec2 p, double s) { return F.g_c(p, s); };
        const Vec2 gs = F.g_sigma(x, t);
        for (double d : {F.g_n(x, t) - gn, F.g_c(x, t) - gc, F.g_u(x, t).x - gu1, F.g_u(x, t).y - gu2,
                         gs.x - dd(gcf, x, t, 0), gs.y - dd(gcf, x, t, 1)})
            worst = std::max(worst, std::abs(d));
    }
    report(8, worst <= 1e-6, fmt("max |closed form - finite-difference residual| = %.2e at 100 points (<= 1e-6)", worst));
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

void quadrature_criterion() {
    Mesh ref;
    ref.nodes = {{0, 0}, {1, 0}, {0, 1}};
    ref.triangles = {{0, 1, 2}};
    const auto g = element_geometry(ref, 0);
    double worst = 0.0;
    for (int d = 1; d <= 8; ++d) {
        const auto rule = triangle_rule(d);
        for (int a = 0; a <= d; ++a) {
            for (int b = 0; a + b <= d; ++b) {
                const double exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                const double q = integrate(rule, g, [&](Vec2 p) { return std::pow(p.x, a) * std::pow(p.y, b); });
                worst = std::max(worst, std::abs(q - exact) / exact);
            }
        }
    }
    report(9, worst <= 1e-13, fmt("max relative monomial error through degree 8 = %.2e (<= 1e-13)", worst));
}

void projection_criterion() {
    const Discretization d(build_rect_mesh(1, 1, 20, 20));
    const ModelParams unit;
    const State s = init_state(d, unit, ExactSolution{}.initial_data(), InitMode::EllipticProjection);
    const double div = max_divergence_residual(s, d);
    const double cbar = 7.25;
    InitialData constant{ScalarFunction::constant(1.0), ScalarFunction::constant(cbar), VectorFunction::constant({0, 0}),
                         VectorFunction::constant({0, 0}), std::nullopt};
    const State sc = init_state(d, unit, constant, InitMode::EllipticProjection);
    double err = 0.0;
    for (double v : sc.c) err = std::max(err, std::abs(v - cbar) / cbar);
    report(10, div <= 1e-10 && err <= 1e-13,
           fmt("Stokes projection max |(psi, div u0_h)| = %.2e (<= 1e-10); constant projection error %.2e (<= 1e-13)",
               div, err));
}

} // namespace

int main() {
    convergence_criteria();
    mass_criterion();
    solvability_criterion();
    skew_criterion();
    incompressibility_criterion();
    forcing_criterion();
    quadrature_criterion();
    projection_criterion();
    std::printf("%d criteria failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
