#pragma once

#include "chemofem/config.hpp"
#include "chemofem/io.hpp"
#include "chemofem/manufactured.hpp"
#include "chemofem/scheme.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace chemofem {

struct RunOutcome {
    std::size_t n_steps = 0;
    std::vector<std::string> files;
    std::vector<StepDiagnostics> diagnostics;
    double max_mass_drift = 0.0;   // relative, against level 0
    bool finite = true;            // no NaN/Inf in any level
    bool c_max_nonincreasing = true;  // after the first step
};

/// Runs a configuration, writing snapshots, diagnostics and the resolved config
/// into `cfg.output_dir`. `log` receives one line per snapshot.
inline RunOutcome run_config(const RunConfig& cfg, const std::function<void(const std::string&)>& log = {}) {
    const auto grid = cfg.time_grid();
    const auto params = cfg.params();
    auto disc = std::make_shared<Discretization>(build_rect_mesh(cfg.lx, cfg.ly, cfg.kx, cfg.ky));
    Scheme scheme(disc, params, grid.dt, cfg.quadrature_degree);
    State init = init_state(*disc, params, initial_data(cfg), cfg.init_mode);
    const StepForcing forcing = forcing_for(cfg);

    const bool vtk = std::find(cfg.formats.begin(), cfg.formats.end(), "vtk") != cfg.formats.end();
    const bool csv = std::find(cfg.formats.begin(), cfg.formats.end(), "csv") != cfg.formats.end();
    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);

    RunOutcome out;
    out.n_steps = grid.n_steps;
    {
        const auto path = (dir / "config.ini").string();
        auto f = detail::open_output(path);
        f << serialize_config(cfg);
        detail::check_written(f, path);
        out.files.push_back(path);
    }

    std::vector<std::size_t> snapshot_steps;
    for (double ts : cfg.snapshot_times) {
        snapshot_steps.push_back(static_cast<std::size_t>(std::llround(ts / grid.dt)));
    }
    std::unique_ptr<DiagnosticsWriter> diag;
    if (csv) {
        const auto path = (dir / "diagnostics.csv").string();
        diag = std::make_unique<DiagnosticsWriter>(path);
        out.files.push_back(path);
    }

    double mass0 = 0.0;
    auto observer = [&](const State& s, const StepDiagnostics& g) {
        if (s.m == 0) {
            mass0 = g.mass;
        } else {
            const bool forced = static_cast<bool>(forcing.g_n);
            if (!forced) {
                out.max_mass_drift = std::max(out.max_mass_drift, std::abs(g.mass - mass0) / std::abs(mass0));
            }
            if (s.m >= 2 && g.c_max > out.diagnostics.back().c_max) {
                out.c_max_nonincreasing = false;
            }
        }
        for (const auto* v : {&s.n, &s.c, &s.sigma, &s.u, &s.pi}) {
            for (double x : *v) {
                out.finite = out.finite && std::isfinite(x);
            }
        }
        out.diagnostics.push_back(g);
        if (diag) {
            diag->write(g);
        }
        if (vtk && std::find(snapshot_steps.begin(), snapshot_steps.end(), s.m) != snapshot_steps.end()) {
            char name[64];
            std::snprintf(name, sizeof name, "snapshot_%06zu.vtk", s.m);
            const auto path = (dir / name).string();
            write_vtk(make_snapshot(s, *disc), path);
            out.files.push_back(path);
            if (log) {
                log("t = " + detail::sig6(s.t) + " -> " + path);
            }
        }
    };
    run(scheme, std::move(init), grid.n_steps, forcing, false, observer);
    return out;
}

struct ConvergeOutcome {
    ErrorReport report;
    std::vector<std::string> files;
};

/// Manufactured-solution study on k x k meshes of the unit square.
inline ConvergeOutcome run_convergence(const RunConfig& cfg, const std::vector<std::size_t>& meshes,
                                       const std::function<void(const ConvergenceRow&)>& progress = {}) {
    if (cfg.initial != InitialPreset::Test2) {
        throw ConfigError("converge: only the test2 preset has a known exact solution");
    }
    if (meshes.empty()) {
        throw ConfigError("converge: no meshes given");
    }
    ConvergeOutcome out;
    out.report = convergence_study(meshes, cfg.dt, cfg.t_final, cfg.init_mode, cfg.params(), progress,
                                   cfg.quadrature_degree);
    out.files = write_csv_table(out.report, cfg.output_dir);
    return out;
}

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double tolerance = 0.0;
};

/// Invariant suite: mass conservation, skew-symmetry of the transport and
/// convection matrices, and preservation of the discrete constraints.
inline std::vector<CheckResult> run_checks(std::size_t k = 8, std::size_t steps = 5, unsigned seed = 1) {
    std::vector<CheckResult> results;
    const ModelParams unit;
    const double dt = 2e-4;
    auto disc = std::make_shared<Discretization>(build_rect_mesh(1.0, 1.0, k, k));
    const auto& d = *disc;
    const ExactSolution ex;
    Scheme scheme(disc, unit, dt);

    // Unforced: mass is constant.
    {
        auto traj = run(scheme, init_state(d, unit, ex.initial_data(), InitMode::EllipticProjection), steps, {}, true);
        const double m0 = mass_of_eta(traj.states.front(), d);
        double drift = 0.0;
        double div = 0.0, mean_n = 0.0, mean_pi = 0.0, sigma_bc = 0.0, u_bc = 0.0;
        for (const auto& s : traj.states) {
            drift = std::max(drift, std::abs(mass_of_eta(s, d) - m0) / std::abs(m0));
            if (s.m == 0) continue;
            div = std::max(div, max_divergence_residual(s, d));
            mean_n = std::max(mean_n, std::abs(d.integral_p1(std::span(s.n).first(d.mesh().n_nodes()))));
            mean_pi = std::max(mean_pi, std::abs(d.integral_p1(std::span(s.pi).first(d.mesh().n_nodes()))));
            for (std::size_t i : d.layout_sigma().constrained_dofs) sigma_bc = std::max(sigma_bc, std::abs(s.sigma[i]));
            for (std::size_t i : d.layout_u().constrained_dofs) u_bc = std::max(u_bc, std::abs(s.u[i]));
        }
        results.push_back({"mass_conservation", drift <= 1e-10, drift, 1e-10});
        results.push_back({"discrete_incompressibility", div <= 1e-9, div, 1e-9});
        results.push_back({"zero_mean_n", mean_n <= 1e-12, mean_n, 1e-12});
        results.push_back({"zero_mean_pressure", mean_pi <= 1e-12, mean_pi, 1e-12});
        results.push_back({"sigma_normal_trace", sigma_bc == 0.0, sigma_bc, 0.0});
        results.push_back({"velocity_no_slip", u_bc == 0.0, u_bc, 0.0});
    }
    // Forced: mass changes by dt * integral(g_n).
    {
        const auto r = run_manufactured(k, dt, dt * static_cast<double>(steps), InitMode::EllipticProjection, unit);
        results.push_back({"mass_balance_forced", r.mass_balance_defect <= 1e-10, r.mass_balance_defect, 1e-10});
    }
    // Skew-symmetry for random velocities.
    {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        double worst = 0.0;
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<double> v(d.layout_u().n_dofs);
            for (double& x : v) x = U(rng);
            const VectorField vel(DiscreteField{&d.layout_u(), v});
            for (const auto& [N, n] : {std::pair{assemble_skew_A(d.mesh(), d.layout_c(), vel), d.layout_c().n_dofs},
                                       std::pair{assemble_skew_B(d.mesh(), d.layout_u(), vel), d.layout_u().n_dofs}}) {
                std::vector<double> x(n);
                for (double& xi : x) xi = U(rng);
                const auto Nx = N.multiply(x);
                double q = 0.0;
                for (std::size_t i = 0; i < n; ++i) q += x[i] * Nx[i];
                const double nx = norm2(x);
                worst = std::max(worst, std::abs(q) / (N.frobenius_norm() * nx * nx));
            }
        }
        results.push_back({"skew_symmetry", worst <= 1e-12, worst, 1e-12});
    }
    return results;
}

} // namespace chemofem
