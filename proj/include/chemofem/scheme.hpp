#pragma once

#include "chemofem/assembly.hpp"
#include "chemofem/core.hpp"
#include "chemofem/fem_spaces.hpp"
#include "chemofem/fields.hpp"
#include "chemofem/mesh.hpp"
#include "chemofem/quadrature.hpp"
#include "chemofem/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace chemofem {

/// Physical coefficients of the chemotaxis-fluid model.
struct ModelParams {
    double chi = 1.0;    // chemotactic sensitivity
    double D_n = 1.0;    // cell diffusion
    double D_c = 1.0;    // chemical diffusion
    double D_u = 1.0;    // viscosity
    double rho = 1.0;    // fluid density
    double gamma = 1.0;  // consumption rate
    VectorFunction grad_phi = VectorFunction::constant({0.0, 0.0});

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw InvalidArgument(std::string("ModelParams: ") + name + " must be positive");
            }
        };
        positive(chi, "chi");
        positive(D_n, "D_n");
        positive(D_c, "D_c");
        positive(D_u, "D_u");
        positive(rho, "rho");
        positive(gamma, "gamma");
    }
};

/// Uniform partition of [0, T].
struct TimeGrid {
    double dt = 0.0;
    std::size_t n_steps = 0;

    double final_time() const { return dt * static_cast<double>(n_steps); }
    double time(std::size_t m) const { return dt * static_cast<double>(m); }

    /// Requires T/dt to be an integer within 1e-9.
    static TimeGrid from_final_time(double T, double dt) {
        if (!(dt > 0.0)) {
            throw InvalidArgument("TimeGrid: dt must be positive");
        }
        if (T < 0.0) {
            throw InvalidArgument("TimeGrid: final time must be non-negative");
        }
        const double ratio = T / dt;
        const double steps = std::round(ratio);
        if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
            throw InvalidArgument("TimeGrid: dt does not divide the final time");
        }
        return {dt, static_cast<std::size_t>(steps)};
    }
};

/// Optional analytic sources added to each equation, evaluated at t_m.
///
/// The sigma equation receives (g_sigma, sbar) when g_sigma is set, otherwise
/// -(g_c, div sbar) when g_c is set (the same functional for g_sigma = grad g_c,
/// since sbar . nu = 0 on the boundary).
struct StepForcing {
    std::function<double(Vec2, double)> g_n;
    std::function<double(Vec2, double)> g_c;
    std::function<Vec2(Vec2, double)> g_sigma;
    std::function<Vec2(Vec2, double)> g_u;

    bool empty() const { return !g_n && !g_c && !g_sigma && !g_u; }
};

/// Coefficient vectors of one time level.
///
/// eta_h = n + alpha. Without a cell-density source alpha stays at its
/// initial value alpha_0 = mean(eta_0); a source g_n moves it by dt * mean(g_n).
struct State {
    std::size_t m = 0;
    double t = 0.0;
    double alpha = 0.0;
    std::vector<double> n;
    std::vector<double> c;
    std::vector<double> sigma;
    std::vector<double> u;
    std::vector<double> pi;
};

/// Analytic initial data. sigma0 should be grad c0; pi0 defaults to zero.
struct InitialData {
    ScalarFunction eta0;
    ScalarFunction c0;
    VectorFunction sigma0;
    VectorFunction u0;
    std::optional<ScalarFunction> pi0;
};

enum class InitMode { EllipticProjection, Nodal };

inline const char* to_string(InitMode m) { return m == InitMode::Nodal ? "nodal" : "elliptic"; }

struct StepReport {
    SolveReport n;
    SolveReport sigma;
    SolveReport c;
    SolveReport u;
};

/// Mesh, layouts and every time-independent matrix of the scheme.
class Discretization {
public:
    explicit Discretization(Mesh mesh)
        : mesh_(std::move(mesh)),
          n_(build_layout(mesh_, SpaceKind::ScalarP1, true)),
          c_(build_layout(mesh_, SpaceKind::ScalarP1)),
          sigma_(build_layout(mesh_, SpaceKind::VectorP1Sigma)),
          u_(build_layout(mesh_, SpaceKind::VelocityMini)),
          pi_(build_layout(mesh_, SpaceKind::PressureP1)) {
        mass_p1_ = assemble_mass(mesh_, c_);
        stiff_p1_ = assemble_stiffness(mesh_, c_, 1.0);
        mass_sigma_ = assemble_mass(mesh_, sigma_);
        divrot_ = assemble_divrot(mesh_, sigma_, 1.0);
        mass_u_ = assemble_mass(mesh_, u_);
        stiff_u_ = assemble_stiffness(mesh_, u_, 1.0);
        coupling_ = assemble_pressure_coupling(mesh_, u_, pi_);
        p1_integrals_ = p1_basis_integrals(mesh_);
    }

    const Mesh& mesh() const { return mesh_; }
    const DofLayout& layout_n() const { return n_; }
    const DofLayout& layout_c() const { return c_; }
    const DofLayout& layout_sigma() const { return sigma_; }
    const DofLayout& layout_u() const { return u_; }
    const DofLayout& layout_pi() const { return pi_; }

    const SparseMatrix& mass_p1() const { return mass_p1_; }
    const SparseMatrix& stiffness_p1() const { return stiff_p1_; }
    const SparseMatrix& mass_sigma() const { return mass_sigma_; }
    const SparseMatrix& divrot() const { return divrot_; }
    const SparseMatrix& mass_u() const { return mass_u_; }
    const SparseMatrix& stiffness_u() const { return stiff_u_; }
    /// G[i][j] = (psi_j, div v_i).
    const SparseMatrix& pressure_coupling() const { return coupling_; }
    const std::vector<double>& p1_integrals() const { return p1_integrals_; }

    /// Integral of a P1 function given by its vertex values.
    double integral_p1(std::span<const double> values) const {
        double s = 0.0;
        for (std::size_t i = 0; i < p1_integrals_.size(); ++i) {
            s += p1_integrals_[i] * values[i];
        }
        return s;
    }

private:
    Mesh mesh_;
    DofLayout n_, c_, sigma_, u_, pi_;
    SparseMatrix mass_p1_, stiff_p1_, mass_sigma_, divrot_, mass_u_, stiff_u_, coupling_;
    std::vector<double> p1_integrals_;
};

namespace detail {

inline std::vector<double> axpy(double a, std::span<const double> x, std::span<const double> y) {
    std::vector<double> out(y.begin(), y.end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += a * x[i];
    }
    return out;
}

inline void add_to(std::vector<double>& y, std::span<const double> x) {
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] += x[i];
    }
}

/// Velocity-pressure saddle system with unknowns [u, pi, mu]:
///   [ Auu       -scale*G  0 ] [u ]   [f]
///   [ G^T        0        p ] [pi] = [g]
///   [ 0          p^T      0 ] [mu]   [0]
/// with Dirichlet rows of the velocity replaced by the identity.
inline LinearSystem saddle_system(const Discretization& d, const SparseMatrix& Auu, double scale,
                                  std::vector<double> f, std::span<const double> g) {
    const std::size_t nu = d.layout_u().n_dofs;
    const std::size_t np = d.layout_pi().n_dofs;
    std::vector<Triplet> t = Auu.to_triplets();
    t.reserve(t.size() + 2 * d.pressure_coupling().nnz());
    for (const auto& e : d.pressure_coupling().to_triplets()) {
        t.push_back({e.row, nu + e.col, -scale * e.value});
        t.push_back({nu + e.col, e.row, e.value});
    }
    LinearSystem sys;
    sys.matrix = from_triplets(nu + np, nu + np, std::move(t));
    sys.rhs = std::move(f);
    sys.rhs.insert(sys.rhs.end(), g.begin(), g.end());
    append_constraint_row(sys, d.p1_integrals(), nu);
    constrain_dofs(sys, d.layout_u().constrained_dofs);
    return sys;
}

inline std::vector<double> gradient_load(const Discretization& d, const DofLayout& layout,
                                         const std::function<Vec2(Vec2)>& grad) {
    return assemble_vector(d.mesh(), layout, rule_degree8(),
                           [&](const QuadPoint& qp, const LocalBasis& b, std::vector<double>& Fe) {
                               const Vec2 gv = grad(qp.geom.point(qp.bary));
                               for (std::size_t i = 0; i < layout.n_local_scalar; ++i) {
                                   Fe[i] += qp.weight * dot(gv, b.phi[i].gradient);
                               }
                           });
}

} // namespace detail

/// Discrete initial state.
///
/// EllipticProjection: n, c, sigma by the H1-seminorm, H1 and div-rot-L2
/// projections; (u, pi) by the discrete Stokes projection with viscosity D_u.
/// Nodal: vertex interpolation with zero bubbles, n and pi shifted to zero
/// mean, constrained dofs set to zero.
inline State init_state(const Discretization& d, const ModelParams& params, const InitialData& data, InitMode mode) {
    const Mesh& mesh = d.mesh();
    State s;
    s.alpha = integrate_mesh(mesh, rule_degree8(), [&](Vec2 x) { return data.eta0.value(x, 0.0); }) / mesh.area();

    const ScalarFunction pi0 = data.pi0 ? *data.pi0 : ScalarFunction::constant(0.0);

    if (mode == InitMode::Nodal) {
        s.n = interpolate_scalar(mesh, d.layout_n(), data.eta0.value, 0.0);
        for (double& v : s.n) {
            v -= s.alpha;
        }
        const double mean_n = d.integral_p1(s.n) / mesh.area();
        for (double& v : s.n) {
            v -= mean_n;
        }
        s.c = interpolate_scalar(mesh, d.layout_c(), data.c0.value, 0.0);
        s.sigma = interpolate_vector(mesh, d.layout_sigma(), data.sigma0.value, 0.0);
        for (std::size_t k : d.layout_sigma().constrained_dofs) {
            s.sigma[k] = 0.0;
        }
        s.u = interpolate_vector(mesh, d.layout_u(), data.u0.value, 0.0);
        for (std::size_t k : d.layout_u().constrained_dofs) {
            s.u[k] = 0.0;
        }
        s.pi = interpolate_scalar(mesh, d.layout_pi(), pi0.value, 0.0);
        const double mean_pi = d.integral_p1(s.pi) / mesh.area();
        for (double& v : s.pi) {
            v -= mean_pi;
        }
        return s;
    }

    // n: (grad P n, grad nbar) = (grad n0, grad nbar), zero mean.
    {
        LinearSystem sys{d.stiffness_p1(),
                         detail::gradient_load(d, d.layout_n(), [&](Vec2 x) { return data.eta0.gradient(x, 0.0); })};
        sys = apply_constraints(std::move(sys), mesh, d.layout_n());
        auto x = solve(sys.matrix, sys.rhs).x;
        x.resize(d.layout_n().n_dofs);
        s.n = std::move(x);
    }
    // c: (grad P c, grad cbar) + (P c, cbar) = (grad c0, grad cbar) + (c0, cbar).
    {
        auto rhs = detail::gradient_load(d, d.layout_c(), [&](Vec2 x) { return data.c0.gradient(x, 0.0); });
        detail::add_to(rhs, assemble_load(mesh, d.layout_c(), [&](Vec2 x) { return data.c0.value(x, 0.0); }));
        LinearSystem sys{linear_combination(1.0, d.stiffness_p1(), 1.0, d.mass_p1()), std::move(rhs)};
        s.c = solve(sys.matrix, sys.rhs).x;
    }
    // sigma: (div, div) + (rot, rot) + (., .) projection under zero normal trace.
    {
        const auto& L = d.layout_sigma();
        const std::size_t nl = L.n_local_scalar;
        auto rhs = detail::assemble_vector(
            mesh, L, rule_degree8(), [&](const detail::QuadPoint& qp, const LocalBasis& b, std::vector<double>& Fe) {
                const Vec2 x = qp.geom.point(qp.bary);
                const Vec2 v = data.sigma0.value(x, 0.0);
                const Mat2 J = data.sigma0.jacobian(x, 0.0);
                const double div = J.divergence();
                const double rot = J.rot();
                for (std::size_t comp = 0; comp < 2; ++comp) {
                    const double vc = comp == 0 ? v.x : v.y;
                    for (std::size_t i = 0; i < nl; ++i) {
                        Fe[comp * nl + i] += qp.weight * (div * detail::div_of(b, comp, i) +
                                                          rot * detail::rot_of(b, comp, i) + vc * b.phi[i].value);
                    }
                }
            });
        LinearSystem sys{linear_combination(1.0, d.divrot(), 1.0, d.mass_sigma()), std::move(rhs)};
        sys = apply_constraints(std::move(sys), mesh, L);
        s.sigma = solve(sys.matrix, sys.rhs).x;
    }
    // (u, pi): discrete Stokes projection.
    {
        const auto& L = d.layout_u();
        const std::size_t nl = L.n_local_scalar;
        auto f = detail::assemble_vector(
            mesh, L, rule_degree8(), [&](const detail::QuadPoint& qp, const LocalBasis& b, std::vector<double>& Fe) {
                const Vec2 x = qp.geom.point(qp.bary);
                const Mat2 J = data.u0.jacobian(x, 0.0);
                const double p = pi0.value(x, 0.0);
                for (std::size_t comp = 0; comp < 2; ++comp) {
                    for (std::size_t i = 0; i < nl; ++i) {
                        Fe[comp * nl + i] += qp.weight * (params.D_u * dot(J.rows[comp], b.phi[i].gradient) -
                                                          p * detail::div_of(b, comp, i));
                    }
                }
            });
        const auto g = assemble_load(mesh, d.layout_pi(), [&](Vec2 x) { return data.u0.jacobian(x, 0.0).divergence(); });
        const SparseMatrix Auu = d.stiffness_u().scaled(params.D_u);
        auto sys = detail::saddle_system(d, Auu, 1.0, std::move(f), g);
        auto x = solve(sys.matrix, sys.rhs).x;
        const std::size_t nu = L.n_dofs;
        s.u.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(nu));
        s.pi.assign(x.begin() + static_cast<std::ptrdiff_t>(nu),
                    x.begin() + static_cast<std::ptrdiff_t>(nu + d.layout_pi().n_dofs));
    }
    return s;
}

/// Integral of eta_h = n_h + alpha over the domain (exact for P1).
inline double mass_of_eta(const State& s, const Discretization& d) {
    return d.integral_p1(s.n) + s.alpha * d.mesh().area();
}

/// The linear, semi-coupled first-order time integrator.
///
/// Each step solves four decoupled linear systems, in the order n, sigma, c,
/// then the velocity-pressure saddle system. All couplings use level m-1.
class Scheme {
public:
    /// `quadrature_degree` selects the rule for nonlinear terms and loads.
    Scheme(std::shared_ptr<const Discretization> disc, ModelParams params, double dt, int quadrature_degree = 8)
        : disc_(std::move(disc)), params_(std::move(params)), dt_(dt), rule_(triangle_rule(quadrature_degree)) {
        params_.validate();
        if (!(dt_ > 0.0)) {
            throw InvalidArgument("Scheme: dt must be positive");
        }
        const auto& d = *disc_;
        // The sigma operator is time independent: factor it once.
        LinearSystem sys{linear_combination(1.0 / dt_, d.mass_sigma(), params_.D_c, d.divrot()),
                         std::vector<double>(d.layout_sigma().n_dofs, 0.0)};
        sys = apply_constraints(std::move(sys), d.mesh(), d.layout_sigma());
        sigma_solver_ = std::make_unique<LuSolver>(sys.matrix);
    }

    const Discretization& discretization() const { return *disc_; }
    const ModelParams& params() const { return params_; }
    double dt() const { return dt_; }
    const TriangleRule& rule() const { return rule_; }

    State step(const State& prev, const StepForcing& forcing = {}, StepReport* report = nullptr) const {
        const auto& d = *disc_;
        const Mesh& mesh = d.mesh();
        const double dt = dt_;
        const double t = prev.t + dt;
        const auto& P = params_;

        const DiscreteField n_prev{&d.layout_n(), prev.n};
        const DiscreteField c_prev{&d.layout_c(), prev.c};
        const DiscreteField sigma_prev{&d.layout_sigma(), prev.sigma};
        const DiscreteField u_prev{&d.layout_u(), prev.u};

        State next;
        next.m = prev.m + 1;
        next.t = t;
        next.alpha = prev.alpha;
        if (forcing.g_n) {
            const double source = integrate_mesh(mesh, rule_, [&](Vec2 x) { return forcing.g_n(x, t); });
            next.alpha += dt * source / mesh.area();
        }
        StepReport local_report;

        const SparseMatrix transport = assemble_skew_A(mesh, d.layout_c(), VectorField(u_prev), rule_);

        // (a) cell density fluctuation n, zero mean through the multiplier.
        {
            SparseMatrix A = linear_combination(1.0 / dt, d.mass_p1(), P.D_n, d.stiffness_p1());
            A = linear_combination(1.0, A, 1.0, transport);
            auto rhs = d.mass_p1().multiply(prev.n);
            for (double& v : rhs) {
                v /= dt;
            }
            detail::add_to(rhs, assemble_chemo_rhs(mesh, d.layout_n(), ScalarField(n_prev), VectorField(sigma_prev),
                                                   P.chi, prev.alpha, rule_));
            if (forcing.g_n) {
                detail::add_to(rhs, assemble_load(mesh, d.layout_n(), [&](Vec2 x) { return forcing.g_n(x, t); }, rule_));
            }
            auto sys = apply_constraints(LinearSystem{std::move(A), std::move(rhs)}, mesh, d.layout_n());
            auto res = solve(sys.matrix, sys.rhs);
            res.x.resize(d.layout_n().n_dofs);
            next.n = std::move(res.x);
            local_report.n = res.report;
        }
        // (b) sigma, the gradient of the chemical.
        {
            auto rhs = d.mass_sigma().multiply(prev.sigma);
            for (double& v : rhs) {
                v /= dt;
            }
            detail::add_to(rhs, assemble_sigma_rhs(mesh, d.layout_sigma(), VectorField(u_prev), VectorField(sigma_prev),
                                                   ScalarField(n_prev), ScalarField(c_prev), P.gamma, prev.alpha, rule_));
            if (forcing.g_sigma) {
                detail::add_to(rhs, assemble_vector_load(mesh, d.layout_sigma(),
                                                         [&](Vec2 x) { return forcing.g_sigma(x, t); }, rule_));
            } else if (forcing.g_c) {
                const auto load =
                    assemble_divergence_load(mesh, d.layout_sigma(), [&](Vec2 x) { return forcing.g_c(x, t); }, rule_);
                for (std::size_t i = 0; i < rhs.size(); ++i) {
                    rhs[i] -= load[i];
                }
            }
            for (std::size_t k : d.layout_sigma().constrained_dofs) {
                rhs[k] = 0.0;
            }
            next.sigma = sigma_solver_->solve(rhs, &local_report.sigma);
        }
        // (c) chemical concentration.
        {
            SparseMatrix A = linear_combination(1.0 / dt, d.mass_p1(), P.D_c, d.stiffness_p1());
            A = linear_combination(1.0, A, 1.0, transport);
            auto rhs = d.mass_p1().multiply(prev.c);
            for (double& v : rhs) {
                v /= dt;
            }
            detail::add_to(rhs, assemble_consumption_rhs(mesh, d.layout_c(), ScalarField(n_prev), ScalarField(c_prev),
                                                         P.gamma, prev.alpha, rule_));
            if (forcing.g_c) {
                detail::add_to(rhs, assemble_load(mesh, d.layout_c(), [&](Vec2 x) { return forcing.g_c(x, t); }, rule_));
            }
            auto res = solve(A, rhs);
            next.c = std::move(res.x);
            local_report.c = res.report;
        }
        // (d-e) velocity and pressure.
        {
            SparseMatrix Auu = linear_combination(1.0 / dt, d.mass_u(), P.D_u / P.rho, d.stiffness_u());
            Auu = linear_combination(1.0, Auu, 1.0, assemble_skew_B(mesh, d.layout_u(), VectorField(u_prev)));
            auto f = d.mass_u().multiply(prev.u);
            for (double& v : f) {
                v /= dt;
            }
            detail::add_to(f, assemble_buoyancy_rhs(mesh, d.layout_u(), ScalarField(n_prev), VectorField(P.grad_phi, t),
                                                    P.rho, prev.alpha, rule_));
            if (forcing.g_u) {
                detail::add_to(f, assemble_vector_load(mesh, d.layout_u(), [&](Vec2 x) { return forcing.g_u(x, t); }, rule_));
            }
            const std::vector<double> g(d.layout_pi().n_dofs, 0.0);
            auto sys = detail::saddle_system(d, Auu, 1.0 / P.rho, std::move(f), g);
            auto res = solve(sys.matrix, sys.rhs);
            const std::size_t nu = d.layout_u().n_dofs;
            next.u.assign(res.x.begin(), res.x.begin() + static_cast<std::ptrdiff_t>(nu));
            next.pi.assign(res.x.begin() + static_cast<std::ptrdiff_t>(nu),
                           res.x.begin() + static_cast<std::ptrdiff_t>(nu + d.layout_pi().n_dofs));
            local_report.u = res.report;
        }
        if (report != nullptr) {
            *report = local_report;
        }
        return next;
    }

private:
    std::shared_ptr<const Discretization> disc_;
    ModelParams params_;
    double dt_;
    TriangleRule rule_;
    std::unique_ptr<LuSolver> sigma_solver_;
};

/// Per-step record streamed by `run`.
struct StepDiagnostics {
    std::size_t m = 0;
    double t = 0.0;
    double mass = 0.0;
    double residual_n = 0.0;
    double residual_sigma = 0.0;
    double residual_c = 0.0;
    double residual_u = 0.0;
    double eta_min = 0.0, eta_max = 0.0;
    double c_min = 0.0, c_max = 0.0;
    double sigma_max = 0.0;  // max nodal |sigma|
    double u_max = 0.0;      // max nodal |u|
    double pi_min = 0.0, pi_max = 0.0;
};

inline StepDiagnostics diagnose(const State& s, const Discretization& d, const StepReport* report = nullptr) {
    StepDiagnostics g;
    g.m = s.m;
    g.t = s.t;
    g.mass = mass_of_eta(s, d);
    if (report != nullptr) {
        g.residual_n = report->n.residual_norm;
        g.residual_sigma = report->sigma.residual_norm;
        g.residual_c = report->c.residual_norm;
        g.residual_u = report->u.residual_norm;
    }
    const std::size_t nn = d.mesh().n_nodes();
    g.eta_min = g.c_min = g.pi_min = std::numeric_limits<double>::infinity();
    g.eta_max = g.c_max = g.pi_max = -std::numeric_limits<double>::infinity();
    const std::size_t ns = d.layout_sigma().n_scalar_dofs;
    const std::size_t nu = d.layout_u().n_scalar_dofs;
    for (std::size_t i = 0; i < nn; ++i) {
        g.eta_min = std::min(g.eta_min, s.n[i] + s.alpha);
        g.eta_max = std::max(g.eta_max, s.n[i] + s.alpha);
        g.c_min = std::min(g.c_min, s.c[i]);
        g.c_max = std::max(g.c_max, s.c[i]);
        g.pi_min = std::min(g.pi_min, s.pi[i]);
        g.pi_max = std::max(g.pi_max, s.pi[i]);
        g.sigma_max = std::max(g.sigma_max, std::hypot(s.sigma[i], s.sigma[ns + i]));
        g.u_max = std::max(g.u_max, std::hypot(s.u[i], s.u[nu + i]));
    }
    return g;
}

struct Trajectory {
    std::vector<State> states;  // level 0..N when kept, otherwise only the last
    std::vector<StepDiagnostics> diagnostics;  // level 0..N
    std::vector<StepReport> reports;           // steps 1..N
};

/// Advances `initial` by `n_steps`. `observer` sees every level including 0.
inline Trajectory run(const Scheme& scheme, State initial, std::size_t n_steps, const StepForcing& forcing = {},
                      bool keep_states = true,
                      const std::function<void(const State&, const StepDiagnostics&)>& observer = {}) {
    Trajectory traj;
    const auto& d = scheme.discretization();
    traj.diagnostics.push_back(diagnose(initial, d));
    if (observer) {
        observer(initial, traj.diagnostics.back());
    }
    State current = std::move(initial);
    for (std::size_t k = 0; k < n_steps; ++k) {
        StepReport rep;
        State next = scheme.step(current, forcing, &rep);
        traj.reports.push_back(rep);
        traj.diagnostics.push_back(diagnose(next, d, &rep));
        if (observer) {
            observer(next, traj.diagnostics.back());
        }
        if (keep_states) {
            traj.states.push_back(std::move(current));
        }
        current = std::move(next);
    }
    traj.states.push_back(std::move(current));
    return traj;
}

/// max_j |(psi_j, div u_h)| over all pressure basis functions.
inline double max_divergence_residual(const State& s, const Discretization& d) {
    const auto r = d.pressure_coupling().transpose().multiply(s.u);
    double m = 0.0;
    for (double v : r) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

} // namespace chemofem
