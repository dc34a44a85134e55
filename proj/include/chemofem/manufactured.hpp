#pragma once

#include "chemofem/core.hpp"
#include "chemofem/fields.hpp"
#include "chemofem/quadrature.hpp"
#include "chemofem/scheme.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace chemofem {

/// Smooth trigonometric solution on the unit square used for convergence
/// studies:
///   eta   = e^-t (cos 2pi x + cos 2pi y + 3)
///   c     = e^-t (sin 2pi y + cos 2pi x - 2pi y + 9)
///   sigma = grad c
///   u     = e^-t (sin 2pi y (cos 2pi x - 1), sin 2pi x (1 - cos 2pi y))
///   pi    = e^-t (cos 2pi x + sin 2pi y)
/// u vanishes on the boundary and is divergence free; eta and c satisfy
/// homogeneous Neumann conditions; pi has zero mean.
namespace exact {

inline constexpr double k = 2.0 * kPi;

struct Trig {
    double E, sx, cx, sy, cy;
    Trig(Vec2 p, double t)
        : E(std::exp(-t)), sx(std::sin(k * p.x)), cx(std::cos(k * p.x)), sy(std::sin(k * p.y)), cy(std::cos(k * p.y)) {}
};

inline double eta(Vec2 p, double t) {
    const Trig s(p, t);
    return s.E * (s.cx + s.cy + 3.0);
}
inline Vec2 grad_eta(Vec2 p, double t) {
    const Trig s(p, t);
    return {-k * s.E * s.sx, -k * s.E * s.sy};
}
inline Mat2 hess_eta(Vec2 p, double t) {
    const Trig s(p, t);
    return {{{-k * k * s.E * s.cx, 0.0}, {0.0, -k * k * s.E * s.cy}}};
}

inline double c(Vec2 p, double t) {
    const Trig s(p, t);
    return s.E * (s.sy + s.cx - k * p.y + 9.0);
}
inline Vec2 grad_c(Vec2 p, double t) {
    const Trig s(p, t);
    return {-k * s.E * s.sx, k * s.E * (s.cy - 1.0)};
}
inline Mat2 hess_c(Vec2 p, double t) {
    const Trig s(p, t);
    return {{{-k * k * s.E * s.cx, 0.0}, {0.0, -k * k * s.E * s.sy}}};
}

inline Vec2 sigma(Vec2 p, double t) { return grad_c(p, t); }

inline Vec2 u(Vec2 p, double t) {
    const Trig s(p, t);
    return {s.E * s.sy * (s.cx - 1.0), s.E * s.sx * (1.0 - s.cy)};
}
inline Mat2 grad_u(Vec2 p, double t) {
    const Trig s(p, t);
    return {{{-k * s.E * s.sy * s.sx, k * s.E * s.cy * (s.cx - 1.0)},
             {k * s.E * s.cx * (1.0 - s.cy), k * s.E * s.sx * s.sy}}};
}
inline Vec2 laplacian_u(Vec2 p, double t) {
    const Trig s(p, t);
    return {k * k * s.E * s.sy * (1.0 - 2.0 * s.cx), k * k * s.E * s.sx * (2.0 * s.cy - 1.0)};
}

inline double pressure(Vec2 p, double t) {
    const Trig s(p, t);
    return s.E * (s.cx + s.sy);
}
inline Vec2 grad_pressure(Vec2 p, double t) {
    const Trig s(p, t);
    return {-k * s.E * s.sx, k * s.E * s.cy};
}

} // namespace exact

enum class Variable { Eta, C, Sigma, U, Pi };

/// Closed-form evaluators of the manufactured solution.
struct ExactSolution {
    ScalarFunction eta{exact::eta, exact::grad_eta, exact::hess_eta};
    ScalarFunction c{exact::c, exact::grad_c, exact::hess_c};
    VectorFunction sigma{exact::sigma, exact::hess_c};
    VectorFunction u{exact::u, exact::grad_u};
    ScalarFunction pi{exact::pressure, exact::grad_pressure, {}};

    InitialData initial_data() const { return {eta, c, sigma, u, pi}; }
};

/// Strong-form residuals of the model at the manufactured solution:
///   g_n     = eta_t + u.grad eta - D_n lap eta + chi div(eta grad c)
///   g_c     = c_t + u.grad c - D_c lap c + gamma eta c
///   g_sigma = grad g_c
///   g_u     = u_t + (u.grad) u - (D_u/rho) lap u + (1/rho) grad pi - (1/rho) eta grad phi
/// grad phi is taken from `params` (constant in space for these closed forms).
class ManufacturedForcing {
public:
    explicit ManufacturedForcing(ModelParams params) : p_(std::move(params)) {}

    double g_n(Vec2 x, double t) const {
        const double e = exact::eta(x, t);
        const Vec2 ge = exact::grad_eta(x, t);
        const Vec2 gc = exact::grad_c(x, t);
        const double lap_e = exact::hess_eta(x, t).divergence();
        const double lap_c = exact::hess_c(x, t).divergence();
        return -e + dot(exact::u(x, t), ge) - p_.D_n * lap_e + p_.chi * (dot(ge, gc) + e * lap_c);
    }

    double g_c(Vec2 x, double t) const {
        const double cv = exact::c(x, t);
        const double lap_c = exact::hess_c(x, t).divergence();
        return -cv + dot(exact::u(x, t), exact::grad_c(x, t)) - p_.D_c * lap_c + p_.gamma * exact::eta(x, t) * cv;
    }

    Vec2 g_sigma(Vec2 x, double t) const {
        const exact::Trig s(x, t);
        const double k = exact::k;
        const Vec2 gc = exact::grad_c(x, t);
        const Mat2 Hc = exact::hess_c(x, t);
        const Mat2 Ju = exact::grad_u(x, t);
        const Vec2 uv = exact::u(x, t);
        const Vec2 ge = exact::grad_eta(x, t);
        const double e = exact::eta(x, t);
        const double cv = exact::c(x, t);
        // grad(u . grad c) = Ju^T grad c + Hc u
        const Vec2 grad_adv{Ju.rows[0].x * gc.x + Ju.rows[1].x * gc.y + Hc.rows[0].x * uv.x + Hc.rows[0].y * uv.y,
                            Ju.rows[0].y * gc.x + Ju.rows[1].y * gc.y + Hc.rows[1].x * uv.x + Hc.rows[1].y * uv.y};
        const Vec2 grad_lap_c{k * k * k * s.E * s.sx, -k * k * k * s.E * s.cy};
        return -gc + grad_adv - p_.D_c * grad_lap_c + p_.gamma * (cv * ge + e * gc);
    }

    Vec2 g_u(Vec2 x, double t) const {
        const Vec2 uv = exact::u(x, t);
        const Mat2 Ju = exact::grad_u(x, t);
        const Vec2 conv{dot(uv, Ju.rows[0]), dot(uv, Ju.rows[1])};
        const Vec2 gphi = p_.grad_phi.value(x, t);
        return -uv + conv - (p_.D_u / p_.rho) * exact::laplacian_u(x, t) +
               (1.0 / p_.rho) * exact::grad_pressure(x, t) - (exact::eta(x, t) / p_.rho) * gphi;
    }

    /// Forcing for the scheme. The sigma equation uses -(g_c, div sbar) unless
    /// `sigma_from_gradient` asks for (g_sigma, sbar).
    StepForcing step_forcing(bool sigma_from_gradient = false) const {
        StepForcing f;
        auto self = std::make_shared<ManufacturedForcing>(*this);
        f.g_n = [self](Vec2 x, double t) { return self->g_n(x, t); };
        f.g_c = [self](Vec2 x, double t) { return self->g_c(x, t); };
        f.g_u = [self](Vec2 x, double t) { return self->g_u(x, t); };
        if (sigma_from_gradient) {
            f.g_sigma = [self](Vec2 x, double t) { return self->g_sigma(x, t); };
        }
        return f;
    }

private:
    ModelParams p_;
};

/// Spatial L2 and H1 norms of (exact - discrete) on one time level.
struct SpatialError {
    double l2 = 0.0;
    double h1 = 0.0;  // full norm sqrt(L2^2 + |.|_H1^2)
};

/// Per-variable error of one time level: eta, c, u1, u2.
struct LevelErrors {
    SpatialError eta, c, u1, u2;
};

inline LevelErrors level_errors(const State& s, const Discretization& d, const ExactSolution& ex,
                                const TriangleRule& rule = rule_degree8()) {
    const Mesh& mesh = d.mesh();
    const DiscreteField nf{&d.layout_n(), s.n};
    const DiscreteField cf{&d.layout_c(), s.c};
    const DiscreteField uf{&d.layout_u(), s.u};
    double e_l2 = 0, e_h1 = 0, c_l2 = 0, c_h1 = 0, u1_l2 = 0, u1_h1 = 0, u2_l2 = 0, u2_h1 = 0;
    for (std::size_t e = 0; e < mesh.n_triangles(); ++e) {
        const auto geom = element_geometry(mesh, e);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& bary = rule.points[q];
            const double w = geom.area * rule.weights[q];
            const Vec2 x = geom.point(bary);
            const auto bp1 = eval_basis(SpaceKind::ScalarP1, geom, bary);
            const auto bu = eval_basis(SpaceKind::VelocityMini, geom, bary);

            const auto ns = sample_scalar(nf, e, bp1);
            const double de = ex.eta.value(x, s.t) - (ns.value + s.alpha);
            const Vec2 dge = ex.eta.gradient(x, s.t) - ns.gradient;
            e_l2 += w * de * de;
            e_h1 += w * dot(dge, dge);

            const auto cs = sample_scalar(cf, e, bp1);
            const double dc = ex.c.value(x, s.t) - cs.value;
            const Vec2 dgc = ex.c.gradient(x, s.t) - cs.gradient;
            c_l2 += w * dc * dc;
            c_h1 += w * dot(dgc, dgc);

            const auto us = sample_vector(uf, e, bu);
            const Vec2 du = ex.u.value(x, s.t) - us.value;
            const Mat2 J = ex.u.jacobian(x, s.t);
            const Vec2 dg1 = J.rows[0] - us.jacobian.rows[0];
            const Vec2 dg2 = J.rows[1] - us.jacobian.rows[1];
            u1_l2 += w * du.x * du.x;
            u1_h1 += w * dot(dg1, dg1);
            u2_l2 += w * du.y * du.y;
            u2_h1 += w * dot(dg2, dg2);
        }
    }
    LevelErrors out;
    out.eta = {std::sqrt(e_l2), std::sqrt(e_l2 + e_h1)};
    out.c = {std::sqrt(c_l2), std::sqrt(c_l2 + c_h1)};
    out.u1 = {std::sqrt(u1_l2), std::sqrt(u1_l2 + u1_h1)};
    out.u2 = {std::sqrt(u2_l2), std::sqrt(u2_l2 + u2_h1)};
    return out;
}

/// Discrete-in-time norms of one variable over a trajectory.
struct TimeNorms {
    double linf_l2 = 0.0;  // max_m ||e^m||_L2, m = 0..N
    double l2_h1 = 0.0;    // (dt sum_{m=1..N} ||e^m||_H1^2)^(1/2)
    double linf_h1 = 0.0;  // max_m ||e^m||_H1, m = 0..N
};

struct TrajectoryErrors {
    TimeNorms eta, c, u1, u2;
};

/// Error norms of a stored trajectory (levels 0..N on a uniform grid `dt`).
inline TrajectoryErrors error_norms(const std::vector<State>& states, double dt, const Discretization& d,
                                    const ExactSolution& ex) {
    if (states.empty()) {
        throw InvalidArgument("error_norms: empty trajectory");
    }
    TrajectoryErrors out;
    double s_eta = 0, s_c = 0, s_u1 = 0, s_u2 = 0;
    for (std::size_t m = 0; m < states.size(); ++m) {
        const auto& s = states[m];
        if (s.m != m || std::abs(s.t - dt * static_cast<double>(m)) > 1e-9 * std::max(1.0, s.t)) {
            throw InvalidArgument("error_norms: trajectory does not match the time grid");
        }
        const auto le = level_errors(s, d, ex);
        auto upd = [m, dt](TimeNorms& n, const SpatialError& e, double& sum) {
            n.linf_l2 = std::max(n.linf_l2, e.l2);
            n.linf_h1 = std::max(n.linf_h1, e.h1);
            if (m > 0) {
                sum += dt * e.h1 * e.h1;
            }
        };
        upd(out.eta, le.eta, s_eta);
        upd(out.c, le.c, s_c);
        upd(out.u1, le.u1, s_u1);
        upd(out.u2, le.u2, s_u2);
    }
    out.eta.l2_h1 = std::sqrt(s_eta);
    out.c.l2_h1 = std::sqrt(s_c);
    out.u1.l2_h1 = std::sqrt(s_u1);
    out.u2.l2_h1 = std::sqrt(s_u2);
    return out;
}

/// Observed order between two meshes: log(e_coarse/e_fine) / log(h_coarse/h_fine).
inline double observed_order(double e_coarse, double e_fine, double h_coarse, double h_fine) {
    if (!(e_coarse > 0.0) || !(e_fine > 0.0)) {
        throw InvalidArgument("observed_order: errors must be strictly positive");
    }
    if (!(h_coarse > h_fine) || !(h_fine > 0.0)) {
        throw InvalidArgument("observed_order: mesh ratio must exceed one");
    }
    return std::log(e_coarse / e_fine) / std::log(h_coarse / h_fine);
}

/// One row of a convergence table.
struct ConvergenceRow {
    std::size_t k = 0;
    double h = 0.0;
    TimeNorms norms;
};

/// Convergence table of one variable with pairwise observed orders.
struct VariableTable {
    std::string name;
    bool has_linf_h1 = false;
    std::vector<ConvergenceRow> rows;

    /// Orders between row i-1 and i (i >= 1) for each norm.
    double order_linf_l2(std::size_t i) const {
        return observed_order(rows[i - 1].norms.linf_l2, rows[i].norms.linf_l2, rows[i - 1].h, rows[i].h);
    }
    double order_l2_h1(std::size_t i) const {
        return observed_order(rows[i - 1].norms.l2_h1, rows[i].norms.l2_h1, rows[i - 1].h, rows[i].h);
    }
    double order_linf_h1(std::size_t i) const {
        return observed_order(rows[i - 1].norms.linf_h1, rows[i].norms.linf_h1, rows[i - 1].h, rows[i].h);
    }
};

struct ErrorReport {
    double dt = 0.0;
    double final_time = 0.0;
    InitMode init_mode = InitMode::EllipticProjection;
    VariableTable eta{"eta", false, {}};
    VariableTable c{"c", false, {}};
    VariableTable u1{"u1", true, {}};
    VariableTable u2{"u2", true, {}};
    double max_mass_drift = 0.0;  // |mass balance defect| relative, over all runs
};

/// Runs the manufactured problem on a k x k mesh of the unit square and
/// returns the time norms per variable.
struct ManufacturedRun {
    TrajectoryErrors errors;
    double h = 0.0;
    double mass_balance_defect = 0.0;
    double max_divergence = 0.0;
    Trajectory trajectory;
};

inline ManufacturedRun run_manufactured(std::size_t k, double dt, double T, InitMode mode,
                                        const ModelParams& params = {}, bool keep_trajectory = false,
                                        int quadrature_degree = 8) {
    const auto grid = TimeGrid::from_final_time(T, dt);
    auto disc = std::make_shared<Discretization>(build_rect_mesh(1.0, 1.0, k, k));
    const ExactSolution ex;
    const ManufacturedForcing forcing(params);
    Scheme scheme(disc, params, dt, quadrature_degree);
    State init = init_state(*disc, params, ex.initial_data(), mode);

    ManufacturedRun out;
    out.h = disc->mesh().h;
    auto traj = run(scheme, std::move(init), grid.n_steps, forcing.step_forcing(), true);
    out.errors = error_norms(traj.states, dt, *disc, ex);

    // Mass balance: mass(m) - mass(m-1) = dt * integral(g_n(t_m)).
    for (std::size_t m = 1; m < traj.states.size(); ++m) {
        const double t = traj.states[m].t;
        const double source =
            integrate_mesh(disc->mesh(), rule_degree8(), [&](Vec2 x) { return forcing.g_n(x, t); });
        const double m0 = mass_of_eta(traj.states[m - 1], *disc);
        const double m1 = mass_of_eta(traj.states[m], *disc);
        out.mass_balance_defect = std::max(out.mass_balance_defect, std::abs(m1 - m0 - dt * source) / std::abs(m0));
        out.max_divergence = std::max(out.max_divergence, max_divergence_residual(traj.states[m], *disc));
    }
    if (keep_trajectory) {
        out.trajectory = std::move(traj);
    }
    return out;
}

/// Convergence study over k x k meshes of the unit square.
inline ErrorReport convergence_study(const std::vector<std::size_t>& mesh_sizes, double dt, double T, InitMode mode,
                                     const ModelParams& params = {},
                                     const std::function<void(const ConvergenceRow&)>& progress = {},
                                     int quadrature_degree = 8) {
    for (std::size_t i = 1; i < mesh_sizes.size(); ++i) {
        if (mesh_sizes[i] <= mesh_sizes[i - 1]) {
            throw InvalidArgument("convergence_study: mesh sizes must be strictly increasing");
        }
    }
    ErrorReport rep;
    rep.dt = dt;
    rep.final_time = T;
    rep.init_mode = mode;
    for (std::size_t k : mesh_sizes) {
        const auto r = run_manufactured(k, dt, T, mode, params, false, quadrature_degree);
        rep.eta.rows.push_back({k, r.h, r.errors.eta});
        rep.c.rows.push_back({k, r.h, r.errors.c});
        rep.u1.rows.push_back({k, r.h, r.errors.u1});
        rep.u2.rows.push_back({k, r.h, r.errors.u2});
        rep.max_mass_drift = std::max(rep.max_mass_drift, r.mass_balance_defect);
        if (progress) {
            progress(rep.eta.rows.back());
        }
    }
    return rep;
}

} // namespace chemofem
