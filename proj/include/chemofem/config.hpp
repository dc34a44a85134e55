#pragma once

#include "chemofem/core.hpp"
#include "chemofem/expression.hpp"
#include "chemofem/manufactured.hpp"
#include "chemofem/scheme.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace chemofem {

enum class InitialPreset { Test1, Test2, Custom };

inline const char* to_string(InitialPreset p) {
    switch (p) {
    case InitialPreset::Test1: return "test1";
    case InitialPreset::Test2: return "test2";
    case InitialPreset::Custom: return "custom";
    }
    return "custom";
}

/// Everything needed to run one simulation.
struct RunConfig {
    double lx = 1.0;
    double ly = 1.0;
    std::size_t kx = 10;
    std::size_t ky = 10;
    double dt = 2e-4;
    double t_final = 0.01;
    double chi = 1.0, D_n = 1.0, D_c = 1.0, D_u = 1.0, rho = 1.0, gamma = 1.0;
    Vec2 grad_phi{0.0, 0.0};
    InitialPreset initial = InitialPreset::Test2;
    std::string eta0_expr, c0_expr, u0x_expr = "0", u0y_expr = "0";
    InitMode init_mode = InitMode::EllipticProjection;
    std::vector<double> snapshot_times;
    std::string output_dir = "out";
    std::vector<std::string> formats{"vtk", "csv"};
    int quadrature_degree = 8;

    bool operator==(const RunConfig&) const = default;

    ModelParams params() const {
        ModelParams p;
        p.chi = chi;
        p.D_n = D_n;
        p.D_c = D_c;
        p.D_u = D_u;
        p.rho = rho;
        p.gamma = gamma;
        p.grad_phi = VectorFunction::constant(grad_phi);
        return p;
    }

    TimeGrid time_grid() const { return TimeGrid::from_final_time(t_final, dt); }
};

/// Gaussian cell clusters and chemical blob of the gravity-driven demo on [0,2]x[0,1].
namespace test1 {

inline constexpr double kClusterCenters[3] = {0.2, 0.5, 1.2};

inline ScalarFunction eta0() {
    auto terms = [](Vec2 p, double& v, Vec2& g, Mat2& H) {
        for (double s : kClusterCenters) {
            const double dx = p.x - s;
            const double dy = p.y - 1.0;
            const double e = 80.0 * std::exp(-8.0 * dx * dx - 10.0 * dy * dy);
            const double ax = -16.0 * dx;
            const double ay = -20.0 * dy;
            v += e;
            g += e * Vec2{ax, ay};
            H.rows[0] += e * Vec2{ax * ax - 16.0, ax * ay};
            H.rows[1] += e * Vec2{ax * ay, ay * ay - 20.0};
        }
    };
    return {[terms](Vec2 p, double) {
                double v = 0; Vec2 g; Mat2 H;
                terms(p, v, g, H);
                return v;
            },
            [terms](Vec2 p, double) {
                double v = 0; Vec2 g; Mat2 H;
                terms(p, v, g, H);
                return g;
            },
            [terms](Vec2 p, double) {
                double v = 0; Vec2 g; Mat2 H;
                terms(p, v, g, H);
                return H;
            }};
}

inline ScalarFunction c0() {
    auto val = [](Vec2 p) { return 100.0 * std::exp(-5.0 * (p.x - 1.0) * (p.x - 1.0) - 5.0 * (p.y - 0.5) * (p.y - 0.5)); };
    return {[val](Vec2 p, double) { return val(p); },
            [val](Vec2 p, double) { return val(p) * Vec2{-10.0 * (p.x - 1.0), -10.0 * (p.y - 0.5)}; },
            [val](Vec2 p, double) {
                const double ax = -10.0 * (p.x - 1.0);
                const double ay = -10.0 * (p.y - 0.5);
                const double v = val(p);
                return Mat2{{{v * (ax * ax - 10.0), v * ax * ay}, {v * ax * ay, v * (ay * ay - 10.0)}}};
            }};
}

inline InitialData initial_data() {
    const auto c = c0();
    return {eta0(), c, VectorFunction::gradient_of(c), VectorFunction::constant({0.0, 0.0}), std::nullopt};
}

} // namespace test1

/// Defaults of the gravity-driven qualitative run.
inline RunConfig test1_config() {
    RunConfig c;
    c.lx = 2.0;
    c.ly = 1.0;
    c.kx = 80;
    c.ky = 40;
    c.dt = 1e-5;
    c.t_final = 30e-5;
    c.chi = 8.0;
    c.D_n = 1.0;
    c.D_c = 5.0;
    c.D_u = 10.0;
    c.rho = 1.0;
    c.gamma = 8.0;
    c.grad_phi = {0.0, -1000.0};  // phi = -1000 y
    c.initial = InitialPreset::Test1;
    c.snapshot_times = {0.0, 12e-5, 30e-5};
    return c;
}

/// Defaults of the manufactured convergence problem.
inline RunConfig test2_config() {
    RunConfig c;
    c.lx = 1.0;
    c.ly = 1.0;
    c.kx = 10;
    c.ky = 10;
    c.dt = 2e-4;
    c.t_final = 0.01;
    c.initial = InitialPreset::Test2;
    c.snapshot_times = {0.0, 0.01};
    return c;
}

/// Analytic initial data of a configuration.
inline InitialData initial_data(const RunConfig& cfg) {
    switch (cfg.initial) {
    case InitialPreset::Test1: return test1::initial_data();
    case InitialPreset::Test2: return ExactSolution{}.initial_data();
    case InitialPreset::Custom: break;
    }
    const auto eta = Expression::parse(cfg.eta0_expr).to_function();
    const auto c = Expression::parse(cfg.c0_expr).to_function();
    const auto ux = Expression::parse(cfg.u0x_expr).to_function();
    const auto uy = Expression::parse(cfg.u0y_expr).to_function();
    VectorFunction u{[ux, uy](Vec2 p, double t) { return Vec2{ux.value(p, t), uy.value(p, t)}; },
                     [ux, uy](Vec2 p, double t) { return Mat2{{ux.gradient(p, t), uy.gradient(p, t)}}; }};
    return {eta, c, VectorFunction::gradient_of(c), u, std::nullopt};
}

/// Manufactured forcing for test2 runs, none otherwise.
inline StepForcing forcing_for(const RunConfig& cfg) {
    if (cfg.initial == InitialPreset::Test2) {
        return ManufacturedForcing(cfg.params()).step_forcing();
    }
    return {};
}

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (trim(v.substr(used)).empty() && std::isfinite(d)) return d;
    } catch (const std::exception&) {
    }
    throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
}

inline std::size_t to_count(const std::string& key, const std::string& v) {
    const double d = to_double(key, v);
    if (d < 1.0 || d != std::floor(d)) {
        throw ConfigError("config: key '" + key + "' expects a positive integer, got '" + v + "'");
    }
    return static_cast<std::size_t>(d);
}

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

/// Parses `key = value` text with optional [section] headers.
///
/// Keys are addressed as section.key (e.g. params.chi); keys before the first
/// section belong to [run]. `run.preset` (test1|test2) fills defaults that
/// explicit keys override regardless of order. '#' starts a comment.
inline RunConfig parse_config(std::string_view text) {
    std::map<std::string, std::string> kv;
    std::string section = "run";
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto t = detail::trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError("config: malformed section header on line " + std::to_string(lineno));
            section = detail::trim(std::string_view(t).substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: expected 'key = value' on line " + std::to_string(lineno));
        }
        const auto key = section + "." + detail::trim(std::string_view(t).substr(0, eq));
        kv[key] = detail::trim(std::string_view(t).substr(eq + 1));
    }

    RunConfig cfg;
    if (auto it = kv.find("run.preset"); it != kv.end()) {
        if (it->second == "test1") cfg = test1_config();
        else if (it->second == "test2") cfg = test2_config();
        else if (it->second != "custom") throw ConfigError("config: unknown preset '" + it->second + "'");
        else cfg.initial = InitialPreset::Custom;
        kv.erase(it);
    }

    for (const auto& [key, v] : kv) {
        if (key == "domain.lx") cfg.lx = detail::to_double(key, v);
        else if (key == "domain.ly") cfg.ly = detail::to_double(key, v);
        else if (key == "mesh.kx") cfg.kx = detail::to_count(key, v);
        else if (key == "mesh.ky") cfg.ky = detail::to_count(key, v);
        else if (key == "time.dt") cfg.dt = detail::to_double(key, v);
        else if (key == "time.t_final") cfg.t_final = detail::to_double(key, v);
        else if (key == "params.chi") cfg.chi = detail::to_double(key, v);
        else if (key == "params.D_n") cfg.D_n = detail::to_double(key, v);
        else if (key == "params.D_c") cfg.D_c = detail::to_double(key, v);
        else if (key == "params.D_u") cfg.D_u = detail::to_double(key, v);
        else if (key == "params.rho") cfg.rho = detail::to_double(key, v);
        else if (key == "params.gamma") cfg.gamma = detail::to_double(key, v);
        else if (key == "params.grad_phi") {
            if (v == "test1") cfg.grad_phi = {0.0, -1000.0};
            else if (v == "none") cfg.grad_phi = {0.0, 0.0};
            else {
                const auto parts = detail::split_list(v);
                if (parts.size() != 2) throw ConfigError("config: key 'params.grad_phi' expects 'gx, gy', test1 or none");
                cfg.grad_phi = {detail::to_double(key, parts[0]), detail::to_double(key, parts[1])};
            }
        } else if (key == "initial.preset") {
            if (v == "test1") cfg.initial = InitialPreset::Test1;
            else if (v == "test2") cfg.initial = InitialPreset::Test2;
            else if (v == "custom") cfg.initial = InitialPreset::Custom;
            else throw ConfigError("config: key 'initial.preset' expects test1, test2 or custom, got '" + v + "'");
        } else if (key == "initial.eta0") cfg.eta0_expr = v;
        else if (key == "initial.c0") cfg.c0_expr = v;
        else if (key == "initial.u0_x") cfg.u0x_expr = v;
        else if (key == "initial.u0_y") cfg.u0y_expr = v;
        else if (key == "initial.init_mode") {
            if (v == "elliptic") cfg.init_mode = InitMode::EllipticProjection;
            else if (v == "nodal") cfg.init_mode = InitMode::Nodal;
            else throw ConfigError("config: key 'initial.init_mode' expects elliptic or nodal, got '" + v + "'");
        } else if (key == "output.snapshots") {
            cfg.snapshot_times.clear();
            for (const auto& s : detail::split_list(v)) cfg.snapshot_times.push_back(detail::to_double(key, s));
        } else if (key == "output.dir") cfg.output_dir = v;
        else if (key == "output.formats") cfg.formats = detail::split_list(v);
        else if (key == "numerics.quadrature_degree") cfg.quadrature_degree = static_cast<int>(detail::to_count(key, v));
        else throw ConfigError("config: unknown key '" + key + "'");
    }

    // validation
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw ConfigError(std::string("config: '") + name + "' must be positive");
    };
    positive(cfg.lx, "domain.lx");
    positive(cfg.ly, "domain.ly");
    positive(cfg.dt, "time.dt");
    positive(cfg.chi, "params.chi");
    positive(cfg.D_n, "params.D_n");
    positive(cfg.D_c, "params.D_c");
    positive(cfg.D_u, "params.D_u");
    positive(cfg.rho, "params.rho");
    positive(cfg.gamma, "params.gamma");
    if (cfg.t_final < 0.0) throw ConfigError("config: 'time.t_final' must be non-negative");
    TimeGrid grid;
    try {
        grid = cfg.time_grid();
    } catch (const InvalidArgument&) {
        throw ConfigError("config: 'time.dt' does not divide 'time.t_final' (T/dt must be an integer)");
    }
    for (double ts : cfg.snapshot_times) {
        const double r = ts / cfg.dt;
        if (ts < 0.0 || ts > cfg.t_final * (1.0 + 1e-12) || std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r)) {
            throw ConfigError("config: snapshot time " + detail::fmt(ts) + " is not on the time grid");
        }
    }
    if (cfg.quadrature_degree < 1 || cfg.quadrature_degree > 8) {
        throw ConfigError("config: 'numerics.quadrature_degree' must be in 1..8");
    }
    for (const auto& f : cfg.formats) {
        if (f != "vtk" && f != "csv") throw ConfigError("config: unknown output format '" + f + "'");
    }
    if (cfg.initial == InitialPreset::Custom) {
        if (cfg.eta0_expr.empty() || cfg.c0_expr.empty()) {
            throw ConfigError("config: custom initial data needs 'initial.eta0' and 'initial.c0'");
        }
        for (const auto* e : {&cfg.eta0_expr, &cfg.c0_expr, &cfg.u0x_expr, &cfg.u0y_expr}) {
            (void)Expression::parse(*e);
        }
    }
    return cfg;
}

/// Inverse of parse_config: parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const RunConfig& c) {
    using detail::fmt;
    std::ostringstream os;
    os << "[domain]\nlx = " << fmt(c.lx) << "\nly = " << fmt(c.ly) << "\n";
    os << "[mesh]\nkx = " << c.kx << "\nky = " << c.ky << "\n";
    os << "[time]\ndt = " << fmt(c.dt) << "\nt_final = " << fmt(c.t_final) << "\n";
    os << "[params]\nchi = " << fmt(c.chi) << "\nD_n = " << fmt(c.D_n) << "\nD_c = " << fmt(c.D_c)
       << "\nD_u = " << fmt(c.D_u) << "\nrho = " << fmt(c.rho) << "\ngamma = " << fmt(c.gamma)
       << "\ngrad_phi = " << fmt(c.grad_phi.x) << ", " << fmt(c.grad_phi.y) << "\n";
    os << "[initial]\npreset = " << to_string(c.initial) << "\ninit_mode = " << to_string(c.init_mode) << "\n";
    if (!c.eta0_expr.empty()) os << "eta0 = " << c.eta0_expr << "\n";
    if (!c.c0_expr.empty()) os << "c0 = " << c.c0_expr << "\n";
    os << "u0_x = " << c.u0x_expr << "\nu0_y = " << c.u0y_expr << "\n";
    os << "[output]\nsnapshots = ";
    for (std::size_t i = 0; i < c.snapshot_times.size(); ++i) os << (i ? ", " : "") << fmt(c.snapshot_times[i]);
    os << "\ndir = " << c.output_dir << "\nformats = ";
    for (std::size_t i = 0; i < c.formats.size(); ++i) os << (i ? ", " : "") << c.formats[i];
    os << "\n[numerics]\nquadrature_degree = " << c.quadrature_degree << "\n";
    return os.str();
}

} // namespace chemofem
