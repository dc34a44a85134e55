#pragma once

#include "chemofem/manufactured.hpp"
#include "chemofem/mesh.hpp"
#include "chemofem/scheme.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace chemofem {

/// Nodal values of every field at one time level. Bubble dofs are dropped.
struct FieldSnapshot {
    const Mesh* mesh = nullptr;
    double t = 0.0;
    std::vector<double> eta;
    std::vector<double> c;
    std::vector<Vec2> sigma;
    std::vector<Vec2> velocity;
    std::vector<double> pressure;

    void validate() const {
        if (mesh == nullptr) {
            throw InvalidArgument("FieldSnapshot: missing mesh");
        }
        const std::size_t n = mesh->n_nodes();
        if (eta.size() != n || c.size() != n || sigma.size() != n || velocity.size() != n || pressure.size() != n) {
            throw DimensionMismatch("FieldSnapshot: field lengths must equal the node count");
        }
    }
};

inline FieldSnapshot make_snapshot(const State& s, const Discretization& d) {
    FieldSnapshot snap;
    snap.mesh = &d.mesh();
    snap.t = s.t;
    const std::size_t nn = d.mesh().n_nodes();
    const std::size_t ns = d.layout_sigma().n_scalar_dofs;
    const std::size_t nu = d.layout_u().n_scalar_dofs;
    snap.eta.resize(nn);
    snap.c.resize(nn);
    snap.sigma.resize(nn);
    snap.velocity.resize(nn);
    snap.pressure.resize(nn);
    for (std::size_t i = 0; i < nn; ++i) {
        snap.eta[i] = s.n[i] + s.alpha;
        snap.c[i] = s.c[i];
        snap.sigma[i] = {s.sigma[i], s.sigma[ns + i]};
        snap.velocity[i] = {s.u[i], s.u[nu + i]};
        snap.pressure[i] = s.pi[i];
    }
    return snap;
}

namespace detail {

inline std::ofstream open_output(const std::string& path) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    return out;
}

inline void check_written(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) {
        throw std::runtime_error("write to '" + path + "' failed");
    }
}

inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string sig6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string order4(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

} // namespace detail

/// Legacy ASCII VTK unstructured grid.
inline void write_vtk(const FieldSnapshot& snap, const std::string& path) {
    snap.validate();
    const Mesh& mesh = *snap.mesh;
    auto out = detail::open_output(path);
    using detail::g17;
    out << "# vtk DataFile Version 3.0\n";
    out << "chemofem t=" << g17(snap.t) << "\n";
    out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.n_nodes() << " double\n";
    for (const auto& p : mesh.nodes) {
        out << g17(p.x) << ' ' << g17(p.y) << " 0\n";
    }
    out << "CELLS " << mesh.n_triangles() << ' ' << 4 * mesh.n_triangles() << "\n";
    for (const auto& t : mesh.triangles) {
        out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << "\n";
    }
    out << "CELL_TYPES " << mesh.n_triangles() << "\n";
    for (std::size_t e = 0; e < mesh.n_triangles(); ++e) {
        out << "5\n";
    }
    out << "POINT_DATA " << mesh.n_nodes() << "\n";
    auto scalars = [&](const char* name, const std::vector<double>& v) {
        out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (double x : v) {
            out << g17(x) << "\n";
        }
    };
    auto vectors = [&](const char* name, const std::vector<Vec2>& v) {
        out << "VECTORS " << name << " double\n";
        for (const auto& x : v) {
            out << g17(x.x) << ' ' << g17(x.y) << " 0\n";
        }
    };
    scalars("eta", snap.eta);
    scalars("c", snap.c);
    vectors("sigma", snap.sigma);
    vectors("velocity", snap.velocity);
    scalars("pressure", snap.pressure);
    detail::check_written(out, path);
}

/// CSV text of one convergence table. Order cells are empty in the first row.
inline std::string csv_table(const VariableTable& table) {
    std::string s = "k,error_linf_L2,order,error_l2_H1,order";
    if (table.has_linf_h1) {
        s += ",error_linf_H1,order";
    }
    s += "\n";
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        auto order = [&](double v) { return i == 0 ? std::string() : detail::order4(v); };
        s += std::to_string(r.k);
        s += "," + detail::sig6(r.norms.linf_l2) + "," + order(i ? table.order_linf_l2(i) : 0.0);
        s += "," + detail::sig6(r.norms.l2_h1) + "," + order(i ? table.order_l2_h1(i) : 0.0);
        if (table.has_linf_h1) {
            s += "," + detail::sig6(r.norms.linf_h1) + "," + order(i ? table.order_linf_h1(i) : 0.0);
        }
        s += "\n";
    }
    return s;
}

/// Writes <dir>/<variable>.csv for eta, c, u1 and u2; returns the paths.
inline std::vector<std::string> write_csv_table(const ErrorReport& report, const std::string& dir) {
    if (report.eta.rows.empty()) {
        throw InvalidArgument("write_csv_table: empty report");
    }
    std::vector<std::string> paths;
    for (const VariableTable* t : {&report.eta, &report.c, &report.u1, &report.u2}) {
        const std::string path = (std::filesystem::path(dir) / (t->name + ".csv")).string();
        auto out = detail::open_output(path);
        out << csv_table(*t);
        detail::check_written(out, path);
        paths.push_back(path);
    }
    return paths;
}

inline const char* kDiagnosticsHeader =
    "m,t,mass,residual_n,residual_sigma,residual_c,residual_u,eta_min,eta_max,c_min,c_max,sigma_max,u_max,pi_min,"
    "pi_max\n";

inline std::string diagnostics_row(const StepDiagnostics& g) {
    using detail::g17;
    std::string s = std::to_string(g.m);
    for (double v : {g.t, g.mass, g.residual_n, g.residual_sigma, g.residual_c, g.residual_u, g.eta_min, g.eta_max,
                     g.c_min, g.c_max, g.sigma_max, g.u_max, g.pi_min, g.pi_max}) {
        s += "," + g17(v);
    }
    return s + "\n";
}

/// Streams one diagnostics row per time level.
class DiagnosticsWriter {
public:
    explicit DiagnosticsWriter(const std::string& path) : path_(path), out_(detail::open_output(path)) {
        out_ << kDiagnosticsHeader;
    }

    void write(const StepDiagnostics& g) {
        out_ << diagnostics_row(g);
        if (!out_) {
            throw std::runtime_error("write to '" + path_ + "' failed");
        }
    }

private:
    std::string path_;
    std::ofstream out_;
};

} // namespace chemofem
