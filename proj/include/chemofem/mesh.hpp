#pragma once

#include "chemofem/core.hpp"

#include <algorithm>
#include <array>
#include <cstddef>
#include <vector>

namespace chemofem {

enum class Side { Left, Right, Bottom, Top };

struct BoundaryEdge {
    std::size_t a;
    std::size_t b;
    Side side;
};

/// Structured triangulation of [0,Lx]x[0,Ly].
///
/// Nodes are numbered row-major from bottom to top, node (i,j) -> j*(kx+1)+i.
/// Every cell is split along its lower-left to upper-right diagonal into two
/// counterclockwise triangles.
struct Mesh {
    double lx = 0.0;
    double ly = 0.0;
    std::size_t kx = 0;
    std::size_t ky = 0;
    std::vector<Vec2> nodes;
    std::vector<std::array<std::size_t, 3>> triangles;
    std::vector<BoundaryEdge> boundary_edges;
    double h = 0.0;

    std::size_t n_nodes() const { return nodes.size(); }
    std::size_t n_triangles() const { return triangles.size(); }
    double area() const { return lx * ly; }
};

/// Affine data of one triangle.
struct ElementGeometry {
    double area = 0.0;
    std::array<Vec2, 3> grad_bary{};
    std::array<Vec2, 3> vertices{};

    /// Physical point of barycentric coordinates (l0,l1,l2).
    Vec2 point(const std::array<double, 3>& bary) const {
        return bary[0] * vertices[0] + bary[1] * vertices[1] + bary[2] * vertices[2];
    }
};

inline Mesh build_rect_mesh(double lx, double ly, std::size_t kx, std::size_t ky) {
    if (!(lx > 0.0) || !(ly > 0.0)) {
        throw InvalidArgument("build_rect_mesh: domain lengths must be positive");
    }
    if (kx == 0 || ky == 0) {
        throw InvalidArgument("build_rect_mesh: subdivision counts must be >= 1");
    }

    Mesh mesh;
    mesh.lx = lx;
    mesh.ly = ly;
    mesh.kx = kx;
    mesh.ky = ky;

    const std::size_t nx = kx + 1;
    const std::size_t ny = ky + 1;
    mesh.nodes.reserve(nx * ny);
    for (std::size_t j = 0; j < ny; ++j) {
        // Pin the last row/column to the exact boundary coordinate.
        const double y = (j == ky) ? ly : ly * static_cast<double>(j) / static_cast<double>(ky);
        for (std::size_t i = 0; i < nx; ++i) {
            const double x = (i == kx) ? lx : lx * static_cast<double>(i) / static_cast<double>(kx);
            mesh.nodes.push_back({x, y});
        }
    }

    auto id = [nx](std::size_t i, std::size_t j) { return j * nx + i; };
    mesh.triangles.reserve(2 * kx * ky);
    for (std::size_t j = 0; j < ky; ++j) {
        for (std::size_t i = 0; i < kx; ++i) {
            const std::size_t p00 = id(i, j);
            const std::size_t p10 = id(i + 1, j);
            const std::size_t p01 = id(i, j + 1);
            const std::size_t p11 = id(i + 1, j + 1);
            mesh.triangles.push_back({p00, p10, p11});
            mesh.triangles.push_back({p00, p11, p01});
        }
    }

    for (std::size_t i = 0; i < kx; ++i) {
        mesh.boundary_edges.push_back({id(i, 0), id(i + 1, 0), Side::Bottom});
        mesh.boundary_edges.push_back({id(i + 1, ky), id(i, ky), Side::Top});
    }
    for (std::size_t j = 0; j < ky; ++j) {
        mesh.boundary_edges.push_back({id(kx, j), id(kx, j + 1), Side::Right});
        mesh.boundary_edges.push_back({id(0, j + 1), id(0, j), Side::Left});
    }

    double h = 0.0;
    for (const auto& tri : mesh.triangles) {
        for (int e = 0; e < 3; ++e) {
            h = std::max(h, norm(mesh.nodes[tri[(e + 1) % 3]] - mesh.nodes[tri[e]]));
        }
    }
    mesh.h = h;
    return mesh;
}

inline ElementGeometry element_geometry(const Mesh& mesh, std::size_t elem) {
    if (elem >= mesh.n_triangles()) {
        throw InvalidArgument("element_geometry: element index out of range");
    }
    const auto& tri = mesh.triangles[elem];
    ElementGeometry g;
    for (int a = 0; a < 3; ++a) {
        g.vertices[a] = mesh.nodes[tri[a]];
    }
    const Vec2 e1 = g.vertices[1] - g.vertices[0];
    const Vec2 e2 = g.vertices[2] - g.vertices[0];
    const double det = cross(e1, e2);
    const double scale = std::max(dot(e1, e1), dot(e2, e2));
    if (!(det > 1e-14 * scale)) {
        throw GeometryError("element_geometry: degenerate or clockwise triangle");
    }
    g.area = 0.5 * det;
    // grad(lambda_a) = rot90(opposite edge) / (2 area), oriented inward.
    for (int a = 0; a < 3; ++a) {
        const Vec2& p = g.vertices[(a + 1) % 3];
        const Vec2& q = g.vertices[(a + 2) % 3];
        const Vec2 edge = q - p;
        g.grad_bary[a] = Vec2{-edge.y, edge.x} * (1.0 / det);
    }
    return g;
}

/// Boundary nodes split into corners and open sides.
struct BoundaryClassification {
    std::vector<std::size_t> corners;
    std::array<std::vector<std::size_t>, 4> sides; // indexed by Side
    std::vector<std::size_t> all;                  // sorted
};

inline BoundaryClassification classify_boundary(const Mesh& mesh) {
    BoundaryClassification out;
    const std::size_t nx = mesh.kx + 1;
    auto id = [nx](std::size_t i, std::size_t j) { return j * nx + i; };

    out.corners = {id(0, 0), id(mesh.kx, 0), id(mesh.kx, mesh.ky), id(0, mesh.ky)};
    for (std::size_t i = 1; i < mesh.kx; ++i) {
        out.sides[static_cast<int>(Side::Bottom)].push_back(id(i, 0));
        out.sides[static_cast<int>(Side::Top)].push_back(id(i, mesh.ky));
    }
    for (std::size_t j = 1; j < mesh.ky; ++j) {
        out.sides[static_cast<int>(Side::Left)].push_back(id(0, j));
        out.sides[static_cast<int>(Side::Right)].push_back(id(mesh.kx, j));
    }

    out.all = out.corners;
    for (const auto& s : out.sides) {
        out.all.insert(out.all.end(), s.begin(), s.end());
    }
    std::sort(out.all.begin(), out.all.end());
    return out;
}

} // namespace chemofem
