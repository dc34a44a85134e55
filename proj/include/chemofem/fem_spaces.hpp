#pragma once

#include "chemofem/core.hpp"
#include "chemofem/mesh.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace chemofem {

/// The four discrete space families of the scheme.
///
///  - ScalarP1        continuous P1 (cell density with a mean constraint, chemical)
///  - VectorP1Sigma   P1 vector field with zero normal trace on the rectangle
///  - VelocityMini    P1 + cubic bubble vector field, zero on the boundary
///  - PressureP1      continuous P1 with zero mean
enum class SpaceKind { ScalarP1, VectorP1Sigma, VelocityMini, PressureP1 };

/// Degree-of-freedom layout of one discrete space.
///
/// Vector spaces are numbered component-blocked: dof = comp * n_scalar_dofs + s,
/// where s runs over vertices (and then elements, for bubbles). Local element
/// dofs are ordered comp * n_local_scalar + a.
struct DofLayout {
    SpaceKind kind = SpaceKind::ScalarP1;
    std::size_t n_components = 1;
    std::size_t n_local_scalar = 3;  // 3 for P1, 4 with the bubble
    std::size_t n_scalar_dofs = 0;   // per component
    std::size_t n_dofs = 0;
    std::vector<std::size_t> element_dofs;  // n_triangles * dofs_per_element()
    std::vector<std::size_t> constrained_dofs;  // sorted, prescribed value 0
    std::vector<bool> is_constrained;
    bool mean_constraint = false;

    std::size_t dofs_per_element() const { return n_components * n_local_scalar; }

    std::span<const std::size_t> local_dofs(std::size_t elem) const {
        return std::span<const std::size_t>(element_dofs).subspan(elem * dofs_per_element(), dofs_per_element());
    }

    /// Dimension of the linear system including the mean multiplier.
    std::size_t system_size() const { return n_dofs + (mean_constraint ? 1 : 0); }

    bool has_bubble() const { return n_local_scalar == 4; }
};

inline DofLayout build_layout(const Mesh& mesh, SpaceKind kind, bool zero_mean = false) {
    DofLayout L;
    L.kind = kind;
    const std::size_t nn = mesh.n_nodes();
    const std::size_t nt = mesh.n_triangles();

    switch (kind) {
    case SpaceKind::ScalarP1:
        L.mean_constraint = zero_mean;
        break;
    case SpaceKind::PressureP1:
        L.mean_constraint = true;
        break;
    case SpaceKind::VectorP1Sigma:
        L.n_components = 2;
        break;
    case SpaceKind::VelocityMini:
        L.n_components = 2;
        L.n_local_scalar = 4;
        break;
    }
    L.n_scalar_dofs = nn + (L.has_bubble() ? nt : 0);
    L.n_dofs = L.n_components * L.n_scalar_dofs;

    L.element_dofs.reserve(nt * L.dofs_per_element());
    for (std::size_t e = 0; e < nt; ++e) {
        const auto& tri = mesh.triangles[e];
        for (std::size_t c = 0; c < L.n_components; ++c) {
            const std::size_t offset = c * L.n_scalar_dofs;
            for (int a = 0; a < 3; ++a) {
                L.element_dofs.push_back(offset + tri[a]);
            }
            if (L.has_bubble()) {
                L.element_dofs.push_back(offset + nn + e);
            }
        }
    }

    L.is_constrained.assign(L.n_dofs, false);
    const auto boundary = classify_boundary(mesh);
    auto constrain = [&L](std::size_t dof) { L.is_constrained[dof] = true; };
    if (kind == SpaceKind::VelocityMini) {
        for (std::size_t node : boundary.all) {
            constrain(node);
            constrain(L.n_scalar_dofs + node);
        }
    } else if (kind == SpaceKind::VectorP1Sigma) {
        for (std::size_t node : boundary.corners) {
            constrain(node);
            constrain(L.n_scalar_dofs + node);
        }
        // x-normal sides pin the x component, y-normal sides the y component
        for (Side s : {Side::Left, Side::Right}) {
            for (std::size_t node : boundary.sides[static_cast<int>(s)]) {
                constrain(node);
            }
        }
        for (Side s : {Side::Bottom, Side::Top}) {
            for (std::size_t node : boundary.sides[static_cast<int>(s)]) {
                constrain(L.n_scalar_dofs + node);
            }
        }
    }
    for (std::size_t d = 0; d < L.n_dofs; ++d) {
        if (L.is_constrained[d]) {
            L.constrained_dofs.push_back(d);
        }
    }
    return L;
}

/// Value and physical gradient of one scalar shape function.
struct BasisValue {
    double value = 0.0;
    Vec2 gradient{};
};

/// Scalar shape functions of a space on one element: the three barycentric
/// coordinates, followed by the bubble 27 l0 l1 l2 for the MINI velocity.
/// Vector spaces use the same scalar functions in every component.
struct LocalBasis {
    std::array<BasisValue, 4> phi{};
    std::size_t size = 3;
};

inline LocalBasis eval_basis(SpaceKind kind, const ElementGeometry& geom, const std::array<double, 3>& bary) {
    LocalBasis b;
    for (int a = 0; a < 3; ++a) {
        b.phi[a] = {bary[a], geom.grad_bary[a]};
    }
    if (kind == SpaceKind::VelocityMini) {
        b.size = 4;
        const double l0 = bary[0];
        const double l1 = bary[1];
        const double l2 = bary[2];
        b.phi[3].value = 27.0 * l0 * l1 * l2;
        b.phi[3].gradient =
            27.0 * (l1 * l2 * geom.grad_bary[0] + l0 * l2 * geom.grad_bary[1] + l0 * l1 * geom.grad_bary[2]);
    }
    return b;
}

/// Integral of every scalar basis function (P1 vertex functions only): |K|/3 per vertex.
inline std::vector<double> p1_basis_integrals(const Mesh& mesh) {
    std::vector<double> m(mesh.n_nodes(), 0.0);
    for (std::size_t e = 0; e < mesh.n_triangles(); ++e) {
        const auto g = element_geometry(mesh, e);
        for (std::size_t node : mesh.triangles[e]) {
            m[node] += g.area / 3.0;
        }
    }
    return m;
}

} // namespace chemofem
