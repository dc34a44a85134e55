#pragma once

#include "chemofem/core.hpp"
#include "chemofem/fem_spaces.hpp"
#include "chemofem/fields.hpp"
#include "chemofem/mesh.hpp"
#include "chemofem/quadrature.hpp"
#include "chemofem/sparse.hpp"

#include <algorithm>
#include <functional>
#include <span>
#include <vector>

namespace chemofem {

/// Square system matrix with its right-hand side.
struct LinearSystem {
    SparseMatrix matrix;
    std::vector<double> rhs;
};

/// Rule used by default for a layout: degree 2 covers P1 x P1 products,
/// anything involving the bubble is integrated with the degree-8 rule.
inline const TriangleRule& default_rule(const DofLayout& layout) {
    static const TriangleRule p1_rule = triangle_rule(2);
    return layout.has_bubble() ? rule_degree8() : p1_rule;
}

namespace detail {

/// Dense element matrix, row-major.
struct LocalMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    LocalMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    void clear() { std::fill(data.begin(), data.end(), 0.0); }
};

/// Quadrature-point context passed to element kernels.
struct QuadPoint {
    std::size_t elem;
    const ElementGeometry& geom;
    const std::array<double, 3>& bary;
    double weight;  // area * relative weight
};

/// Generic element loop. `kernel(qp, row_basis, col_basis, Ke)` accumulates
/// one quadrature point into the local matrix; a `finalize(Ke)` hook runs per element.
template <class Kernel, class Finalize>
SparseMatrix assemble_matrix(const Mesh& mesh, const DofLayout& row_layout, const DofLayout& col_layout,
                             const TriangleRule& rule, Kernel&& kernel, Finalize&& finalize) {
    const std::size_t nr = row_layout.dofs_per_element();
    const std::size_t nc = col_layout.dofs_per_element();
    std::vector<Triplet> triplets;
    triplets.reserve(mesh.n_triangles() * nr * nc);
    LocalMatrix Ke(nr, nc);
    for (std::size_t e = 0; e < mesh.n_triangles(); ++e) {
        const auto geom = element_geometry(mesh, e);
        Ke.clear();
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto rb = eval_basis(row_layout.kind, geom, rule.points[q]);
            const auto cb = eval_basis(col_layout.kind, geom, rule.points[q]);
            const QuadPoint qp{e, geom, rule.points[q], geom.area * rule.weights[q]};
            kernel(qp, rb, cb, Ke);
        }
        finalize(Ke);
        const auto rd = row_layout.local_dofs(e);
        const auto cd = col_layout.local_dofs(e);
        for (std::size_t i = 0; i < nr; ++i) {
            for (std::size_t j = 0; j < nc; ++j) {
                if (Ke(i, j) != 0.0) {
                    triplets.push_back({rd[i], cd[j], Ke(i, j)});
                }
            }
        }
    }
    return from_triplets(row_layout.n_dofs, col_layout.n_dofs, std::move(triplets));
}

template <class Kernel>
SparseMatrix assemble_matrix(const Mesh& mesh, const DofLayout& row_layout, const DofLayout& col_layout,
                             const TriangleRule& rule, Kernel&& kernel) {
    return assemble_matrix(mesh, row_layout, col_layout, rule, std::forward<Kernel>(kernel), [](LocalMatrix&) {});
}

/// Generic load-vector loop; `kernel(qp, basis, Fe)` accumulates into the local vector.
template <class Kernel>
std::vector<double> assemble_vector(const Mesh& mesh, const DofLayout& layout, const TriangleRule& rule,
                                    Kernel&& kernel) {
    const std::size_t n = layout.dofs_per_element();
    std::vector<double> F(layout.n_dofs, 0.0);
    std::vector<double> Fe(n);
    for (std::size_t e = 0; e < mesh.n_triangles(); ++e) {
        const auto geom = element_geometry(mesh, e);
        std::fill(Fe.begin(), Fe.end(), 0.0);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto b = eval_basis(layout.kind, geom, rule.points[q]);
            const QuadPoint qp{e, geom, rule.points[q], geom.area * rule.weights[q]};
            kernel(qp, b, Fe);
        }
        const auto dofs = layout.local_dofs(e);
        for (std::size_t i = 0; i < n; ++i) {
            F[dofs[i]] += Fe[i];
        }
    }
    return F;
}

/// Divergence of the vector test function (comp, a): d(phi_a)/dx_comp.
inline double div_of(const LocalBasis& b, std::size_t comp, std::size_t a) {
    return comp == 0 ? b.phi[a].gradient.x : b.phi[a].gradient.y;
}

/// Scalar rot of the vector test function (comp, a).
inline double rot_of(const LocalBasis& b, std::size_t comp, std::size_t a) {
    return comp == 0 ? -b.phi[a].gradient.y : b.phi[a].gradient.x;
}

} // namespace detail

/// (phi_j, phi_i), block-diagonal over components for vector layouts.
inline SparseMatrix assemble_mass(const Mesh& mesh, const DofLayout& layout) {
    const std::size_t nl = layout.n_local_scalar;
    return detail::assemble_matrix(
        mesh, layout, layout, default_rule(layout),
        [&](const detail::QuadPoint& qp, const LocalBasis& b, const LocalBasis&, detail::LocalMatrix& Ke) {
            for (std::size_t c = 0; c < layout.n_components; ++c) {
                for (std::size_t i = 0; i < nl; ++i) {
                    for (std::size_t j = 0; j < nl; ++j) {
                        Ke(c * nl + i, c * nl + j) += qp.weight * b.phi[i].value * b.phi[j].value;
                    }
                }
            }
        });
}

/// coeff * (grad phi_j, grad phi_i), componentwise for vector layouts.
inline SparseMatrix assemble_stiffness(const Mesh& mesh, const DofLayout& layout, double coeff) {
    const std::size_t nl = layout.n_local_scalar;
    return detail::assemble_matrix(
        mesh, layout, layout, default_rule(layout),
        [&](const detail::QuadPoint& qp, const LocalBasis& b, const LocalBasis&, detail::LocalMatrix& Ke) {
            for (std::size_t c = 0; c < layout.n_components; ++c) {
                for (std::size_t i = 0; i < nl; ++i) {
                    for (std::size_t j = 0; j < nl; ++j) {
                        Ke(c * nl + i, c * nl + j) +=
                            coeff * qp.weight * dot(b.phi[i].gradient, b.phi[j].gradient);
                    }
                }
            }
        });
}

/// coeff * [(div s, div t) + (rot s, rot t)] on a two-component layout.
inline SparseMatrix assemble_divrot(const Mesh& mesh, const DofLayout& layout, double coeff) {
    if (layout.n_components != 2) {
        throw InvalidArgument("assemble_divrot: layout must be vector valued");
    }
    const std::size_t nl = layout.n_local_scalar;
    return detail::assemble_matrix(
        mesh, layout, layout, default_rule(layout),
        [&](const detail::QuadPoint& qp, const LocalBasis& b, const LocalBasis&, detail::LocalMatrix& Ke) {
            for (std::size_t ci = 0; ci < 2; ++ci) {
                for (std::size_t i = 0; i < nl; ++i) {
                    const double di = detail::div_of(b, ci, i);
                    const double ri = detail::rot_of(b, ci, i);
                    for (std::size_t cj = 0; cj < 2; ++cj) {
                        for (std::size_t j = 0; j < nl; ++j) {
                            Ke(ci * nl + i, cj * nl + j) +=
                                coeff * qp.weight * (di * detail::div_of(b, cj, j) + ri * detail::rot_of(b, cj, j));
                        }
                    }
                }
            }
        });
}

namespace detail {

/// N_ij = 1/2 [((v.grad) phi_j, phi_i) - ((v.grad) phi_i, phi_j)] per component block.
/// The element matrix is formed as the difference of a convection matrix and
/// its transpose, so N is exactly antisymmetric in floating point.
inline SparseMatrix assemble_skew(const Mesh& mesh, const DofLayout& layout, const VectorField& velocity,
                                  const TriangleRule& rule) {
    const std::size_t nl = layout.n_local_scalar;
    std::vector<double> conv(nl * nl);
    return assemble_matrix(
        mesh, layout, layout, rule,
        [&](const QuadPoint& qp, const LocalBasis& b, const LocalBasis&, LocalMatrix& Ke) {
            const Vec2 v = velocity.eval(qp.elem, qp.geom, qp.bary).value;
            // Store the one-sided convection (v.grad phi_j, phi_i) in block 0;
            // antisymmetrized and replicated in finalize.
            for (std::size_t i = 0; i < nl; ++i) {
                for (std::size_t j = 0; j < nl; ++j) {
                    Ke(i, j) += qp.weight * dot(v, b.phi[j].gradient) * b.phi[i].value;
                }
            }
        },
        [&](LocalMatrix& Ke) {
            for (std::size_t i = 0; i < nl; ++i) {
                for (std::size_t j = 0; j < nl; ++j) {
                    conv[i * nl + j] = Ke(i, j);
                }
            }
            Ke.clear();
            for (std::size_t c = 0; c < layout.n_components; ++c) {
                for (std::size_t i = 0; i < nl; ++i) {
                    for (std::size_t j = 0; j < nl; ++j) {
                        Ke(c * nl + i, c * nl + j) = 0.5 * (conv[i * nl + j] - conv[j * nl + i]);
                    }
                }
            }
        });
}

} // namespace detail

/// Matrix of the skew-symmetric transport form A(v; w, wbar) on a scalar layout.
inline SparseMatrix assemble_skew_A(const Mesh& mesh, const DofLayout& layout, const VectorField& velocity,
                                    const TriangleRule& rule = rule_degree8()) {
    if (layout.n_components != 1) {
        throw InvalidArgument("assemble_skew_A: layout must be scalar");
    }
    return detail::assemble_skew(mesh, layout, velocity, rule);
}

/// Matrix of the skew-symmetric convection form B(v; u, ubar) on the velocity layout.
inline SparseMatrix assemble_skew_B(const Mesh& mesh, const DofLayout& layout, const VectorField& velocity,
                                    const TriangleRule& rule = rule_degree8()) {
    if (layout.n_components != 2) {
        throw InvalidArgument("assemble_skew_B: layout must be vector valued");
    }
    return detail::assemble_skew(mesh, layout, velocity, rule);
}

/// G[i][j] = (psi_j, div v_i) for velocity basis v_i and pressure basis psi_j.
inline SparseMatrix assemble_pressure_coupling(const Mesh& mesh, const DofLayout& layout_u,
                                               const DofLayout& layout_pi) {
    const std::size_t nl = layout_u.n_local_scalar;
    return detail::assemble_matrix(
        mesh, layout_u, layout_pi, rule_degree8(),
        [&](const detail::QuadPoint& qp, const LocalBasis& bu, const LocalBasis& bp, detail::LocalMatrix& Ke) {
            for (std::size_t c = 0; c < 2; ++c) {
                for (std::size_t i = 0; i < nl; ++i) {
                    const double d = detail::div_of(bu, c, i);
                    for (std::size_t j = 0; j < 3; ++j) {
                        Ke(c * nl + i, j) += qp.weight * d * bp.phi[j].value;
                    }
                }
            }
        });
}

/// chi ((n_prev + alpha) sigma_prev, grad nbar).
inline std::vector<double> assemble_chemo_rhs(const Mesh& mesh, const DofLayout& layout_n, const ScalarField& n_prev,
                                              const VectorField& sigma_prev, double chi, double alpha,
                                              const TriangleRule& rule = rule_degree8()) {
    return detail::assemble_vector(
        mesh, layout_n, rule, [&](const detail::QuadPoint& qp, const LocalBasis& b, std::vector<double>& Fe) {
            const double eta = n_prev.eval(qp.elem, qp.geom, qp.bary).value + alpha;
            const Vec2 flux = (chi * eta) * sigma_prev.eval(qp.elem, qp.geom, qp.bary).value;
            for (std::size_t i = 0; i < 3; ++i) {
                Fe[i] += qp.weight * dot(flux, b.phi[i].gradient);
            }
        });
}

/// (u_prev . sigma_prev + gamma (n_prev + alpha) c_prev, div sbar).
inline std::vector<double> assemble_sigma_rhs(const Mesh& mesh, const DofLayout& layout_sigma,
                                              const VectorField& u_prev, const VectorField& sigma_prev,
                                              const ScalarField& n_prev, const ScalarField& c_prev, double gamma,
                                              double alpha, const TriangleRule& rule = rule_degree8()) {
    const std::size_t nl = layout_sigma.n_local_scalar;
    return detail::assemble_vector(
        mesh, layout_sigma, rule, [&](const detail::QuadPoint& qp, const LocalBasis& b, std::vector<double>& Fe) {
            const Vec2 u = u_prev.eval(qp.elem, qp.geom, qp.bary).value;
            const Vec2 s = sigma_prev.eval(qp.elem, qp.geom, qp.bary).value;
            const double eta = n_prev.eval(qp.elem, qp.geom, qp.bary).value + alpha;
            const double c = c_prev.eval(qp.elem, qp.geom, qp.bary).value;
            const double g = dot(u, s) + gamma * eta * c;
            for (std::size_t comp = 0; comp < 2; ++comp) {
                for (std::size_t i = 0; i < nl; ++i) {
                    Fe[comp * nl + i] += qp.weight * g * detail::div_of(b, comp, i);
                }
            }
        });
}

/// -gamma ((n_prev + alpha) c_prev, cbar).
inline std::vector<double> assemble_consumption_rhs(const Mesh& mesh, const DofLayout& layout_c,
                                                    const ScalarField& n_prev, const ScalarField& c_prev,
                                                    double gamma, double alpha,
                                                    const TriangleRule& rule = rule_degree8()) {
    return detail::assemble_vector(
        mesh, layout_c, rule, [&](const detail::QuadPoint& qp, const LocalBasis& b, std::vector<double>& Fe) {
            const double eta = n_prev.eval(qp.elem, qp.geom, qp.bary).value + alpha;
            const double c = c_prev.eval(qp.elem, qp.geom, qp.bary).value;
            for (std::size_t i = 0; i < 3; ++i) {
                Fe[i] -= qp.weight * gamma * eta * c * b.phi[i].value;
            }
        });
}

/// (1/rho) ((n_prev + alpha) grad_phi, ubar).
inline std::vector<double> assemble_buoyancy_rhs(const Mesh& mesh, const DofLayout& layout_u,
                                                 const ScalarField& n_prev, const VectorField& grad_phi, double rho,
                                                 double alpha, const TriangleRule& rule = rule_degree8()) {
    const std::size_t nl = layout_u.n_local_scalar;
    return detail::assemble_vector(
        mesh, layout_u, rule, [&](const detail::QuadPoint& qp, const LocalBasis& b, std::vector<double>& Fe) {
            const double eta = n_prev.eval(qp.elem, qp.geom, qp.bary).value + alpha;
            const Vec2 f = (eta / rho) * grad_phi.eval(qp.elem, qp.geom, qp.bary).value;
            for (std::size_t i = 0; i < nl; ++i) {
                Fe[i] += qp.weight * f.x * b.phi[i].value;
                Fe[nl + i] += qp.weight * f.y * b.phi[i].value;
            }
        });
}

/// (f, phi_i) for a scalar layout.
inline std::vector<double> assemble_load(const Mesh& mesh, const DofLayout& layout,
                                         const std::function<double(Vec2)>& f,
                                         const TriangleRule& rule = rule_degree8()) {
    return detail::assemble_vector(
        mesh, layout, rule, [&](const detail::QuadPoint& qp, const LocalBasis& b, std::vector<double>& Fe) {
            const double v = f(qp.geom.point(qp.bary));
            for (std::size_t i = 0; i < layout.n_local_scalar; ++i) {
                Fe[i] += qp.weight * v * b.phi[i].value;
            }
        });
}

/// (f, v_i) for a vector layout.
inline std::vector<double> assemble_vector_load(const Mesh& mesh, const DofLayout& layout,
                                                const std::function<Vec2(Vec2)>& f,
                                                const TriangleRule& rule = rule_degree8()) {
    const std::size_t nl = layout.n_local_scalar;
    return detail::assemble_vector(
        mesh, layout, rule, [&](const detail::QuadPoint& qp, const LocalBasis& b, std::vector<double>& Fe) {
            const Vec2 v = f(qp.geom.point(qp.bary));
            for (std::size_t i = 0; i < nl; ++i) {
                Fe[i] += qp.weight * v.x * b.phi[i].value;
                Fe[nl + i] += qp.weight * v.y * b.phi[i].value;
            }
        });
}

/// (g, div v_i) for a vector layout.
inline std::vector<double> assemble_divergence_load(const Mesh& mesh, const DofLayout& layout,
                                                    const std::function<double(Vec2)>& g,
                                                    const TriangleRule& rule = rule_degree8()) {
    const std::size_t nl = layout.n_local_scalar;
    return detail::assemble_vector(
        mesh, layout, rule, [&](const detail::QuadPoint& qp, const LocalBasis& b, std::vector<double>& Fe) {
            const double v = g(qp.geom.point(qp.bary));
            for (std::size_t comp = 0; comp < 2; ++comp) {
                for (std::size_t i = 0; i < nl; ++i) {
                    Fe[comp * nl + i] += qp.weight * v * detail::div_of(b, comp, i);
                }
            }
        });
}

/// Integrals of the scalar basis functions of a P1 layout (the mean-constraint row).
inline std::vector<double> mean_constraint_row(const Mesh& mesh, const DofLayout& layout) {
    if (layout.n_components != 1 || layout.has_bubble()) {
        throw InvalidArgument("mean_constraint_row: layout must be scalar P1");
    }
    return p1_basis_integrals(mesh);
}

/// Replaces rows and columns of `dofs` by the identity and zeroes their rhs.
inline void constrain_dofs(LinearSystem& sys, std::span<const std::size_t> dofs) {
    if (dofs.empty()) {
        return;
    }
    const std::size_t n = sys.matrix.rows();
    std::vector<bool> mask(n, false);
    for (std::size_t d : dofs) {
        if (d >= n) {
            throw DimensionMismatch("constrain_dofs: constrained dof out of range");
        }
        mask[d] = true;
    }
    std::vector<Triplet> t;
    t.reserve(sys.matrix.nnz() + dofs.size());
    for (const auto& e : sys.matrix.to_triplets()) {
        if (!mask[e.row] && !mask[e.col]) {
            t.push_back(e);
        }
    }
    for (std::size_t d : dofs) {
        t.push_back({d, d, 1.0});
        sys.rhs[d] = 0.0;
    }
    sys.matrix = from_triplets(n, n, std::move(t));
}

/// Appends a bordering row/column `row` (with rhs `target`) to the system.
inline void append_constraint_row(LinearSystem& sys, std::span<const double> row, std::size_t offset = 0,
                                  double target = 0.0) {
    const std::size_t n = sys.matrix.rows();
    if (offset + row.size() > n) {
        throw DimensionMismatch("append_constraint_row: row longer than system");
    }
    auto t = sys.matrix.to_triplets();
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (row[i] != 0.0) {
            t.push_back({n, offset + i, row[i]});
            t.push_back({offset + i, n, row[i]});
        }
    }
    sys.matrix = from_triplets(n + 1, n + 1, std::move(t));
    sys.rhs.push_back(target);
}

/// Applies the layout's constraint protocol: identity rows/columns for
/// constrained dofs, and a mean multiplier row/column when flagged.
/// Applying the protocol twice gives the same system as applying it once.
inline LinearSystem apply_constraints(LinearSystem sys, const Mesh& mesh, const DofLayout& layout) {
    const std::size_t n = sys.matrix.rows();
    if (sys.matrix.cols() != n || sys.rhs.size() != n) {
        throw DimensionMismatch("apply_constraints: system is not square or rhs mismatched");
    }
    if (n != layout.n_dofs && n != layout.system_size()) {
        throw DimensionMismatch("apply_constraints: system size does not match the layout");
    }
    if (layout.mean_constraint && n == layout.n_dofs) {
        const auto row = mean_constraint_row(mesh, layout);
        append_constraint_row(sys, row);
    }
    constrain_dofs(sys, layout.constrained_dofs);
    return sys;
}

} // namespace chemofem
