#pragma once

#include "chemofem/core.hpp"
#include "chemofem/fem_spaces.hpp"
#include "chemofem/mesh.hpp"

#include <array>
#include <functional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace chemofem {

/// Closed-form scalar field f(x, t) with its spatial derivatives.
/// `hessian` may be left empty when no consumer needs it.
struct ScalarFunction {
    std::function<double(Vec2, double)> value;
    std::function<Vec2(Vec2, double)> gradient;
    std::function<Mat2(Vec2, double)> hessian;

    static ScalarFunction constant(double c) {
        return {[c](Vec2, double) { return c; }, [](Vec2, double) { return Vec2{}; },
                [](Vec2, double) { return Mat2{}; }};
    }
};

/// Closed-form vector field with its Jacobian (rows = component gradients).
struct VectorFunction {
    std::function<Vec2(Vec2, double)> value;
    std::function<Mat2(Vec2, double)> jacobian;

    static VectorFunction constant(Vec2 c) {
        return {[c](Vec2, double) { return c; }, [](Vec2, double) { return Mat2{}; }};
    }

    /// The gradient field of a scalar function (needs its Hessian).
    static VectorFunction gradient_of(const ScalarFunction& f) {
        return {f.gradient, f.hessian};
    }
};

/// Finite element coefficient vector tied to its layout.
struct DiscreteField {
    const DofLayout* layout = nullptr;
    std::span<const double> coeffs;
};

struct ScalarSample {
    double value = 0.0;
    Vec2 gradient{};
};

struct VectorSample {
    Vec2 value{};
    Mat2 jacobian{};
};

/// Sample of a discrete scalar field on element `elem`.
inline ScalarSample sample_scalar(const DiscreteField& f, std::size_t elem, const LocalBasis& basis) {
    ScalarSample s;
    const auto dofs = f.layout->local_dofs(elem);
    for (std::size_t a = 0; a < f.layout->n_local_scalar; ++a) {
        const double c = f.coeffs[dofs[a]];
        s.value += c * basis.phi[a].value;
        s.gradient += c * basis.phi[a].gradient;
    }
    return s;
}

inline VectorSample sample_vector(const DiscreteField& f, std::size_t elem, const LocalBasis& basis) {
    VectorSample s;
    const auto dofs = f.layout->local_dofs(elem);
    const std::size_t nl = f.layout->n_local_scalar;
    double v[2] = {0.0, 0.0};
    for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t a = 0; a < nl; ++a) {
            const double coef = f.coeffs[dofs[c * nl + a]];
            v[c] += coef * basis.phi[a].value;
            s.jacobian.rows[c] += coef * basis.phi[a].gradient;
        }
    }
    s.value = {v[0], v[1]};
    return s;
}

/// A scalar field that is either discrete or analytic, evaluable at quadrature points.
class ScalarField {
public:
    ScalarField(DiscreteField f) : impl_(f) {}
    ScalarField(ScalarFunction f, double t = 0.0) : impl_(std::move(f)), t_(t) {}

    static ScalarField zero() { return ScalarField(ScalarFunction::constant(0.0)); }

    ScalarSample eval(std::size_t elem, const ElementGeometry& geom, const std::array<double, 3>& bary) const {
        if (const auto* d = std::get_if<DiscreteField>(&impl_)) {
            return sample_scalar(*d, elem, eval_basis(d->layout->kind, geom, bary));
        }
        const auto& f = std::get<ScalarFunction>(impl_);
        const Vec2 x = geom.point(bary);
        return {f.value(x, t_), f.gradient ? f.gradient(x, t_) : Vec2{}};
    }

private:
    std::variant<DiscreteField, ScalarFunction> impl_;
    double t_ = 0.0;
};

class VectorField {
public:
    VectorField(DiscreteField f) : impl_(f) {}
    VectorField(VectorFunction f, double t = 0.0) : impl_(std::move(f)), t_(t) {}

    static VectorField zero() { return VectorField(VectorFunction::constant({0.0, 0.0})); }

    VectorSample eval(std::size_t elem, const ElementGeometry& geom, const std::array<double, 3>& bary) const {
        if (const auto* d = std::get_if<DiscreteField>(&impl_)) {
            return sample_vector(*d, elem, eval_basis(d->layout->kind, geom, bary));
        }
        const auto& f = std::get<VectorFunction>(impl_);
        const Vec2 x = geom.point(bary);
        return {f.value(x, t_), f.jacobian ? f.jacobian(x, t_) : Mat2{}};
    }

private:
    std::variant<DiscreteField, VectorFunction> impl_;
    double t_ = 0.0;
};

/// Vertex interpolation of a scalar function (bubble coefficients zero).
inline std::vector<double> interpolate_scalar(const Mesh& mesh, const DofLayout& layout,
                                              const std::function<double(Vec2, double)>& f, double t) {
    std::vector<double> out(layout.n_dofs, 0.0);
    for (std::size_t i = 0; i < mesh.n_nodes(); ++i) {
        out[i] = f(mesh.nodes[i], t);
    }
    return out;
}

inline std::vector<double> interpolate_vector(const Mesh& mesh, const DofLayout& layout,
                                              const std::function<Vec2(Vec2, double)>& f, double t) {
    std::vector<double> out(layout.n_dofs, 0.0);
    for (std::size_t i = 0; i < mesh.n_nodes(); ++i) {
        const Vec2 v = f(mesh.nodes[i], t);
        out[i] = v.x;
        out[layout.n_scalar_dofs + i] = v.y;
    }
    return out;
}

} // namespace chemofem
