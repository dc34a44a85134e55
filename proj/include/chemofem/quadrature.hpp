#pragma once

#include "chemofem/core.hpp"
#include "chemofem/mesh.hpp"

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace chemofem {

/// Quadrature rule on a triangle in barycentric coordinates.
///
/// Weights are relative to the element area and sum to one, so that
/// integral(f) ~= area * sum_q weights[q] * f(points[q]).
struct TriangleRule {
    int degree = 0;
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;

    std::size_t size() const { return weights.size(); }
};

namespace detail {

/// n-point Gauss-Legendre nodes/weights mapped to [0,1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre_01(int n) {
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

} // namespace detail

/// Collapsed Gauss-Legendre rule exact for total degree <= `degree`.
///
/// The reference triangle is the image of the unit square under
/// (s,t) -> (s, t(1-s)); the Jacobian factor (1-s) raises the degree in s by one.
inline TriangleRule triangle_rule(int degree) {
    if (degree < 1 || degree > 8) {
        throw InvalidArgument("triangle_rule: supported degrees are 1..8, got " + std::to_string(degree));
    }
    const int ns = (degree + 2 + 1) / 2;
    const int nt = (degree + 1 + 1) / 2;
    const auto [xs, ws] = detail::gauss_legendre_01(ns);
    const auto [xt, wt] = detail::gauss_legendre_01(nt);

    TriangleRule rule;
    rule.degree = degree;
    for (int i = 0; i < ns; ++i) {
        for (int j = 0; j < nt; ++j) {
            const double x = xs[i];
            const double y = xt[j] * (1.0 - xs[i]);
            rule.points.push_back({1.0 - x - y, x, y});
            rule.weights.push_back(2.0 * ws[i] * wt[j] * (1.0 - xs[i]));
        }
    }
    return rule;
}

/// Shared degree-8 rule used for nonlinear, bubble and forcing integrals.
inline const TriangleRule& rule_degree8() {
    static const TriangleRule rule = triangle_rule(8);
    return rule;
}

template <class F>
auto integrate(const TriangleRule& rule, const ElementGeometry& geom, F&& f) {
    using R = decltype(f(Vec2{}));
    R sum{};
    for (std::size_t q = 0; q < rule.size(); ++q) {
        sum += rule.weights[q] * f(geom.point(rule.points[q]));
    }
    return geom.area * sum;
}

/// Integral of f over the whole mesh.
template <class F>
double integrate_mesh(const Mesh& mesh, const TriangleRule& rule, F&& f) {
    double total = 0.0;
    for (std::size_t e = 0; e < mesh.n_triangles(); ++e) {
        total += integrate(rule, element_geometry(mesh, e), f);
    }
    return total;
}

} // namespace chemofem
