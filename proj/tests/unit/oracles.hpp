#pragma once

#include "chemofem/mesh.hpp"
#include "chemofem/sparse.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

using Dense = std::vector<std::vector<double>>;

inline Dense to_dense(const chemofem::SparseMatrix& A) {
    Dense d(A.rows(), std::vector<double>(A.cols(), 0.0));
    for (const auto& t : A.to_triplets()) d[t.row][t.col] += t.value;
    return d;
}

// Gaussian elimination with partial pivoting.
inline std::vector<double> dense_solve(Dense A, std::vector<double> b) {
    const std::size_t n = A.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(A[i][k]) > std::abs(A[p][k])) p = i;
        if (A[p][k] == 0.0) throw std::runtime_error("dense_solve: singular");
        std::swap(A[k], A[p]);
        std::swap(b[k], b[p]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = A[i][k] / A[k][k];
            for (std::size_t j = k; j < n; ++j) A[i][j] -= f * A[k][j];
            b[i] -= f * b[k];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= A[i][j] * x[j];
        x[i] = s / A[i][i];
    }
    return x;
}

inline double quad_form(const chemofem::SparseMatrix& A, const std::vector<double>& x) {
    const auto Ax = A.multiply(x);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * Ax[i];
    return s;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> U(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = U(rng);
    return v;
}

// One-triangle mesh with the given vertices.
inline chemofem::Mesh single_triangle(chemofem::Vec2 a, chemofem::Vec2 b, chemofem::Vec2 c) {
    chemofem::Mesh m;
    m.nodes = {a, b, c};
    m.triangles = {{0, 1, 2}};
    return m;
}

inline double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

// Integral of x^a y^b over the reference triangle (0,0),(1,0),(0,1).
inline double reference_monomial(int a, int b) { return factorial(a) * factorial(b) / factorial(a + b + 2); }

// Tensor Gauss-Legendre on [0,1]^2 mapped through the Duffy collapse, with
// nodes from Newton iteration on Legendre polynomials.
inline std::vector<std::pair<double, double>> gl_nodes(int n) {
    std::vector<std::pair<double, double>> out;
    for (int i = 1; i <= n; ++i) {
        double x = std::cos(M_PI * (i - 0.25) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        out.push_back({0.5 * (1.0 + x), 1.0 / ((1.0 - x * x) * dp * dp)});
    }
    return out;
}

// Brute-force integral of f over a triangle using a high-order collapsed rule.
template <class F>
double triangle_integral(chemofem::Vec2 a, chemofem::Vec2 b, chemofem::Vec2 c, F&& f, int n = 20) {
    const auto g = gl_nodes(n);
    const double det = std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
    double s = 0.0;
    for (const auto& [u, wu] : g) {
        for (const auto& [v, wv] : g) {
            const double l1 = u;
            const double l2 = (1.0 - u) * v;
            const chemofem::Vec2 p = a + l1 * (b - a) + l2 * (c - a);
            s += wu * wv * (1.0 - u) * f(p);
        }
    }
    return s * det;
}

} // namespace oracle
