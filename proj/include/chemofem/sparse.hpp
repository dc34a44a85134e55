#pragma once

#include "chemofem/core.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace chemofem {

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row and no entry is stored twice.
class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), row_offsets_(rows + 1, 0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return values_.size(); }

    std::span<const std::size_t> row_offsets() const { return row_offsets_; }
    std::span<const std::size_t> col_indices() const { return col_indices_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    /// Entry (i,j), zero if not stored.
    double coeff(std::size_t i, std::size_t j) const {
        const auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
        const auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
        const auto it = std::lower_bound(first, last, j);
        if (it == last || *it != j) {
            return 0.0;
        }
        return values_[static_cast<std::size_t>(it - col_indices_.begin())];
    }

    std::vector<double> multiply(std::span<const double> x) const {
        if (x.size() != cols_) {
            throw DimensionMismatch("SparseMatrix::multiply: vector length does not match column count");
        }
        std::vector<double> y(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
                s += values_[k] * x[col_indices_[k]];
            }
            y[i] = s;
        }
        return y;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double v : values_) {
            s += v * v;
        }
        return std::sqrt(s);
    }

    /// Triplets of all stored entries, row-major.
    std::vector<Triplet> to_triplets() const {
        std::vector<Triplet> out;
        out.reserve(nnz());
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
                out.push_back({i, col_indices_[k], values_[k]});
            }
        }
        return out;
    }

    SparseMatrix transpose() const;

    SparseMatrix scaled(double s) const {
        SparseMatrix out = *this;
        for (double& v : out.values_) {
            v *= s;
        }
        return out;
    }

    /// a*A + b*B for matrices of equal shape.
    friend SparseMatrix linear_combination(double a, const SparseMatrix& A, double b, const SparseMatrix& B);

    friend SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_offsets_{0};
    std::vector<std::size_t> col_indices_;
    std::vector<double> values_;
};

/// Builds a CSR matrix, summing duplicate (row, col) entries.
inline SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries) {
    for (const auto& t : entries) {
        if (t.row >= rows || t.col >= cols) {
            throw InvalidArgument("from_triplets: index (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                                  ") out of range");
        }
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    SparseMatrix m(rows, cols);
    m.col_indices_.reserve(entries.size());
    m.values_.reserve(entries.size());
    std::size_t k = 0;
    while (k < entries.size()) {
        const std::size_t r = entries[k].row;
        const std::size_t c = entries[k].col;
        double v = 0.0;
        while (k < entries.size() && entries[k].row == r && entries[k].col == c) {
            v += entries[k].value;
            ++k;
        }
        m.col_indices_.push_back(c);
        m.values_.push_back(v);
        ++m.row_offsets_[r + 1];
    }
    std::partial_sum(m.row_offsets_.begin(), m.row_offsets_.end(), m.row_offsets_.begin());
    return m;
}

inline SparseMatrix SparseMatrix::transpose() const {
    std::vector<Triplet> t;
    t.reserve(nnz());
    for (const auto& e : to_triplets()) {
        t.push_back({e.col, e.row, e.value});
    }
    return from_triplets(cols_, rows_, std::move(t));
}

inline SparseMatrix linear_combination(double a, const SparseMatrix& A, double b, const SparseMatrix& B) {
    if (A.rows() != B.rows() || A.cols() != B.cols()) {
        throw DimensionMismatch("linear_combination: shape mismatch");
    }
    std::vector<Triplet> t;
    t.reserve(A.nnz() + B.nnz());
    for (const auto& e : A.to_triplets()) {
        t.push_back({e.row, e.col, a * e.value});
    }
    for (const auto& e : B.to_triplets()) {
        t.push_back({e.row, e.col, b * e.value});
    }
    return from_triplets(A.rows(), A.cols(), std::move(t));
}

/// Writes the matrix in MatrixMarket coordinate format (1-based indices).
inline void write_matrix_market(const SparseMatrix& A, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("write_matrix_market: cannot open " + path);
    }
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << A.rows() << ' ' << A.cols() << ' ' << A.nnz() << '\n';
    out << std::setprecision(17);
    for (const auto& e : A.to_triplets()) {
        out << e.row + 1 << ' ' << e.col + 1 << ' ' << e.value << '\n';
    }
}

inline double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

struct SolveReport {
    double residual_norm = 0.0;
    double tolerance = 0.0;
    std::chrono::duration<double> factor_time{};
    std::chrono::duration<double> solve_time{};
};

/// Relative residual bound accepted by every solve.
inline constexpr double kSolveTolerance = 1e-10;

/// Direct sparse LU factorization, reusable across right-hand sides.
///
/// Throws SingularMatrixError when the factorization breaks down or when the
/// recomputed residual misses ||b - Ax|| <= 1e-10 (||A||_F ||x|| + ||b||).
class LuSolver {
public:
    explicit LuSolver(const SparseMatrix& A) : A_(A) {
        if (A.rows() != A.cols()) {
            throw DimensionMismatch("LuSolver: matrix must be square");
        }
        const auto t0 = std::chrono::steady_clock::now();
        Eigen::SparseMatrix<double, Eigen::ColMajor, int> m(static_cast<int>(A.rows()), static_cast<int>(A.cols()));
        std::vector<Eigen::Triplet<double, int>> t;
        t.reserve(A.nnz());
        for (const auto& e : A.to_triplets()) {
            t.emplace_back(static_cast<int>(e.row), static_cast<int>(e.col), e.value);
        }
        m.setFromTriplets(t.begin(), t.end());
        m.makeCompressed();
        lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double, Eigen::ColMajor, int>, Eigen::COLAMDOrdering<int>>>();
        lu_->analyzePattern(m);
        lu_->factorize(m);
        if (lu_->info() != Eigen::Success) {
            throw SingularMatrixError("LuSolver: factorization failed (" + lu_->lastErrorMessage() + ")");
        }
        norm_ = A.frobenius_norm();
        factor_time_ = std::chrono::steady_clock::now() - t0;
    }

    std::vector<double> solve(std::span<const double> b, SolveReport* report = nullptr) const {
        if (b.size() != A_.rows()) {
            throw DimensionMismatch("LuSolver::solve: right-hand side length mismatch");
        }
        const auto t0 = std::chrono::steady_clock::now();
        Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(b.size()));
        Eigen::VectorXd sol = lu_->solve(rhs);
        std::vector<double> x(sol.data(), sol.data() + sol.size());
        const auto t1 = std::chrono::steady_clock::now();

        const auto Ax = A_.multiply(x);
        double r2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = b[i] - Ax[i];
            r2 += d * d;
        }
        const double residual = std::sqrt(r2);
        const double tol = kSolveTolerance * (norm_ * norm2(x) + norm2(b));
        if (!std::isfinite(residual) || residual > tol) {
            throw SingularMatrixError("LuSolver: residual " + std::to_string(residual) + " exceeds tolerance " +
                                      std::to_string(tol) + " (matrix singular to working precision)");
        }
        if (report != nullptr) {
            report->residual_norm = residual;
            report->tolerance = tol;
            report->factor_time = factor_time_;
            report->solve_time = t1 - t0;
        }
        return x;
    }

    const SparseMatrix& matrix() const { return A_; }

private:
    SparseMatrix A_;
    double norm_ = 0.0;
    std::chrono::duration<double> factor_time_{};
    std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double, Eigen::ColMajor, int>, Eigen::COLAMDOrdering<int>>> lu_;
};

struct SolveResult {
    std::vector<double> x;
    SolveReport report;
};

inline SolveResult solve(const SparseMatrix& A, std::span<const double> b) {
    LuSolver lu(A);
    SolveResult out;
    out.x = lu.solve(b, &out.report);
    return out;
}

} // namespace chemofem
