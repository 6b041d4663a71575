#ifndef CSTSIM_LINALG_HPP
#define CSTSIM_LINALG_HPP

// Small dense linear algebra: 3-vectors for spin dynamics and a row-major
// matrix with LU (partial pivoting) for the steady-state and fit solves.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cstsim/errors.hpp"

namespace cstsim {

using Vec3 = std::array<double, 3>;

constexpr Vec3 operator+(const Vec3& a, const Vec3& b) noexcept {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
constexpr Vec3 operator-(const Vec3& a, const Vec3& b) noexcept {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
constexpr Vec3 operator*(double s, const Vec3& a) noexcept { return {s * a[0], s * a[1], s * a[2]}; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) noexcept {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
constexpr double dot(const Vec3& a, const Vec3& b) noexcept {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double norm(const Vec3& a) noexcept { return std::sqrt(dot(a, a)); }

/// Row-major dense matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    /// Maximum absolute column sum.
    double norm1() const noexcept {
        double best = 0.0;
        for (std::size_t c = 0; c < cols_; ++c) {
            double s = 0.0;
            for (std::size_t r = 0; r < rows_; ++r) s += std::abs((*this)(r, c));
            best = std::max(best, s);
        }
        return best;
    }

    std::vector<double> operator*(std::span<const double> x) const {
        std::vector<double> y(rows_, 0.0);
        for (std::size_t r = 0; r < rows_; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < cols_; ++c) s += (*this)(r, c) * x[c];
            y[r] = s;
        }
        return y;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// LU factorisation with partial pivoting. Throws SingularSystem when a pivot
/// vanishes or the 1-norm condition estimate exceeds `max_condition`.
class LuDecomposition {
public:
    explicit LuDecomposition(Matrix a, double max_condition = 1e14) : lu_(std::move(a)) {
        const std::size_t n = lu_.rows();
        if (n != lu_.cols()) throw DomainError("LU: matrix must be square");
        const double anorm = lu_.norm1();
        perm_.resize(n);
        for (std::size_t i = 0; i < n; ++i) perm_[i] = i;

        for (std::size_t k = 0; k < n; ++k) {
            std::size_t piv = k;
            double best = std::abs(lu_(k, k));
            for (std::size_t r = k + 1; r < n; ++r) {
                if (std::abs(lu_(r, k)) > best) {
                    best = std::abs(lu_(r, k));
                    piv = r;
                }
            }
            if (best == 0.0 || !std::isfinite(best)) throw SingularSystem("LU: zero pivot in column " + std::to_string(k));
            if (piv != k) {
                for (std::size_t c = 0; c < n; ++c) std::swap(lu_(k, c), lu_(piv, c));
                std::swap(perm_[k], perm_[piv]);
            }
            const double inv = 1.0 / lu_(k, k);
            for (std::size_t r = k + 1; r < n; ++r) {
                const double f = lu_(r, k) * inv;
                lu_(r, k) = f;
                if (f == 0.0) continue;
                for (std::size_t c = k + 1; c < n; ++c) lu_(r, c) -= f * lu_(k, c);
            }
        }

        condition_ = anorm * inverse().norm1();
        if (!(condition_ <= max_condition))
            throw SingularSystem("LU: condition estimate " + std::to_string(condition_) + " exceeds limit");
    }

    std::size_t size() const noexcept { return lu_.rows(); }
    double condition() const noexcept { return condition_; }

    std::vector<double> solve(std::span<const double> b) const {
        const std::size_t n = size();
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
        for (std::size_t i = n; i-- > 0;) {
            for (std::size_t j = i + 1; j < n; ++j) x[i] -= lu_(i, j) * x[j];
            x[i] /= lu_(i, i);
        }
        return x;
    }

    Matrix inverse() const {
        const std::size_t n = size();
        Matrix inv(n, n);
        std::vector<double> e(n, 0.0);
        for (std::size_t c = 0; c < n; ++c) {
            std::fill(e.begin(), e.end(), 0.0);
            e[c] = 1.0;
            const auto col = solve(e);
            for (std::size_t r = 0; r < n; ++r) inv(r, c) = col[r];
        }
        return inv;
    }

private:
    Matrix lu_;
    std::vector<std::size_t> perm_;
    double condition_ = 0.0;
};

inline std::vector<double> solve_linear(const Matrix& a, std::span<const double> b, double max_condition = 1e14) {
    return LuDecomposition(a, max_condition).solve(b);
}

}  // namespace cstsim

#endif
