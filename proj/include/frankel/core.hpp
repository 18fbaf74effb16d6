#pragma once

// Shared vocabulary: points in R^n, error types, small vector helpers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace frankel {

/// A point (or vector) of the ambient Euclidean space R^n, n = m + 1.
using Point = std::vector<double>;

//---------------------------------------------------------------------------//
// Errors
//---------------------------------------------------------------------------//

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input to an operation (empty annulus, too few radii, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A finite-difference stencil left the declared domain of a field.
class BoundaryStencilError : public Error {
public:
    using Error::Error;
};

/// The discrete system has no Dirichlet data; only constants solve it.
class SingularSystemError : public Error {
public:
    using Error::Error;
};

/// Iterative process stopped without meeting its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> history)
        : Error(what), history_(std::move(history)) {}
    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

/// Adaptive quadrature could not reach the requested tolerance.
class QuadratureError : public Error {
public:
    QuadratureError(const std::string& what, double achieved)
        : Error(what), achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// A geometric quantity required by an evaluation is not available.
class MissingQuantityError : public Error {
public:
    using Error::Error;
};

/// A checked invariant failed at run time (CLI maps this to exit status 2).
class ContractViolation : public Error {
public:
    using Error::Error;
};

//---------------------------------------------------------------------------//
// Vector helpers
//---------------------------------------------------------------------------//

inline double dot(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const Point& a) { return std::sqrt(dot(a, a)); }

inline double norm_sq(const Point& a) { return dot(a, a); }

inline Point operator+(Point a, const Point& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

inline Point operator-(Point a, const Point& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}

inline Point operator*(double s, Point a) {
    for (auto& x : a) x *= s;
    return a;
}

inline Point unit_vector(std::size_t n, std::size_t axis) {
    Point e(n, 0.0);
    e[axis] = 1.0;
    return e;
}

inline Point normalized(Point a) {
    const double r = norm(a);
    for (auto& x : a) x /= r;
    return a;
}

inline bool all_finite(const Point& p) {
    for (double x : p)
        if (!std::isfinite(x)) return false;
    return true;
}

/// Dense square matrix in row-major order; only used for tiny (m x m) forms.
struct Matrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double v = 0.0) : rows(r), cols(c), a(r * c, v) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    double trace() const {
        double t = 0.0;
        for (std::size_t i = 0; i < rows && i < cols; ++i) t += (*this)(i, i);
        return t;
    }
};

/// Inverse of a small symmetric positive definite matrix by Gauss-Jordan.
inline Matrix inverse(Matrix m) {
    const std::size_t n = m.rows;
    Matrix inv(n, n);
    for (std::size_t i = 0; i < n; ++i) inv(i, i) = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(m(r, c)) > std::abs(m(piv, c))) piv = r;
        if (std::abs(m(piv, c)) < 1e-300) throw Error("singular matrix");
        if (piv != c)
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(m(c, j), m(piv, j));
                std::swap(inv(c, j), inv(piv, j));
            }
        const double d = m(c, c);
        for (std::size_t j = 0; j < n; ++j) {
            m(c, j) /= d;
            inv(c, j) /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = m(r, c);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                m(r, j) -= f * m(c, j);
                inv(r, j) -= f * inv(c, j);
            }
        }
    }
    return inv;
}

inline double determinant(Matrix m) {
    const std::size_t n = m.rows;
    double det = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(m(r, c)) > std::abs(m(piv, c))) piv = r;
        if (m(piv, c) == 0.0) return 0.0;
        if (piv != c) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(c, j), m(piv, j));
            det = -det;
        }
        det *= m(c, c);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = m(r, c) / m(c, c);
            for (std::size_t j = c; j < n; ++j) m(r, j) -= f * m(c, j);
        }
    }
    return det;
}

/// Orthonormal basis of the orthogonal complement of the unit vector `nu`.
inline std::vector<Point> tangent_frame(const Point& nu) {
    const std::size_t n = nu.size();
    std::vector<Point> frame;
    // Start from the coordinate axes ordered by how little they overlap with nu.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return std::abs(nu[a]) < std::abs(nu[b]); });
    for (std::size_t idx : order) {
        if (frame.size() + 1 == n) break;
        Point v = unit_vector(n, idx);
        v = v - dot(v, nu) * nu;
        for (const auto& e : frame) v = v - dot(v, e) * e;
        const double r = norm(v);
        if (r < 1e-8) continue;
        frame.push_back((1.0 / r) * v);
    }
    return frame;
}

/// Surface area of the unit sphere S^{d-1} in R^d.
inline double unit_sphere_area(int d) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

}  // namespace frankel
