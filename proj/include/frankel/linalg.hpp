#pragma once

// Compressed sparse rows and a BiCGSTAB iteration.

#include <cmath>
#include <cstddef>
#include <vector>

#include "frankel/core.hpp"

namespace frankel {

struct SparseMatrix {
    std::size_t n = 0;
    std::vector<std::size_t> row_ptr{0};
    std::vector<std::size_t> col;
    std::vector<double> val;

    void push(std::size_t c, double v) {
        col.push_back(c);
        val.push_back(v);
    }
    void end_row() {
        row_ptr.push_back(col.size());
        ++n;
    }

    void multiply(const std::vector<double>& x, std::vector<double>& y) const {
        y.resize(n);
        for (std::size_t r = 0; r < n; ++r) {
            double s = 0.0;
            for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s += val[k] * x[col[k]];
            y[r] = s;
        }
    }

    double diagonal(std::size_t r) const {
        for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
            if (col[k] == r) return val[k];
        return 0.0;
    }

    /// Divides every row (and the matching right-hand side) by its diagonal.
    void scale_rows(std::vector<double>& rhs) {
        for (std::size_t r = 0; r < n; ++r) {
            const double d = diagonal(r);
            if (d == 0.0) throw SingularSystemError("zero diagonal entry in row " + std::to_string(r));
            for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) val[k] /= d;
            rhs[r] /= d;
        }
    }
};

struct KrylovResult {
    std::vector<double> x;
    std::size_t iterations = 0;
    double residual = 0.0;  ///< max-norm of b - A x
    std::vector<double> history;
    bool converged = false;
};

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// BiCGSTAB for a row-scaled system. Stops when the max-norm residual is
/// below `tol`; the final residual is recomputed from scratch.
inline KrylovResult bicgstab(const SparseMatrix& A, const std::vector<double>& b, std::vector<double> x0,
                             double tol, std::size_t max_iter) {
    const std::size_t n = A.n;
    auto dotv = [n](const std::vector<double>& a, const std::vector<double>& c) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i] * c[i];
        return s;
    };
    KrylovResult out;
    std::vector<double>& x = out.x;
    x = std::move(x0);
    x.resize(n, 0.0);
    std::vector<double> r(n), rhat, p(n, 0.0), v(n, 0.0), s(n), t(n), tmp;
    A.multiply(x, tmp);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - tmp[i];
    rhat = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    double res = max_abs(r);
    out.history.push_back(res);
    std::size_t it = 0;
    while (res > tol && it < max_iter) {
        ++it;
        double rho_new = dotv(rhat, r);
        if (std::abs(rho_new) < 1e-300) {  // breakdown: restart the shadow residual
            rhat = r;
            rho_new = dotv(rhat, r);
            std::fill(p.begin(), p.end(), 0.0);
            std::fill(v.begin(), v.end(), 0.0);
            rho = alpha = omega = 1.0;
        }
        const double beta = (rho_new / rho) * (alpha / omega);
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        A.multiply(p, v);
        alpha = rho_new / dotv(rhat, v);
        for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        if (max_abs(s) <= tol) {
            for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
            res = max_abs(s);
            out.history.push_back(res);
            break;
        }
        A.multiply(s, t);
        const double tt = dotv(t, t);
        omega = tt > 0.0 ? dotv(t, s) / tt : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        rho = rho_new;
        res = max_abs(r);
        out.history.push_back(res);
        if (omega == 0.0) break;
    }
    A.multiply(x, tmp);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - tmp[i];
    out.residual = max_abs(r);
    out.iterations = it;
    out.converged = out.residual <= tol;
    return out;
}

}  // namespace frankel
