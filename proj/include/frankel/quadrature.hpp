#pragma once

// One-dimensional quadrature and a couple of special functions.

#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include "frankel/core.hpp"

namespace frankel::quad {

struct SimpsonOptions {
    double abs_tol = 1e-10;
    long max_subdivisions = 1'000'000;
};

namespace detail {

struct SimpsonState {
    const std::function<double(double)>* f;
    long subdivisions = 0;
    long max_subdivisions;
    double worst_error = 0.0;
    bool exhausted = false;
};

inline double simpson_recurse(SimpsonState& st, double a, double b, double fa, double fm,
                              double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = (*st.f)(lm), frm = (*st.f)(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    ++st.subdivisions;
    if (std::abs(delta) <= 15.0 * tol || depth <= 0 ||
        st.subdivisions >= st.max_subdivisions || (m - a) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(m)) {
        if (std::abs(delta) > 15.0 * tol) {
            st.exhausted = true;
            st.worst_error = std::max(st.worst_error, std::abs(delta) / 15.0);
        }
        return left + right + delta / 15.0;
    }
    return simpson_recurse(st, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_recurse(st, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson integration of f over [a, b] to an absolute tolerance.
/// Throws QuadratureError (carrying the achieved error) when the subdivision
/// budget runs out first.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               SimpsonOptions opt = {}) {
    if (a == b) return 0.0;
    if (a > b) return -adaptive_simpson(f, b, a, opt);
    detail::SimpsonState st{&f, 0, opt.max_subdivisions};
    // Seed with a few panels so narrow features are not skipped by the first estimate.
    constexpr int seed_panels = 8;
    const double w = (b - a) / seed_panels;
    double total = 0.0;
    for (int i = 0; i < seed_panels; ++i) {
        const double lo = a + i * w, hi = (i + 1 == seed_panels) ? b : a + (i + 1) * w;
        const double flo = f(lo), fhi = f(hi), fm = f(0.5 * (lo + hi));
        const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
        total += detail::simpson_recurse(st, lo, hi, flo, fm, fhi, whole, opt.abs_tol / seed_panels, 60);
    }
    if (st.exhausted)
        throw QuadratureError("adaptive Simpson did not reach tolerance", st.worst_error);
    return total;
}

/// 20-point Gauss-Legendre nodes/weights on [-1, 1].
inline const std::array<std::pair<double, double>, 20>& gauss_legendre_20() {
    static const std::array<std::pair<double, double>, 20> rule = [] {
        std::array<std::pair<double, double>, 20> r{};
        constexpr int n = 20;
        for (int i = 0; i < n; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
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
            r[i] = {x, 2.0 / ((1.0 - x * x) * dp * dp)};
        }
        return r;
    }();
    return rule;
}

/// Composite Gauss-Legendre over `panels` equal panels of [a, b]. The result
/// depends smoothly on a and b, which makes it safe to difference numerically.
inline double gauss_legendre(const std::function<double(double)>& f, double a, double b,
                             int panels = 16) {
    const auto& rule = gauss_legendre_20();
    const double w = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double c = a + (p + 0.5) * w;
        double s = 0.0;
        for (const auto& [x, wt] : rule) s += wt * f(c + 0.5 * w * x);
        total += 0.5 * w * s;
    }
    return total;
}

/// Regularized lower incomplete gamma P(s, x).
inline double regularized_gamma_p(double s, double x) {
    if (x <= 0.0) return 0.0;
    if (x < s + 1.0) {
        double term = 1.0 / s, sum = term;
        for (int k = 1; k < 1000; ++k) {
            term *= x / (s + k);
            sum += term;
            if (term < sum * 1e-17) break;
        }
        return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
    }
    // Continued fraction for Q(s, x) (modified Lentz).
    const double tiny = 1e-300;
    double b = x + 1.0 - s, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -i * (i - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return 1.0 - std::exp(-x + s * std::log(x) - std::lgamma(s)) * h;
}

/// Standard Gaussian mass of the ball of radius L in R^d, i.e.
/// integral over |y| <= L of exp(-|y|^2/2) dy.
inline double gaussian_ball_mass(int d, double L) {
    if (d == 0) return 1.0;
    const double full = std::pow(2.0 * std::numbers::pi, 0.5 * d);
    if (!std::isfinite(L)) return full;
    if (L <= 0.0) return 0.0;
    return full * regularized_gamma_p(0.5 * d, 0.5 * L * L);
}

}  // namespace frankel::quad
