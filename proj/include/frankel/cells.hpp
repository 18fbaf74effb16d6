#pragma once

// Volume integrals over regions {c_i > 0} cap B_R on the lattice h*Z^n.
// Cells crossed by a constraint are weighted by the volume fraction of the
// linearized constraint, computed in closed form.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "frankel/core.hpp"

namespace frankel::cells {

using Level = std::function<double(const Point&)>;

/// Volume of {y in [0,1]^n : a + <g, y> > 0}.
inline double planar_fraction(double a, const Point& g) {
    const std::size_t n = g.size();
    double scale = 0.0;
    for (double v : g) scale = std::max(scale, std::abs(v));
    // Write the set as {sum m_i y_i < c} with m_i >= 0 after flipping axes.
    double c = a;
    std::vector<double> m;
    for (std::size_t i = 0; i < n; ++i) {
        const double mi = -g[i];
        if (std::abs(mi) <= 1e-5 * scale) continue;
        if (mi < 0.0) c -= mi;
        m.push_back(std::abs(mi));
    }
    const std::size_t d = m.size();
    if (d == 0) return a > 0.0 ? 1.0 : 0.0;
    double sum_m = 0.0, prod = 1.0, fact = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
        sum_m += m[i];
        prod *= m[i];
        fact *= static_cast<double>(i + 1);
    }
    if (c <= 0.0) return 0.0;
    if (c >= sum_m) return 1.0;
    double vol = 0.0;
    for (std::size_t v = 0; v < (std::size_t{1} << d); ++v) {
        double s = c;
        int bits = 0;
        for (std::size_t i = 0; i < d; ++i)
            if ((v >> i) & 1u) {
                s -= m[i];
                ++bits;
            }
        if (s > 0.0) vol += (bits % 2 ? -1.0 : 1.0) * std::pow(s, static_cast<double>(d));
    }
    return std::clamp(vol / (fact * prod), 0.0, 1.0);
}

struct Region {
    std::size_t dim = 2;
    double h = 0.0625;
    double radius = 1.0;             ///< the ball B_radius is always imposed
    std::vector<Level> constraints;  ///< region is where every constraint is positive
    int refine = 2;                  ///< subdivisions per axis in cut cells
};

namespace detail {

/// Fraction of the box [lo, lo + w]^n where all constraints hold.
inline double box_fraction(const std::vector<Level>& cons, const Point& lo, double w, std::size_t n,
                           bool* cut = nullptr) {
    const std::size_t nc = std::size_t{1} << n;
    std::vector<double> vals(nc);
    double frac = 1.0;
    bool any_cut = false;
    Point x(n);
    for (const auto& c : cons) {
        bool all_pos = true, all_neg = true;
        for (std::size_t v = 0; v < nc; ++v) {
            for (std::size_t d = 0; d < n; ++d) x[d] = lo[d] + (((v >> d) & 1u) ? w : 0.0);
            vals[v] = c(x);
            all_pos = all_pos && vals[v] > 0.0;
            all_neg = all_neg && vals[v] <= 0.0;
        }
        if (all_pos) continue;
        if (all_neg) {
            if (cut) *cut = false;
            return 0.0;
        }
        any_cut = true;
        // Linear fit: center value, gradient from averaged corner differences.
        for (std::size_t d = 0; d < n; ++d) x[d] = lo[d] + 0.5 * w;
        const double c0 = c(x);
        Point g(n, 0.0);
        for (std::size_t v = 0; v < nc; ++v)
            for (std::size_t d = 0; d < n; ++d) g[d] += (((v >> d) & 1u) ? 1.0 : -1.0) * vals[v];
        double a = c0;
        for (std::size_t d = 0; d < n; ++d) {
            g[d] /= static_cast<double>(nc / 2);
            a -= 0.5 * g[d];
        }
        frac *= planar_fraction(a, g);
    }
    if (cut) *cut = any_cut;
    return frac;
}

}  // namespace detail

/// Calls visit(x, weight) for the quadrature nodes of the region: cell
/// centers with weight h^n times the cell's volume fraction; cut cells are
/// subdivided `refine` times per axis first.
template <class Visit>
void for_each_node(const Region& r, Visit&& visit) {
    const std::size_t n = r.dim;
    const double h = r.h;
    std::vector<Level> cons = r.constraints;
    const double R = r.radius;
    cons.push_back([R](const Point& x) { return R - norm(x); });
    const long N = static_cast<long>(std::ceil(R / h)) + 1;
    const int s = std::max(1, r.refine);
    const double hs = h / s;
    const double cell_vol = std::pow(h, static_cast<double>(n)), sub_vol = std::pow(hs, static_cast<double>(n));
    std::vector<long> j(n, -N);
    Point lo(n), x(n);
    while (true) {
        for (std::size_t d = 0; d < n; ++d) lo[d] = static_cast<double>(j[d]) * h;
        bool cut = false;
        const double f = detail::box_fraction(cons, lo, h, n, &cut);
        if (f > 0.0) {
            if (!cut || s == 1) {
                for (std::size_t d = 0; d < n; ++d) x[d] = lo[d] + 0.5 * h;
                visit(x, f * cell_vol);
            } else {
                std::vector<int> k(n, 0);
                Point slo(n);
                while (true) {
                    for (std::size_t d = 0; d < n; ++d) slo[d] = lo[d] + k[d] * hs;
                    const double fs = detail::box_fraction(cons, slo, hs, n);
                    if (fs > 0.0) {
                        for (std::size_t d = 0; d < n; ++d) x[d] = slo[d] + 0.5 * hs;
                        visit(x, fs * sub_vol);
                    }
                    std::size_t d = 0;
                    while (d < n && ++k[d] == s) k[d++] = 0;
                    if (d == n) break;
                }
            }
        }
        std::size_t d = 0;
        while (d < n && ++j[d] == N) j[d++] = -N;
        if (d == n) break;
    }
}

/// Integral of g over the region.
template <class G>
double integrate(const Region& r, G&& g) {
    double total = 0.0;
    for_each_node(r, [&](const Point& x, double w) { total += w * g(x); });
    return total;
}

}  // namespace frankel::cells
