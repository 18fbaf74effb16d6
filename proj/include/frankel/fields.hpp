#pragma once

// Scalar and vector fields on R^n, the Gaussian weight, finite-difference
// application of the weighted operators, and grid-backed fields.

#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "frankel/core.hpp"

namespace frankel {

/// Axis-aligned box [lo, hi].
struct Box {
    Point lo, hi;

    bool contains(const Point& p, double margin = 0.0) const {
        for (std::size_t i = 0; i < p.size(); ++i)
            if (p[i] - margin < lo[i] || p[i] + margin > hi[i]) return false;
        return true;
    }
};

/// The Gaussian weight f(x) = |x|^2/2 with density e^{-f}; Ric_f = K^2 = 1.
struct WeightSpec {
    static double f(const Point& x) { return 0.5 * norm_sq(x); }
    static double density(const Point& x) { return std::exp(-f(x)); }
    static Point grad_f(const Point& x) { return x; }
    static constexpr double ricci_lower_bound = 1.0;
};

class ScalarField {
public:
    using Fn = std::function<double(const Point&)>;

    ScalarField() = default;
    explicit ScalarField(Fn fn, std::optional<Box> domain = std::nullopt)
        : fn_(std::move(fn)), domain_(std::move(domain)) {}

    static ScalarField constant(double c) {
        return ScalarField([c](const Point&) { return c; });
    }

    double operator()(const Point& p) const { return fn_(p); }
    const std::optional<Box>& declared_domain() const noexcept { return domain_; }
    explicit operator bool() const noexcept { return static_cast<bool>(fn_); }

private:
    Fn fn_;
    std::optional<Box> domain_;
};

class VectorField {
public:
    using Fn = std::function<Point(const Point&)>;

    VectorField() = default;
    explicit VectorField(Fn fn, std::optional<Box> domain = std::nullopt)
        : fn_(std::move(fn)), domain_(std::move(domain)) {}

    Point operator()(const Point& p) const { return fn_(p); }
    const std::optional<Box>& declared_domain() const noexcept { return domain_; }

private:
    Fn fn_;
    std::optional<Box> domain_;
};

/// Default finite-difference step, relative to the distance from the origin
/// because the drift term grows linearly.
inline double default_step(const Point& p) { return 1e-4 * (1.0 + norm(p)); }

namespace detail {
inline void check_stencil(const std::optional<Box>& dom, const Point& p, double h) {
    if (!(h > 0.0)) throw ParameterError("finite-difference step must be positive");
    if (dom && !dom->contains(p, h)) throw BoundaryStencilError("stencil exits the declared domain of the field");
}
}  // namespace detail

/// Central-difference gradient, O(h^2).
inline Point gradient(const ScalarField& u, const Point& p, double h) {
    detail::check_stencil(u.declared_domain(), p, h);
    Point g(p.size());
    Point q = p;
    for (std::size_t i = 0; i < p.size(); ++i) {
        q[i] = p[i] + h;
        const double fp = u(q);
        q[i] = p[i] - h;
        const double fm = u(q);
        q[i] = p[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

inline Point gradient(const ScalarField& u, const Point& p) { return gradient(u, p, default_step(p)); }

/// Central-difference Laplacian.
inline double laplacian(const ScalarField& u, const Point& p, double h) {
    detail::check_stencil(u.declared_domain(), p, h);
    const double f0 = u(p);
    double lap = 0.0;
    Point q = p;
    for (std::size_t i = 0; i < p.size(); ++i) {
        q[i] = p[i] + h;
        const double fp = u(q);
        q[i] = p[i] - h;
        const double fm = u(q);
        q[i] = p[i];
        lap += (fp - 2.0 * f0 + fm) / (h * h);
    }
    return lap;
}

/// Ornstein-Uhlenbeck operator Delta u - <x, grad u> by central differences.
inline double weighted_laplacian(const ScalarField& u, const Point& p, double h) {
    return laplacian(u, p, h) - dot(p, gradient(u, p, h));
}

inline double weighted_laplacian(const ScalarField& u, const Point& p) {
    return weighted_laplacian(u, p, default_step(p));
}

/// Central-difference Hessian (symmetric, n x n).
inline Matrix hessian(const ScalarField& u, const Point& p, double h) {
    detail::check_stencil(u.declared_domain(), p, h);
    const std::size_t n = p.size();
    Matrix H(n, n);
    const double f0 = u(p);
    Point q = p;
    for (std::size_t i = 0; i < n; ++i) {
        q[i] = p[i] + h;
        const double fp = u(q);
        q[i] = p[i] - h;
        const double fm = u(q);
        q[i] = p[i];
        H(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (int si : {1, -1})
                for (int sj : {1, -1}) {
                    q[i] = p[i] + si * h;
                    q[j] = p[j] + sj * h;
                    s += si * sj * u(q);
                }
            q[i] = p[i];
            q[j] = p[j];
            H(i, j) = H(j, i) = s / (4.0 * h * h);
        }
    }
    return H;
}

/// Weighted divergence div X - <X, x> by central differences.
inline double weighted_divergence(const VectorField& X, const Point& p, double h) {
    detail::check_stencil(X.declared_domain(), p, h);
    double div = 0.0;
    Point q = p;
    for (std::size_t i = 0; i < p.size(); ++i) {
        q[i] = p[i] + h;
        const double fp = X(q)[i];
        q[i] = p[i] - h;
        const double fm = X(q)[i];
        q[i] = p[i];
        div += (fp - fm) / (2.0 * h);
    }
    return div - dot(X(p), p);
}

inline double weighted_divergence(const VectorField& X, const Point& p) {
    return weighted_divergence(X, p, default_step(p));
}

//---------------------------------------------------------------------------//
// Grid-backed fields
//---------------------------------------------------------------------------//

/// Values on a uniform tensor grid, row-major (last axis fastest).
class GridField {
public:
    GridField() = default;
    GridField(std::vector<std::size_t> dims, std::vector<double> spacing, Point origin)
        : dims_(std::move(dims)), spacing_(std::move(spacing)), origin_(std::move(origin)) {
        if (dims_.empty() || dims_.size() != spacing_.size() || dims_.size() != origin_.size())
            throw ParameterError("grid header dimensions disagree");
        std::size_t total = 1;
        for (auto d : dims_) {
            if (d < 2) throw ParameterError("grid needs at least two nodes per axis");
            total *= d;
        }
        for (double h : spacing_)
            if (!(h > 0.0)) throw ParameterError("grid spacing must be positive");
        values_.assign(total, 0.0);
    }

    std::size_t dim() const noexcept { return dims_.size(); }
    const std::vector<std::size_t>& dims() const noexcept { return dims_; }
    const std::vector<double>& spacing() const noexcept { return spacing_; }
    const Point& origin() const noexcept { return origin_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::vector<double>& values() noexcept { return values_; }
    const std::vector<double>& values() const noexcept { return values_; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    std::size_t flat(const std::vector<std::size_t>& idx) const {
        std::size_t f = 0;
        for (std::size_t d = 0; d < dims_.size(); ++d) f = f * dims_[d] + idx[d];
        return f;
    }

    std::vector<std::size_t> unflat(std::size_t f) const {
        std::vector<std::size_t> idx(dims_.size());
        for (std::size_t d = dims_.size(); d-- > 0;) {
            idx[d] = f % dims_[d];
            f /= dims_[d];
        }
        return idx;
    }

    Point node(const std::vector<std::size_t>& idx) const {
        Point p(dims_.size());
        for (std::size_t d = 0; d < dims_.size(); ++d) p[d] = origin_[d] + static_cast<double>(idx[d]) * spacing_[d];
        return p;
    }

    Box bounds() const {
        Box b{origin_, origin_};
        for (std::size_t d = 0; d < dims_.size(); ++d) b.hi[d] += static_cast<double>(dims_[d] - 1) * spacing_[d];
        return b;
    }

    /// Multilinear interpolation; exact at nodes. Points outside are clamped.
    double interpolate(const Point& p) const {
        const std::size_t n = dims_.size();
        std::vector<std::size_t> base(n);
        std::vector<double> frac(n);
        for (std::size_t d = 0; d < n; ++d) {
            double t = (p[d] - origin_[d]) / spacing_[d];
            t = std::clamp(t, 0.0, static_cast<double>(dims_[d] - 1));
            auto i = static_cast<std::size_t>(std::floor(t));
            if (i >= dims_[d] - 1) i = dims_[d] - 2;
            base[d] = i;
            frac[d] = t - static_cast<double>(i);
        }
        double v = 0.0;
        std::vector<std::size_t> idx(n);
        for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
            double w = 1.0;
            for (std::size_t d = 0; d < n; ++d) {
                const bool up = (corner >> d) & 1u;
                idx[d] = base[d] + (up ? 1 : 0);
                w *= up ? frac[d] : 1.0 - frac[d];
            }
            if (w != 0.0) v += w * values_[flat(idx)];
        }
        return v;
    }

    /// Gradient of the multilinear interpolant (one-sided at cell faces).
    Point interpolate_gradient(const Point& p) const {
        const std::size_t n = dims_.size();
        std::vector<std::size_t> base(n);
        std::vector<double> frac(n);
        for (std::size_t d = 0; d < n; ++d) {
            double t = (p[d] - origin_[d]) / spacing_[d];
            t = std::clamp(t, 0.0, static_cast<double>(dims_[d] - 1));
            auto i = static_cast<std::size_t>(std::floor(t));
            if (i >= dims_[d] - 1) i = dims_[d] - 2;
            base[d] = i;
            frac[d] = t - static_cast<double>(i);
        }
        Point g(n, 0.0);
        std::vector<std::size_t> idx(n);
        for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
            for (std::size_t d = 0; d < n; ++d) idx[d] = base[d] + ((corner >> d) & 1u);
            const double v = values_[flat(idx)];
            for (std::size_t a = 0; a < n; ++a) {
                double w = 1.0;
                for (std::size_t d = 0; d < n; ++d) {
                    const bool up = (corner >> d) & 1u;
                    if (d == a) w *= (up ? 1.0 : -1.0) / spacing_[d];
                    else w *= up ? frac[d] : 1.0 - frac[d];
                }
                g[a] += w * v;
            }
        }
        return g;
    }

    ScalarField as_field() const {
        auto self = std::make_shared<GridField>(*this);
        return ScalarField([self](const Point& p) { return self->interpolate(p); }, bounds());
    }

    /// Second difference along `axis` at a node. Within one cell of the grid
    /// edge a one-sided stencil is used and `reduced_order` is set.
    double node_second_difference(const std::vector<std::size_t>& idx, std::size_t axis,
                                  bool* reduced_order = nullptr) const {
        auto at = [&](long off) {
            auto j = idx;
            j[axis] = static_cast<std::size_t>(static_cast<long>(idx[axis]) + off);
            return values_[flat(j)];
        };
        const double h2 = spacing_[axis] * spacing_[axis];
        const std::size_t i = idx[axis], last = dims_[axis] - 1;
        if (i > 0 && i < last) {
            if (reduced_order) *reduced_order = false;
            return (at(1) - 2.0 * at(0) + at(-1)) / h2;
        }
        if (dims_[axis] < 3) throw ParameterError("one-sided second difference needs three nodes");
        if (reduced_order) *reduced_order = true;
        return i == 0 ? (at(0) - 2.0 * at(1) + at(2)) / h2 : (at(0) - 2.0 * at(-1) + at(-2)) / h2;
    }

    //-----------------------------------------------------------------------//
    // Serialization: u64 ndim, u64 dims[ndim], f64 spacing[ndim],
    // f64 origin[ndim], f64 values[prod(dims)], little-endian row-major.
    //-----------------------------------------------------------------------//
    void write_binary(std::ostream& os) const {
        auto put_u64 = [&](std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); };
        auto put_f64 = [&](double v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); };
        put_u64(dims_.size());
        for (auto d : dims_) put_u64(d);
        for (double h : spacing_) put_f64(h);
        for (double o : origin_) put_f64(o);
        os.write(reinterpret_cast<const char*>(values_.data()),
                 static_cast<std::streamsize>(values_.size() * sizeof(double)));
    }

    static GridField read_binary(std::istream& is) {
        auto get_u64 = [&] {
            std::uint64_t v = 0;
            is.read(reinterpret_cast<char*>(&v), sizeof v);
            return v;
        };
        auto get_f64 = [&] {
            double v = 0;
            is.read(reinterpret_cast<char*>(&v), sizeof v);
            return v;
        };
        const auto n = get_u64();
        if (!is || n == 0 || n > 16) throw ParameterError("bad grid header");
        std::vector<std::size_t> dims(n);
        std::vector<double> spacing(n);
        Point origin(n);
        for (auto& d : dims) d = get_u64();
        for (auto& h : spacing) h = get_f64();
        for (auto& o : origin) o = get_f64();
        GridField g(std::move(dims), std::move(spacing), std::move(origin));
        is.read(reinterpret_cast<char*>(g.values_.data()), static_cast<std::streamsize>(g.values_.size() * sizeof(double)));
        if (!is) throw ParameterError("truncated grid payload");
        return g;
    }

    /// One row per node: coordinates then value.
    void write_csv(std::ostream& os) const {
        for (std::size_t d = 0; d < dims_.size(); ++d) os << "x" << d << ',';
        os << "value\n";
        os << std::setprecision(17);
        for (std::size_t f = 0; f < values_.size(); ++f) {
            const Point p = node(unflat(f));
            for (double c : p) os << c << ',';
            os << values_[f] << '\n';
        }
    }

private:
    std::vector<std::size_t> dims_;
    std::vector<double> spacing_;
    Point origin_;
    std::vector<double> values_;
};

}  // namespace frankel
