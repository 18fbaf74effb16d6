#pragma once

// Regions between two labeled boundary hypersurfaces, intersected with an
// exhaustion ball D_k = B_{R_k}.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "frankel/core.hpp"
#include "frankel/geometry.hpp"

namespace frankel {

/// Quadrature node on a hypersurface: position and area weight (unweighted).
struct SurfaceNode {
    Point x;
    double area = 0.0;
};

/// One boundary piece. `level` is positive on the side of the domain and,
/// when `level_is_distance` is set, equals the signed distance to the piece.
struct Boundary {
    std::string name = "none";
    std::function<double(const Point&)> level;
    double value = 0.0;                ///< Dirichlet datum
    bool level_is_distance = true;
    bool has_curvature = true;         ///< level is C^2, so curvature can be differentiated out of it
    bool compact = false;
    std::optional<ShrinkerModel> model;
    /// Nearest-point map onto the piece, when available.
    std::function<Point(const Point&)> projection;
    /// Point of the piece with |z| = rho along the j-th direction of a fixed
    /// schedule; empty when no such point exists.
    std::function<std::optional<Point>(double rho, std::size_t j)> sample_at_norm;
    /// Quadrature nodes of the piece inside B_radius with spacing about h.
    std::function<std::vector<SurfaceNode>(double h, double radius)> surface_rule;

    bool empty() const noexcept { return !level; }

    double operator()(const Point& p) const {
        return level ? level(p) : std::numeric_limits<double>::infinity();
    }

    /// Unsigned distance to the piece (requires level_is_distance).
    double distance(const Point& p) const { return std::abs((*this)(p)); }

    static Boundary none() { return {}; }

    /// Hyperplane {<x, normal> = offset}; the domain lies where
    /// side * (<x, normal> - offset) > 0.
    static Boundary plane(Point unit_normal, double offset, int side, double value);

    /// Round sphere of radius r about the origin; the domain is inside when
    /// `domain_inside` is set.
    static Boundary sphere(std::size_t dim, double r, bool domain_inside, double value);

    /// A model self-shrinker; the domain is on the inside (negative signed
    /// distance) when `domain_inside` is set.
    static Boundary from_model(const ShrinkerModel& model, bool domain_inside, double value);
};

/// Deterministic unit direction schedule in the tangent space spanned by `frame`.
inline Point schedule_direction(const std::vector<Point>& frame, std::size_t j) {
    const std::size_t d = frame.size();
    Point dir(frame.front().size(), 0.0);
    if (d == 1) {
        dir = (j % 2 == 0 ? 1.0 : -1.0) * frame[0];
        return dir;
    }
    // Quasi-random point on the unit sphere of the tangent space.
    auto h = halton(j + 1, d);
    Point c(d);
    for (std::size_t i = 0; i < d; ++i) c[i] = 2.0 * h[i] - 1.0;
    if (norm(c) < 1e-9) c[0] = 1.0;
    c = normalized(c);
    for (std::size_t i = 0; i < d; ++i) dir = dir + c[i] * frame[i];
    return dir;
}

inline Boundary Boundary::plane(Point unit_normal, double offset, int side, double value) {
    if (std::abs(norm(unit_normal) - 1.0) > 1e-12) throw ParameterError("plane normal must be a unit vector");
    if (side != 1 && side != -1) throw ParameterError("plane side must be +1 or -1");
    Boundary b;
    b.name = "plane";
    b.value = value;
    const double s = side;
    b.level = [unit_normal, offset, s](const Point& x) { return s * (dot(x, unit_normal) - offset); };
    b.projection = [unit_normal, offset](const Point& x) { return x - (dot(x, unit_normal) - offset) * unit_normal; };
    const auto frame = tangent_frame(unit_normal);
    const Point base = offset * unit_normal;
    b.sample_at_norm = [base, frame, offset](double rho, std::size_t j) -> std::optional<Point> {
        if (rho < std::abs(offset)) return std::nullopt;
        return base + std::sqrt(rho * rho - offset * offset) * schedule_direction(frame, j);
    };
    b.surface_rule = [base, frame, offset](double h, double radius) {
        std::vector<SurfaceNode> nodes;
        if (radius <= std::abs(offset)) return nodes;
        const double L = std::sqrt(radius * radius - offset * offset);
        const std::size_t d = frame.size();
        if (d == 1) {
            const auto N = static_cast<std::size_t>(std::ceil(2.0 * L / h));
            const double w = 2.0 * L / N;
            for (std::size_t i = 0; i < N; ++i)
                nodes.push_back({base + (-L + (i + 0.5) * w) * frame[0], w});
            return nodes;
        }
        const auto N = static_cast<std::size_t>(std::ceil(2.0 * L / h));
        const double w = 2.0 * L / N;
        std::vector<std::size_t> idx(d, 0);
        while (true) {
            Point x = base;
            for (std::size_t i = 0; i < d; ++i) x = x + (-L + (idx[i] + 0.5) * w) * frame[i];
            if (norm(x) <= radius) nodes.push_back({x, std::pow(w, static_cast<double>(d))});
            std::size_t i = 0;
            while (i < d && ++idx[i] == N) idx[i++] = 0;
            if (i == d) break;
        }
        return nodes;
    };
    return b;
}

namespace detail {

/// Midpoint rule on the round sphere of radius r in R^2 or R^3.
inline std::vector<SurfaceNode> sphere_rule(std::size_t dim, double r, double h) {
    std::vector<SurfaceNode> nodes;
    const double pi = std::numbers::pi;
    if (dim == 2) {
        const auto N = static_cast<std::size_t>(std::ceil(2.0 * pi * r / h));
        const double dt = 2.0 * pi / N;
        for (std::size_t i = 0; i < N; ++i) {
            const double t = (i + 0.5) * dt;
            nodes.push_back({{r * std::cos(t), r * std::sin(t)}, r * dt});
        }
        return nodes;
    }
    if (dim == 3) {
        const auto Nt = static_cast<std::size_t>(std::ceil(pi * r / h));
        const std::size_t Np = 2 * Nt;
        const double dt = pi / Nt, dp = 2.0 * pi / Np;
        for (std::size_t i = 0; i < Nt; ++i) {
            const double t = (i + 0.5) * dt;
            for (std::size_t j = 0; j < Np; ++j) {
                const double p = (j + 0.5) * dp;
                nodes.push_back({{r * std::sin(t) * std::cos(p), r * std::sin(t) * std::sin(p), r * std::cos(t)},
                                 r * r * std::sin(t) * dt * dp});
            }
        }
        return nodes;
    }
    throw ParameterError("sphere surface quadrature is implemented for ambient dimension 2 and 3");
}

}  // namespace detail

inline Boundary Boundary::sphere(std::size_t dim, double r, bool domain_inside, double value) {
    if (!(r > 0.0)) throw ParameterError("sphere radius must be positive");
    Boundary b;
    b.name = "sphere";
    b.value = value;
    b.compact = true;
    const double s = domain_inside ? -1.0 : 1.0;
    b.level = [r, s](const Point& x) { return s * (norm(x) - r); };
    b.projection = [r](const Point& x) { return (r / norm(x)) * x; };
    b.sample_at_norm = [r, dim](double rho, std::size_t j) -> std::optional<Point> {
        if (std::abs(rho - r) > 1e-12 * r) return std::nullopt;
        std::vector<Point> frame;
        for (std::size_t i = 0; i < dim; ++i) frame.push_back(unit_vector(dim, i));
        return r * schedule_direction(frame, j);
    };
    b.surface_rule = [dim, r](double h, double radius) {
        if (radius < r) return std::vector<SurfaceNode>{};
        return detail::sphere_rule(dim, r, h);
    };
    return b;
}

inline Boundary Boundary::from_model(const ShrinkerModel& model, bool domain_inside, double value) {
    if (model.kind() == ModelKind::Hyperplane)
        return [&] {
            Boundary b = plane(model.normal(), 0.0, domain_inside ? -1 : 1, value);
            b.model = model;
            b.name = "hyperplane";
            return b;
        }();
    if (model.kind() == ModelKind::Sphere) {
        Boundary b = sphere(model.ambient_dim(), model.radius(), domain_inside, value);
        b.model = model;
        b.name = "model-sphere";
        return b;
    }
    Boundary b;
    b.name = "cylinder";
    b.value = value;
    b.model = model;
    const double s = domain_inside ? -1.0 : 1.0;
    b.level = [model, s](const Point& x) { return s * signed_distance(model, x); };
    b.projection = [model](const Point& x) { return project(model, x); };
    const std::size_t n = model.ambient_dim(), ks = model.spherical_coords();
    const double rad = model.radius();
    b.sample_at_norm = [n, ks, rad](double rho, std::size_t j) -> std::optional<Point> {
        if (rho < rad) return std::nullopt;
        std::vector<Point> sph, flat;
        for (std::size_t i = 0; i < ks; ++i) sph.push_back(unit_vector(n, i));
        for (std::size_t i = ks; i < n; ++i) flat.push_back(unit_vector(n, i));
        const Point a = rad * schedule_direction(sph, j);
        // Axial direction: always the positive first flat axis mixed with the schedule.
        Point t = flat.size() == 1 ? flat[0] : schedule_direction(flat, j);
        return a + std::sqrt(rho * rho - rad * rad) * t;
    };
    b.surface_rule = [n, ks, rad](double h, double radius) {
        std::vector<SurfaceNode> nodes;
        if (n != 3 || ks != 2) throw ParameterError("cylinder surface quadrature is implemented for S^1 x R in R^3");
        if (radius <= rad) return nodes;
        const double L = std::sqrt(radius * radius - rad * rad);
        const double pi = std::numbers::pi;
        const auto Nt = static_cast<std::size_t>(std::ceil(2.0 * pi * rad / h));
        const auto Nz = static_cast<std::size_t>(std::ceil(2.0 * L / h));
        const double dt = 2.0 * pi / Nt, dz = 2.0 * L / Nz;
        for (std::size_t i = 0; i < Nt; ++i)
            for (std::size_t j = 0; j < Nz; ++j) {
                const double t = (i + 0.5) * dt, z = -L + (j + 0.5) * dz;
                nodes.push_back({{rad * std::cos(t), rad * std::sin(t), z}, rad * dt * dz});
            }
        return nodes;
    };
    return b;
}

/// Graph {x_n = g(|xhat|)} over the hyperplane x_n = 0, with g decreasing in
/// |xhat|; sampled by bisection on the norm. The level function is the
/// vertical offset, not a distance.
inline Boundary graph_boundary(std::size_t dim, std::function<double(double)> g, double value, int side) {
    Boundary b;
    b.name = "graph";
    b.value = value;
    b.level_is_distance = false;
    b.has_curvature = false;
    const double s = side;
    b.level = [g, s](const Point& x) {
        double q2 = 0.0;
        for (std::size_t i = 0; i + 1 < x.size(); ++i) q2 += x[i] * x[i];
        return s * (x.back() - g(std::sqrt(q2)));
    };
    b.sample_at_norm = [dim, g](double rho, std::size_t j) -> std::optional<Point> {
        // Solve q^2 + g(q)^2 = rho^2 for q >= 0.
        auto F = [&](double q) { return q * q + g(q) * g(q) - rho * rho; };
        if (F(0.0) > 0.0) return std::nullopt;
        double lo = 0.0, hi = rho;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (F(mid) <= 0.0 ? lo : hi) = mid;
        }
        const double q = 0.5 * (lo + hi);
        std::vector<Point> frame;
        for (std::size_t i = 0; i + 1 < dim; ++i) frame.push_back(unit_vector(dim, i));
        Point z = q * schedule_direction(frame, j);
        z.back() = g(q);
        return z;
    };
    return b;
}

/// Region between sigma1 (datum 0) and sigma2 (datum 1) inside D_k.
struct DomainSpec {
    std::size_t dim = 2;
    Boundary sigma1;
    Boundary sigma2;
    double exhaustion_radius = 4.0;
    std::string label = "custom";

    /// Omega: strictly on the domain side of both pieces.
    bool inside(const Point& x) const { return sigma1(x) > 0.0 && sigma2(x) > 0.0; }

    /// Omega_k = Omega cap D_k.
    bool inside_exhaustion(const Point& x) const { return inside(x) && norm(x) <= exhaustion_radius; }

    DomainSpec with_radius(double R) const {
        DomainSpec d = *this;
        d.exhaustion_radius = R;
        return d;
    }
};

/// Slab h1 < x_n < h2 with data 0 at x_n = h1 and 1 at x_n = h2.
inline DomainSpec slab_domain(double h1, double h2, std::size_t dim = 2, double R = 6.0) {
    if (!(h1 < h2)) throw ParameterError("slab needs h1 < h2");
    const Point e = unit_vector(dim, dim - 1);
    DomainSpec d;
    d.dim = dim;
    d.sigma1 = Boundary::plane(e, h1, +1, 0.0);
    d.sigma2 = Boundary::plane(e, h2, -1, 1.0);
    d.exhaustion_radius = R;
    d.label = "slab";
    return d;
}

/// Annulus a < |x| < b with data 0 at |x| = a and 1 at |x| = b.
inline DomainSpec annulus_domain(double a, double b, std::size_t dim = 2, double R = 3.0) {
    if (!(a > 0.0) || !(a < b)) throw ParameterError("annulus needs 0 < a < b");
    DomainSpec d;
    d.dim = dim;
    d.sigma1 = Boundary::sphere(dim, a, false, 0.0);
    d.sigma2 = Boundary::sphere(dim, b, true, 1.0);
    d.exhaustion_radius = R;
    d.label = "annulus";
    return d;
}

/// Ball |x| < r bounded by a single piece (stored as sigma2).
inline DomainSpec ball_domain(double r, std::size_t dim = 3) {
    DomainSpec d;
    d.dim = dim;
    d.sigma2 = Boundary::sphere(dim, r, true, 1.0);
    d.exhaustion_radius = 1.5 * r;
    d.label = "ball";
    return d;
}

namespace detail {

inline Boundary boundary_from_json(const nlohmann::json& j, std::size_t dim, double default_value) {
    const auto type = j.at("type").get<std::string>();
    const double value = j.value("value", default_value);
    if (type == "none") return Boundary::none();
    if (type == "plane") {
        Point n = j.contains("normal") ? j.at("normal").get<Point>() : unit_vector(dim, dim - 1);
        return Boundary::plane(n, j.value("offset", 0.0), j.value("side", 1), value);
    }
    if (type == "sphere")
        return Boundary::sphere(dim, j.at("radius").get<double>(), j.value("domain_inside", true), value);
    if (type == "graph") {
        // Gaussian graph x_n = amplitude exp(-(|xhat|/width)^2).
        const double amp = j.value("amplitude", 1.0), width = j.value("width", 1.0);
        if (!(amp > 0.0) || !(width > 0.0)) throw ParameterError("graph amplitude and width must be positive");
        return graph_boundary(dim, [amp, width](double q) { return amp * std::exp(-(q / width) * (q / width)); },
                              value, j.value("side", -1));
    }
    if (type == "model")
        return Boundary::from_model(model_from_json(j.at("model")), j.value("domain_inside", false), value);
    throw ParameterError("unknown boundary type '" + type + "'");
}

}  // namespace detail

/// Reads a domain description. Accepted shapes:
///   {"type": "slab", "h1": -1, "h2": 1, "dim": 2, "exhaustion_radii": [...]}
///   {"type": "annulus", "a": 0.5, "b": 2, "dim": 2, ...}
///   {"type": "ball", "r": 1, "dim": 3}
///   {"type": "custom", "dim": n, "sigma1": {...}, "sigma2": {...}, ...}
/// Unknown keys are rejected.
inline DomainSpec domain_from_json(const nlohmann::json& j) {
    static const std::vector<std::string> allowed = {"type", "h1", "h2", "a", "b", "r", "dim", "exhaustion_radii",
                                                     "exhaustion_radius", "sigma1", "sigma2", "label"};
    for (const auto& [key, _] : j.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ParameterError("unknown key '" + key + "' in domain description");
    const auto type = j.value("type", std::string("custom"));
    const auto dim = j.value("dim", std::size_t{2});
    double R = j.value("exhaustion_radius", 6.0);
    if (j.contains("exhaustion_radii")) R = j.at("exhaustion_radii").get<std::vector<double>>().back();
    DomainSpec d;
    if (type == "slab") {
        d = slab_domain(j.at("h1").get<double>(), j.at("h2").get<double>(), dim, R);
    } else if (type == "annulus") {
        d = annulus_domain(j.at("a").get<double>(), j.at("b").get<double>(), dim, R);
    } else if (type == "ball") {
        d = ball_domain(j.at("r").get<double>(), dim);
        if (j.contains("exhaustion_radius") || j.contains("exhaustion_radii")) d.exhaustion_radius = R;
    } else if (type == "custom") {
        d.dim = dim;
        d.sigma1 = detail::boundary_from_json(j.at("sigma1"), dim, 0.0);
        d.sigma2 = detail::boundary_from_json(j.at("sigma2"), dim, 1.0);
        d.exhaustion_radius = R;
    } else {
        throw ParameterError("unknown domain type '" + type + "'");
    }
    if (j.contains("label")) d.label = j.at("label").get<std::string>();
    return d;
}

/// Exhaustion radii listed in a domain description (may be empty).
inline std::vector<double> exhaustion_radii_from_json(const nlohmann::json& j) {
    if (j.contains("exhaustion_radii")) return j.at("exhaustion_radii").get<std::vector<double>>();
    return {};
}

}  // namespace frankel
