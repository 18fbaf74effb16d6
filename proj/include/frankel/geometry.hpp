#pragma once

// Exact model self-shrinkers (hyperplane through the origin, the sphere of
// radius sqrt(m), the cylinders S^k_{sqrt k} x R^{m-k}), pointwise surface
// data, the cylinder identities evaluated on arbitrary charts, and
// extrinsic volume growth.
//
// Conventions: nu is the outward normal for spheres and cylinders and the
// stored normal for hyperplanes. The scalar second fundamental form is
// A(X, Y) = <D_X Y, nu>, the scalar mean curvature is H = tr A and the mean
// curvature vector is H nu. With these choices the shrinker equation reads
// x^perp + H nu = 0.

#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "frankel/core.hpp"

namespace frankel {

//---------------------------------------------------------------------------//
// Quasi-random sequences
//---------------------------------------------------------------------------//

/// Radical inverse of `index` in the given prime base (Halton component).
inline double radical_inverse(unsigned long index, unsigned base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (index > 0) {
        r += f * static_cast<double>(index % base);
        index /= base;
        f *= inv;
    }
    return r;
}

inline unsigned nth_prime(std::size_t i) {
    static constexpr unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    return primes[i % std::size(primes)];
}

/// Point of the Halton sequence in [0,1)^dim (index starts at 1).
inline std::vector<double> halton(unsigned long index, std::size_t dim) {
    std::vector<double> h(dim);
    for (std::size_t d = 0; d < dim; ++d) h[d] = radical_inverse(index, nth_prime(d));
    return h;
}

//---------------------------------------------------------------------------//
// ShrinkerModel
//---------------------------------------------------------------------------//

enum class ModelKind { Hyperplane, Sphere, Cylinder };

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Hyperplane: return "hyperplane";
        case ModelKind::Sphere: return "sphere";
        case ModelKind::Cylinder: return "cylinder";
    }
    return "?";
}

/// One of the exact model self-shrinkers. Radii are kept symbolically as the
/// integers m and k; sqrt is taken only when a length is needed.
class ShrinkerModel {
public:
    static ShrinkerModel hyperplane(Point unit_normal) {
        if (unit_normal.size() < 2) throw ParameterError("hyperplane needs ambient dimension >= 2");
        if (std::abs(norm(unit_normal) - 1.0) > 1e-12)
            throw ParameterError("hyperplane normal must have unit length");
        ShrinkerModel s;
        s.kind_ = ModelKind::Hyperplane;
        s.m_ = static_cast<int>(unit_normal.size()) - 1;
        s.normal_ = std::move(unit_normal);
        return s;
    }

    static ShrinkerModel sphere(int m) {
        if (m < 1) throw ParameterError("sphere needs m >= 1");
        ShrinkerModel s;
        s.kind_ = ModelKind::Sphere;
        s.m_ = m;
        return s;
    }

    static ShrinkerModel cylinder(int m, int k) {
        if (k < 1 || k > m - 1) throw ParameterError("cylinder needs 1 <= k <= m-1");
        ShrinkerModel s;
        s.kind_ = ModelKind::Cylinder;
        s.m_ = m;
        s.k_ = k;
        return s;
    }

    ModelKind kind() const noexcept { return kind_; }
    int m() const noexcept { return m_; }
    int k() const noexcept { return k_; }
    std::size_t ambient_dim() const noexcept { return static_cast<std::size_t>(m_ + 1); }
    const Point& normal() const noexcept { return normal_; }

    /// sqrt(m) for the sphere, sqrt(k) for the cylinder, 0 for the hyperplane.
    double radius() const {
        switch (kind_) {
            case ModelKind::Sphere: return std::sqrt(static_cast<double>(m_));
            case ModelKind::Cylinder: return std::sqrt(static_cast<double>(k_));
            default: return 0.0;
        }
    }

    /// Number of leading coordinates forming the curved (spherical) factor.
    std::size_t spherical_coords() const {
        switch (kind_) {
            case ModelKind::Sphere: return ambient_dim();
            case ModelKind::Cylinder: return static_cast<std::size_t>(k_ + 1);
            default: return 0;
        }
    }

    friend bool operator==(const ShrinkerModel&, const ShrinkerModel&) = default;

private:
    ShrinkerModel() = default;
    ModelKind kind_ = ModelKind::Hyperplane;
    int m_ = 0;
    int k_ = 0;
    Point normal_;
};

inline void to_json(nlohmann::json& j, const ShrinkerModel& s) {
    j = nlohmann::json{{"type", to_string(s.kind())}, {"m", s.m()}};
    if (s.kind() == ModelKind::Cylinder) j["k"] = s.k();
    if (s.kind() == ModelKind::Hyperplane) j["normal"] = s.normal();
}

inline ShrinkerModel model_from_json(const nlohmann::json& j) {
    const auto type = j.at("type").get<std::string>();
    if (type == "sphere") return ShrinkerModel::sphere(j.at("m").get<int>());
    if (type == "cylinder") return ShrinkerModel::cylinder(j.at("m").get<int>(), j.at("k").get<int>());
    if (type == "hyperplane") {
        if (j.contains("normal")) return ShrinkerModel::hyperplane(j.at("normal").get<Point>());
        // Default: the horizontal hyperplane {x_{m+1} = 0}.
        const int m = j.at("m").get<int>();
        return ShrinkerModel::hyperplane(unit_vector(static_cast<std::size_t>(m + 1), static_cast<std::size_t>(m)));
    }
    throw ParameterError("unknown model type '" + type + "'");
}

namespace detail {
inline void check_point(const ShrinkerModel& model, const Point& p) {
    if (p.size() != model.ambient_dim()) throw ParameterError("point dimension does not match model");
    if (!all_finite(p)) throw ParameterError("point has non-finite coordinates");
}

inline double spherical_norm(const ShrinkerModel& model, const Point& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < model.spherical_coords(); ++i) s += p[i] * p[i];
    return std::sqrt(s);
}
}  // namespace detail

/// True where the distance field is not differentiable: the axis of a
/// cylinder or the center of the sphere.
inline bool on_singular_set(const ShrinkerModel& model, const Point& p) {
    detail::check_point(model, p);
    if (model.kind() == ModelKind::Hyperplane) return false;
    return detail::spherical_norm(model, p) == 0.0;
}

/// Signed Euclidean distance to the model surface: negative inside the ball or
/// solid cylinder, signed by the stored normal for a hyperplane. On the
/// singular set the infimum -radius is returned (see on_singular_set).
inline double signed_distance(const ShrinkerModel& model, const Point& p) {
    detail::check_point(model, p);
    if (model.kind() == ModelKind::Hyperplane) return dot(p, model.normal());
    return detail::spherical_norm(model, p) - model.radius();
}

/// Outward unit normal of the level set of the signed distance through p.
inline Point outward_normal(const ShrinkerModel& model, const Point& p) {
    detail::check_point(model, p);
    if (model.kind() == ModelKind::Hyperplane) return model.normal();
    const double r = detail::spherical_norm(model, p);
    if (r == 0.0) throw ParameterError("normal undefined on the singular set");
    Point nu(p.size(), 0.0);
    for (std::size_t i = 0; i < model.spherical_coords(); ++i) nu[i] = p[i] / r;
    return nu;
}

/// Nearest point of the model surface.
inline Point project(const ShrinkerModel& model, const Point& p) {
    const double d = signed_distance(model, p);
    if (on_singular_set(model, p)) throw ParameterError("projection undefined on the singular set");
    return p - d * outward_normal(model, p);
}

//---------------------------------------------------------------------------//
// Surface samples
//---------------------------------------------------------------------------//

/// Pointwise extrinsic data of a hypersurface.
struct SurfaceSample {
    Point point;
    Point normal;               ///< unit normal nu
    Matrix second_fundamental;  ///< A_ij = <D_{e_i} e_j, nu> in `frame`
    Point mean_curvature;       ///< H nu with H = tr A
    std::vector<Point> frame;   ///< orthonormal tangent frame

    double scalar_mean_curvature() const { return second_fundamental.trace(); }
    /// Weighted mean curvature H_f = H + <x, nu> of the Gaussian space.
    double weighted_mean_curvature() const { return scalar_mean_curvature() + dot(point, normal); }
};

/// Exact surface data of the model at the nearest point to p.
inline SurfaceSample sample_model(const ShrinkerModel& model, const Point& p) {
    SurfaceSample s;
    s.point = project(model, p);
    s.normal = outward_normal(model, s.point);
    s.frame = tangent_frame(s.normal);
    const std::size_t m = s.frame.size();
    s.second_fundamental = Matrix(m, m);
    if (model.kind() != ModelKind::Hyperplane) {
        // A = -(1/r) P_spherical restricted to the tangent frame.
        const double r = model.radius();
        const std::size_t ks = model.spherical_coords();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                double pij = 0.0;
                for (std::size_t c = 0; c < ks; ++c) pij += s.frame[i][c] * s.frame[j][c];
                s.second_fundamental(i, j) = -pij / r;
            }
    }
    s.mean_curvature = s.second_fundamental.trace() * s.normal;
    return s;
}

/// x^perp + H: zero exactly on self-shrinkers.
inline Point shrinker_residual(const SurfaceSample& s) {
    return dot(s.point, s.normal) * s.normal + s.mean_curvature;
}

/// Deterministic quasi-random points on the model surface.
inline std::vector<Point> model_samples(const ShrinkerModel& model, std::size_t count,
                                        double axial_extent = 5.0) {
    const std::size_t n = model.ambient_dim();
    std::vector<Point> out;
    out.reserve(count);
    unsigned long idx = 1;
    while (out.size() < count) {
        auto h = halton(idx++, n);
        Point p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = (2.0 * h[i] - 1.0) * axial_extent;
        if (model.kind() != ModelKind::Hyperplane && detail::spherical_norm(model, p) < 1e-6) continue;
        out.push_back(project(model, p));
    }
    return out;
}

//---------------------------------------------------------------------------//
// Parametrized patches
//---------------------------------------------------------------------------//

/// Extended-precision point, used inside finite-difference stencils.
using PointL = std::vector<long double>;

/// A chart R^m -> R^{m+1} evaluated around `center` with numeric derivatives.
/// When `chart_ext` is present it is used for the stencils, which keeps the
/// roundoff of second differences near 1e-11 at the default step.
struct ParametrizedPatch {
    std::function<Point(const Point&)> chart;
    std::function<PointL(const PointL&)> chart_ext;
    Point center;  ///< parameter point where quantities are evaluated
    double fd_step = 1e-4;
};

namespace detail {

/// Nearest point of the model in extended precision.
inline PointL project_ext(const ShrinkerModel& model, PointL q) {
    if (model.kind() == ModelKind::Hyperplane) {
        long double d = 0.0L;
        for (std::size_t i = 0; i < q.size(); ++i) d += q[i] * static_cast<long double>(model.normal()[i]);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] -= d * static_cast<long double>(model.normal()[i]);
        return q;
    }
    const std::size_t ks = model.spherical_coords();
    long double r2 = 0.0L;
    for (std::size_t i = 0; i < ks; ++i) r2 += q[i] * q[i];
    const long double rad = std::sqrt(static_cast<long double>(model.kind() == ModelKind::Sphere ? model.m() : model.k()));
    const long double s = rad / std::sqrt(r2);
    for (std::size_t i = 0; i < ks; ++i) q[i] *= s;
    return q;
}

inline PointL affine_ext(const Point& base, const std::vector<Point>& frame, const PointL& t) {
    PointL q(base.begin(), base.end());
    for (std::size_t i = 0; i < frame.size(); ++i)
        for (std::size_t c = 0; c < q.size(); ++c) q[c] += t[i] * static_cast<long double>(frame[i][c]);
    return q;
}

}  // namespace detail

/// Chart obtained by pushing the tangent plane at p onto the model along the
/// nearest-point map. It is an immersion near the origin of parameter space.
inline ParametrizedPatch model_chart(const ShrinkerModel& model, const Point& p, double fd_step = 1e-4) {
    const SurfaceSample s = sample_model(model, p);
    ParametrizedPatch patch;
    patch.center = Point(s.frame.size(), 0.0);
    patch.fd_step = fd_step;
    patch.chart = [model, base = s.point, frame = s.frame](const Point& t) {
        Point q = base;
        for (std::size_t i = 0; i < frame.size(); ++i) q = q + t[i] * frame[i];
        return project(model, q);
    };
    patch.chart_ext = [model, base = s.point, frame = s.frame](const PointL& t) {
        return detail::project_ext(model, detail::affine_ext(base, frame, t));
    };
    return patch;
}

/// Round sphere of radius `radius` about the origin of R^n, charted the same
/// way (useful for non-shrinker comparisons).
inline ParametrizedPatch round_sphere_chart(double radius, const Point& p, double fd_step = 1e-4) {
    const Point base = (radius / norm(p)) * p;
    const auto frame = tangent_frame(normalized(base));
    ParametrizedPatch patch;
    patch.center = Point(frame.size(), 0.0);
    patch.fd_step = fd_step;
    patch.chart = [radius, base, frame](const Point& t) {
        Point q = base;
        for (std::size_t i = 0; i < frame.size(); ++i) q = q + t[i] * frame[i];
        return (radius / norm(q)) * q;
    };
    patch.chart_ext = [radius, base, frame](const PointL& t) {
        PointL q = detail::affine_ext(base, frame, t);
        long double r2 = 0.0L;
        for (auto c : q) r2 += c * c;
        const long double s = static_cast<long double>(radius) / std::sqrt(r2);
        for (auto& c : q) c *= s;
        return q;
    };
    return patch;
}

namespace detail {

inline Point shifted(const Point& t, std::size_t i, double d) {
    Point s = t;
    s[i] += d;
    return s;
}

inline PointL shifted_ext(const Point& t, std::size_t i, long double di, std::size_t j = 0, long double dj = 0.0L) {
    PointL s(t.begin(), t.end());
    s[i] += di;
    s[j] += dj;
    return s;
}

/// Chart evaluation in extended precision (falls back to the double chart).
inline PointL eval_ext(const ParametrizedPatch& patch, const PointL& t) {
    if (patch.chart_ext) return patch.chart_ext(t);
    Point td(t.begin(), t.end());
    const Point x = patch.chart(td);
    return PointL(x.begin(), x.end());
}

using ScalarExt = std::function<long double(const PointL&)>;

/// First and second parameter derivatives of a vector-valued chart.
struct ChartJet {
    Point x;
    std::vector<Point> d1;               // d1[i] = dX/dt_i
    std::vector<std::vector<Point>> d2;  // d2[i][j] = d^2X/dt_i dt_j
};

inline Point to_double(const PointL& x) { return Point(x.begin(), x.end()); }
inline double to_double(long double x) { return static_cast<double>(x); }

inline PointL combine(long double a, const PointL& x, long double b, const PointL& y) {
    PointL r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = a * x[i] + b * y[i];
    return r;
}
inline long double combine(long double a, long double x, long double b, long double y) { return a * x + b * y; }

inline PointL combine3(long double a, const PointL& x, long double b, const PointL& y, long double c,
                       const PointL& z) {
    PointL r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = (a * x[i] + c * z[i]) + b * y[i];
    return r;
}
inline long double combine3(long double a, long double x, long double b, long double y, long double c,
                            long double z) {
    return (a * x + c * z) + b * y;
}

/// Central-difference derivatives of a map F at the parameter point, using
/// the +-s e_i and diagonal-corner stencil at steps h and 2h combined by
/// Richardson extrapolation. Differences are formed in extended precision and
/// rounded once.
template <class V, class F>
void stencil_derivatives(const ParametrizedPatch& patch, F&& eval, V& v0, std::vector<V>& d1,
                         std::vector<std::vector<V>>& d2) {
    const Point& t = patch.center;
    const std::size_t m = t.size();
    const auto c = eval(PointL(t.begin(), t.end()));
    using E = std::decay_t<decltype(c)>;
    auto raw = [&](long double h, std::vector<E>& r1, std::vector<std::vector<E>>& r2) {
        r1.assign(m, c);
        r2.assign(m, std::vector<E>(m, c));
        for (std::size_t i = 0; i < m; ++i) {
            const auto p = eval(shifted_ext(t, i, h)), q = eval(shifted_ext(t, i, -h));
            r1[i] = combine(0.5L / h, p, -0.5L / h, q);
            r2[i][i] = combine3(1.0L / (h * h), p, -2.0L / (h * h), c, 1.0L / (h * h), q);
        }
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j) {
                const auto pp = eval(shifted_ext(t, i, h, j, h));
                const auto pm = eval(shifted_ext(t, i, h, j, -h));
                const auto mp = eval(shifted_ext(t, i, -h, j, h));
                const auto mm = eval(shifted_ext(t, i, -h, j, -h));
                const long double w = 0.25L / (h * h);
                r2[i][j] = combine(w, combine(1.0L, pp, -1.0L, pm), -w, combine(1.0L, mp, -1.0L, mm));
                r2[j][i] = r2[i][j];
            }
    };
    const long double h = patch.fd_step;
    std::vector<E> a1, b1;
    std::vector<std::vector<E>> a2, b2;
    raw(h, a1, a2);
    raw(2.0L * h, b1, b2);
    v0 = to_double(c);
    d1.assign(m, V{});
    d2.assign(m, std::vector<V>(m));
    for (std::size_t i = 0; i < m; ++i) {
        d1[i] = to_double(combine(4.0L / 3.0L, a1[i], -1.0L / 3.0L, b1[i]));
        for (std::size_t j = 0; j < m; ++j) d2[i][j] = to_double(combine(4.0L / 3.0L, a2[i][j], -1.0L / 3.0L, b2[i][j]));
    }
}

inline ChartJet chart_jet(const ParametrizedPatch& patch) {
    ChartJet jet;
    stencil_derivatives(patch, [&](const PointL& t) { return eval_ext(patch, t); }, jet.x, jet.d1, jet.d2);
    return jet;
}

/// Scalar jet of g composed with the chart.
struct ScalarJet {
    double v = 0.0;
    std::vector<double> d1;
    std::vector<std::vector<double>> d2;
};

inline ScalarJet scalar_jet(const ParametrizedPatch& patch, const ScalarExt& g) {
    ScalarJet jet;
    stencil_derivatives(patch, [&](const PointL& t) { return g(eval_ext(patch, t)); }, jet.v, jet.d1, jet.d2);
    return jet;
}

/// Intrinsic first-order data of the chart at its center.
struct ChartMetric {
    ChartJet jet;
    Matrix g, ginv;
    std::vector<std::vector<std::vector<double>>> christoffel;  // [k][i][j]
};

inline ChartMetric chart_metric(const ParametrizedPatch& patch) {
    ChartMetric cm;
    cm.jet = chart_jet(patch);
    const std::size_t m = patch.center.size();
    cm.g = Matrix(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) cm.g(i, j) = dot(cm.jet.d1[i], cm.jet.d1[j]);
    cm.ginv = inverse(cm.g);
    cm.christoffel.assign(m, std::vector<std::vector<double>>(m, std::vector<double>(m, 0.0)));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            std::vector<double> low(m);
            for (std::size_t l = 0; l < m; ++l) low[l] = dot(cm.jet.d2[i][j], cm.jet.d1[l]);
            for (std::size_t k = 0; k < m; ++k) {
                double s = 0.0;
                for (std::size_t l = 0; l < m; ++l) s += cm.ginv(k, l) * low[l];
                cm.christoffel[k][i][j] = s;
            }
        }
    return cm;
}

/// Weighted Laplace-Beltrami Delta_f g = Delta g - <grad f, grad g> on the
/// chart, with f = |x|^2/2, plus |grad g|^2.
struct IntrinsicOps {
    double value = 0.0;
    double grad_sq = 0.0;
    double laplacian = 0.0;
    double weighted_laplacian = 0.0;
};

inline IntrinsicOps intrinsic_ops(const ParametrizedPatch& patch, const ChartMetric& cm, const ScalarExt& g) {
    const std::size_t m = patch.center.size();
    const ScalarJet gj = scalar_jet(patch, g);
    std::vector<double> df(m);
    for (std::size_t i = 0; i < m; ++i) df[i] = dot(cm.jet.x, cm.jet.d1[i]);  // d(|X|^2/2)/dt_i
    IntrinsicOps out;
    out.value = gj.v;
    double drift = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double hess = gj.d2[i][j];
            for (std::size_t k = 0; k < m; ++k) hess -= cm.christoffel[k][i][j] * gj.d1[k];
            out.laplacian += cm.ginv(i, j) * hess;
            out.grad_sq += cm.ginv(i, j) * gj.d1[i] * gj.d1[j];
            drift += cm.ginv(i, j) * df[i] * gj.d1[j];
        }
    out.weighted_laplacian = out.laplacian - drift;
    return out;
}

}  // namespace detail

/// Surface data computed numerically from a chart. The normal is oriented to
/// have non-negative inner product with `orientation_hint`.
inline SurfaceSample sample_patch(const ParametrizedPatch& patch, const Point& orientation_hint) {
    const detail::ChartMetric cm = detail::chart_metric(patch);
    const std::size_t m = patch.center.size();
    const std::size_t n = cm.jet.x.size();
    // Orthonormalize the coordinate tangents (Gram-Schmidt).
    std::vector<Point> frame;
    for (std::size_t i = 0; i < m; ++i) {
        Point v = cm.jet.d1[i];
        for (const auto& e : frame) v = v - dot(v, e) * e;
        frame.push_back(normalized(v));
    }
    // Normal: remove tangent components from each axis and keep the largest.
    Point nu;
    double best = -1.0;
    for (std::size_t a = 0; a < n; ++a) {
        Point v = unit_vector(n, a);
        for (const auto& e : frame) v = v - dot(v, e) * e;
        if (norm(v) > best) {
            best = norm(v);
            nu = normalized(v);
        }
    }
    if (dot(nu, orientation_hint) < 0.0) nu = -1.0 * nu;

    // Coordinate second fundamental form b_ij = <X_ij, nu>, then change to
    // the orthonormal frame: A = C^T b C with e_a = sum_i C_ia X_i.
    Matrix b(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) b(i, j) = dot(cm.jet.d2[i][j], nu);
    Matrix C(m, m);  // frame[a] = sum_i C(i,a) d1[i]
    {
        // Solve g C = T where T(i,a) = <d1[i], frame[a]>.
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t i = 0; i < m; ++i) {
                double s = 0.0;
                for (std::size_t l = 0; l < m; ++l) s += cm.ginv(i, l) * dot(cm.jet.d1[l], frame[a]);
                C(i, a) = s;
            }
    }
    SurfaceSample s;
    s.point = cm.jet.x;
    s.normal = nu;
    s.frame = frame;
    s.second_fundamental = Matrix(m, m);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t c = 0; c < m; ++c) {
            double v = 0.0;
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < m; ++j) v += C(i, a) * b(i, j) * C(j, c);
            s.second_fundamental(a, c) = v;
        }
    s.mean_curvature = s.second_fundamental.trace() * s.normal;
    return s;
}

//---------------------------------------------------------------------------//
// Cylinder identities
//---------------------------------------------------------------------------//

/// Evaluation of u = sum_{A<=k+1} x_A^2 and of the identities it satisfies on
/// any self-shrinker: the gradient identity, the formula for (1/2) Delta_f u
/// and the upper bound for Delta_f sqrt(u).
struct CylinderIdentities {
    double u = 0.0;
    double grad_id_residual = 0.0;  ///< |grad u|^2/4 - u (1 - <xbar/|xbar|, Nbar>^2)
    double laplu_residual = 0.0;    ///< Delta_f u / 2 - (k + 1 - |Nbar|^2 - u)
    double half_weighted_laplacian = 0.0;
    std::optional<double> sqrtu_slack;  ///< (k - u)/sqrt(u) - Delta_f sqrt(u); empty when u = 0
};

inline CylinderIdentities cylinder_identities(int k, const ParametrizedPatch& patch,
                                              const Point& orientation_hint) {
    const detail::ChartMetric cm = detail::chart_metric(patch);
    const std::size_t n = cm.jet.x.size();
    if (k < 1 || static_cast<std::size_t>(k + 1) > n) throw ParameterError("cylinder index k out of range");
    const std::size_t kk = static_cast<std::size_t>(k + 1);
    auto u_of = [kk](const auto& x) {
        typename std::decay_t<decltype(x)>::value_type s = 0.0;
        for (std::size_t a = 0; a < kk; ++a) s += x[a] * x[a];
        return s;
    };
    const SurfaceSample s = sample_patch(patch, orientation_hint);
    const detail::IntrinsicOps ou = detail::intrinsic_ops(patch, cm, [&](const PointL& x) { return u_of(x); });

    double xbar_nbar = 0.0, nbar_sq = 0.0;
    for (std::size_t a = 0; a < kk; ++a) {
        xbar_nbar += s.point[a] * s.normal[a];
        nbar_sq += s.normal[a] * s.normal[a];
    }
    CylinderIdentities out;
    out.u = u_of(s.point);
    out.grad_id_residual = 0.25 * ou.grad_sq - (out.u - xbar_nbar * xbar_nbar);
    out.half_weighted_laplacian = 0.5 * ou.weighted_laplacian;
    out.laplu_residual = out.half_weighted_laplacian - (static_cast<double>(k) + 1.0 - nbar_sq - out.u);
    if (out.u > 0.0) {
        const double r = std::sqrt(out.u);
        const double lap_sqrt = ou.weighted_laplacian / (2.0 * r) - ou.grad_sq / (4.0 * out.u * r);
        out.sqrtu_slack = (static_cast<double>(k) - out.u) / r - lap_sqrt;
    }
    return out;
}

/// Convenience overload evaluating on a model surface near p.
inline CylinderIdentities cylinder_identities(int k, const ShrinkerModel& model, const Point& p,
                                              double fd_step = 1e-4) {
    const ParametrizedPatch patch = model_chart(model, p, fd_step);
    return cylinder_identities(k, patch, outward_normal(model, project(model, p)));
}

//---------------------------------------------------------------------------//
// Extrinsic volume growth
//---------------------------------------------------------------------------//

struct VolumeGrowth {
    std::vector<std::pair<double, double>> table;  ///< (R, |Sigma cap B_R|)
    double fitted_exponent = 0.0;
};

namespace detail {

/// Chart of S^{d-1}_rho in R^d by hyperspherical angles; the parameter box
/// is [0,pi]^{d-2} x [0,2pi). For d == 1 the "sphere" is {-rho, rho}.
inline Point hyperspherical(double rho, const double* angles, std::size_t d) {
    Point x(d);
    double s = rho;
    for (std::size_t i = 0; i + 1 < d; ++i) {
        x[i] = s * std::cos(angles[i]);
        s *= std::sin(angles[i]);
    }
    x[d - 1] = s;
    return x;
}

/// Midpoint-rule area of a chart over a box. `chart` maps the full
/// parameter vector; the Jacobian is taken by central differences.
inline double chart_area(const std::function<Point(const Point&)>& chart, const std::vector<double>& lo,
                         const std::vector<double>& hi, int points_per_dim) {
    const std::size_t m = lo.size();
    if (m == 0) return 1.0;
    std::vector<double> step(m);
    double cell = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
        step[i] = (hi[i] - lo[i]) / points_per_dim;
        cell *= step[i];
    }
    std::vector<int> idx(m, 0);
    double total = 0.0;
    const double fd = 1e-6;
    Point t(m);
    while (true) {
        for (std::size_t i = 0; i < m; ++i) t[i] = lo[i] + (idx[i] + 0.5) * step[i];
        std::vector<Point> J(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double hi_ = fd * std::max(1.0, std::abs(hi[i] - lo[i]));
            J[i] = (0.5 / hi_) * (chart(shifted(t, i, hi_)) - chart(shifted(t, i, -hi_)));
        }
        Matrix g(m, m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) g(i, j) = dot(J[i], J[j]);
        total += std::sqrt(std::max(0.0, determinant(g)));
        std::size_t d = 0;
        while (d < m && ++idx[d] == points_per_dim) idx[d++] = 0;
        if (d == m) break;
    }
    return total * cell;
}

/// Bisection for the largest s in [0, s_hi] with |chart(s)| <= R, where |chart|
/// increases with s.
inline double bisect_radius(const std::function<double(double)>& norm_at, double R, double s_hi) {
    double lo = 0.0, hi = s_hi;
    if (norm_at(hi) <= R) return hi;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (norm_at(mid) <= R ? lo : hi) = mid;
        if (hi - lo < 1e-15 * std::max(1.0, hi)) break;
    }
    return 0.5 * (lo + hi);
}

/// Area of the product S^{ks-1}_rho x (ball of radius s in R^d), the
/// spherical factor first (ks == 0 means no spherical factor). Flat factor
/// uses a radial chart (s, omega); the radial bound is found by bisection so
/// that the chart stays inside B_R.
inline double product_area_in_ball(std::size_t ks, double rho, std::size_t d, double R,
                                   int points_per_dim) {
    const double s_max = R + 1.0;
    auto point_norm = [&](double s) { return std::sqrt(rho * rho + s * s); };
    if (point_norm(0.0) > R) return 0.0;
    const double s_bound = (d == 0) ? 0.0 : bisect_radius(point_norm, R, s_max);

    std::vector<double> lo, hi;
    // Spherical factor angles.
    const std::size_t sph_params = ks >= 2 ? ks - 1 : 0;
    for (std::size_t i = 0; i < sph_params; ++i) {
        lo.push_back(0.0);
        hi.push_back(i + 1 == sph_params ? 2.0 * std::numbers::pi : std::numbers::pi);
    }
    // Flat factor: d == 1 is the segment [-s, s]; d >= 2 is (radius, angles).
    if (d == 1) {
        lo.push_back(-s_bound);
        hi.push_back(s_bound);
    } else if (d >= 2) {
        lo.push_back(0.0);
        hi.push_back(s_bound);
        for (std::size_t i = 0; i + 1 < d; ++i) {
            lo.push_back(0.0);
            hi.push_back(i + 2 == d ? 2.0 * std::numbers::pi : std::numbers::pi);
        }
    }
    auto chart = [&](const Point& t) {
        Point x;
        if (ks >= 2) {
            x = hyperspherical(rho, t.data(), ks);
        } else if (ks == 1) {
            x = {rho};  // S^0 handled by the multiplicity below
        }
        if (d == 1) {
            x.push_back(t[sph_params]);
        } else if (d >= 2) {
            Point y = hyperspherical(t[sph_params], t.data() + sph_params + 1, d);
            x.insert(x.end(), y.begin(), y.end());
        }
        return x;
    };
    double area = chart_area(chart, lo, hi, points_per_dim);
    if (ks == 1) area *= 2.0;  // two antipodal sheets
    return area;
}

}  // namespace detail

/// Area |Sigma cap B_R| of the model by tensor-product midpoint quadrature.
inline double model_area_in_ball(const ShrinkerModel& model, double R, int points_per_dim = 256) {
    const std::size_t m = static_cast<std::size_t>(model.m());
    switch (model.kind()) {
        case ModelKind::Hyperplane:
            return detail::product_area_in_ball(0, 0.0, m, R, points_per_dim);
        case ModelKind::Sphere:
            return detail::product_area_in_ball(m + 1, model.radius(), 0, R, points_per_dim);
        case ModelKind::Cylinder: {
            const std::size_t ks = static_cast<std::size_t>(model.k() + 1);
            return detail::product_area_in_ball(ks, model.radius(), m + 1 - ks, R, points_per_dim);
        }
    }
    return 0.0;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<std::pair<double, double>>& pts) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(pts.size());
    for (const auto& [x, y] : pts) {
        const double lx = std::log(x), ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Area table over the radii and the growth exponent fitted on the upper
/// half of the radii.
inline VolumeGrowth extrinsic_volume_growth(const ShrinkerModel& model, const std::vector<double>& radii,
                                            int points_per_dim = 256) {
    if (radii.size() < 3) throw ParameterError("volume growth needs at least 3 radii");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] > radii[i - 1])) throw ParameterError("radii must be increasing");
    if (radii.front() <= model.radius()) throw ParameterError("radii must exceed the model's core radius");
    VolumeGrowth out;
    for (double R : radii) out.table.emplace_back(R, model_area_in_ball(model, R, points_per_dim));
    std::vector<std::pair<double, double>> upper(out.table.begin() + static_cast<long>(radii.size() / 2),
                                                 out.table.end());
    out.fitted_exponent = loglog_slope(upper);
    return out;
}

}  // namespace frankel
