#pragma once

// Both sides of the localized Reilly identity for the Gaussian weight, and
// the cutoff energy chain used to bound energy growth.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "frankel/cells.hpp"
#include "frankel/core.hpp"
#include "frankel/domain.hpp"
#include "frankel/energy.hpp"
#include "frankel/fields.hpp"
#include "frankel/solver.hpp"

namespace frankel {

/// Radial cutoff: 1 on B_R, 0 outside B_{2R}, quintic smoothstep between,
/// so |grad phi| <= 15/(8R). The `one` variant is identically 1.
class Cutoff {
public:
    static Cutoff quintic(double R) {
        if (!(R > 0.0)) throw ParameterError("cutoff radius must be positive");
        return Cutoff(R, false);
    }
    static Cutoff one() { return Cutoff(std::numeric_limits<double>::infinity(), true); }

    bool is_one() const noexcept { return one_; }
    double R() const noexcept { return R_; }
    double support_radius() const noexcept { return one_ ? R_ : 2.0 * R_; }

    double profile(double r) const {
        if (one_ || r <= R_) return 1.0;
        if (r >= 2.0 * R_) return 0.0;
        const double t = (r - R_) / R_;
        return 1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
    }
    double profile_derivative(double r) const {
        if (one_ || r <= R_ || r >= 2.0 * R_) return 0.0;
        const double t = (r - R_) / R_;
        return -30.0 * t * t * (1.0 - t) * (1.0 - t) / R_;
    }

    double operator()(const Point& x) const { return profile(norm(x)); }
    Point gradient(const Point& x) const {
        const double r = norm(x);
        if (r == 0.0) return Point(x.size(), 0.0);
        return (profile_derivative(r) / r) * x;
    }

    /// Largest |grad phi| over `samples` radii, measured by central differences.
    double measured_max_gradient(std::size_t samples = 4000) const {
        if (one_) return 0.0;
        double best = 0.0;
        const double e = 1e-7 * R_;
        for (std::size_t i = 0; i <= samples; ++i) {
            const double r = R_ * (1.0 + static_cast<double>(i) / static_cast<double>(samples));
            best = std::max(best, std::abs(profile(r + e) - profile(r - e)) / (2.0 * e));
        }
        return best;
    }

private:
    Cutoff(double R, bool one) : R_(R), one_(one) {}
    double R_;
    bool one_;
};

//---------------------------------------------------------------------------//
// Derivatives of a solution

namespace detail {

/// First and second derivatives of a Solution at arbitrary points.
class Jet {
public:
    explicit Jet(const Solution& u) : u_(u) {
        if (!u.is_grid()) return;
        // Node derivative arrays of the extended field, interpolated multilinearly.
        const GridField& e = u.grid->extended;
        const std::size_t n = e.dim();
        grad_.assign(n, e);
        hess_.assign(n * n, e);
        std::vector<std::size_t> idx(n);
        for (std::size_t f = 0; f < e.size(); ++f) {
            idx = e.unflat(f);
            for (std::size_t a = 0; a < n; ++a) {
                grad_[a][f] = first(e, idx, a);
                hess_[a * n + a][f] = e.node_second_difference(idx, a);
            }
        }
        for (std::size_t f = 0; f < e.size(); ++f) {
            idx = e.unflat(f);
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = a + 1; b < n; ++b) hess_[a * n + b][f] = hess_[b * n + a][f] = first(grad_[a], idx, b);
        }
    }

    Point grad(const Point& x) const {
        if (u_.is_grid()) {
            Point g(x.size());
            for (std::size_t a = 0; a < g.size(); ++a) g[a] = grad_[a].interpolate(x);
            return g;
        }
        if (u_.is_profile()) {
            // One-sided limits at the boundary of the profile interval.
            const Profile& p = *u_.profile;
            Point g(x.size(), 0.0);
            if (p.kind() == Profile::Kind::slab) {
                g.back() = p.du(std::clamp(x.back(), p.lo(), p.hi()));
                return g;
            }
            const double r = norm(x);
            return r == 0.0 ? g : (p.du(std::clamp(r, p.lo(), p.hi())) / r) * x;
        }
        return u_.gradient(x);
    }

    Matrix hess(const Point& x) const {
        const std::size_t n = x.size();
        Matrix H(n, n);
        if (u_.is_grid()) {
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b) H(a, b) = hess_[a * n + b].interpolate(x);
            return H;
        }
        if (u_.is_profile()) {
            const Profile& p = *u_.profile;
            if (p.kind() == Profile::Kind::slab) {
                const double s = std::clamp(x.back(), p.lo(), p.hi());
                H(n - 1, n - 1) = s * p.du(s);
                return H;
            }
            const double r = norm(x);
            if (r == 0.0) return H;
            const double rc = std::clamp(r, p.lo(), p.hi());
            const double d1 = p.du(rc), d2 = (rc - (static_cast<double>(n) - 1.0) / rc) * d1;
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b) {
                    const double xx = x[a] * x[b] / (r * r);
                    H(a, b) = d2 * xx + d1 / rc * ((a == b ? 1.0 : 0.0) - xx);
                }
            return H;
        }
        return hessian(u_.field, x, 1e-4 * (1.0 + norm(x)));
    }

private:
    static double first(const GridField& g, std::vector<std::size_t> idx, std::size_t a) {
        const std::size_t i = idx[a], last = g.dims()[a] - 1;
        const double h = g.spacing()[a];
        auto at = [&](std::size_t k) {
            idx[a] = k;
            return g[g.flat(idx)];
        };
        if (i > 0 && i < last) return (at(i + 1) - at(i - 1)) / (2.0 * h);
        return i == 0 ? (at(1) - at(0)) / h : (at(last) - at(last - 1)) / h;
    }

    const Solution& u_;
    std::vector<GridField> grad_;
    std::vector<GridField> hess_;
};

/// Boundary geometry from the level function L (positive inside Omega):
/// exterior normal nu = -grad L/|grad L| and A = Hess L/|grad L| on tangents.
struct BoundaryGeometry {
    Point nu;
    Matrix hess_level;  ///< Hess L / |grad L|
    std::vector<Point> frame;
    double H = 0.0;
    double H_f = 0.0;

    double A(const Point& X, const Point& Y) const {
        double s = 0.0;
        for (std::size_t a = 0; a < X.size(); ++a)
            for (std::size_t b = 0; b < Y.size(); ++b) s += X[a] * hess_level(a, b) * Y[b];
        return s;
    }
};

inline Point level_gradient(const Boundary& b, const Point& x, double e) {
    Point g(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) {
        Point p = x, m = x;
        p[d] += e;
        m[d] -= e;
        g[d] = (b(p) - b(m)) / (2.0 * e);
    }
    return g;
}

inline BoundaryGeometry boundary_geometry(const Boundary& b, const Point& x) {
    if (!b.has_curvature)
        throw MissingQuantityError("boundary piece '" + b.name +
                                   "' has no curvature data: its second fundamental form (and hence H_f) is unavailable");
    BoundaryGeometry g;
    const double e = 1e-5 * (1.0 + norm(x));
    const Point grad = level_gradient(b, x, e);
    const double gn = norm(grad);
    if (!(gn > 0.0)) throw MissingQuantityError("boundary normal undefined at a sampled point");
    g.nu = (-1.0 / gn) * grad;
    const ScalarField L([&b](const Point& p) { return b(p); });
    // Richardson-extrapolated second differences.
    const double eh = 1e-3 * (1.0 + norm(x));
    const Matrix h1 = hessian(L, x, eh), h2 = hessian(L, x, 2.0 * eh);
    g.hess_level = h1;
    for (std::size_t i = 0; i < h1.a.size(); ++i) g.hess_level.a[i] = (4.0 * h1.a[i] - h2.a[i]) / (3.0 * gn);
    g.frame = tangent_frame(g.nu);
    for (const auto& E : g.frame) g.H += g.A(E, E);
    g.H_f = g.H + dot(x, g.nu);
    return g;
}

}  // namespace detail

struct ReillyOptions {
    int refine = 2;             ///< cut-cell subdivision
    double tdn_step = 0.0;      ///< step for the tangential derivative of du/dnu; 0 picks a default
};

struct ReillyReport {
    double volume_side = 0.0;
    double boundary_side = 0.0;
    double residual = 0.0;
    double mesh_h = 0.0;
    std::map<std::string, double> term_breakdown;
    /// Integrated |D_delta - D_2delta| of the tangential derivative term.
    double tangential_derivative_uncertainty = 0.0;
    double hess_sq_interior = 0.0;
    double hess_sq_near_boundary = 0.0;  ///< cells within two grid steps of a boundary piece
    std::size_t boundary_nodes = 0;
};

inline void to_json(nlohmann::json& j, const ReillyReport& r) {
    j = {{"volume_side", r.volume_side},
         {"boundary_side", r.boundary_side},
         {"residual", r.residual},
         {"mesh_h", r.mesh_h},
         {"term_breakdown", r.term_breakdown},
         {"tangential_derivative_uncertainty", r.tangential_derivative_uncertainty},
         {"hess_sq_interior", r.hess_sq_interior},
         {"hess_sq_near_boundary", r.hess_sq_near_boundary},
         {"boundary_nodes", r.boundary_nodes}};
}

namespace detail {

inline std::vector<const Boundary*> pieces(const DomainSpec& d) {
    std::vector<const Boundary*> out;
    for (const Boundary* b : {&d.sigma1, &d.sigma2})
        if (!b->empty()) out.push_back(b);
    return out;
}

/// Integration radius: the support of phi, or the solved region when phi = 1.
inline double reilly_radius(const Solution& u, const Cutoff& phi, const DomainSpec& domain) {
    double rad = phi.support_radius();
    const double solved = u.is_grid() ? u.grid->grid->domain().exhaustion_radius : domain.exhaustion_radius;
    if (phi.is_one()) {
        rad = solved;
        // Omega must stay away from the sphere |x| = rad, or the identity gains terms there.
        const std::size_t n = domain.dim;
        std::vector<Point> frame;
        for (std::size_t i = 0; i < n; ++i) frame.push_back(unit_vector(n, i));
        for (std::size_t j = 0; j < 4000; ++j)
            if (domain.inside(rad * schedule_direction(frame, j)))
                throw ParameterError("with phi = 1 the domain must lie inside the ball of radius " + std::to_string(rad));
    } else if (u.is_grid() && rad > solved) {
        throw ParameterError("cutoff support exceeds the solved region");
    }
    return rad;
}

}  // namespace detail

/// Volume side  int phi^2 (|Hess u|^2 - (Delta_f u)^2 + |grad u|^2) dv_f
///              + int <grad phi^2, Hess u grad u - Delta_f u grad u> dv_f
/// and boundary side
///   int_Sigma phi^2 [A(T,T) + T(du/dnu) - (Delta^Sigma_f u - H_f du/dnu) du/dnu] dv_f
/// with T the tangential gradient and nu the exterior normal.
inline ReillyReport reilly_residual(const Solution& u, const Cutoff& phi, const DomainSpec& domain, double mesh_h,
                                    const ReillyOptions& opt = {}) {
    if (!(mesh_h > 0.0)) throw ParameterError("mesh_h must be positive");
    const auto bs = detail::pieces(domain);
    for (const Boundary* b : bs)
        if (!b->has_curvature)
            throw MissingQuantityError("boundary piece '" + b->name +
                                       "' has no curvature data: its second fundamental form (and hence H_f) is unavailable");
    const double rad = detail::reilly_radius(u, phi, domain);
    const detail::Jet jet(u);
    ReillyReport rep;
    rep.mesh_h = mesh_h;

    // Volume side.
    cells::Region region;
    region.dim = domain.dim;
    region.h = mesh_h;
    region.radius = rad;
    region.refine = opt.refine;
    for (const Boundary* b : bs) region.constraints.push_back([b](const Point& x) { return (*b)(x); });
    double hess_sq = 0, lap_sq = 0, ric = 0, transport = 0;
    const double near = 2.0 * (u.is_grid() ? u.grid->grid->h() : mesh_h);
    cells::for_each_node(region, [&](const Point& x, double w) {
        const double wf = w * WeightSpec::density(x);
        const Point g = jet.grad(x);
        const Matrix H = jet.hess(x);
        const std::size_t n = x.size();
        double hs = 0.0, lap = H.trace() - dot(x, g);
        Point Hg(n, 0.0);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
                hs += H(a, b) * H(a, b);
                Hg[a] += H(a, b) * g[b];
            }
        const double p = phi(x);
        const Point dphi2 = (2.0 * p) * phi.gradient(x);
        const double t_hs = p * p * hs * wf;
        hess_sq += t_hs;
        bool close = false;
        for (const Boundary* b : bs) close = close || std::abs((*b)(x)) < near;
        (close ? rep.hess_sq_near_boundary : rep.hess_sq_interior) += t_hs;
        lap_sq += p * p * lap * lap * wf;
        ric += p * p * norm_sq(g) * wf;  // Ric_f = identity for the Gaussian weight
        transport += (dot(dphi2, Hg) - lap * dot(dphi2, g)) * wf;
    });
    rep.volume_side = hess_sq - lap_sq + ric + transport;

    // Boundary side.
    double a_tt = 0, t_dnu = 0, lap_term = 0, unc = 0;
    const double delta = opt.tdn_step > 0.0 ? opt.tdn_step : (u.is_grid() ? u.grid->grid->h() : 1e-3);
    for (const Boundary* b : bs) {
        if (!b->surface_rule) throw MissingQuantityError("boundary piece '" + b->name + "' has no surface quadrature");
        for (const auto& node : b->surface_rule(mesh_h, rad)) {
            const Point& x = node.x;
            if (norm(x) > rad) continue;
            bool other_ok = true;
            for (const Boundary* o : bs)
                if (o != b && (*o)(x) <= 0.0) other_ok = false;
            if (!other_ok) continue;
            const double p = phi(x);
            if (p == 0.0) continue;
            ++rep.boundary_nodes;
            const auto geo = detail::boundary_geometry(*b, x);
            const double wf = node.area * WeightSpec::density(x) * p * p;
            if (u.is_grid()) {
                // Grid solutions carry constant data on every piece: the
                // tangential gradient and Delta^Sigma_f u vanish there.
                const GridField& ext = u.grid->extended;
                const double hg = u.grid->grid->h();
                const Point in = (-1.0) * geo.nu;
                const double dn_in = (-3.0 * b->value + 4.0 * ext.interpolate(x + hg * in) -
                                      ext.interpolate(x + 2.0 * hg * in)) / (2.0 * hg);
                lap_term -= wf * geo.H_f * dn_in * dn_in;
                continue;
            }
            const Point g = jet.grad(x);
            const Matrix H = jet.hess(x);
            const double dnu = dot(g, geo.nu);
            const Point T = g - dnu * geo.nu;
            const double tn = norm(T);
            double d_t = 0.0;
            if (tn > 0.0) {
                // Derivative of <grad u, nu> along T, nu extended by the level-set normal.
                const Point t = (1.0 / tn) * T;
                auto dn_at = [&](const Point& y) {
                    const Point gl = detail::level_gradient(*b, y, 1e-5 * (1.0 + norm(y)));
                    return -dot(jet.grad(y), gl) / norm(gl);
                };
                const double d1 = (dn_at(x + delta * t) - dn_at(x - delta * t)) / (2.0 * delta);
                const double d2 = (dn_at(x + 2.0 * delta * t) - dn_at(x - 2.0 * delta * t)) / (4.0 * delta);
                d_t = tn * (4.0 * d1 - d2) / 3.0;
                unc += wf * tn * std::abs(d1 - d2);
            }
            double tr = 0.0;
            for (const auto& E : geo.frame) {
                double s = 0.0;
                for (std::size_t a = 0; a < E.size(); ++a)
                    for (std::size_t c = 0; c < E.size(); ++c) s += E[a] * H(a, c) * E[c];
                tr += s;
            }
            const double lap_sigma_f = tr + geo.H * dnu - dot(x, T);
            a_tt += wf * geo.A(T, T);
            t_dnu += wf * d_t;
            lap_term += wf * (lap_sigma_f - geo.H_f * dnu) * dnu;
        }
    }
    rep.boundary_side = a_tt + t_dnu - lap_term;
    rep.residual = std::abs(rep.volume_side - rep.boundary_side);
    rep.tangential_derivative_uncertainty = unc;
    rep.term_breakdown = {{"hess_sq", hess_sq},
                          {"lap_f_sq", lap_sq},
                          {"ric_f", ric},
                          {"transport", transport},
                          {"boundary_A_TT", a_tt},
                          {"boundary_T_dnu", t_dnu},
                          {"boundary_lap_term", lap_term}};
    return rep;
}

inline ReillyReport reilly_residual(const ScalarField& u, const Cutoff& phi, const DomainSpec& domain, double mesh_h,
                                    const ReillyOptions& opt = {}) {
    return reilly_residual(Solution::from_field(u, "field"), phi, domain, mesh_h, opt);
}

//---------------------------------------------------------------------------//
// Energy chain with K = 1, epsilon = 2

struct ChainEntry {
    double R = 0.0;
    double lhs_energy = 0.0;  ///< int_{Omega cap B_R} |grad u|^2 dv_f
    double rhs_bound = 0.0;   ///< (8/R^2) int_{Omega cap B_2R} |grad u|^2 dv_f
    /// Dropped term int_{Sigma_i} phi_R^2 H_f (du/dnu)^2 dv_f, per piece.
    std::vector<std::pair<std::string, double>> boundary_terms;
    double boundary_total = 0.0;
    bool chain_holds = false;      ///< lhs <= rhs
    bool corrected_holds = false;  ///< lhs <= rhs + boundary_total
    bool truncated = false;        ///< 2R exceeds the solved region
};

struct ChainReport {
    std::vector<ChainEntry> per_R;
    bool consistent = false;  ///< the plain chain holds at every R
    bool attributed = false;  ///< every failure co-occurs with a nonzero boundary term
};

inline void to_json(nlohmann::json& j, const ChainReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& e : r.per_R) {
        nlohmann::json terms = nlohmann::json::object();
        for (const auto& [name, v] : e.boundary_terms) terms[name] = v;
        rows.push_back({{"R", e.R},
                        {"lhs_energy", e.lhs_energy},
                        {"rhs_bound", e.rhs_bound},
                        {"boundary_terms", terms},
                        {"boundary_total", e.boundary_total},
                        {"chain_holds", e.chain_holds},
                        {"corrected_holds", e.corrected_holds},
                        {"truncated", e.truncated}});
    }
    j = {{"per_R", rows}, {"consistent", r.consistent}, {"attributed", r.attributed}};
}

struct ChainOptions {
    double attribution_threshold = 1e-6;  ///< |boundary term| above this counts as nonzero
    EnergyOptions energy;
};

inline ChainReport energy_chain(const Solution& u, const DomainSpec& domain, const std::vector<double>& radii,
                                  const ChainOptions& opt = {}) {
    if (radii.empty()) throw ParameterError("chain needs at least one radius");
    const auto bs = detail::pieces(domain);
    const double solved = detail::solved_radius(u, opt.energy);
    const double h = u.is_grid() ? u.grid->grid->h() : opt.energy.h;
    ChainReport rep;
    rep.attributed = true;
    for (double R : radii) {
        if (!(R > 0.0)) throw ParameterError("chain radii must be positive");
        ChainEntry e;
        e.R = R;
        e.truncated = 2.0 * R > solved;
        e.lhs_energy = detail::energy_in_ball(u, domain, std::min(R, solved), opt.energy);
        e.rhs_bound = 8.0 / (R * R) * detail::energy_in_ball(u, domain, std::min(2.0 * R, solved), opt.energy);
        const Cutoff phi = Cutoff::quintic(R);
        for (const Boundary* b : bs) {
            double term = 0.0;
            if (b->surface_rule) {
                for (const auto& node : b->surface_rule(h, std::min(2.0 * R, solved))) {
                    const double p = phi(node.x);
                    if (p == 0.0) continue;
                    const auto geo = detail::boundary_geometry(*b, node.x);
                    double dnu;
                    if (u.is_grid()) {
                        const GridField& ext = u.grid->extended;
                        const Point in = (-1.0) * geo.nu;
                        dnu = (-3.0 * b->value + 4.0 * ext.interpolate(node.x + h * in) -
                               ext.interpolate(node.x + 2.0 * h * in)) / (2.0 * h);
                    } else {
                        dnu = dot(u.gradient(node.x), geo.nu);
                    }
                    term += node.area * WeightSpec::density(node.x) * p * p * geo.H_f * dnu * dnu;
                }
            }
            e.boundary_terms.emplace_back(b == &domain.sigma1 ? "sigma1" : "sigma2", term);
            e.boundary_total += term;
        }
        e.chain_holds = e.lhs_energy <= e.rhs_bound;
        e.corrected_holds = e.lhs_energy <= e.rhs_bound + e.boundary_total;
        if (!e.chain_holds && !(std::abs(e.boundary_total) > opt.attribution_threshold)) rep.attributed = false;
        rep.per_R.push_back(e);
    }
    rep.consistent = std::all_of(rep.per_R.begin(), rep.per_R.end(), [](const ChainEntry& e) { return e.chain_holds; });
    return rep;
}

}  // namespace frankel
