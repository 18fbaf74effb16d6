#pragma once

// Weighted Dirichlet energy, energy growth in balls and the boundary-flux
// (Caccioppoli) bound.

#include <cmath>
#include <numbers>
#include <ostream>
#include <vector>

#include <nlohmann/json.hpp>

#include "frankel/cells.hpp"
#include "frankel/core.hpp"
#include "frankel/domain.hpp"
#include "frankel/fields.hpp"
#include "frankel/solver.hpp"

namespace frankel {

struct EnergyOptions {
    /// Cell size for field-backed solutions (grid solutions use their own h).
    double h = 1.0 / 32;
    /// Radius of integration for field-backed solutions.
    double radius = 4.0;
    int refine = 2;
};

struct GrowthEntry {
    double R = 0.0;
    double value = 0.0;      ///< (1/R^2) int_{B_R cap Omega} |grad u|^2 dv_f
    bool truncated = false;  ///< R exceeds the solved region
};

struct EnergyReport {
    double total_energy = 0.0;  ///< (1/2) int_Omega |grad u|^2 dv_f
    std::vector<GrowthEntry> growth_profile;
    double tail_sup_estimate = 0.0;  ///< sup of the profile over the last half of the radii
    double caccioppoli_lhs = 0.0;
    double caccioppoli_rhs = 0.0;
    double boundary_flux = 0.0;
    bool caccioppoli_satisfied = false;

    void write_growth_csv(std::ostream& os) const {
        os.precision(17);
        os << "R,value,truncated\n";
        for (const auto& e : growth_profile) os << e.R << ',' << e.value << ',' << (e.truncated ? 1 : 0) << '\n';
    }
};

inline void to_json(nlohmann::json& j, const EnergyReport& r) {
    nlohmann::json g = nlohmann::json::array();
    for (const auto& e : r.growth_profile) g.push_back({{"R", e.R}, {"value", e.value}, {"truncated", e.truncated}});
    j = {{"total_energy", r.total_energy},
         {"growth_profile", g},
         {"tail_sup_estimate", r.tail_sup_estimate},
         {"caccioppoli_lhs", r.caccioppoli_lhs},
         {"caccioppoli_rhs", r.caccioppoli_rhs},
         {"boundary_flux", r.boundary_flux},
         {"caccioppoli_satisfied", r.caccioppoli_satisfied}};
}

namespace detail {

inline void check_shape(const Solution& u, const DomainSpec& domain) {
    std::size_t dim = domain.dim;
    if (u.is_profile() && u.profile->dim() != dim)
        throw ParameterError("solution dimension " + std::to_string(u.profile->dim()) + " does not match the domain (" +
                             std::to_string(dim) + ")");
    if (u.is_grid() && u.grid->grid->dim() != dim) throw ParameterError("grid dimension does not match the domain");
}

inline cells::Region energy_region(const Solution& u, const DomainSpec& domain, double R, const EnergyOptions& opt) {
    cells::Region r;
    r.dim = domain.dim;
    r.h = u.is_grid() ? u.grid->grid->h() : opt.h;
    r.radius = R;
    r.refine = opt.refine;
    for (const Boundary* b : {&domain.sigma1, &domain.sigma2})
        if (!b->empty()) r.constraints.push_back([b](const Point& x) { return (*b)(x); });
    return r;
}

/// int over Omega cap B_R of |grad u|^2 dv_f.
inline double energy_in_ball(const Solution& u, const DomainSpec& domain, double R, const EnergyOptions& opt) {
    if (u.is_profile()) return u.profile->energy_in_ball(R);
    const auto region = energy_region(u, domain, R, opt);
    return cells::integrate(region, [&](const Point& x) { return norm_sq(u.gradient(x)) * WeightSpec::density(x); });
}

inline double solved_radius(const Solution& u, const EnergyOptions& opt) {
    if (u.is_grid()) return u.grid->grid->domain().exhaustion_radius;
    if (u.is_profile()) return std::numeric_limits<double>::infinity();
    return opt.radius;
}

/// Inward unit normal of a boundary piece from its level function.
inline Point inward_normal(const Boundary& b, const Point& p) {
    const double e = 1e-6 * (1.0 + norm(p));
    Point g(p.size());
    for (std::size_t d = 0; d < p.size(); ++d) {
        Point a = p, c = p;
        a[d] += e;
        c[d] -= e;
        g[d] = (b(a) - b(c)) / (2.0 * e);
    }
    return normalized(g);
}

}  // namespace detail

/// (1/2) int_Omega |grad u|^2 e^{-|x|^2/2} dx. Profiles use the closed form
/// (including the tangential Gaussian mass); grid solutions are integrated
/// over Omega_k with cut-cell weights.
inline double dirichlet_energy(const Solution& u, const DomainSpec& domain, const EnergyOptions& opt = {}) {
    detail::check_shape(u, domain);
    if (u.is_profile()) return u.profile->energy();
    return 0.5 * detail::energy_in_ball(u, domain, detail::solved_radius(u, opt), opt);
}

/// (R, (1/R^2) int_{B_R cap Omega} |grad u|^2 dv_f) for each radius.
inline std::vector<GrowthEntry> energy_growth_profile(const Solution& u, const DomainSpec& domain,
                                                      const std::vector<double>& radii, const EnergyOptions& opt = {}) {
    detail::check_shape(u, domain);
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0)) throw ParameterError("growth radii must be positive");
        if (i > 0 && !(radii[i] > radii[i - 1])) throw ParameterError("growth radii must be increasing");
    }
    const double Rmax = detail::solved_radius(u, opt);
    std::vector<GrowthEntry> out;
    for (double R : radii) {
        GrowthEntry e;
        e.R = R;
        e.truncated = R > Rmax;
        double mass;
        if (u.is_profile() && u.profile->kind() == Profile::Kind::radial && R >= u.profile->hi())
            mass = 2.0 * u.profile->energy();
        else
            mass = detail::energy_in_ball(u, domain, std::min(R, Rmax), opt);
        e.value = mass / (R * R);
        out.push_back(e);
    }
    return out;
}

/// Sup of the profile over the last half of its entries.
inline double tail_sup(const std::vector<GrowthEntry>& profile) {
    if (profile.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = profile.size() / 2; i < profile.size(); ++i) s = std::max(s, profile[i].value);
    return s;
}

struct CaccioppoliResult {
    double lhs = 0.0;   ///< int_Omega |grad u|^2 dv_f
    double flux = 0.0;  ///< int_{Sigma_2} |grad u| e^{-f} dA
    double rhs = 0.0;   ///< 2 * flux
    bool satisfied = false;
};

/// Checks int |grad u|^2 dv_f <= 2 int_{Sigma_2} |grad u| dv_{2;f_2} with 5%
/// slack. Grid normal derivatives use the one-sided stencil
/// (-3 u(p) + 4 u(p + d n) - u(p + 2 d n)) / (2 d) with d = h.
inline CaccioppoliResult caccioppoli_check(const Solution& u, const DomainSpec& domain, const EnergyOptions& opt = {}) {
    detail::check_shape(u, domain);
    const Boundary& s2 = domain.sigma2;
    if (s2.empty()) throw ParameterError("caccioppoli check needs a sigma2 piece");
    if (s2.value != 1.0 || (!domain.sigma1.empty() && domain.sigma1.value != 0.0 && domain.sigma1.value != 1.0))
        throw ParameterError("caccioppoli check needs data 1 on sigma2 and 0 (or 1) on sigma1");
    CaccioppoliResult res;
    res.lhs = 2.0 * dirichlet_energy(u, domain, opt);
    if (u.is_profile()) {
        const Profile& p = *u.profile;
        const double n = static_cast<double>(p.dim());
        const double b = p.hi();
        if (p.kind() == Profile::Kind::slab)
            res.flux = p.du(b) * std::exp(-0.5 * b * b) * std::pow(2.0 * std::numbers::pi, 0.5 * (n - 1.0));
        else
            res.flux = p.du(b) * unit_sphere_area(static_cast<int>(p.dim())) * std::pow(b, n - 1.0) * std::exp(-0.5 * b * b);
    } else {
        if (!s2.surface_rule) throw ParameterError("sigma2 has no surface quadrature");
        double h = opt.h;
        if (u.is_grid()) {
            const Grid& g = *u.grid->grid;
            h = g.h();
            for (std::size_t f = 0; f < g.size(); ++f) {
                if (g.kind(f) == NodeKind::dirichlet1 && u.grid->field[f] != s2.value)
                    throw ParameterError("grid values on sigma2 nodes differ from the datum");
                if (g.kind(f) == NodeKind::dirichlet0 && u.grid->field[f] != domain.sigma1.value)
                    throw ParameterError("grid values on sigma1 nodes differ from the datum");
            }
        }
        const double R = detail::solved_radius(u, opt);
        const auto nodes = s2.surface_rule(h, R);
        std::size_t used = 0;
        for (const auto& node : nodes) {
            if (norm(node.x) > R) continue;
            double dn;
            if (u.is_grid()) {
                const Point nv = detail::inward_normal(s2, node.x);
                const GridField& e = u.grid->extended;
                dn = (-3.0 * s2.value + 4.0 * e.interpolate(node.x + h * nv) - e.interpolate(node.x + 2.0 * h * nv)) /
                     (2.0 * h);
                dn = std::abs(dn);
            } else {
                dn = norm(u.gradient(node.x));
            }
            res.flux += node.area * dn * WeightSpec::density(node.x);
            ++used;
        }
        if (used == 0) throw ParameterError("sigma2 has no quadrature nodes inside the solved region");
    }
    res.rhs = 2.0 * res.flux;
    res.satisfied = res.lhs <= res.rhs * 1.05;
    return res;
}

inline EnergyReport energy_report(const Solution& u, const DomainSpec& domain, const std::vector<double>& radii,
                                  const EnergyOptions& opt = {}) {
    EnergyReport rep;
    rep.total_energy = dirichlet_energy(u, domain, opt);
    rep.growth_profile = energy_growth_profile(u, domain, radii, opt);
    rep.tail_sup_estimate = tail_sup(rep.growth_profile);
    const auto c = caccioppoli_check(u, domain, opt);
    rep.caccioppoli_lhs = c.lhs;
    rep.caccioppoli_rhs = c.rhs;
    rep.boundary_flux = c.flux;
    rep.caccioppoli_satisfied = c.satisfied;
    return rep;
}

}  // namespace frankel
