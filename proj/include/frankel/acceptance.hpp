#pragma once

// The acceptance suite: twelve end-to-end checks with tolerances and
// runtime budgets, shared by the acceptance binary and the CLI.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "frankel/barrier.hpp"
#include "frankel/energy.hpp"
#include "frankel/geometry.hpp"
#include "frankel/oracle.hpp"
#include "frankel/reilly.hpp"
#include "frankel/solver.hpp"

namespace frankel::acceptance {

struct Criterion {
    int id = 0;
    std::string name;
    bool tolerance_met = false;
    double seconds = 0.0;
    double budget = 0.0;  ///< seconds
    std::string detail;

    bool within_budget() const { return seconds <= budget; }
    bool passed() const { return tolerance_met && within_budget(); }
};

inline void to_json(nlohmann::json& j, const Criterion& c) {
    j = {{"id", c.id},
         {"name", c.name},
         {"passed", c.passed()},
         {"tolerance_met", c.tolerance_met},
         {"seconds", c.seconds},
         {"budget", c.budget},
         {"detail", c.detail}};
}

namespace detail {

inline std::vector<ShrinkerModel> models(int max_m) {
    std::vector<ShrinkerModel> out;
    for (int m = 1; m <= max_m; ++m) {
        const auto n = static_cast<std::size_t>(m + 1);
        out.push_back(ShrinkerModel::hyperplane(unit_vector(n, n - 1)));
        out.push_back(ShrinkerModel::hyperplane(normalized(Point(n, 1.0))));
        out.push_back(ShrinkerModel::sphere(m));
        for (int k = 1; k <= m - 1; ++k) out.push_back(ShrinkerModel::cylinder(m, k));
    }
    return out;
}

inline std::string sci(double v) {
    std::ostringstream os;
    os << std::setprecision(3) << std::scientific << v;
    return os.str();
}

inline double max_node_error(const Solution& s, const Profile& exact, double radius) {
    const Grid& g = *s.grid->grid;
    double err = 0.0;
    for (std::size_t f = 0; f < g.size(); ++f)
        if (g.kind(f) == NodeKind::interior && norm(g.node(f)) <= radius)
            err = std::max(err, std::abs(s.grid->field[f] - exact.value(g.node(f))));
    return err;
}

}  // namespace detail

inline Criterion shrinker_residuals() {
    Criterion c{1, "shrinker residuals", false, 0, 1, ""};
    double worst = 0.0;
    for (const auto& model : detail::models(3))
        for (const auto& p : model_samples(model, 1000))
            worst = std::max(worst, norm(shrinker_residual(sample_model(model, p))));
    c.tolerance_met = worst < 1e-9;
    c.detail = "max |x^perp + H| = " + detail::sci(worst) + " (< 1e-9)";
    return c;
}

inline Criterion cylinder_identities_check() {
    Criterion c{2, "cylinder identities", false, 0, 5, ""};
    double worst = 0.0, slack = std::numeric_limits<double>::infinity();
    for (const auto& model : detail::models(3)) {
        if (model.m() < 2) continue;
        for (int k = 1; k <= model.m() - 1; ++k)
            for (const auto& p : model_samples(model, 50)) {
                const auto r = cylinder_identities(k, model, p);
                worst = std::max({worst, std::abs(r.grad_id_residual), std::abs(r.laplu_residual)});
                if (r.sqrtu_slack) slack = std::min(slack, *r.sqrtu_slack);
            }
    }
    c.tolerance_met = worst < 1e-6 && slack >= -1e-8;
    c.detail = "max residual " + detail::sci(worst) + " (< 1e-6), min slack " + detail::sci(slack) + " (>= -1e-8)";
    return c;
}

inline Criterion volume_growth() {
    Criterion c{3, "volume growth", false, 0, 10, ""};
    const std::vector<double> radii{2, 4, 6, 8, 10};
    const double plane = extrinsic_volume_growth(ShrinkerModel::hyperplane({0, 0, 1}), radii).fitted_exponent;
    const double cyl = extrinsic_volume_growth(ShrinkerModel::cylinder(2, 1), radii).fitted_exponent;
    const double sph = extrinsic_volume_growth(ShrinkerModel::sphere(2), radii).fitted_exponent;
    c.tolerance_met = std::abs(plane - 2.0) <= 0.02 && cyl <= 2.05 && sph <= 2.05;
    std::ostringstream os;
    os << std::setprecision(4) << "exponents plane " << plane << ", cylinder " << cyl << ", sphere " << sph;
    c.detail = os.str();
    return c;
}

inline Criterion solver_convergence() {
    Criterion c{4, "solver convergence", false, 0, 60, ""};
    const std::vector<double> hs{1.0 / 16, 1.0 / 32, 1.0 / 64};
    const auto slab = solve_slab(-1, 1), ann = solve_radial(0.5, 2, 2);
    std::vector<double> es, ea;
    for (double h : hs) {
        es.push_back(detail::max_node_error(solve_mixed_bvp(slab_domain(-1, 1, 2, 6), h), *slab.profile, 3.0));
        ea.push_back(detail::max_node_error(solve_mixed_bvp(annulus_domain(0.5, 2, 2, 2.5), h), *ann.profile, 10.0));
    }
    auto order = [](const std::vector<double>& e) { return std::min(std::log2(e[0] / e[1]), std::log2(e[1] / e[2])); };
    c.tolerance_met = order(es) >= 1.8 && order(ea) >= 1.8 && es[2] < 5e-4 && ea[2] < 5e-4;
    std::ostringstream os;
    os << std::setprecision(3) << "slab order " << order(es) << " err " << detail::sci(es[2]) << "; annulus order "
       << order(ea) << " err " << detail::sci(ea[2]);
    c.detail = os.str();
    return c;
}

inline Criterion maximum_principle() {
    Criterion c{5, "maximum principle and uniqueness", false, 0, 30, ""};
    bool in_range = true;
    double diff = 0.0;
    SolveOptions a, b;
    b.initial_guess = 1.0;
    for (const auto& dom : {slab_domain(-1, 1, 2, 4), slab_domain(0, 1, 2, 4), annulus_domain(0.5, 2, 2, 2.5)}) {
        const auto s1 = solve_mixed_bvp(dom, 1.0 / 32, a), s2 = solve_mixed_bvp(dom, 1.0 / 32, b);
        for (std::size_t f = 0; f < s1.grid->field.size(); ++f) {
            const double v = s1.grid->field[f], w = s2.grid->field[f];
            in_range = in_range && v >= 0.0 && v <= 1.0 && w >= 0.0 && w <= 1.0;
            diff = std::max(diff, std::abs(v - w));
        }
    }
    c.tolerance_met = in_range && diff <= 10.0 * a.tol;
    c.detail = std::string(in_range ? "all values in [0,1]" : "values outside [0,1]") + ", initial guesses differ by " +
               detail::sci(diff) + " (<= " + detail::sci(10.0 * a.tol) + ")";
    return c;
}

inline Criterion monte_carlo() {
    Criterion c{6, "Monte Carlo cross-validation", false, 0, 120, ""};
    const McConfig cfg{.n_paths = 100000, .dt = 1e-3, .seed = 20240601};
    const auto slab_dom = slab_domain(-1, 1, 2);
    const auto ann_dom = annulus_domain(0.5, 2.0, 2);
    const auto slab = solve_slab(-1, 1);
    const auto ann = solve_radial(0.5, 2.0, 2);
    bool ok = true;
    double worst = 0.0;
    std::size_t first_hits = 0;
    for (double s : {-0.5, 0.0, 0.5}) {
        const auto e = ou_hitting_probability(Point{0.0, s}, slab_dom, cfg);
        if (s == 0.5) first_hits = e.hits_sigma2;
        const double z = std::abs(e.p_hat - slab(Point{0.0, s})) / e.stderr_;
        worst = std::max(worst, z);
        ok = ok && z <= 3.0;
    }
    for (double r : {0.75, 1.0, 1.5}) {
        const auto e = ou_hitting_probability(Point{0.0, r}, ann_dom, cfg);
        const double z = std::abs(e.p_hat - ann(Point{r, 0.0})) / e.stderr_;
        worst = std::max(worst, z);
        ok = ok && z <= 3.0;
    }
    const bool repro = ou_hitting_probability(Point{0.0, 0.5}, slab_dom, cfg).hits_sigma2 == first_hits;
    c.tolerance_met = ok && repro;
    std::ostringstream os;
    os << std::setprecision(3) << "max |p - u|/stderr " << worst << " (<= 3), rerun "
       << (repro ? "bit-identical" : "differs");
    c.detail = os.str();
    return c;
}

inline Criterion reilly_identity() {
    Criterion c{7, "localized Reilly identity", false, 0, 120, ""};
    const auto ball = ball_domain(1.0, 3);
    const ScalarField x1([](const Point& x) { return x[0]; });
    bool ok = true;
    std::ostringstream os;
    for (const auto& [label, phi] : {std::pair{"phi=1", Cutoff::one()}, std::pair{"cutoff R=1/2", Cutoff::quintic(0.5)}}) {
        std::vector<double> r;
        for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) r.push_back(reilly_residual(x1, phi, ball, h).residual);
        const double q1 = r[1] / r[0], q2 = r[2] / r[1];
        ok = ok && r[2] <= 1e-3 && q1 <= 0.75 && q2 <= 0.75;
        os << label << ": residual " << detail::sci(r[2]) << ", ratios " << std::setprecision(3) << q1 << ' ' << q2
           << "; ";
    }
    c.tolerance_met = ok;
    c.detail = os.str();
    return c;
}

inline Criterion chain_attribution() {
    Criterion c{8, "energy chain attribution", false, 0, 60, ""};
    const auto off = slab_domain(-1, 1, 2, 8);
    const auto a = energy_chain(solve_mixed_bvp(off, 1.0 / 16), off, {1, 2, 4});
    const auto fmin = slab_domain(0, 1, 2, 8);
    const auto b = energy_chain(solve_mixed_bvp(fmin, 1.0 / 16), fmin, {1, 2, 4});
    double minimal_term = 0.0;
    for (const auto& e : b.per_R) minimal_term = std::max(minimal_term, std::abs(e.boundary_terms.at(0).second));
    c.tolerance_met = !a.consistent && a.attributed && minimal_term < 1e-6;
    c.detail = std::string("off-origin slab: ") + (a.consistent ? "chain holds" : "chain fails") +
               (a.attributed ? ", attributed" : ", unattributed") + "; f-minimal piece term " +
               detail::sci(minimal_term) + " (< 1e-6)";
    return c;
}

inline Criterion caccioppoli() {
    Criterion c{9, "Caccioppoli bound", false, 0, 10, ""};
    bool ok = true;
    double worst = 0.0;
    for (const auto& [dom, exact] : {std::pair{slab_domain(-1, 1, 2, 4), solve_slab(-1, 1)},
                                     std::pair{slab_domain(0, 1, 2, 4), solve_slab(0, 1)},
                                     std::pair{annulus_domain(0.5, 2, 2, 2.5), solve_radial(0.5, 2, 2)}}) {
        for (const auto& u : {exact, solve_mixed_bvp(dom, 1.0 / 32)}) {
            const auto r = caccioppoli_check(u, dom);
            ok = ok && r.satisfied;
            worst = std::max(worst, r.lhs / r.rhs);
        }
    }
    c.tolerance_met = ok;
    c.detail = "max lhs/rhs " + detail::sci(worst) + " (<= 1.05)";
    return c;
}

inline Criterion barrier_suite() {
    Criterion c{10, "barrier suite", false, 0, 30, ""};
    double endpoint = 0.0, viol = 0.0;
    bool monotone = true, bound = true;
    for (double R : {0.5, 1.0, 2.0})
        for (double a : {0.5, 1.0, 2.0})
            for (int m : {1, 2, 3})
                for (double z : {0.0, 1.0, 5.0}) {
                    const auto b = build_psi({R, a, m, z});
                    endpoint = std::max({endpoint, std::abs(b.psi(0.0)), std::abs(b.psi(a) - 1.0)});
                    monotone = monotone && psi_monotone(b, 16);
                    bound = bound && b.psi_prime_0 <= b.rough_bound;
                    viol = std::max(viol, supersolution_check(b.params, 200).max_violation);
                }
    const auto dom = annulus_domain(0.5, 2.0, 2, 2.5);
    const auto sol = solve_mixed_bvp(dom, 1.0 / 32);
    const double h = sol.grid->grid->h();
    double grad = 0.0;
    for (const auto& node : dom.sigma2.surface_rule(h, 2.5)) {
        const Point in = (-1.0 / norm(node.x)) * node.x;
        const GridField& e = sol.grid->extended;
        grad = std::max(grad, std::abs((-3.0 + 4.0 * e.interpolate(node.x + h * in) -
                                        e.interpolate(node.x + 2.0 * h * in)) / (2.0 * h)));
    }
    const double est = estimate_gradient(2.0, 2.0, 1.5, 1);
    c.tolerance_met = endpoint <= 1e-10 && monotone && bound && viol <= 1e-6 && grad <= est;
    std::ostringstream os;
    os << "endpoints " << detail::sci(endpoint) << ", monotone " << (monotone ? "yes" : "no") << ", psi'(0) bound "
       << (bound ? "holds" : "fails") << ", violation " << detail::sci(viol) << ", annulus |grad u| "
       << std::setprecision(4) << grad << " <= " << est;
    c.detail = os.str();
    return c;
}

inline Criterion variational_domination() {
    Criterion c{11, "variational domination", false, 0, 10, ""};
    bool ok = true;
    double gap = std::numeric_limits<double>::infinity();
    for (const auto& dom : {slab_domain(-1, 1, 2, 4), annulus_domain(0.5, 2.0, 2, 2.5)}) {
        const double eu = dirichlet_energy(solve_mixed_bvp(dom, 1.0 / 32), dom);
        for (auto mode : {LipschitzMode::positive_distance, LipschitzMode::projection}) {
            const double ep = dirichlet_energy(Solution::from_field(lipschitz_barrier(mode, dom), "barrier"), dom,
                                               {.h = 1.0 / 32, .radius = dom.exhaustion_radius});
            gap = std::min(gap, ep - eu);
            ok = ok && std::isfinite(ep) && eu + 1e-4 <= ep;
        }
    }
    c.tolerance_met = ok;
    c.detail = "min E(barrier) - E(u) = " + detail::sci(gap) + " (>= 1e-4)";
    return c;
}

inline Criterion separation() {
    Criterion c{12, "separation heuristic", false, 0, 10, ""};
    const Boundary plane = Boundary::plane(Point{0.0, 0.0, 1.0}, 0.0, 1, 0.0);
    const std::vector<double> norms{1.5, 2, 3, 4, 5, 6, 7, 8};
    const bool a =
        separation_check({}, plane, Boundary::from_model(ShrinkerModel::cylinder(2, 1), true, 1.0), norms).passes;
    const bool b =
        separation_check({.b = 0.3}, plane, Boundary::plane(Point{0.0, 0.0, 1.0}, 1.0, -1, 1.0), norms).passes;
    const bool d = separation_check({.b = 0.4}, plane,
                                    graph_boundary(3, [](double q) { return std::exp(-q * q); }, 1.0, -1), norms)
                       .passes;
    c.tolerance_met = a && b && !d;
    auto pf = [](bool v) { return v ? "pass" : "fail"; };
    c.detail = std::string("cylinder ") + pf(a) + ", parallel planes " + pf(b) + ", decaying graph " + pf(d) +
               " (expected pass/pass/fail)";
    return c;
}

inline const std::vector<std::function<Criterion()>>& all() {
    static const std::vector<std::function<Criterion()>> list{
        shrinker_residuals, cylinder_identities_check, volume_growth, solver_convergence,
        maximum_principle,  monte_carlo,              reilly_identity, chain_attribution,
        caccioppoli,        barrier_suite,            variational_domination, separation};
    return list;
}

/// Runs the selected criteria (all when `only` is empty), printing one line each.
inline std::vector<Criterion> run(std::ostream& out, const std::vector<int>& only = {}) {
    std::vector<Criterion> results;
    for (std::size_t i = 0; i < all().size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Criterion c;
        try {
            c = all()[i]();
        } catch (const std::exception& e) {
            c.id = id;
            c.detail = std::string("error: ") + e.what();
        }
        c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out << (c.passed() ? "PASS" : "FAIL") << "  " << std::setw(2) << c.id << "  " << std::left << std::setw(34)
            << c.name << std::right << "  " << std::fixed << std::setprecision(1) << std::setw(6) << c.seconds << "s / "
            << std::setprecision(0) << c.budget << "s  " << c.detail << '\n'
            << std::defaultfloat << std::flush;
        results.push_back(c);
    }
    return results;
}

}  // namespace frankel::acceptance
