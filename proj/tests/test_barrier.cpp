#include <catch_amalgamated.hpp>

#include <cmath>

#include "frankel/barrier.hpp"
#include "frankel/energy.hpp"

using namespace frankel;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Closed form of Delta_f(psi o d) in the shell: psi'(d) (d - |z| - <x, x - y>/r).
double shell_value(const BarrierResult& b, const Point& x) {
    const std::size_t n = x.size();
    const Point y = (b.params.R + b.params.z_norm) * unit_vector(n, 0);
    const double r = norm(x - y), d = r - b.params.R;
    return b.psi_prime(d) * (d - b.params.z_norm - dot(x, x - y) / r);
}

const std::vector<double> grid_R{0.5, 1.0, 2.0}, grid_a{0.5, 1.0, 2.0}, grid_z{0.0, 1.0, 5.0};
const std::vector<int> grid_m{1, 2, 3};

}  // namespace

TEST_CASE("barrier profile at the reference parameters") {
    const auto r = build_psi({1.0, 1.0, 2, 0.0});
    // Frozen from a 30-digit quadrature of int_0^1 e^{t^2/2} (1+t)^{-2} dt.
    CHECK_THAT(r.psi_prime_0, WithinRel(1.76868995131275499, 1e-10));
    CHECK_THAT(r.psi(0.5), WithinAbs(0.610089999759799567, 1e-9));
    CHECK(r.rough_bound == 4.0);
    CHECK(r.psi_prime_0 <= r.rough_bound);
    CHECK(r.psi(0.0) == 0.0);
    CHECK(r.psi(1.0) == 1.0);
    CHECK_THAT(r.psi_prime(0.0), WithinRel(r.psi_prime_0, 1e-14));
    const nlohmann::json j = r;
    CHECK(j.at("params").at("m") == 2);
}

TEST_CASE("barrier profile over the parameter grid") {
    for (double R : grid_R)
        for (double a : grid_a)
            for (int m : grid_m)
                for (double z : {0.0, 1.0, 5.0, 10.0}) {
                    const auto r = build_psi({R, a, m, z});
                    INFO("R=" << R << " a=" << a << " m=" << m << " z=" << z);
                    CHECK(std::abs(r.psi(0.0)) <= 1e-10);
                    CHECK(std::abs(r.psi(a) - 1.0) <= 1e-10);
                    CHECK(psi_monotone(r, 16));
                    CHECK(r.psi_prime_0 > 0.0);
                    CHECK(r.psi_prime_0 <= r.rough_bound);
                }
}

TEST_CASE("barrier parameter validation") {
    CHECK_THROWS_AS(build_psi({0.0, 1.0, 2, 0.0}), ParameterError);
    CHECK_THROWS_AS(build_psi({1.0, -1.0, 2, 0.0}), ParameterError);
    CHECK_THROWS_AS(build_psi({1.0, 1.0, 0, 0.0}), ParameterError);
    CHECK_THROWS_AS(build_psi({1.0, 1.0, 2, -1.0}), ParameterError);
    CHECK_THROWS_AS(build_psi({1.0, 1.0, 2, 0.0}, 0.0), ParameterError);
}

TEST_CASE("barrier is a supersolution in the shell") {
    SECTION("reference parameters, 1000 samples") {
        const auto s = supersolution_check({1.0, 1.0, 2, 0.0}, 1000);
        CHECK(s.evaluated == 1000);
        CHECK(s.max_violation <= 1e-6);
        CHECK_FALSE(s.vacuous);
    }
    SECTION("finite differences match the closed form") {
        for (int m : grid_m) {
            const BarrierParams p{1.0, 1.0, m, 1.0};
            const auto b = build_psi(p);
            const std::size_t n = static_cast<std::size_t>(m) + 1;
            const Point y = (p.R + p.z_norm) * unit_vector(n, 0);
            for (std::size_t k = 0; k < 20; ++k) {
                const Point x = detail::shell_point(k, n, y, p.R, p.a);
                const double d = norm(x - y) - p.R;
                CHECK(d > 0.0);
                CHECK(d < p.a);
                CHECK(shell_value(b, x) <= 0.0);
            }
            // One-sample checks reproduce the closed form at the first shell point.
            const auto s = supersolution_check(p, 1);
            CHECK_THAT(s.min_value, WithinAbs(shell_value(b, detail::shell_point(0, n, y, p.R, p.a)), 1e-6));
        }
    }
    SECTION("parameter grid") {
        double worst = 0.0;
        for (double R : grid_R)
            for (double a : grid_a)
                for (int m : grid_m)
                    for (double z : grid_z) worst = std::max(worst, supersolution_check({R, a, m, z}, 200).max_violation);
        CHECK(worst <= 1e-6);
    }
    SECTION("linear control violates") {
        const auto s = supersolution_check({1.0, 1.0, 2, 0.0}, 200, {.linear_control = true});
        CHECK(s.max_violation > 0.1);
    }
    SECTION("no samples") {
        const auto s = supersolution_check({1.0, 1.0, 2, 0.0}, 0);
        CHECK(s.vacuous);
        CHECK(s.max_violation == 0.0);
        CHECK(s.evaluated == 0);
    }
}

TEST_CASE("boundary gradient estimate") {
    CHECK_THAT(estimate_gradient(0.0, 1.0, 1.0, 2), WithinRel(4.0, 1e-15));
    CHECK_THAT(estimate_gradient(Point{2.0, 0.0, 0.0}, 1.0, 0.5, 2), WithinRel(8.0 * std::exp(2.0), 1e-15));
    CHECK_THAT(estimate_gradient(0.0, 1.0, 3.0, 2), WithinRel(4.0, 1e-15));  // a = min(1, dist)
    CHECK_THROWS_AS(estimate_gradient(0.0, 0.0, 1.0, 2), ParameterError);
    CHECK_THROWS_AS(estimate_gradient(0.0, 1.0, 0.0, 2), ParameterError);
}

TEST_CASE("annulus boundary gradient stays below the estimate") {
    const auto dom = annulus_domain(0.5, 2.0, 2, 2.5);
    const auto sol = solve_mixed_bvp(dom, 1.0 / 32);
    const double h = sol.grid->grid->h();
    const double bound = estimate_gradient(2.0, 2.0, 1.5, 1);  // osculating radius 2, dist to inner circle 1.5
    double worst = 0.0;
    for (const auto& node : dom.sigma2.surface_rule(h, 2.5)) {
        const Point in = (-1.0 / norm(node.x)) * node.x;
        const GridField& e = sol.grid->extended;
        const double g = (-3.0 + 4.0 * e.interpolate(node.x + h * in) - e.interpolate(node.x + 2.0 * h * in)) / (2.0 * h);
        worst = std::max(worst, std::abs(g));
    }
    CHECK_THAT(worst, WithinRel(solve_radial(0.5, 2.0, 2).profile->du(2.0), 5e-2));
    CHECK(worst <= bound);
}

TEST_CASE("Lipschitz competitors") {
    SECTION("positive-distance mode on a slab") {
        const auto dom = slab_domain(0.0, 1.0, 2, 4);
        CHECK_THAT(measured_separation(dom), WithinAbs(1.0, 1e-14));
        const auto psi = lipschitz_barrier(LipschitzMode::positive_distance, dom);
        CHECK_THAT(psi(Point{0.3, 0.5}), WithinAbs(0.5, 1e-14));
        for (double s : {0.0, 0.1, 0.7, 1.0, 1.5, -0.2}) CHECK_THAT(psi(Point{2.0, s}), WithinAbs(std::clamp(s, 0.0, 1.0), 1e-14));
        const double lip = measured_lipschitz(psi, dom);
        CHECK(lip <= 1.0 + 1e-9);
        CHECK(lip > 1.0 - 1e-4);
    }
    SECTION("boundary values on every benchmark") {
        for (const auto& [dom, mode] :
             {std::pair{slab_domain(-1, 1, 2, 4), LipschitzMode::positive_distance},
              std::pair{slab_domain(-1, 1, 2, 4), LipschitzMode::projection},
              std::pair{annulus_domain(0.5, 2.0, 2, 2.5), LipschitzMode::positive_distance},
              std::pair{annulus_domain(0.5, 2.0, 2, 2.5), LipschitzMode::projection}}) {
            const auto psi = lipschitz_barrier(mode, dom);
            for (const auto& n : dom.sigma1.surface_rule(0.25, 2.5)) CHECK(psi(n.x) == 0.0);
            for (const auto& n : dom.sigma2.surface_rule(0.25, 2.5)) CHECK(psi(n.x) == 1.0);
        }
    }
    SECTION("projection mode on the annulus") {
        const auto dom = annulus_domain(0.5, 2.0, 2, 2.5);
        const auto psi = lipschitz_barrier(LipschitzMode::projection, dom);
        for (double r : {0.6, 1.0, 1.7})
            CHECK_THAT(psi(Point{0.0, r}), WithinAbs((r - 0.5) / 1.5, 1e-14));
    }
    SECTION("errors") {
        DomainSpec crossing = ball_domain(1.0, 2);
        crossing.sigma1 = Boundary::plane(Point{0.0, 1.0}, 0.0, 1, 0.0);
        CHECK_THROWS_AS(lipschitz_barrier(LipschitzMode::positive_distance, crossing), ParameterError);
        CHECK_THROWS_AS(lipschitz_barrier(LipschitzMode::projection, ball_domain(1.0, 2)), ParameterError);
        DomainSpec graph = slab_domain(-1, 1, 2, 3);
        graph.sigma2 = graph_boundary(2, [](double t) { return 1.0 + std::exp(-t * t); }, 1.0, -1);
        CHECK_THROWS_AS(lipschitz_barrier(LipschitzMode::positive_distance, graph), MissingQuantityError);
        CHECK_THROWS_AS(lipschitz_mode_from_string("nearest"), ParameterError);
        CHECK(lipschitz_mode_from_string(to_string(LipschitzMode::projection)) == LipschitzMode::projection);
    }
}

TEST_CASE("minimizer energy is dominated by the competitor") {
    for (const auto& dom : {slab_domain(-1, 1, 2, 4), annulus_domain(0.5, 2.0, 2, 2.5)}) {
        const auto sol = solve_mixed_bvp(dom, 1.0 / 32);
        const double e_u = dirichlet_energy(sol, dom);
        const auto psi = lipschitz_barrier(LipschitzMode::projection, dom);
        const double e_psi = dirichlet_energy(Solution::from_field(psi, "barrier"), dom,
                                              {.h = 1.0 / 32, .radius = dom.exhaustion_radius});
        INFO(dom.label << " E(u)=" << e_u << " E(psi)=" << e_psi);
        CHECK(std::isfinite(e_psi));
        CHECK(e_u + 1e-4 <= e_psi);
    }
}

TEST_CASE("separation heuristic") {
    const Boundary plane = Boundary::plane(Point{0.0, 0.0, 1.0}, 0.0, 1, 0.0);
    const std::vector<double> norms{1.5, 2, 3, 4, 5, 6, 7, 8};
    SECTION("cylinder over a plane") {
        const auto cyl = Boundary::from_model(ShrinkerModel::cylinder(2, 1), true, 1.0);
        const auto r = separation_check({}, plane, cyl, norms);
        CHECK(r.passes);
        CHECK_THAT(r.ratios.back().ratio, WithinAbs(std::sqrt(63.0), 1e-9));
    }
    SECTION("parallel planes") {
        const auto upper = Boundary::plane(Point{0.0, 0.0, 1.0}, 1.0, -1, 1.0);
        for (double b : {0.0, 0.2, 0.49}) {
            const auto r = separation_check({.b = b, .poly_P = {1.0, 1.0}}, plane, upper, norms);
            CHECK(r.passes);
            CHECK_THAT(r.ratios[2].ratio, WithinRel(std::exp(b * 9.0) * 4.0, 1e-12));
        }
    }
    SECTION("graph decaying faster than allowed") {
        const auto graph = graph_boundary(3, [](double q) { return std::exp(-q * q); }, 1.0, -1);
        const auto r = separation_check({.b = 0.4}, plane, graph, norms);
        CHECK_FALSE(r.passes);
        CHECK(r.ratios.back().ratio < 1e-6);
    }
    SECTION("compact sigma2 is flagged") {
        const auto sph = Boundary::sphere(3, 2.0, true, 1.0);
        const auto r = separation_check({}, plane, sph, {1.0, 3.0});
        CHECK(r.ratios[0].truncated);
        CHECK(r.ratios[1].truncated);
        CHECK_FALSE(r.passes);
        const nlohmann::json j = r;
        CHECK(j.at("note").get<std::string>().find("heuristic") != std::string::npos);
    }
    SECTION("hypothesis validation") {
        CHECK_THROWS_AS(separation_check({.b = 0.5}, plane, plane, norms), ParameterError);
        CHECK_THROWS_AS(separation_check({.b = 0.3, .variational_b_bound = true}, plane, plane, norms), ParameterError);
        CHECK_THROWS_AS(separation_check({.b = 0.2, .c = 0.2, .m = 2}, plane, plane, norms), ParameterError);
        CHECK_NOTHROW(separation_check({.b = 0.2, .c = 0.1, .m = 2}, plane, plane, norms));
        CHECK_THROWS_AS(separation_check({}, plane, plane, {2.0, 1.0}), ParameterError);
    }
}

TEST_CASE("barrier sweep from JSON") {
    const auto rows = barrier_sweep(nlohmann::json{{"R", {1.0}}, {"a", {0.5, 1.0}}, {"m", {2}}, {"z_norm", {0.0}}, {"samples", 20}});
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
        CHECK(r.monotone);
        CHECK(r.bound_holds);
        CHECK(r.max_violation <= 1e-6);
    }
    const nlohmann::json j = rows;
    CHECK(j.size() == 2);
    CHECK_THROWS_AS(barrier_sweep(nlohmann::json{{"m", {1.5}}}), ParameterError);
}
