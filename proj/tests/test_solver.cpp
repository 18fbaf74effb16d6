#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "frankel/solver.hpp"

using namespace frankel;
using Catch::Matchers::WithinAbs;

namespace {

double max_error(const Solution& s, const Profile& exact, double radius) {
    const Grid& g = *s.grid->grid;
    double err = 0.0;
    for (std::size_t f = 0; f < g.size(); ++f) {
        if (g.kind(f) != NodeKind::interior) continue;
        const Point x = g.node(f);
        if (norm(x) <= radius) err = std::max(err, std::abs(s.grid->field[f] - exact.value(x)));
    }
    return err;
}

}  // namespace

TEST_CASE("radial profile") {
    CHECK_THROWS_AS(solve_radial(1, 1, 2), ParameterError);
    CHECK_THROWS_AS(solve_radial(0, 1, 2), ParameterError);
    CHECK_THROWS_AS(solve_radial(-1, 1, 3), ParameterError);
    const auto s = solve_radial(0.5, 2, 2);
    CHECK(s.profile->u(0.5) == 0.0);
    CHECK(s.profile->u(2.0) == 1.0);
    CHECK_THAT(s.profile->u(1.0), WithinAbs(0.288809944900406284, 1e-14));
    double prev = -1.0;
    for (const auto& [r, u] : s.profile->table(200)) {
        CHECK(u > prev);
        prev = u;
    }
    CHECK_THAT(s.profile->energy(), WithinAbs(0.993005456612090655, 1e-13));
}

TEST_CASE("slab profile") {
    const auto s = solve_slab(-1, 1);
    CHECK_THAT(s.profile->u(0.0), WithinAbs(0.5, 1e-15));
    CHECK(s.profile->u(-1.0) == 0.0);
    CHECK(s.profile->u(1.0) == 1.0);
    CHECK_THAT(solve_slab(0, 2).profile->u(1.0), WithinAbs(0.252692104833670313, 1e-14));
    CHECK_THAT(s.profile->energy(), WithinAbs(0.524417800423148678, 1e-13));
    CHECK_THROWS_AS(solve_slab(1, 1), ParameterError);
    // u depends on the height only and solves the ODE u'' + s u' ... in drift form.
    const Point p = {0.7, 0.3};
    CHECK(s(p) == s(Point{-5.0, 0.3}));
    const double d2 = (s.profile->u(0.3 + 1e-4) - 2 * s.profile->u(0.3) + s.profile->u(0.3 - 1e-4)) / 1e-8;
    CHECK_THAT(d2 - 0.3 * s.profile->du(0.3), WithinAbs(0.0, 1e-6));
}

TEST_CASE("grid classification invariants") {
    const Grid g(annulus_domain(0.5, 2, 2, 2.5), 1.0 / 16);
    const auto& dom = g.domain();
    std::size_t interior = 0;
    for (std::size_t f = 0; f < g.size(); ++f) {
        const Point x = g.node(f);
        switch (g.kind(f)) {
            case NodeKind::interior:
                ++interior;
                CHECK(dom.inside_exhaustion(x));
                for (std::size_t d = 0; d < 2; ++d)
                    for (int dir : {-1, 1}) CHECK(g.kind(*g.neighbor(f, d, dir)) != NodeKind::exterior);
                break;
            case NodeKind::dirichlet0: CHECK(dom.sigma1(x) <= 0.0); break;
            case NodeKind::dirichlet1: CHECK(dom.sigma2(x) <= 0.0); break;
            case NodeKind::neumann_gamma: CHECK(dom.inside(x)); break;
            case NodeKind::exterior: break;
        }
    }
    CHECK(interior == g.count(NodeKind::interior));
    CHECK(g.count(NodeKind::neumann_gamma) == 0);
    CHECK(g.count(NodeKind::dirichlet0) > 0);
    CHECK(g.count(NodeKind::dirichlet1) > 0);
}

TEST_CASE("slab grid solution converges at second order") {
    const auto exact = solve_slab(-1, 1);
    std::vector<double> errs;
    for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
        const auto s = solve_mixed_bvp(slab_domain(-1, 1, 2, 6), h);
        errs.push_back(max_error(s, *exact.profile, 3.0));
        CHECK(s.report.linear_residual <= s.report.tolerance);
        CHECK(s.report.converged);
    }
    INFO("errors " << errs[0] << " " << errs[1] << " " << errs[2]);
    CHECK(std::log2(errs[1] / errs[2]) >= 1.8);
    CHECK(errs[2] <= 5e-4);
    const double C = errs[2] * 64 * 64;
    CHECK(C < 1.0);
}

TEST_CASE("annulus grid solution converges at second order") {
    const auto exact = solve_radial(0.5, 2, 2);
    std::vector<double> errs;
    for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64})
        errs.push_back(max_error(solve_mixed_bvp(annulus_domain(0.5, 2, 2, 2.5), h), *exact.profile, 10.0));
    CHECK(std::log2(errs[0] / errs[1]) >= 1.8);
    CHECK(std::log2(errs[1] / errs[2]) >= 1.8);
    CHECK(errs[2] <= 5e-4);
}

TEST_CASE("discrete maximum principle and exact Dirichlet nodes") {
    for (const auto& dom : {slab_domain(-1, 1, 2, 4), annulus_domain(0.5, 2, 2, 2.5), slab_domain(0, 1, 2, 4)}) {
        const auto s = solve_mixed_bvp(dom, 1.0 / 16);
        const Grid& g = *s.grid->grid;
        for (std::size_t f = 0; f < g.size(); ++f) {
            const double v = s.grid->field[f];
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            if (g.kind(f) == NodeKind::dirichlet0) CHECK(v == 0.0);
            if (g.kind(f) == NodeKind::dirichlet1) CHECK(v == 1.0);
        }
    }
}

TEST_CASE("constant boundary data gives the constant solution") {
    auto dom = annulus_domain(0.5, 2, 2, 2.5);
    dom.sigma1.value = 1.0;
    const auto s = solve_mixed_bvp(dom, 1.0 / 16);
    CHECK_THAT(s.report.min_value, WithinAbs(1.0, 1e-8));
    CHECK_THAT(s.report.max_value, WithinAbs(1.0, 1e-8));
}

TEST_CASE("two initial guesses give the same solution") {
    SolveOptions a, b;
    b.initial_guess = 1.0;
    for (const auto& dom : {slab_domain(-1, 1, 2, 4), annulus_domain(0.5, 2, 2, 2.5)}) {
        const auto s1 = solve_mixed_bvp(dom, 1.0 / 32, a), s2 = solve_mixed_bvp(dom, 1.0 / 32, b);
        double d = 0.0;
        for (std::size_t f = 0; f < s1.grid->field.size(); ++f)
            d = std::max(d, std::abs(s1.grid->field[f] - s2.grid->field[f]));
        CHECK(d <= 10 * a.tol);
    }
}

TEST_CASE("solver failure modes") {
    SECTION("Neumann data only") {
        try {
            solve_mixed_bvp(slab_domain(-10, 10, 2, 3), 1.0 / 8);
            FAIL("expected a singular system");
        } catch (const SingularSystemError& e) {
            CHECK(std::string(e.what()).find("constants") != std::string::npos);
        }
    }
    SECTION("iteration budget") {
        SolveOptions o;
        o.max_iter = 2;
        try {
            solve_mixed_bvp(slab_domain(-1, 1, 2, 4), 1.0 / 16, o);
            FAIL("expected non-convergence");
        } catch (const ConvergenceError& e) {
            CHECK(e.history().size() >= 2);
        }
    }
    SECTION("pieces closer than two cells") {
        CHECK_THROWS_AS(solve_mixed_bvp(slab_domain(-0.01, 0.01, 2, 2), 1.0 / 16), ParameterError);
    }
    SECTION("bad tolerance") {
        SolveOptions o;
        o.tol = 0.0;
        CHECK_THROWS_AS(solve_mixed_bvp(slab_domain(-1, 1, 2, 2), 1.0 / 8, o), ParameterError);
    }
}

TEST_CASE("exhaustion") {
    SECTION("slab differences decay") {
        ExhaustionOptions o;
        o.tol = 1e-5;
        const auto s = solve_exhaustion(slab_domain(-1, 1, 2), {2, 4, 8}, 1.0 / 16, o);
        const auto& hist = s.report.exhaustion_history;
        REQUIRE(hist.size() == 2);
        CHECK(hist.back().second < 1e-4);
        CHECK(hist.back().second <= hist.front().second + 1e-6);
        CHECK(s.report.converged);
    }
    SECTION("annulus inside every ball") {
        const auto s = solve_exhaustion(annulus_domain(0.5, 2, 2), {2.5, 3, 3.5}, 1.0 / 16);
        for (const auto& [R, d] : s.report.exhaustion_history) CHECK(d == 0.0);
    }
    SECTION("radii validation") {
        CHECK_THROWS_AS(solve_exhaustion(slab_domain(-1, 1, 2), {2}, 0.25), ParameterError);
        CHECK_THROWS_AS(solve_exhaustion(slab_domain(-1, 1, 2), {2, 4, 3}, 0.25), ParameterError);
    }
    SECTION("stability on a fixed compact") {
        // Enlarging the ball changes the solution on B_2 by no more than the
        // preceding recorded change plus tol.
        const auto s = solve_exhaustion(slab_domain(-1, 1, 2), {2, 3, 4, 5}, 1.0 / 16);
        const auto& h = s.report.exhaustion_history;
        for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i].second <= h[i - 1].second + 1e-6);
    }
}

TEST_CASE("report and grid output") {
    const auto s = solve_mixed_bvp(slab_domain(-1, 1, 2, 2), 1.0 / 8);
    const nlohmann::json j = s.report;
    CHECK(j.at("converged").get<bool>());
    CHECK(j.at("iterations").get<std::size_t>() == s.report.iterations);
    CHECK(j.contains("exhaustion_history"));
    std::stringstream bin;
    s.write_grid(bin);
    const auto back = GridField::read_binary(bin);
    CHECK(back.values() == s.grid->field.values());
    CHECK_THROWS_AS(solve_slab(-1, 1).write_grid(bin), ParameterError);
}

TEST_CASE("grid field is addressed by physical coordinates") {
    const auto exact = solve_slab(-1, 1);
    const auto s = solve_mixed_bvp(slab_domain(-1, 1, 2, 3), 1.0 / 32);
    for (const Point& p : {Point{0.0, 0.5}, Point{1.3, -0.25}, Point{-0.7, 0.9}}) {
        CHECK_THAT(s(p), WithinAbs(exact(p), 1e-4));
        CHECK_THAT(s.gradient(p)[1], WithinAbs(exact.profile->du(p[1]), 1e-2));
        CHECK_THAT(s.gradient(p)[0], WithinAbs(0.0, 1e-4));
    }
}
