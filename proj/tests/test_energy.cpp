#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "frankel/energy.hpp"

using namespace frankel;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("energy of closed-form profiles") {
    CHECK_THAT(dirichlet_energy(solve_slab(-1, 1), slab_domain(-1, 1)), WithinAbs(0.524417800423148678, 1e-13));
    CHECK_THAT(dirichlet_energy(solve_radial(0.5, 2, 2), annulus_domain(0.5, 2)), WithinAbs(0.993005456612090655, 1e-13));
    CHECK_THROWS_AS(dirichlet_energy(solve_slab(-1, 1, 3), slab_domain(-1, 1, 2)), ParameterError);
}

TEST_CASE("constant and zero fields carry no energy") {
    const auto one = Solution::from_field(ScalarField::constant(1.0), "one");
    const auto dom = slab_domain(-1, 1, 2, 3);
    CHECK(dirichlet_energy(one, dom) == 0.0);
    const auto zero = Solution::from_field(ScalarField::constant(0.0), "zero");
    for (const auto& e : energy_growth_profile(zero, dom, {1, 2, 3})) CHECK(e.value == 0.0);
}

TEST_CASE("field-backed energy matches a closed form") {
    // u = x_1 on the unit disk: int |grad u|^2 e^{-|x|^2/2} = 2 pi (1 - e^{-1/2}).
    const auto u = Solution::from_field(ScalarField([](const Point& x) { return x[0]; }), "x1");
    DomainSpec disk = ball_domain(1.0, 2);
    EnergyOptions o;
    o.radius = 1.5;
    CHECK_THAT(dirichlet_energy(u, disk, o), WithinRel(std::numbers::pi * (1.0 - std::exp(-0.5)), 1e-3));
}

TEST_CASE("growth profile") {
    SECTION("slab saturates") {
        const auto p = energy_growth_profile(solve_slab(-1, 1), slab_domain(-1, 1), {2, 4, 8});
        CHECK(p[0].value > p[1].value);
        CHECK(p[1].value > p[2].value);
        CHECK(p[2].value < p[0].value / 4);
        CHECK(tail_sup(p) == p[1].value);
    }
    SECTION("radial annulus inside every ball") {
        const auto u = solve_radial(0.5, 2, 2);
        const double E2 = 2.0 * u.profile->energy();
        for (const auto& e : energy_growth_profile(u, annulus_domain(0.5, 2), {3, 5, 9})) CHECK(e.value == E2 / (e.R * e.R));
    }
    SECTION("grid solution, truncation flag and monotone tail") {
        const auto d = slab_domain(-1, 1, 2, 8);
        const auto s = solve_mixed_bvp(d, 1.0 / 16);
        const auto p = energy_growth_profile(s, d, {2, 4, 6, 8, 16});
        CHECK_FALSE(p[3].truncated);
        CHECK(p[4].truncated);
        for (std::size_t i = p.size() - 3; i + 1 < p.size(); ++i) CHECK(p[i + 1].value < p[i].value);
        for (const auto& e : p) CHECK(std::isfinite(e.value));
    }
    SECTION("radii validation") {
        CHECK_THROWS_AS(energy_growth_profile(solve_slab(-1, 1), slab_domain(-1, 1), {2, 1}), ParameterError);
        CHECK_THROWS_AS(energy_growth_profile(solve_slab(-1, 1), slab_domain(-1, 1), {0, 1}), ParameterError);
    }
}

TEST_CASE("grid energy converges to the profile energy") {
    const auto slab = solve_slab(-1, 1);
    const auto ann = solve_radial(0.5, 2, 2);
    const double Es = 0.5 * slab.profile->energy_in_ball(6.0), Ea = ann.profile->energy();
    std::vector<double> es, ea;
    for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
        const auto d1 = slab_domain(-1, 1, 2, 6);
        es.push_back(std::abs(dirichlet_energy(solve_mixed_bvp(d1, h), d1) - Es));
        const auto d2 = annulus_domain(0.5, 2, 2, 2.5);
        ea.push_back(std::abs(dirichlet_energy(solve_mixed_bvp(d2, h), d2) - Ea));
    }
    for (std::size_t i = 0; i + 1 < 3; ++i) {
        CHECK(std::log2(es[i] / es[i + 1]) >= 1.0);
        CHECK(std::log2(ea[i] / ea[i + 1]) >= 1.0);
    }
}

TEST_CASE("caccioppoli inequality") {
    SECTION("closed forms: the flux bound is attained up to the factor 2") {
        const auto c = caccioppoli_check(solve_slab(-1, 1), slab_domain(-1, 1));
        CHECK(c.satisfied);
        CHECK_THAT(c.lhs, WithinRel(c.rhs / 2, 1e-12));
        // |grad u| on the upper plane is e^{1/2}/Z.
        const double Z = solve_slab(-1, 1).profile->normalizer();
        CHECK_THAT(c.flux, WithinRel(std::sqrt(2 * std::numbers::pi) / Z, 1e-12));
        const auto a = caccioppoli_check(solve_radial(0.5, 2, 2), annulus_domain(0.5, 2));
        CHECK(a.satisfied);
        CHECK_THAT(a.lhs, WithinRel(a.rhs / 2, 1e-12));
    }
    SECTION("grid benchmarks") {
        for (const auto& d : {slab_domain(-1, 1, 2, 6), annulus_domain(0.5, 2, 2, 2.5), slab_domain(0, 1, 2, 4)}) {
            const auto s = solve_mixed_bvp(d, 1.0 / 32);
            const auto c = caccioppoli_check(s, d);
            INFO(d.label << " lhs " << c.lhs << " rhs " << c.rhs);
            CHECK(c.satisfied);
            CHECK(c.flux > 0.0);
        }
    }
    SECTION("constant solution") {
        auto d = annulus_domain(0.5, 2, 2, 2.5);
        d.sigma1.value = 1.0;
        const auto c = caccioppoli_check(solve_mixed_bvp(d, 1.0 / 16), d);
        CHECK(c.lhs < 1e-12);
        CHECK(c.rhs < 1e-6);
        CHECK(c.satisfied);
    }
    SECTION("errors") {
        const auto u = solve_slab(-1, 1);
        DomainSpec d = slab_domain(-1, 1);
        d.sigma2 = Boundary::none();
        CHECK_THROWS_AS(caccioppoli_check(u, d), ParameterError);
        DomainSpec e = slab_domain(-1, 1);
        e.sigma2.value = 2.0;
        CHECK_THROWS_AS(caccioppoli_check(u, e), ParameterError);
    }
}

TEST_CASE("energy report serialization") {
    const auto rep = energy_report(solve_slab(-1, 1), slab_domain(-1, 1), {2, 4, 8});
    const nlohmann::json j = rep;
    CHECK(j.at("growth_profile").size() == 3);
    CHECK(j.at("caccioppoli_satisfied").get<bool>());
    CHECK(rep.total_energy >= 0.0);
    CHECK(rep.boundary_flux > 0.0);
    std::stringstream csv;
    rep.write_growth_csv(csv);
    std::string line;
    std::getline(csv, line);
    CHECK(line == "R,value,truncated");
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 3);
}
