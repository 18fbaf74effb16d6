#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "frankel/domain.hpp"

using namespace frankel;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double total_area(const std::vector<SurfaceNode>& nodes) {
    double a = 0.0;
    for (const auto& n : nodes) a += n.area;
    return a;
}

}  // namespace

TEST_CASE("plane boundary") {
    const auto b = Boundary::plane({0, 0, 1}, 0.5, -1, 1.0);
    CHECK_THAT(b({3, 1, 0.0}), WithinAbs(0.5, 1e-15));
    CHECK(b({0, 0, 1.0}) < 0.0);
    CHECK_THAT(b.projection({1, 2, 7})[2], WithinAbs(0.5, 1e-15));
    const auto z = b.sample_at_norm(2.0, 3);
    REQUIRE(z);
    CHECK_THAT(norm(*z), WithinAbs(2.0, 1e-12));
    CHECK_THAT(b(*z), WithinAbs(0.0, 1e-12));
    CHECK_FALSE(b.sample_at_norm(0.4, 0));
    const double pi = std::numbers::pi;
    CHECK_THAT(total_area(b.surface_rule(0.01, 2.0)), WithinRel(pi * (4.0 - 0.25), 0.01));
    CHECK(b.surface_rule(0.1, 0.3).empty());
    CHECK_THROWS_AS(Boundary::plane({0, 1, 1}, 0, 1, 0), ParameterError);
    CHECK_THROWS_AS(Boundary::plane({0, 0, 1}, 0, 0, 0), ParameterError);
}

TEST_CASE("sphere boundary") {
    const double pi = std::numbers::pi;
    const auto s2 = Boundary::sphere(2, 1.5, true, 1.0);
    CHECK_THAT(total_area(s2.surface_rule(0.05, 2.0)), WithinAbs(2 * pi * 1.5, 1e-12));
    CHECK(s2({0, 0}) > 0.0);
    const auto s3 = Boundary::sphere(3, 1.0, false, 0.0);
    CHECK_THAT(total_area(s3.surface_rule(0.02, 2.0)), WithinRel(4 * pi, 1e-3));
    CHECK(s3({0, 0, 0}) < 0.0);
    CHECK(s3.surface_rule(0.1, 0.5).empty());
    const auto z = s3.sample_at_norm(1.0, 5);
    REQUIRE(z);
    CHECK_THAT(norm(*z), WithinAbs(1.0, 1e-12));
    CHECK_FALSE(s3.sample_at_norm(1.2, 0));
    CHECK_THROWS_AS(Boundary::sphere(3, 0.0, true, 0.0), ParameterError);
    CHECK_THROWS_AS(Boundary::sphere(4, 1.0, true, 0.0).surface_rule(0.1, 2.0), ParameterError);
}

TEST_CASE("model boundaries") {
    const auto cyl = Boundary::from_model(ShrinkerModel::cylinder(2, 1), true, 1.0);
    CHECK(cyl({0.1, 0.2, 5}) > 0.0);
    CHECK_THAT(cyl({2, 0, 1}), WithinAbs(-1.0, 1e-14));
    const double pi = std::numbers::pi;
    // The cylinder of radius 1 inside B_2 has axial extent 2 sqrt(3).
    CHECK_THAT(total_area(cyl.surface_rule(0.02, 2.0)), WithinRel(2 * pi * 2 * std::sqrt(3.0), 1e-3));
    for (std::size_t j = 0; j < 10; ++j) {
        const auto z = cyl.sample_at_norm(3.0, j);
        REQUIRE(z);
        CHECK_THAT(norm(*z), WithinAbs(3.0, 1e-12));
        CHECK_THAT(cyl(*z), WithinAbs(0.0, 1e-12));
    }
    const auto hp = Boundary::from_model(ShrinkerModel::hyperplane({0, 1}), false, 0.0);
    CHECK(hp.model.has_value());
    CHECK(hp({0, 1}) > 0.0);
    const auto sp = Boundary::from_model(ShrinkerModel::sphere(2), true, 0.0);
    CHECK_THAT(sp({0, 0, 0}), WithinAbs(std::sqrt(2.0), 1e-15));
}

TEST_CASE("graph boundary sampling") {
    const auto g = graph_boundary(3, [](double q) { return 1.0 / (1.0 + q * q); }, 1.0, -1);
    CHECK_FALSE(g.has_curvature);
    CHECK_FALSE(g.level_is_distance);
    CHECK_FALSE(g.sample_at_norm(0.5, 0));
    for (double rho : {1.0, 2.0, 5.0}) {
        const auto z = g.sample_at_norm(rho, 2);
        REQUIRE(z);
        CHECK_THAT(norm(*z), WithinAbs(rho, 1e-10));
        CHECK_THAT(g(*z), WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("schedule directions are unit tangent vectors") {
    const auto frame = tangent_frame({0, 0, 1});
    for (std::size_t j = 0; j < 20; ++j) {
        const Point d = schedule_direction(frame, j);
        CHECK_THAT(norm(d), WithinAbs(1.0, 1e-12));
        CHECK_THAT(d[2], WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("domain specs") {
    const auto slab = slab_domain(-1, 1, 2, 4);
    CHECK(slab.inside({3, 0.5}));
    CHECK_FALSE(slab.inside({0, 1.0}));
    CHECK_FALSE(slab.inside_exhaustion({4.5, 0}));
    CHECK(slab.with_radius(5).inside_exhaustion({4.5, 0}));
    CHECK(slab.sigma1.value == 0.0);
    CHECK(slab.sigma2.value == 1.0);
    CHECK_THROWS_AS(slab_domain(1, 1), ParameterError);
    const auto ann = annulus_domain(0.5, 2);
    CHECK(ann.inside({1, 0}));
    CHECK_FALSE(ann.inside({0.1, 0}));
    CHECK_FALSE(ann.inside({3, 0}));
    CHECK_THROWS_AS(annulus_domain(0, 2), ParameterError);
    CHECK_THROWS_AS(annulus_domain(2, 1), ParameterError);
    const auto ball = ball_domain(1.0);
    CHECK(ball.sigma1.empty());
    CHECK(ball.inside({0.5, 0, 0}));
}

TEST_CASE("domain json") {
    using nlohmann::json;
    const auto s = domain_from_json(json::parse(R"({"type":"slab","h1":0,"h2":1,"exhaustion_radii":[2,4,8]})"));
    CHECK(s.label == "slab");
    CHECK(s.exhaustion_radius == 8.0);
    CHECK(s.inside({0, 0.5}));
    CHECK(exhaustion_radii_from_json(json::parse(R"({"exhaustion_radii":[2,4,8]})")).size() == 3);
    const auto a = domain_from_json(json::parse(R"({"type":"annulus","a":0.5,"b":2,"label":"ring"})"));
    CHECK(a.label == "ring");
    CHECK(a.inside({1, 1}));
    const auto c = domain_from_json(json::parse(R"({"type":"custom","dim":3,
        "sigma1":{"type":"model","model":{"type":"cylinder","m":2,"k":1},"domain_inside":false},
        "sigma2":{"type":"sphere","radius":3}})"));
    CHECK(c.inside({1.5, 0, 0}));
    CHECK_FALSE(c.inside({0.5, 0, 0}));
    CHECK(c.sigma2.value == 1.0);
    CHECK_THROWS_AS(domain_from_json(json::parse(R"({"type":"slab","h1":0,"h2":1,"bogus":1})")), ParameterError);
    CHECK_THROWS_AS(domain_from_json(json::parse(R"({"type":"torus"})")), ParameterError);
    CHECK_THROWS_AS(domain_from_json(json::parse(R"({"type":"custom","sigma1":{"type":"blob"},"sigma2":{"type":"none"}})")),
                    ParameterError);
}
