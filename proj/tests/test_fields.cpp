#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "frankel/fields.hpp"
#include "frankel/geometry.hpp"

using namespace frankel;
using Catch::Matchers::WithinAbs;

namespace {

// Smooth test field with closed-form derivatives.
struct Trig {
    double a, b, c;
    double operator()(const Point& x) const { return std::sin(a * x[0]) * std::cos(b * x[1]) + c * x[0] * x[1]; }
    Point grad(const Point& x) const {
        return {a * std::cos(a * x[0]) * std::cos(b * x[1]) + c * x[1],
                -b * std::sin(a * x[0]) * std::sin(b * x[1]) + c * x[0]};
    }
    double lap(const Point& x) const { return -(a * a + b * b) * std::sin(a * x[0]) * std::cos(b * x[1]); }
    double lap_f(const Point& x) const { return lap(x) - dot(x, grad(x)); }
};

}  // namespace

TEST_CASE("weight spec") {
    CHECK(WeightSpec::ricci_lower_bound == 1.0);
    CHECK_THAT(WeightSpec::density({0, 0}), WithinAbs(1.0, 0));
    CHECK_THAT(WeightSpec::density({1, 1}), WithinAbs(std::exp(-1.0), 1e-16));
    CHECK(WeightSpec::density({30, 0}) > 0.0);
}

TEST_CASE("weighted laplacian examples") {
    const ScalarField x1([](const Point& p) { return p[0]; });
    CHECK_THAT(weighted_laplacian(x1, {2, 0, 0}, 1e-3), WithinAbs(-2.0, 1e-9));
    const ScalarField r2([](const Point& p) { return norm_sq(p); });
    CHECK_THAT(weighted_laplacian(r2, {1, 1, 0}, 1e-3), WithinAbs(2.0, 1e-8));
    CHECK_THAT(weighted_laplacian(ScalarField::constant(1.0), {0.3, -2, 5}, 1e-3), WithinAbs(0.0, 1e-12));
}

TEST_CASE("coordinate functions are eigenfunctions of the drift laplacian") {
    for (unsigned long i = 1; i <= 50; ++i) {
        auto h = halton(i, 3);
        Point p = {4 * h[0] - 2, 4 * h[1] - 2, 4 * h[2] - 2};
        for (std::size_t a = 0; a < 3; ++a) {
            const ScalarField xa([a](const Point& q) { return q[a]; });
            CHECK_THAT(weighted_laplacian(xa, p), WithinAbs(-p[a], 1e-6));
        }
    }
}

TEST_CASE("gradient examples") {
    const ScalarField lin([](const Point& p) { return p[0] + 2 * p[1]; });
    const Point g = gradient(lin, {0.4, 7, -1}, 1e-3);
    CHECK_THAT(g[0], WithinAbs(1, 1e-10));
    CHECK_THAT(g[1], WithinAbs(2, 1e-10));
    CHECK_THAT(g[2], WithinAbs(0, 1e-10));
    const ScalarField r2([](const Point& p) { return norm_sq(p); });
    const Point g2 = gradient(r2, {1, 0, -1}, 1e-3);
    CHECK_THAT(g2[0], WithinAbs(2, 1e-9));
    CHECK_THAT(g2[2], WithinAbs(-2, 1e-9));
}

TEST_CASE("weighted divergence examples") {
    const VectorField c([](const Point&) { return Point{1.5, -2}; });
    CHECK_THAT(weighted_divergence(c, {3, 1}, 1e-3), WithinAbs(-(1.5 * 3 - 2 * 1), 1e-10));
    const VectorField X([](const Point& p) { return Point{p[0], 0.0}; });
    CHECK_THAT(weighted_divergence(X, {3, 0}, 1e-3), WithinAbs(-8.0, 1e-9));
    const VectorField zero([](const Point&) { return Point{0.0, 0.0}; });
    CHECK_THAT(weighted_divergence(zero, {1, 2}, 1e-3), WithinAbs(0.0, 0));
}

TEST_CASE("product rule for the weighted divergence") {
    for (unsigned long i = 1; i <= 40; ++i) {
        auto h = halton(i, 5);
        const Trig u{1 + h[2], 0.5 + h[3], h[4] - 0.5};
        const Point p = {3 * h[0] - 1.5, 3 * h[1] - 1.5};
        const ScalarField uf([u](const Point& x) { return u(x); });
        const VectorField X([u](const Point& x) { return u(x) * u.grad(x); });
        const double lhs = weighted_divergence(X, p, 1e-3);
        const double rhs = norm_sq(u.grad(p)) + u(p) * u.lap_f(p);
        CHECK_THAT(lhs, WithinAbs(rhs, 1e-5));
        CHECK_THAT(weighted_laplacian(uf, p, 1e-3), WithinAbs(u.lap_f(p), 1e-5));
    }
}

TEST_CASE("second-order refinement of the operators") {
    const Trig u{1.3, 0.7, 0.2};
    const ScalarField uf([u](const Point& x) { return u(x); });
    for (const Point& p : {Point{0.4, -0.3}, Point{1.1, 0.9}, Point{-1.7, 0.2}}) {
        const double e1 = std::abs(weighted_laplacian(uf, p, 0.02) - u.lap_f(p));
        const double e2 = std::abs(weighted_laplacian(uf, p, 0.01) - u.lap_f(p));
        CHECK(e1 / e2 >= 3.0);
        CHECK(e1 / e2 <= 5.0);
        const double g1 = norm(gradient(uf, p, 0.02) - u.grad(p));
        const double g2 = norm(gradient(uf, p, 0.01) - u.grad(p));
        CHECK(g1 / g2 >= 3.0);
        CHECK(g1 / g2 <= 5.0);
    }
}

TEST_CASE("stencils respect the declared domain") {
    const ScalarField u([](const Point& p) { return p[0]; }, Box{{0, 0}, {1, 1}});
    CHECK_NOTHROW(weighted_laplacian(u, {0.5, 0.5}, 0.1));
    CHECK_THROWS_AS(weighted_laplacian(u, {0.05, 0.5}, 0.1), BoundaryStencilError);
    CHECK_THROWS_AS(gradient(u, {0.5, 0.99}, 0.1), BoundaryStencilError);
    const VectorField X([](const Point& p) { return p; }, Box{{0, 0}, {1, 1}});
    CHECK_THROWS_AS(weighted_divergence(X, {1.0, 0.5}, 0.01), BoundaryStencilError);
}

TEST_CASE("grid field interpolation and serialization") {
    GridField g({5, 4}, {0.25, 0.5}, {-1.0, 0.0});
    for (std::size_t f = 0; f < g.size(); ++f) {
        const Point p = g.node(g.unflat(f));
        g[f] = 2 * p[0] - p[1] + 0.5 * p[0] * p[1];
    }
    for (std::size_t f = 0; f < g.size(); ++f) CHECK(g.interpolate(g.node(g.unflat(f))) == g[f]);
    // Bilinear functions are reproduced exactly between nodes.
    CHECK_THAT(g.interpolate({-0.6, 0.7}), WithinAbs(2 * -0.6 - 0.7 + 0.5 * -0.6 * 0.7, 1e-14));

    std::stringstream bin;
    g.write_binary(bin);
    const GridField back = GridField::read_binary(bin);
    CHECK(back.dims() == g.dims());
    CHECK(back.values() == g.values());
    CHECK(back.origin() == g.origin());

    std::stringstream csv;
    g.write_csv(csv);
    std::string header;
    std::getline(csv, header);
    CHECK(header == "x0,x1,value");

    std::stringstream truncated(bin.str().substr(0, 20));
    CHECK_THROWS_AS(GridField::read_binary(truncated), ParameterError);
}

TEST_CASE("grid second differences flag the one-sided edge stencil") {
    GridField g({6}, {0.1}, {0.0});
    for (std::size_t i = 0; i < 6; ++i) g[i] = std::pow(0.1 * static_cast<double>(i), 2);
    bool reduced = false;
    CHECK_THAT(g.node_second_difference({2}, 0, &reduced), WithinAbs(2.0, 1e-10));
    CHECK_FALSE(reduced);
    CHECK_THAT(g.node_second_difference({0}, 0, &reduced), WithinAbs(2.0, 1e-10));
    CHECK(reduced);
    CHECK_THAT(g.node_second_difference({5}, 0, &reduced), WithinAbs(2.0, 1e-10));
    CHECK(reduced);
}

TEST_CASE("grid field as a scalar field") {
    GridField g({11, 11}, {0.1, 0.1}, {0.0, 0.0});
    for (std::size_t f = 0; f < g.size(); ++f) {
        const Point p = g.node(g.unflat(f));
        g[f] = p[0] + 3 * p[1];
    }
    const ScalarField u = g.as_field();
    const Point grad = gradient(u, {0.55, 0.35}, 0.05);
    CHECK_THAT(grad[0], WithinAbs(1.0, 1e-12));
    CHECK_THAT(grad[1], WithinAbs(3.0, 1e-12));
    CHECK_THROWS_AS(gradient(u, {0.01, 0.5}, 0.05), BoundaryStencilError);
}
