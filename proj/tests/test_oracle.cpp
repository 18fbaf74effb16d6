#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "frankel/oracle.hpp"
#include "frankel/solver.hpp"

using namespace frankel;
using Catch::Matchers::WithinAbs;

TEST_CASE("Philox known-answer vectors") {
    using B = Philox::Block;
    CHECK(Philox::generate({0, 0, 0, 0}, {0, 0}) == B{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(Philox::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          B{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(Philox::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          B{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("normal streams") {
    NormalStream a(7, 3), b(7, 3), c(7, 4);
    double sum = 0.0, sq = 0.0;
    bool differs = false;
    constexpr int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double v = a.next();
        CHECK(v == b.next());
        differs = differs || v != c.next();
        sum += v;
        sq += v * v;
    }
    CHECK(differs);
    CHECK(std::abs(sum / n) < 5.0 / std::sqrt(n));
    CHECK_THAT(sq / n, WithinAbs(1.0, 0.02));
}

TEST_CASE("hitting probabilities match the closed forms") {
    const McConfig cfg{.n_paths = 20000};
    SECTION("slab") {
        const auto dom = slab_domain(-1, 1, 2);
        const auto exact = solve_slab(-1, 1);
        for (double s : {-0.5, 0.0, 0.5}) {
            const auto e = ou_hitting_probability(Point{0.3, s}, dom, cfg);
            INFO("s=" << s << " p=" << e.p_hat << " se=" << e.stderr_);
            CHECK(std::abs(e.p_hat - exact(Point{0.0, s})) <= 3.0 * e.stderr_);
            CHECK(e.hits_sigma1 + e.hits_sigma2 + e.truncated == cfg.n_paths);
            CHECK(e.truncated == 0);
            CHECK_FALSE(e.truncation_warning);
            CHECK(e.stderr_ == std::sqrt(e.p_hat * (1 - e.p_hat) / static_cast<double>(e.n_effective())));
        }
    }
    SECTION("annulus") {
        const auto dom = annulus_domain(0.5, 2.0, 2);
        const auto exact = solve_radial(0.5, 2.0, 2);
        for (double r : {0.75, 1.0, 1.5}) {
            const auto e = ou_hitting_probability(Point{0.0, r}, dom, cfg);
            INFO("r=" << r << " p=" << e.p_hat << " se=" << e.stderr_);
            CHECK(std::abs(e.p_hat - exact(Point{r, 0.0})) <= 3.0 * e.stderr_);
        }
    }
}

TEST_CASE("estimates are reproducible and thread-independent") {
    const auto dom = slab_domain(-1, 1, 2);
    const McConfig one{.n_paths = 3000, .seed = 99, .threads = 1, .trace = true};
    McConfig four = one;
    four.threads = 4;
    const auto a = ou_hitting_probability(Point{0.0, 0.2}, dom, one);
    const auto b = ou_hitting_probability(Point{0.0, 0.2}, dom, four);
    const auto c = ou_hitting_probability(Point{0.0, 0.2}, dom, one);
    CHECK(a.hits_sigma2 == b.hits_sigma2);
    CHECK(a.hits_sigma1 == b.hits_sigma1);
    CHECK(a.mean_exit_time == b.mean_exit_time);
    CHECK(a.p_hat == c.p_hat);
    std::ostringstream ta, tb;
    a.write_trace_csv(ta);
    b.write_trace_csv(tb);
    CHECK(ta.str() == tb.str());
    CHECK(ta.str().rfind("path,exit_time,exit_label\n", 0) == 0);
    McConfig other = one;
    other.seed = 100;
    CHECK(ou_hitting_probability(Point{0.0, 0.2}, dom, other).hits_sigma2 != a.hits_sigma2);
}

TEST_CASE("mean exit time shrinks toward the boundary") {
    const auto dom = slab_domain(-1, 1, 2);
    const McConfig cfg{.n_paths = 4000};
    double prev = std::numeric_limits<double>::infinity();
    for (double s : {0.0, 0.5, 0.9}) {
        const double t = ou_hitting_probability(Point{0.0, s}, dom, cfg).mean_exit_time;
        CHECK(std::isfinite(t));
        CHECK(t < prev);
        prev = t;
    }
}

TEST_CASE("naive crossing detection carries a square-root bias") {
    const auto dom = slab_domain(-1, 1, 2);
    const double exact = solve_slab(-1, 1)(Point{0.0, 0.5});
    auto bias = [&](double dt, std::optional<double> snap) {
        const McConfig cfg{.n_paths = 40000, .dt = dt, .boundary_snap = snap};
        return ou_hitting_probability(Point{0.0, 0.5}, dom, cfg).p_hat - exact;
    };
    const double naive_coarse = bias(1e-2, 0.1 * std::sqrt(1e-2));
    const double naive_fine = bias(2.5e-3, 0.1 * std::sqrt(2.5e-3));
    const double corrected = bias(1e-2, std::nullopt);
    CHECK(std::abs(naive_coarse) > 0.02);
    CHECK(std::abs(naive_coarse / naive_fine) > 1.4);
    CHECK(std::abs(naive_coarse / naive_fine) < 2.8);
    CHECK(std::abs(corrected) < 0.25 * std::abs(naive_coarse));
}

TEST_CASE("truncation and configuration errors") {
    const auto dom = slab_domain(-1, 1, 2);
    const auto e = ou_hitting_probability(Point{0.0, 0.0}, dom, {.n_paths = 200, .max_time = 0.01});
    CHECK(e.truncated > 20);
    CHECK(e.truncation_warning);
    CHECK(e.hits_sigma1 + e.hits_sigma2 + e.truncated == 200);
    CHECK_THROWS_AS(ou_hitting_probability(Point{0.0, 2.0}, dom), ParameterError);
    CHECK_THROWS_AS(ou_hitting_probability(Point{0.0, 0.0, 0.0}, dom), ParameterError);
    CHECK_THROWS_AS(ou_hitting_probability(Point{0.0, 0.0}, dom, {.n_paths = 10}), ParameterError);
    CHECK_THROWS_AS(ou_hitting_probability(Point{0.0, 0.0}, dom, {.dt = 0.1}), ParameterError);
    CHECK_THROWS_AS(ou_hitting_probability(Point{0.0, 0.0}, dom, {.boundary_snap = 1e-4}), ParameterError);
    const nlohmann::json j = e;
    CHECK(j.at("truncated").get<std::size_t>() == e.truncated);
}
