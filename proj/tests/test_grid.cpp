#include <catch_amalgamated.hpp>

#include "dyson_ldp/grid.hpp"

using namespace dyson_ldp;
using Catch::Matchers::WithinAbs;

TEST_CASE("uniform grid endpoints and spacing") {
    const TimeGrid g = TimeGrid::uniform(0.5, 1.0, 10);
    CHECK(g.size() == 11);
    CHECK(g.steps() == 10);
    CHECK(g.front() == 0.5);
    CHECK(g.back() == 1.0);
    CHECK_THAT(g.dt(3), WithinAbs(0.05, 1e-15));
}

TEST_CASE("grid rejects bad input") {
    CHECK_THROWS_AS(TimeGrid({0.0}), InvalidParameter);
    CHECK_THROWS_AS(TimeGrid({0.0, 0.5, 0.5}), InvalidParameter);
    CHECK_THROWS_AS(TimeGrid({0.0, 0.7, 0.5}), InvalidParameter);
    CHECK_THROWS_AS(TimeGrid::uniform(1.0, 1.0, 4), InvalidParameter);
    CHECK_THROWS_AS(TimeGrid::unit(0), InvalidParameter);
}

TEST_CASE("cell lookup clamps to the grid") {
    const TimeGrid g({0.0, 0.1, 0.5, 1.0});
    CHECK(g.cell(-1.0) == 0);
    CHECK(g.cell(0.1) == 1);
    CHECK(g.cell(0.3) == 1);
    CHECK(g.cell(0.99) == 2);
    CHECK(g.cell(2.0) == 2);
}

TEST_CASE("path interpolation") {
    const TimeGrid g({0.0, 0.5, 1.0});
    const ScalarPath p(g, {0.0, 1.0, 3.0});
    CHECK_THAT(p.at(0.25), WithinAbs(0.5, 1e-15));
    CHECK_THAT(p.at(0.75), WithinAbs(2.0, 1e-15));
    CHECK(p.at(-1.0) == 0.0);
    CHECK(p.at(5.0) == 3.0);
}

TEST_CASE("path rejects mismatched or non-finite samples") {
    const TimeGrid g = TimeGrid::unit(2);
    CHECK_THROWS_AS(ScalarPath(g, {1.0, 2.0}), InvalidParameter);
    CHECK_THROWS_AS(ScalarPath(g, {1.0, NAN, 2.0}), InvalidParameter);
    CHECK_THROWS_AS(ScalarPath(g, {1.0, 2.0, 3.0}, std::vector<double>{1.0}), InvalidParameter);
}

TEST_CASE("finite differences are exact for quadratics on non-uniform grids") {
    const TimeGrid g({0.0, 0.1, 0.15, 0.4, 0.7, 1.0});
    const ScalarPath p = ScalarPath::sample(g, [](double t) { return 3.0 * t * t - t + 2.0; });
    const auto d = finite_difference(g, p.values);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK_THAT(d[i], WithinAbs(6.0 * g[i] - 1.0, 1e-12));
}

TEST_CASE("analytic derivative samples take precedence") {
    const TimeGrid g = TimeGrid::unit(4);
    const ScalarPath p = ScalarPath::sample(g, [](double t) { return t; }, [](double) { return 7.0; });
    CHECK(derivative_of(p)[2] == 7.0);
}

TEST_CASE("trapezoid is exact for linear integrands") {
    const TimeGrid g({0.0, 0.3, 0.35, 1.0});
    const std::vector<double> f{1.0, 1.6, 1.7, 3.0};
    CHECK_THAT(trapezoid(g, f), WithinAbs(2.0, 1e-15));
}

TEST_CASE("paths on different grids are not combined") {
    const ScalarPath a = ScalarPath::sample(TimeGrid::unit(4), [](double t) { return t; });
    const ScalarPath b = ScalarPath::sample(TimeGrid::unit(5), [](double t) { return t; });
    CHECK_THROWS_AS(require_same_grid(a, b), InvalidParameter);
}
