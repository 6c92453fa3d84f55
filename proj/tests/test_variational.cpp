#include <catch_amalgamated.hpp>

#include <random>

#include "dyson_ldp/fixedtime.hpp"
#include "dyson_ldp/variational.hpp"

using namespace dyson_ldp;
using Catch::Matchers::WithinAbs;

namespace {

VarProblem problem(double theta, double x, std::size_t steps = 800) {
    VarProblem p;
    p.theta = theta;
    p.x = x;
    p.grid = TimeGrid::unit(steps);
    return p;
}

}  // namespace

TEST_CASE("discrete objective matches the rate of smooth paths") {
    const TimeGrid g = TimeGrid::unit(2000);
    const DiscreteRate rate(g);
    const ScalarPath line = ScalarPath::sample(g, [](double t) { return 1.0 + 2.0 * t; });
    const ScalarPath x = x_transform(line);
    CHECK_THAT(rate.value(x.values), WithinAbs(0.96462733300, 1e-5));
}

TEST_CASE("analytic gradient against central differences") {
    const TimeGrid g = TimeGrid::unit(30);
    const DiscreteRate rate(g);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> lift(0.05, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x(g.size());
        x[0] = 0.7;
        for (std::size_t i = 1; i < g.size(); ++i) x[i] = rate.lower_bound(i) + lift(rng);
        const auto grad = rate.gradient(x);
        for (std::size_t i = 1; i + 1 < g.size(); ++i) {
            const double h = 1e-6;
            auto xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double fd = (rate.value(xp) - rate.value(xm)) / (2.0 * h);
            CHECK_THAT(grad[i], WithinAbs(fd, 1e-6 * std::max(1.0, std::abs(fd))));
        }
    }
}

TEST_CASE("problem validation") {
    CHECK_THROWS_AS(minimize_path(problem(0.5, 1.5)), InvalidParameter);
    VarProblem p = problem(0.5, 2.5);
    p.eta = 0.2;
    CHECK_THROWS_AS(minimize_path(p), InvalidParameter);  // grid does not start at eta
    p.grid = TimeGrid::uniform(0.2, 1.0, 100);
    CHECK_THROWS_AS(minimize_path(p), InvalidParameter);  // theta below the wall at eta
}

TEST_CASE("minimizer on the wall case theta = 0, x = 2") {
    const VarResult r = minimize_path(problem(0.0, 2.0));
    CHECK(r.objective <= 1e-12);
    for (std::size_t i = 0; i < r.path.size(); ++i)
        CHECK_THAT(r.path[i], WithinAbs(2.0 * std::sqrt(r.path.grid[i]), 1e-9));
}

TEST_CASE("minimizer matches the closed forms") {
    const VarResult line = minimize_path(problem(1.0, 3.0));
    CHECK_THAT(line.objective, WithinAbs(0.96463, 1e-2));
    CHECK(line.converged);
    const VarResult wall = minimize_path(problem(0.5, 2.2));
    CHECK_THAT(wall.objective, WithinAbs(int_sqrt(2.2), 1e-2));
    for (double theta : {0.0, 0.5, 1.0})
        for (double x : {2.2, 3.0}) {
            const VarResult r = minimize_path(problem(theta, x));
            const double k = K_theta(theta, x);
            CHECK(r.objective >= k - 5e-3);
            CHECK(r.objective <= k + 2e-2);
        }
}

TEST_CASE("minimizer respects the obstacle and never increases the objective") {
    VarProblem p = problem(0.0, 2.5, 200);
    p.options.record_trace = true;
    p.options.multilevel = false;
    p.options.max_iterations = 300;
    const VarResult r = minimize_path(p);
    for (std::size_t i = 0; i < r.path.size(); ++i) CHECK(r.path[i] >= 2.0 * std::sqrt(r.path.grid[i]) - 1e-12);
    REQUIRE(r.trace.size() >= 2);
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i].objective <= r.trace[i - 1].objective);
    CHECK(r.path.front() == 0.0);
    CHECK(r.path.back() == 2.5);
}

TEST_CASE("minimizer with a later start time") {
    VarProblem p = problem(0.8, 2.5);
    p.eta = 0.09;
    p.grid = TimeGrid::uniform(0.09, 1.0, 800);
    const VarResult r = minimize_path(p);
    const ScalarPath exact = optimal_path({0.8, 2.5, 0.09}, p.grid);
    double sup = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i) sup = std::max(sup, std::abs(exact[i] - r.path[i]));
    CHECK(sup <= 5e-2);
}

TEST_CASE("restarts never do worse than a single run") {
    const VarProblem p = problem(0.5, 2.5, 200);
    CHECK(minimize_path_restarts(p, 3).objective <= minimize_path(p).objective + 1e-15);
}

TEST_CASE("Euler-Lagrange residual") {
    const TimeGrid g = TimeGrid::unit(1999);
    const ScalarPath line = ScalarPath::sample(g, [](double t) { return 1.0 + 2.0 * t; }, [](double) { return 2.0; });
    const ElResidual r = el_residual(line);
    CHECK_FALSE(r.empty);
    CHECK(r.max_abs <= 1e-3);

    const ScalarPath wall = ScalarPath::sample(g, [](double t) { return 2.0 * std::sqrt(t); });
    const ElResidual w = el_residual(wall);
    CHECK(w.empty);
    for (bool a : w.active) CHECK(a);

    const ScalarPath bent = ScalarPath::sample(g, [](double t) { return 1.0 + 2.0 * t + 0.1 * std::sin(M_PI * t); });
    CHECK(el_residual(bent).max_abs >= 0.1);
}

TEST_CASE("DuBois-Reymond constant") {
    const TimeGrid g = TimeGrid::unit(1999);
    const ScalarPath line = ScalarPath::sample(g, [](double t) { return 1.0 + 2.0 * t; }, [](double) { return 2.0; });
    CHECK(dbr_constant(line).second <= 1e-3);
    const ScalarPath wall = ScalarPath::sample(g, [](double t) { return 2.0 * std::sqrt(t); });
    CHECK_THROWS_AS(dbr_constant(wall), DomainError);
    const ScalarPath bent = ScalarPath::sample(g, [](double t) { return 1.0 + 2.0 * t + 0.1 * std::sin(M_PI * t); });
    CHECK(dbr_constant(bent).second >= 1e-2);
}
