#include <catch_amalgamated.hpp>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <random>

#include "dyson_ldp/fixedtime.hpp"
#include "dyson_ldp/rate.hpp"

using namespace dyson_ldp;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ScalarPath linear(const TimeGrid& g, double a, double b) {
    return ScalarPath::sample(g, [=](double t) { return a + (b - a) * t; }, [=](double) { return b - a; });
}

ScalarPath wall(const TimeGrid& g) {
    return ScalarPath::sample(g, [](double t) { return 2.0 * std::sqrt(t); });
}

}  // namespace

TEST_CASE("law of large numbers path") {
    const TimeGrid g({0.0, 0.25, 0.5, 1.0});
    CHECK_THAT(lln_path(0.0, g)[1], WithinAbs(1.0, 1e-15));
    CHECK_THAT(lln_path(1.0, g)[1], WithinAbs(1.25, 1e-15));
    CHECK_THAT(lln_path(0.5, g)[2], WithinAbs(1.414214, 1e-6));
    CHECK_THROWS_AS(lln_path(-0.1, g), InvalidParameter);
}

TEST_CASE("k_phi vanishes on the LLN path and on the wall") {
    const TimeGrid g = TimeGrid::unit(500);
    for (double theta : {0.3, 1.0, 2.5}) {
        const ScalarPath k = k_phi(lln_path(theta, g), theta);
        for (double v : k.values) CHECK(std::abs(v) <= 1e-12);
    }
    const ScalarPath w = ScalarPath::sample(g, [](double t) { return 2.0 * std::sqrt(t); },
                                            [](double t) { return t > 0 ? 1.0 / std::sqrt(t) : INFINITY; });
    const ScalarPath k = k_phi(w, 0.0);
    for (double v : k.values) CHECK(std::abs(v) <= 1e-9);
}

TEST_CASE("k_phi on a straight line against the Cauchy integral") {
    const TimeGrid g = TimeGrid::unit(10);
    const ScalarPath k = k_phi(linear(g, 1.0, 3.0), 1.0);
    CHECK_THAT(k.back(), WithinAbs(2.0 - 0.5 * (3.0 - std::sqrt(5.0)), 1e-14));
    CHECK_THAT(k.back(), WithinAbs(1.618034, 1e-6));
    CHECK_THAT(2.0 - k[4], WithinAbs(sc_drift_quadrature(1.8, 0.4), 1e-9));
}

TEST_CASE("k_phi rejects paths below the wall") {
    const TimeGrid g = TimeGrid::unit(4);
    CHECK_THROWS_AS(k_phi(linear(g, 0.0, 0.5), 0.0), WallViolation);
}

TEST_CASE("x transform") {
    const TimeGrid g = TimeGrid::unit(100);
    const ScalarPath x = x_transform(wall(g));
    for (std::size_t i = 0; i < g.size(); ++i) CHECK_THAT(x[i], WithinAbs(std::sqrt(g[i]), 1e-7));
    const ScalarPath xl = x_transform(lln_path(0.8, g));
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g[i] <= 0.64) CHECK_THAT(xl[i], WithinAbs(0.8, 1e-12));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> v(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) v[i] = 2.0 * std::sqrt(g[i]) + u(rng);
        const ScalarPath phi(g, v);
        const ScalarPath back = from_x_transform(x_transform(phi));
        for (std::size_t i = 1; i < g.size(); ++i) CHECK_THAT(back[i], WithinAbs(phi[i], 1e-12));
    }
}

TEST_CASE("rate of the LLN path is zero") {
    const TimeGrid g = TimeGrid::unit(1999);
    for (double theta : {0.0, 0.5, 1.0, 2.0}) CHECK(rate_I(lln_path(theta, g), theta) <= 1e-10);
}

TEST_CASE("rate of the straight line to 3") {
    boost::math::quadrature::tanh_sinh<double> ts;
    auto k2 = [](double t) {
        const double phi = 1.0 + 2.0 * t;
        const double k = 2.0 - 2.0 / (phi + std::sqrt(phi * phi - 4.0 * t));
        return 0.5 * k * k;
    };
    const double oracle = ts.integrate(k2, 0.0, 1.0);
    CHECK_THAT(oracle, WithinAbs(0.96462733300, 1e-10));
    CHECK_THAT(rate_I(linear(TimeGrid::unit(4000), 1.0, 3.0), 1.0), WithinAbs(oracle, 1e-7));
    // real symmetric ensemble: half the rate
    CHECK_THAT(rate_I(linear(TimeGrid::unit(4000), 1.0, 3.0), RateParams{1.0, 1}), WithinAbs(0.5 * oracle, 1e-7));
}

TEST_CASE("rate is infinite below the wall and rejects a wrong start") {
    const TimeGrid g({0.0, 0.5, 1.0});
    CHECK(std::isinf(rate_I(ScalarPath(g, {0.0, 0.5, 2.0}), 0.0)));
    CHECK_THROWS_AS(rate_I(ScalarPath(g, {1.0, 2.0, 3.0}), 0.5), InvalidParameter);
    CHECK_THROWS_AS(rate_I(ScalarPath(g, {1.0, 2.0, 3.0}), RateParams{1.0, 3}), InvalidParameter);
    // grazing the wall inside the clamp tolerance is admissible
    CHECK(std::isfinite(rate_I(ScalarPath(g, {0.0, 2.0 * std::sqrt(0.5) - 1e-12, 2.0}), 0.0)));
}

TEST_CASE("G functional") {
    const TimeGrid g = TimeGrid::unit(2000);
    const ScalarPath phi = linear(g, 1.0, 3.0);
    const ScalarPath zero = ScalarPath::sample(g, [](double) { return 0.0; });
    CHECK(G_functional(phi, SemicircleProcess{}, zero) == 0.0);
    CHECK(F_functional(phi, SemicircleProcess{}, zero) == 0.0);

    const ScalarPath h = ScalarPath::sample(g, [](double t) { return std::cos(2.0 * t); },
                                            [](double t) { return -2.0 * std::sin(2.0 * t); });
    const ScalarPath h3 = ScalarPath::sample(g, [](double t) { return 3.0 * std::cos(2.0 * t); },
                                             [](double t) { return -6.0 * std::sin(2.0 * t); });
    CHECK_THAT(G_functional(phi, SemicircleProcess{}, h3),
               WithinAbs(3.0 * G_functional(phi, SemicircleProcess{}, h), 1e-12));

    // integration by parts: G = int h (phi' - b) = int h k
    const ScalarPath f1 = lln_path(1.0, g);
    const ScalarPath ht = ScalarPath::sample(g, [](double t) { return t; }, [](double) { return 1.0; });
    CHECK(std::abs(G_functional(f1, SemicircleProcess{}, ht)) <= 1e-6);
    const ScalarPath k = k_phi(phi, 1.0);
    std::vector<double> hk(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) hk[i] = h[i] * k[i];
    CHECK_THAT(G_functional(phi, SemicircleProcess{}, h), WithinAbs(trapezoid(g, hk), 1e-6));
}

TEST_CASE("F at the optimal direction recovers the rate, and bounds it below elsewhere") {
    const TimeGrid g = TimeGrid::unit(2000);
    const ScalarPath phi = linear(g, 1.0, 3.0);
    const ScalarPath k = k_phi(phi, 1.0);
    const double rate = rate_I(phi, 1.0);
    CHECK_THAT(F_functional(phi, SemicircleProcess{}, k), WithinAbs(rate, 1e-5));
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 10; ++trial) {
        const double a = n(rng), b = n(rng), c = n(rng);
        const ScalarPath h = ScalarPath::sample(g, [&](double t) { return a + b * t + c * std::sin(5.0 * t); },
                                                [&](double t) { return b + 5.0 * c * std::cos(5.0 * t); });
        CHECK(F_functional(phi, SemicircleProcess{}, h) <= rate + 1e-6);
    }
}

TEST_CASE("G with an empirical measure path") {
    const TimeGrid g = TimeGrid::unit(4);
    const ScalarPath phi = linear(g, 2.0, 3.0);
    EmpiricalMeasurePath mu(g.size(), EmpiricalMeasure({0.0, -1.0}));
    const ScalarPath h = ScalarPath::sample(g, [](double) { return 1.0; }, [](double) { return 0.0; });
    std::vector<double> b(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) b[i] = emp_drift(phi[i], mu[i]);
    CHECK_THAT(G_functional(phi, mu, h), WithinAbs(1.0 - trapezoid(g, b), 1e-14));
    CHECK_THAT(G_functional(phi, mu, h, 0.5), WithinAbs(1.0 - 0.5 * trapezoid(g, b), 1e-14));
    EmpiricalMeasurePath touching(g.size(), EmpiricalMeasure({2.0, 0.0}));
    CHECK_THROWS_AS(G_functional(phi, touching, h), SingularDrift);
}

TEST_CASE("cosine basis is orthonormal") {
    const TimeGrid g = TimeGrid::unit(4000);
    for (std::size_t a = 0; a < 5; ++a)
        for (std::size_t b = 0; b < 5; ++b) {
            const ScalarPath ea = cosine_basis(g, a), eb = cosine_basis(g, b);
            std::vector<double> p(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) p[i] = ea[i] * eb[i];
            CHECK_THAT(trapezoid(g, p), WithinAbs(a == b ? 1.0 : 0.0, 1e-6));
        }
}

TEST_CASE("variational lower bound on the rate") {
    const TimeGrid g = TimeGrid::unit(20000);
    CHECK(sup_J_lower(lln_path(1.0, g), 16) <= 1e-10);
    const ScalarPath phi = linear(g, 1.0, 3.0);
    double prev = 0.0;
    for (std::size_t m : {1, 2, 4, 8, 16, 32, 64}) {
        const double v = sup_J_lower(phi, m);
        CHECK(v >= prev - 1e-12);
        prev = v;
    }
    CHECK_THAT(prev, WithinRel(0.96463, 0.02));
    CHECK(prev <= rate_I(phi, 1.0) + 1e-6);
}

TEST_CASE("last time on the wall") {
    const TimeGrid g = TimeGrid::unit(1000);
    CHECK(t0_of(wall(g)) == 1.0);
    const ScalarPath bumped = ScalarPath::sample(
        g, [](double t) { return 2.0 * std::sqrt(t) + (t > 0.3 ? (t - 0.3) * (t - 0.3) : 0.0); });
    CHECK_THAT(t0_of(bumped), WithinAbs(0.3, 2e-3));
    const ScalarPath opt = optimal_path(FixedTimeQuery{0.0, 2.5, 0.0}, g);
    CHECK_THAT(t0_of(opt), WithinAbs(0.25, 1e-3));
    CHECK_THROWS_AS(t0_of(lln_path(1.0, g)), InvalidParameter);
}
