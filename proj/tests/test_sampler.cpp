#include <catch_amalgamated.hpp>

#include "dyson_ldp/sampler.hpp"

using namespace dyson_ldp;
using Catch::Matchers::WithinAbs;

namespace {

SimConfig config(std::size_t n, double theta, std::size_t steps, std::uint64_t seed) {
    SimConfig c;
    c.n = n;
    c.theta = theta;
    c.grid = TimeGrid::unit(steps);
    c.seed = seed;
    return c;
}

ScalarPath line(const TimeGrid& g, double a, double b) {
    return ScalarPath::sample(g, [=](double t) { return a + (b - a) * t; }, [=](double) { return b - a; });
}

}  // namespace

TEST_CASE("zero tilt reproduces the plain simulation") {
    const SimConfig c = config(6, 0.5, 50, 3);
    const ParticleRun run = tilted_simulate(c, TiltSpec::none(c.grid), 4);
    const EnsemblePath plain = simulate(c, 4);
    CHECK(run.log_lr == 0.0);
    for (std::size_t k = 0; k < c.grid.size(); ++k)
        for (std::size_t i = 0; i < 6; ++i) CHECK(run.path(k, i) == plain(k, i));
    CHECK(fn_identity_check(run, TiltSpec::none(c.grid)) == 0.0);
}

TEST_CASE("tilt must live on the simulation grid") {
    const SimConfig c = config(4, 0.5, 50, 3);
    CHECK_THROWS_AS(tilted_simulate(c, TiltSpec::none(TimeGrid::unit(10)), 0), InvalidParameter);
    SimConfig m = c;
    m.mode = SimMode::matrix;
    CHECK_THROWS_AS(tilted_simulate(m, TiltSpec::none(c.grid), 0), InvalidParameter);
}

TEST_CASE("likelihood ratio has unit mean") {
    const SimConfig c = config(8, 1.0, 100, 5);
    const TiltSpec h{ScalarPath::sample(c.grid, [](double t) { return 0.4 + 0.3 * t; }, [](double) { return 0.3; })};
    const auto w = parallel_map(2000, 1, [&](std::size_t r) { return std::exp(-tilted_simulate(c, h, r).log_lr); });
    double s = 0.0, s2 = 0.0;
    for (double v : w) {
        s += v;
        s2 += v * v;
    }
    const double m = s / 2000.0, se = std::sqrt((s2 / 2000.0 - m * m) / 1999.0);
    CHECK(std::abs(m - 1.0) <= 3.0 * se);
}

TEST_CASE("F_N identity discrepancy is small and shrinks with the step") {
    std::vector<double> med;
    for (std::size_t steps : {1000, 4000}) {
        const SimConfig c = config(8, 1.0, steps, 13);
        const TiltSpec h{ScalarPath::sample(c.grid, [](double t) { return 0.5 * std::sin(3.0 * t) + 0.3; },
                                            [](double t) { return 1.5 * std::cos(3.0 * t); })};
        auto d = parallel_map(40, 1, [&](std::size_t r) { return fn_identity_check(tilted_simulate(c, h, r), h); });
        std::sort(d.begin(), d.end());
        med.push_back(d[20]);
        CHECK(d[20] <= 0.05 * 8);
    }
    CHECK(med[1] < 0.5 * med[0]);
}

TEST_CASE("tube estimate around the typical path") {
    const TimeGrid g = TimeGrid::unit(200);
    const EstimateReport r = estimate_tube_prob(1.0, 16, lln_path(1.0, g), 0.5, 200, 21);
    CHECK(r.p_hat >= 0.9);
    CHECK(r.minus_log_rate <= 0.02);
    CHECK(r.target_rate <= 1e-10);
    CHECK(r.n_replicas == 200);
    CHECK(r.N == 16);
}

TEST_CASE("untilted tube estimate is the plain hit frequency") {
    const TimeGrid g = TimeGrid::unit(100);
    const ScalarPath phi = lln_path(1.0, g);
    const EstimateReport r = estimate_tube_prob(1.0, 8, phi, 0.2, 300, 22, false);
    std::size_t hits = 0;
    SimConfig c = config(8, 1.0, 100, 22);
    for (std::size_t rep = 0; rep < 300; ++rep) {
        const EnsemblePath e = simulate(c, rep);
        double dev = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) dev = std::max(dev, std::abs(e(k, 0) - phi[k]));
        if (dev < 0.2) ++hits;
    }
    CHECK(r.hits == hits);
    CHECK(r.p_hat == static_cast<double>(hits) / 300.0);
}

TEST_CASE("tilted and plain tube estimates agree on a mildly rare tube") {
    const TimeGrid g = TimeGrid::unit(200);
    const ScalarPath phi = line(g, 1.0, 2.4);
    const EstimateReport tilted = estimate_tube_prob(1.0, 8, phi, 0.3, 1500, 31, true);
    const EstimateReport plain = estimate_tube_prob(1.0, 8, phi, 0.3, 1500, 32, false);
    REQUIRE(tilted.hits >= 30);
    REQUIRE(plain.hits >= 30);
    const double se = std::sqrt(tilted.stderr_ * tilted.stderr_ + plain.stderr_ * plain.stderr_);
    CHECK(std::abs(tilted.p_hat - plain.p_hat) <= 3.0 * se);
}

TEST_CASE("the tilt keeps the top eigenvalue in the tube more often as N grows") {
    const TimeGrid g = TimeGrid::unit(400);
    const ScalarPath phi = line(g, 1.0, 3.0);
    const double h8 = estimate_tube_prob(1.0, 8, phi, 0.3, 200, 41).hit_fraction;
    const double h16 = estimate_tube_prob(1.0, 16, phi, 0.3, 200, 42).hit_fraction;
    CHECK(h16 > h8);
}

TEST_CASE("zero hits are reported, not hidden") {
    const TimeGrid g = TimeGrid::unit(50);
    const EstimateReport r = estimate_tube_prob(1.0, 8, line(g, 1.0, 4.0), 0.01, 20, 51, false);
    CHECK(r.p_hat == 0.0);
    CHECK(r.stderr_ == 0.0);
    CHECK(std::isinf(r.minus_log_rate));
    CHECK(r.has_flag("zero_hits"));
    CHECK(r.has_flag("low_hits"));
}

TEST_CASE("tube estimator rejects bad input") {
    const TimeGrid g = TimeGrid::unit(50);
    CHECK_THROWS_AS(estimate_tube_prob(1.0, 8, line(g, 1.0, 2.0), 0.0, 10, 1), InvalidParameter);
    CHECK_THROWS_AS(estimate_tube_prob(1.0, 8, line(g, 1.0, 2.0), 0.1, 0, 1), InvalidParameter);
    CHECK_THROWS_AS(estimate_tube_prob(0.0, 8, line(g, 0.0, 0.5), 0.1, 10, 1), InvalidParameter);
}

TEST_CASE("tail estimate at the typical value is flagged") {
    const EstimateReport r = estimate_tail_prob(1.0, 8, 2.0, 400, 61, TailOptions{TailTilt::optimal, SimMode::particle, 100});
    CHECK(r.has_flag("non_rare"));
    CHECK(r.target_rate == 0.0);
    CHECK(r.p_hat > 0.2);
    CHECK(r.p_hat < 0.8);
}

TEST_CASE("tilted and naive tail estimates agree") {
    TailOptions tilted{TailTilt::optimal, SimMode::particle, 200};
    TailOptions naive{TailTilt::none, SimMode::matrix, 0};
    SECTION("mildly rare level") {
        const EstimateReport a = estimate_tail_prob(0.0, 16, 2.05, 1000, 71, tilted);
        const EstimateReport b = estimate_tail_prob(0.0, 16, 2.05, 5000, 72, naive);
        REQUIRE(a.hits >= 30);
        REQUIRE(b.hits >= 30);
        const double se = std::sqrt(a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_);
        CHECK(std::abs(a.p_hat - b.p_hat) <= 3.0 * se);
    }
    SECTION("x = 2.2 at N = 32") {
        const EstimateReport a = estimate_tail_prob(0.0, 32, 2.2, 1000, 73, tilted);
        const EstimateReport b = estimate_tail_prob(0.0, 32, 2.2, 200000, 74, naive);
        REQUIRE(a.hits >= 30);
        REQUIRE(b.hits >= 5);
        const double se = std::sqrt(a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_);
        CHECK(std::abs(a.p_hat - b.p_hat) <= 3.0 * se);
        CHECK_THAT(a.target_rate, WithinAbs(int_sqrt(2.2), 1e-14));
    }
    CHECK_THROWS_AS(estimate_tail_prob(0.0, 16, 2.2, 10, 1, TailOptions{TailTilt::optimal, SimMode::matrix, 0}),
                    InvalidParameter);
}

TEST_CASE("tightness bound and counting") {
    CHECK(tightness_bound(32, 0.8, 0.05) < tightness_bound(32, 0.8, 0.1));
    CHECK(tightness_bound(32, 0.8, 0.1) < tightness_bound(32, 0.8, 0.2));
    CHECK_THAT(tightness_bound(32, 0.8, 0.05), WithinAbs(std::exp(-32.0 * 0.64 / 0.5), 1e-30));

    const TimeGrid g = TimeGrid::unit(10);
    EnsemblePath e(g, 1, 0, 0);
    for (std::size_t k = 0; k < g.size(); ++k) e(k, 0) = k == 5 ? 1.0 : 0.0;
    const auto [windows, exceed] = tightness_counts(e, 0.5, 0.2, 1);
    CHECK(windows == 9);
    CHECK(exceed == 3);  // windows starting at 0.3, 0.4 and 0.5
    CHECK_THROWS_AS(tightness_counts(e, 0.5, 2.0, 1), InvalidParameter);
    CHECK_THROWS_AS(tightness_counts(e, 0.5, 0.2, 2), InvalidParameter);

    const SimConfig c = config(8, 0.0, 50, 81);
    const auto reps = tightness_experiment(c, 20, 100.0, 0.1, {1, 8});
    for (const auto& r : reps) {
        CHECK(r.exceedances == 0);
        CHECK(r.pass);
    }
}
