#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "dyson_ldp/dbm.hpp"
#include "dyson_ldp/fixedtime.hpp"
#include "dyson_ldp/measures.hpp"
#include "dyson_ldp/parallel.hpp"
#include "dyson_ldp/random.hpp"
#include "dyson_ldp/rate.hpp"
#include "dyson_ldp/sampler.hpp"
#include "dyson_ldp/variational.hpp"

namespace dyson_ldp::acceptance {

struct Result {
    std::string id;
    std::string title;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
    double budget = 0.0;
};

struct Criterion {
    std::string id;
    std::string title;
    double budget;  // seconds
    std::function<std::pair<bool, std::string>(int workers)> run;
};

namespace detail {

inline std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

struct Moments {
    double s = 0.0, s2 = 0.0;
    std::size_t n = 0;
    void add(double v) {
        s += v;
        s2 += v * v;
        ++n;
    }
    double mean() const { return s / static_cast<double>(n); }
    double var_of_mean() const {
        const double m = mean(), dn = static_cast<double>(n);
        return std::max(s2 / dn - m * m, 0.0) / (dn - 1.0);
    }
};

inline double ks_distance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace detail

inline std::pair<bool, std::string> a1_antiderivative(int) {
    boost::math::quadrature::tanh_sinh<double> ts;
    double worst = 0.0;
    for (double x : {2.1, 2.5, 3.0, 4.0, 5.0}) {
        const double q = ts.integrate([](double z) { return std::sqrt(std::max(z * z - 4.0, 0.0)); }, 2.0, x);
        worst = std::max(worst, std::abs(int_sqrt(x) - q));
    }
    return {worst <= 1e-8, detail::fmt("max |int_sqrt - quadrature| = %.3g", worst)};
}

inline std::pair<bool, std::string> a2_zero_rate_at_lln(int) {
    const TimeGrid g = TimeGrid::unit(1999);
    double worst_i = 0.0, worst_k = 0.0;
    for (double theta : {0.0, 0.5, 1.0, 2.0}) {
        worst_i = std::max(worst_i, rate_I(lln_path(theta, g), theta));
        worst_k = std::max(worst_k, K_theta(theta, lln_value(theta, 1.0)));
    }
    return {worst_i <= 1e-10 && worst_k <= 1e-9,
            detail::fmt("max rate_I(f_theta) = %.3g, max K_theta(f_theta(1)) = %.3g", worst_i, worst_k)};
}

inline std::pair<bool, std::string> a3_closed_forms(int) {
    const double lin = closed_form_linear_rate(1.0, 3.0), k = K_theta(1.0, 3.0);
    double junction = 0.0;
    for (double theta : {0.2, 0.5, 0.8}) {
        const double c = theta + 1.0 / theta;
        junction = std::max(junction, std::abs(M_theta(theta, c) - int_sqrt(c)));
    }
    const bool ok = std::abs(lin - k) <= 1e-9 && junction <= 1e-9 && std::abs(k - 0.96462733300) <= 1e-9;
    return {ok, detail::fmt("linear %.11f, K_1(3) %.11f, junction gap %.3g", lin, k, junction)};
}

inline std::pair<bool, std::string> a4_variational(int workers) {
    struct Cell {
        double theta, x;
    };
    std::vector<Cell> cells;
    for (double theta : {0.0, 0.5, 1.0})
        for (double x : {2.2, 2.5, 3.0}) cells.push_back({theta, x});
    const auto out = parallel_map(cells.size(), resolve_workers(workers), [&](std::size_t i) {
        VarProblem p;
        p.theta = cells[i].theta;
        p.x = cells[i].x;
        const VarResult r = minimize_path_restarts(p, 3);
        const ScalarPath opt = optimal_path(FixedTimeQuery{p.theta, p.x, 0.0}, p.grid);
        double sup = 0.0;
        for (std::size_t j = 0; j < opt.size(); ++j) sup = std::max(sup, std::abs(opt[j] - r.path[j]));
        return std::pair{std::abs(r.objective - K_theta(p.theta, p.x)), sup};
    });
    double gap = 0.0, sup = 0.0;
    for (const auto& [g, s] : out) {
        gap = std::max(gap, g);
        sup = std::max(sup, s);
    }
    return {gap <= 2e-2 && sup <= 5e-2, detail::fmt("max |objective - K| = %.3g, max sup-norm = %.3g", gap, sup)};
}

inline std::pair<bool, std::string> a5_gradient(int) {
    const TimeGrid g = TimeGrid::unit(40);
    const DiscreteRate rate(g);
    double worst = 0.0;
    for (std::uint64_t r = 0; r < 20; ++r) {
        Engine rng = make_engine(505, r);
        std::uniform_real_distribution<double> lift(0.05, 1.0);
        std::vector<double> x(g.size());
        x[0] = 0.5;
        for (std::size_t i = 1; i < g.size(); ++i) x[i] = rate.lower_bound(i) + lift(rng);
        const auto grad = rate.gradient(x);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 1; i + 1 < g.size(); ++i) {
            const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
            auto xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double fd = (rate.value(xp) - rate.value(xm)) / (2.0 * h);
            num = std::max(num, std::abs(grad[i] - fd));
            den = std::max(den, std::abs(grad[i]));
        }
        worst = std::max(worst, num / den);
    }
    return {worst <= 1e-6, detail::fmt("max relative gradient error = %.3g", worst)};
}

inline std::pair<bool, std::string> a6_marginals(int workers) {
    const unsigned w = resolve_workers(workers);
    SimConfig big;
    big.n = 200;
    big.mode = SimMode::matrix;
    big.grid = TimeGrid({0.0, 1.0});
    big.seed = 606;
    const auto big_runs = parallel_map(20, w, [&](std::size_t r) {
        const EnsemblePath e = simulate(big, r);
        return std::pair{w1_distance(e.spectrum(1), SemicircleLaw(1.0)), e(1, 0)};
    });
    double w1 = 0.0, top = 0.0;
    for (const auto& [d, l] : big_runs) {
        w1 += d / 20.0;
        top += l / 20.0;
    }

    SimConfig part;
    part.n = 16;
    part.grid = TimeGrid::unit(100);
    part.seed = 607;
    SimConfig mat = part;
    mat.mode = SimMode::matrix;
    mat.grid = TimeGrid({0.0, 1.0});
    mat.seed = 608;
    const auto a = parallel_map(2000, w, [&](std::size_t r) { return simulate(part, r)(100, 0); });
    const auto b = parallel_map(2000, w, [&](std::size_t r) { return simulate(mat, r)(1, 0); });
    const double ks = detail::ks_distance(a, b);
    const bool ok = w1 <= 0.05 && top >= 1.9 && top <= 2.05 && ks <= 0.08;
    return {ok, detail::fmt("mean W1 = %.4f, mean lambda_1(1) = %.4f, KS(particle, matrix) = %.4f", w1, top, ks)};
}

inline std::pair<bool, std::string> a7_weyl(int workers) {
    SimConfig c;
    c.n = 16;
    c.mode = SimMode::matrix;
    c.grid = TimeGrid::unit(100);
    c.seed = 707;
    const auto viol = parallel_map(100, resolve_workers(workers), [&](std::size_t r) {
        const auto [zero, spiked] = coupled_spike_pair(c, 1.0, r);
        std::size_t v = 0;
        for (std::size_t k = 0; k < c.grid.size(); ++k)
            for (std::size_t i = 0; i < c.n; ++i) {
                if (zero(k, i) > spiked(k, i)) ++v;
                if (i + 1 < c.n && spiked(k, i + 1) > zero(k, i)) ++v;
            }
        return v;
    });
    std::size_t total = 0;
    for (auto v : viol) total += v;
    return {total == 0, detail::fmt("%zu interlacing violations over 100 replicas x 101 times", total)};
}

inline std::pair<bool, std::string> a8_girsanov(int workers) {
    const unsigned w = resolve_workers(workers);

    // (i) first-order convergence of the F_N identity.
    std::vector<double> med;
    for (std::size_t steps : {4000, 8000}) {
        SimConfig c;
        c.n = 8;
        c.theta = 1.0;
        c.grid = TimeGrid::unit(steps);
        c.seed = 801;
        const TiltSpec h{ScalarPath::sample(
            c.grid, [](double t) { return 0.5 * std::sin(3.0 * t) + 0.3; },
            [](double t) { return 1.5 * std::cos(3.0 * t); })};
        med.push_back(detail::median(parallel_map(
            100, w, [&](std::size_t r) { return fn_identity_check(tilted_simulate(c, h, r), h); })));
    }
    const double ratio = med[0] / med[1];
    const bool ok_i = ratio >= 1.5 && ratio <= 2.7 && med[0] <= 0.05 * 8;

    // (ii) re-weighted tilted mean against the plain mean.
    SimConfig c;
    c.n = 8;
    c.theta = 1.0;
    c.grid = TimeGrid::unit(200);
    c.seed = 802;
    const TiltSpec h{ScalarPath::sample(c.grid, [](double) { return 0.5; }, [](double) { return 0.0; })};
    SimConfig plain = c;
    plain.seed = 803;
    const auto tilted = parallel_map(2000, w, [&](std::size_t r) {
        const ParticleRun run = tilted_simulate(c, h, r);
        return run.path(200, 0) * std::exp(-run.log_lr);
    });
    const auto naive = parallel_map(2000, w, [&](std::size_t r) { return simulate(plain, r)(200, 0); });
    detail::Moments mt, mn;
    for (double v : tilted) mt.add(v);
    for (double v : naive) mn.add(v);
    const double z = (mt.mean() - mn.mean()) / std::sqrt(mt.var_of_mean() + mn.var_of_mean());
    const bool ok_ii = std::abs(z) <= 3.0;

    // (iii) tube hits under the tilt k_phi.
    const TimeGrid g = TimeGrid::unit(1000);
    const ScalarPath phi = ScalarPath::sample(g, [](double t) { return 1.0 + 2.0 * t; }, [](double) { return 2.0; });
    SamplerOptions opt;
    opt.workers = workers;
    const double hit8 = estimate_tube_prob(1.0, 8, phi, 0.3, 500, 804, true, opt).hit_fraction;
    const double hit32 = estimate_tube_prob(1.0, 32, phi, 0.3, 500, 805, true, opt).hit_fraction;
    const bool ok_iii = hit32 >= 0.5 && hit32 > hit8;

    return {ok_i && ok_ii && ok_iii,
            detail::fmt("(i) median discrepancy %.3g -> %.3g, ratio %.2f; (ii) z = %.2f; (iii) hits %.3f -> %.3f",
                        med[0], med[1], ratio, z, hit8, hit32)};
}

inline std::pair<bool, std::string> a9_ldp_trend(int workers) {
    SamplerOptions opt;
    opt.workers = workers;
    TailOptions tail;
    tail.steps = 200;
    const double target = K_theta(0.0, 2.5);
    std::vector<double> err, mlr;
    for (std::size_t n : {16, 32, 64}) {
        const EstimateReport r = estimate_tail_prob(0.0, n, 2.5, 2000, 900 + n, tail, opt);
        mlr.push_back(r.minus_log_rate);
        err.push_back(std::abs(r.minus_log_rate - target));
    }
    const bool ok = err[2] <= 0.5 * target && err[1] <= err[0] && err[2] <= err[1];
    return {ok, detail::fmt("minus_log_rate %.4f, %.4f, %.4f at N = 16, 32, 64; target %.5f", mlr[0], mlr[1],
                            mlr[2], target)};
}

inline std::pair<bool, std::string> a10_tightness(int workers) {
    SimConfig c;
    c.n = 32;
    c.grid = TimeGrid::unit(100);
    c.seed = 1010;
    const auto reps = tightness_experiment(c, 2000, 0.8, 0.05, {1, 16, 32}, workers);
    bool ok = true;
    std::string d;
    for (const auto& r : reps) {
        ok = ok && r.pass;
        d += detail::fmt("p=%zu: %zu/%zu windows; ", r.p, r.exceedances, r.windows);
    }
    d += detail::fmt("bound %.3g", reps.front().bound);
    return {ok, d};
}

inline std::vector<Criterion> criteria() {
    return {
        {"A1", "antiderivative correctness", 1, a1_antiderivative},
        {"A2", "zero rate at the LLN path", 1, a2_zero_rate_at_lln},
        {"A3", "closed-form consistency", 1, a3_closed_forms},
        {"A4", "variational oracle agreement", 120, a4_variational},
        {"A5", "gradient check", 10, a5_gradient},
        {"A6", "simulator marginals", 180, a6_marginals},
        {"A7", "Weyl coupling", 30, a7_weyl},
        {"A8", "Girsanov machinery", 180, a8_girsanov},
        {"A9", "LDP trend", 600, a9_ldp_trend},
        {"A10", "empirical tightness", 120, a10_tightness},
    };
}

/// Runs one criterion; exceptions count as failures and the runtime budget is enforced.
inline Result run(const Criterion& c, int workers = 0) {
    Result r{c.id, c.title, false, "", 0.0, c.budget};
    const auto start = std::chrono::steady_clock::now();
    try {
        auto [ok, detail] = c.run(workers);
        r.pass = ok;
        r.detail = std::move(detail);
    } catch (const std::exception& e) {
        r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (r.seconds > c.budget) {
        r.pass = false;
        r.detail += detail::fmt(" (over the %.0f s budget)", c.budget);
    }
    return r;
}

inline std::string format_line(const Result& r) {
    return detail::fmt("%-4s %s  %-30s %8.2fs  ", r.id.c_str(), r.pass ? "PASS" : "FAIL", r.title.c_str(),
                       r.seconds) +
           r.detail;
}

}  // namespace dyson_ldp::acceptance
