#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dyson_ldp/dbm.hpp"
#include "dyson_ldp/error.hpp"
#include "dyson_ldp/fixedtime.hpp"
#include "dyson_ldp/grid.hpp"
#include "dyson_ldp/parallel.hpp"
#include "dyson_ldp/rate.hpp"

namespace dyson_ldp {

/// Drift added to the top eigenvalue. `h.derivative`, when present, is used by the
/// F_N identity check.
struct TiltSpec {
    ScalarPath h;

    static TiltSpec none(const TimeGrid& g) {
        return TiltSpec{ScalarPath(g, std::vector<double>(g.size(), 0.0), std::vector<double>(g.size(), 0.0))};
    }
};

struct EstimateReport {
    double p_hat = 0.0;
    double stderr_ = 0.0;
    std::size_t n_replicas = 0;
    std::size_t N = 0;
    double minus_log_rate = std::numeric_limits<double>::infinity();
    double target_rate = 0.0;
    double hit_fraction = 0.0;
    std::size_t hits = 0;
    std::vector<std::string> flags;

    bool has_flag(const std::string& f) const {
        return std::find(flags.begin(), flags.end(), f) != flags.end();
    }
};

/// Particle simulation under the tilted law: the top eigenvalue gains drift h(t).
/// log_lr = log M_1^h, so exp(-log_lr) re-weights tilted samples to the untilted law.
inline ParticleRun tilted_simulate(const SimConfig& cfg, const TiltSpec& tilt, std::uint64_t replica = 0) {
    if (cfg.mode != SimMode::particle) throw InvalidParameter("tilted_simulate needs particle mode");
    if (!(tilt.h.grid == cfg.grid)) throw InvalidParameter("tilt must be sampled on the simulation grid");
    for (double v : tilt.h.values)
        if (!std::isfinite(v)) throw InvalidParameter("tilt must be finite");
    return integrate_particles(cfg, replica, tilt.h.values);
}

/// |log_lr - F_N(lambda_1, nu_N; h) / sigma^2| with b_N = (N-1)/N b and nu_N the spectrum
/// without its top atom. sigma^2 = 1/N for beta = 2, so the scale is N.
inline double fn_identity_check(const ParticleRun& run, const TiltSpec& tilt, int beta = 2) {
    const EnsemblePath& e = run.path;
    if (!(tilt.h.grid == e.grid())) throw InvalidParameter("tilt must be sampled on the path grid");
    const double n = static_cast<double>(e.n());
    const double inv_sigma2 = beta == 2 ? n : 0.5 * n;
    const ScalarPath top = top_path(e);
    double fn = 0.0;
    if (e.n() == 1) {
        fn = F_functional(top, EmpiricalMeasurePath(e.grid().size(), EmpiricalMeasure({-1e300})), tilt.h, 0.0);
    } else {
        EmpiricalMeasurePath nu;
        nu.reserve(e.grid().size());
        for (std::size_t k = 0; k < e.grid().size(); ++k) nu.push_back(leave_top_out(e.spectrum(k), 1));
        fn = F_functional(top, nu, tilt.h, (n - 1.0) / n);
    }
    return std::abs(run.log_lr - inv_sigma2 * fn);
}

namespace detail {

struct WeightSums {
    double w = 0.0, w2 = 0.0;
    std::size_t hits = 0;
    WeightSums operator+(const WeightSums& o) const { return {w + o.w, w2 + o.w2, hits + o.hits}; }
};

inline EstimateReport finish_report(const std::vector<WeightSums>& per_replica, std::size_t n_particles,
                                    double target) {
    const WeightSums s = tree_reduce(per_replica, WeightSums{}, std::plus<>());
    const double n = static_cast<double>(per_replica.size());
    EstimateReport r;
    r.n_replicas = per_replica.size();
    r.N = n_particles;
    r.hits = s.hits;
    r.p_hat = s.w / n;
    const double var = n > 1 ? std::max(s.w2 / n - r.p_hat * r.p_hat, 0.0) * n / (n - 1.0) : 0.0;
    r.stderr_ = std::sqrt(var / n);
    r.hit_fraction = static_cast<double>(s.hits) / n;
    r.minus_log_rate = r.p_hat > 0.0 ? -std::log(r.p_hat) / static_cast<double>(n_particles)
                                     : std::numeric_limits<double>::infinity();
    r.target_rate = target;
    if (s.hits == 0) {
        r.flags.push_back("zero_hits");
        r.stderr_ = 0.0;
    }
    if (s.hits < 30) r.flags.push_back("low_hits");
    if (r.p_hat > 1.0) r.flags.push_back("p_hat_exceeds_one");
    return r;
}

/// k_phi of the target path, zeroed up to t0(phi) when theta = 0.
inline TiltSpec tube_tilt(const ScalarPath& phi, double theta) {
    ScalarPath k = k_phi(phi, theta);
    if (theta == 0.0) {
        const double t0 = t0_of(phi);
        for (std::size_t i = 0; i < k.size(); ++i)
            if (phi.grid[i] <= t0) k.values[i] = 0.0;
    }
    return TiltSpec{std::move(k)};
}

}  // namespace detail

struct SamplerOptions {
    int beta = 2;
    double eps_spread = 1e-8;
    double min_gap = 1e-6;
    int workers = 0;
};

/// Importance-sampling estimate of P(sup_grid |lambda_1 - phi| < delta) under the tilt k_phi
/// (or plain Monte Carlo when `tilt` is false). The simulation grid is phi's grid.
inline EstimateReport estimate_tube_prob(double theta, std::size_t n, const ScalarPath& phi, double delta,
                                         std::size_t replicas, std::uint64_t seed, bool tilt = true,
                                         const SamplerOptions& opt = {}) {
    if (!(delta > 0.0)) throw InvalidParameter("delta must be > 0");
    if (replicas == 0) throw InvalidParameter("need at least one replica");
    const RateParams params{theta, opt.beta};
    const double target = rate_I(phi, params);
    if (!std::isfinite(target)) throw InvalidParameter("tube centre is not admissible (infinite rate)");

    SimConfig cfg;
    cfg.n = n;
    cfg.theta = theta;
    cfg.beta = opt.beta;
    cfg.grid = phi.grid;
    cfg.seed = seed;
    cfg.eps_spread = opt.eps_spread;
    cfg.min_gap = opt.min_gap;
    cfg.validate();
    const TiltSpec h = tilt ? detail::tube_tilt(phi, theta) : TiltSpec::none(phi.grid);

    const auto per = parallel_map(replicas, resolve_workers(opt.workers), [&](std::size_t r) {
        const ParticleRun run = tilted_simulate(cfg, h, r);
        double dev = 0.0;
        for (std::size_t k = 0; k < phi.size(); ++k) dev = std::max(dev, std::abs(run.path(k, 0) - phi[k]));
        if (!(dev < delta)) return detail::WeightSums{};
        const double w = std::exp(-run.log_lr);
        return detail::WeightSums{w, w * w, 1};
    });
    return detail::finish_report(per, n, target);
}

enum class TailTilt { optimal, none };

struct TailOptions {
    TailTilt tilt = TailTilt::optimal;
    SimMode mode = SimMode::particle;
    std::size_t steps = 500;
};

/// Estimate of P(lambda_1(1) >= x). With the optimal tilt the top eigenvalue is pushed along
/// the minimizing path of the fixed-time problem; matrix mode gives the plain estimate.
inline EstimateReport estimate_tail_prob(double theta, std::size_t n, double x, std::size_t replicas,
                                         std::uint64_t seed, const TailOptions& tail = {},
                                         const SamplerOptions& opt = {}) {
    if (replicas == 0) throw InvalidParameter("need at least one replica");
    const double factor = opt.beta == 2 ? 1.0 : 0.5;
    const double target = factor * K_theta(theta, x);
    const bool rare = x > lln_value(theta, 1.0);

    SimConfig cfg;
    cfg.n = n;
    cfg.theta = theta;
    cfg.beta = opt.beta;
    cfg.seed = seed;
    cfg.mode = tail.mode;
    cfg.eps_spread = opt.eps_spread;
    cfg.min_gap = opt.min_gap;
    cfg.grid = tail.mode == SimMode::matrix ? TimeGrid({0.0, 1.0}) : TimeGrid::unit(tail.steps);
    cfg.validate();

    std::vector<detail::WeightSums> per;
    if (tail.mode == SimMode::matrix) {
        if (tail.tilt != TailTilt::none) throw InvalidParameter("matrix mode only supports the untilted estimate");
        per = parallel_map(replicas, resolve_workers(opt.workers), [&](std::size_t r) {
            const EnsemblePath e = simulate_matrix(cfg, r);
            return e(1, 0) >= x ? detail::WeightSums{1.0, 1.0, 1} : detail::WeightSums{};
        });
    } else {
        TiltSpec h = TiltSpec::none(cfg.grid);
        if (tail.tilt == TailTilt::optimal && rare)
            h = detail::tube_tilt(optimal_path(FixedTimeQuery{theta, x, 0.0}, cfg.grid), theta);
        const std::size_t last = cfg.grid.size() - 1;
        per = parallel_map(replicas, resolve_workers(opt.workers), [&](std::size_t r) {
            const ParticleRun run = tilted_simulate(cfg, h, r);
            if (!(run.path(last, 0) >= x)) return detail::WeightSums{};
            const double w = std::exp(-run.log_lr);
            return detail::WeightSums{w, w * w, 1};
        });
    }
    EstimateReport rep = detail::finish_report(per, n, target);
    if (!rare) rep.flags.push_back("non_rare");
    return rep;
}

struct TightnessReport {
    double eta = 0.0;
    double delta = 0.0;
    std::size_t p = 0;  // 1-based eigenvalue index
    std::size_t windows = 0;
    std::size_t exceedances = 0;
    double frequency = 0.0;
    double bound = 0.0;
    bool pass = false;
};

/// exp(-N eta^2 / (10 delta)).
inline double tightness_bound(std::size_t n, double eta, double delta) {
    return std::exp(-static_cast<double>(n) * eta * eta / (10.0 * delta));
}

/// (window count, exceedance count) of sup_{s<=t<=s+delta} |lambda_p(t) - lambda_p(s)| >= eta
/// over all window starts s on the grid with s + delta inside the grid.
inline std::pair<std::size_t, std::size_t> tightness_counts(const EnsemblePath& e, double eta, double delta,
                                                            std::size_t p) {
    if (p < 1 || p > e.n()) throw InvalidParameter("eigenvalue index p must lie in [1, N]");
    const TimeGrid& g = e.grid();
    if (!(delta > 0.0) || delta > g.back() - g.front() + 1e-12)
        throw InvalidParameter("delta must be positive and no longer than the grid span");
    std::size_t windows = 0, exceed = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double end = g[i] + delta;
        if (end > g.back() + 1e-12) break;
        ++windows;
        const double start = e(i, p - 1);
        double sup = 0.0;
        for (std::size_t j = i + 1; j < g.size() && g[j] <= end + 1e-12; ++j)
            sup = std::max(sup, std::abs(e(j, p - 1) - start));
        if (sup >= eta) ++exceed;
    }
    return {windows, exceed};
}

inline TightnessReport make_tightness_report(std::size_t n, double eta, double delta, std::size_t p,
                                             std::size_t windows, std::size_t exceed) {
    TightnessReport r;
    r.eta = eta;
    r.delta = delta;
    r.p = p;
    r.windows = windows;
    r.exceedances = exceed;
    r.frequency = windows ? static_cast<double>(exceed) / static_cast<double>(windows) : 0.0;
    r.bound = tightness_bound(n, eta, delta);
    r.pass = r.frequency <= r.bound;
    return r;
}

inline TightnessReport tightness_check(std::span<const EnsemblePath> ensembles, double eta, double delta,
                                       std::size_t p) {
    if (ensembles.empty()) throw InvalidParameter("tightness_check needs at least one ensemble");
    std::size_t windows = 0, exceed = 0;
    for (const auto& e : ensembles) {
        const auto [w, x] = tightness_counts(e, eta, delta, p);
        windows += w;
        exceed += x;
    }
    return make_tightness_report(ensembles.front().n(), eta, delta, p, windows, exceed);
}

/// Simulates `replicas` ensembles and checks every requested index p without keeping paths.
inline std::vector<TightnessReport> tightness_experiment(const SimConfig& cfg, std::size_t replicas, double eta,
                                                         double delta, const std::vector<std::size_t>& ps,
                                                         int workers = 0) {
    cfg.validate();
    using Counts = std::vector<std::pair<std::size_t, std::size_t>>;
    const auto per = parallel_map(replicas, resolve_workers(workers), [&](std::size_t r) {
        const EnsemblePath e = simulate(cfg, r);
        Counts c;
        for (std::size_t p : ps) c.push_back(tightness_counts(e, eta, delta, p));
        return c;
    });
    std::vector<TightnessReport> out;
    for (std::size_t q = 0; q < ps.size(); ++q) {
        std::size_t w = 0, x = 0;
        for (const auto& c : per) {
            w += c[q].first;
            x += c[q].second;
        }
        out.push_back(make_tightness_report(cfg.n, eta, delta, ps[q], w, x));
    }
    return out;
}

}  // namespace dyson_ldp
