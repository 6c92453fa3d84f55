#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dyson_ldp/error.hpp"
#include "dyson_ldp/grid.hpp"
#include "dyson_ldp/measures.hpp"
#include "dyson_ldp/random.hpp"

namespace dyson_ldp {

enum class SimMode { particle, matrix };

inline std::string to_string(SimMode m) { return m == SimMode::particle ? "particle" : "matrix"; }

inline SimMode parse_mode(const std::string& s) {
    if (s == "particle") return SimMode::particle;
    if (s == "matrix") return SimMode::matrix;
    throw InvalidParameter("unknown simulation mode '" + s + "'");
}

struct SimConfig {
    std::size_t n = 1;
    double theta = 0.0;
    int beta = 2;  // 2: Hermitian, 1: real symmetric
    TimeGrid grid = TimeGrid::unit(100);
    std::uint64_t seed = 0;
    SimMode mode = SimMode::particle;
    double eps_spread = 1e-8;
    double min_gap = 1e-6;

    void validate() const {
        if (n < 1) throw InvalidParameter("N must be >= 1");
        if (!(theta >= 0.0) || !std::isfinite(theta)) throw InvalidParameter("theta must be >= 0");
        if (beta != 1 && beta != 2) throw InvalidParameter("beta must be 1 or 2");
        if (grid.front() != 0.0) throw InvalidParameter("simulation grid must start at 0");
        if (!(eps_spread >= 0.0)) throw InvalidParameter("eps_spread must be >= 0");
        if (!(min_gap > 0.0)) throw InvalidParameter("min_gap must be > 0");
    }

    /// Diffusion coefficient of every eigenvalue.
    double sigma() const {
        return (beta == 2 ? 1.0 : std::sqrt(2.0)) / std::sqrt(static_cast<double>(n));
    }
};

/// Ordered eigenvalue trajectories of one replica, stored row-major (time, index).
/// Row k is sorted descending: values(k, 0) is the top eigenvalue.
class EnsemblePath {
public:
    EnsemblePath() = default;
    EnsemblePath(TimeGrid grid, std::size_t n, std::uint64_t replica, std::uint64_t seed)
        : grid_(std::move(grid)), n_(n), replica_(replica), seed_(seed),
          values_(grid_.size() * n, 0.0) {}

    const TimeGrid& grid() const { return grid_; }
    std::size_t n() const { return n_; }
    std::uint64_t replica_id() const { return replica_; }
    std::uint64_t seed() const { return seed_; }

    double operator()(std::size_t k, std::size_t i) const { return values_[k * n_ + i]; }
    double& operator()(std::size_t k, std::size_t i) { return values_[k * n_ + i]; }

    std::span<const double> row(std::size_t k) const { return {values_.data() + k * n_, n_}; }
    std::span<double> row(std::size_t k) { return {values_.data() + k * n_, n_}; }

    EmpiricalMeasure spectrum(std::size_t k) const {
        return EmpiricalMeasure(std::vector<double>(row(k).begin(), row(k).end()));
    }

    /// Trajectory of the p-th largest eigenvalue (p = 0 is the top).
    ScalarPath component(std::size_t p) const {
        std::vector<double> v(grid_.size());
        for (std::size_t k = 0; k < grid_.size(); ++k) v[k] = (*this)(k, p);
        return ScalarPath(grid_, std::move(v));
    }

private:
    TimeGrid grid_;
    std::size_t n_ = 0;
    std::uint64_t replica_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<double> values_;
};

inline ScalarPath top_path(const EnsemblePath& e) { return e.component(0); }

/// Particle-mode output plus the Girsanov log-likelihood ratio of the applied tilt.
struct ParticleRun {
    EnsemblePath path;
    double log_lr = 0.0;
    std::size_t substeps = 0;
};

namespace detail {

inline void pair_drift(std::span<const double> lam, std::span<double> drift) {
    const std::size_t n = lam.size();
    std::fill(drift.begin(), drift.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double li = lam[i];
        double di = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double inv = 1.0 / (li - lam[j]);
            di += inv;
            drift[j] -= inv;
        }
        drift[i] += di;
    }
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& d : drift) d *= scale;
}

inline double min_gap(std::span<const double> lam) {
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < lam.size(); ++i) g = std::min(g, lam[i] - lam[i + 1]);
    return g;
}

/// Brownian-bridge split of an increment `w` over `dt` at time `a` into (w1, w - w1).
inline void bridge_split(std::span<const double> w, double dt, double a, Engine& rng,
                         std::vector<double>& first, std::vector<double>& second) {
    std::normal_distribution<double> gauss;
    const double frac = a / dt;
    const double sd = std::sqrt(std::max(a * (dt - a) / dt, 0.0));
    first.resize(w.size());
    second.resize(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        first[i] = frac * w[i] + sd * gauss(rng);
        second[i] = w[i] - first[i];
    }
}

/// Adds a Brownian matrix increment over a step of standard deviation sd to w.
template <typename Matrix>
void add_increment(Matrix& w, double sd, double dn, Engine& rng, std::normal_distribution<double>& gauss) {
    constexpr bool complex = std::is_same_v<typename Matrix::Scalar, std::complex<double>>;
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
        for (Eigen::Index r = 0; r < c; ++r) {
            if constexpr (complex) {
                const double s = sd / std::sqrt(2.0 * dn);
                const std::complex<double> z(s * gauss(rng), s * gauss(rng));
                w(r, c) += z;
                w(c, r) += std::conj(z);
            } else {
                const double z = sd / std::sqrt(dn) * gauss(rng);
                w(r, c) += z;
                w(c, r) += z;
            }
        }
        w(c, c) += (complex ? 1.0 : std::sqrt(2.0)) * sd / std::sqrt(dn) * gauss(rng);
    }
}

template <typename Matrix>
void eigenvalues_desc(const Matrix& h, std::span<double> out) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed to converge");
    const auto& ev = es.eigenvalues();
    const auto n = static_cast<std::size_t>(ev.size());
    for (std::size_t i = 0; i < n; ++i) out[i] = ev(static_cast<Eigen::Index>(n - 1 - i));
}

/// Spectrum of diag(lam) + W(dt): the eigenvalue process started from lam, sampled exactly.
inline void exact_step(std::vector<double>& lam, double dt, int beta, Engine& rng,
                       std::normal_distribution<double>& gauss) {
    const auto n = static_cast<Eigen::Index>(lam.size());
    const double dn = static_cast<double>(lam.size());
    auto run = [&](auto zero) {
        auto w = zero;
        for (Eigen::Index i = 0; i < n; ++i) w(i, i) = lam[static_cast<std::size_t>(i)];
        add_increment(w, std::sqrt(dt), dn, rng, gauss);
        eigenvalues_desc(w, std::span<double>(lam));
    };
    if (beta == 2)
        run(Eigen::MatrixXcd::Zero(n, n).eval());
    else
        run(Eigen::MatrixXd::Zero(n, n).eval());
}

}  // namespace detail

/// Euler-Maruyama integration of the eigenvalue SDE with pairwise repulsion
/// (1/N) sum_{j != i} 1/(lambda_i - lambda_j) and diffusion sigma = sqrt(2/beta)/sqrt(N).
///
/// When the first cell carries no tilt it is sampled exactly as the spectrum of
/// diag(lambda(0)) + W(t_1), which skips the stiff escape from the eps_spread cluster.
/// Every other cell draws one Gaussian increment per particle and is then sub-stepped:
/// sub-steps are capped so that the drift changes no neighbouring gap by more than a fifth
/// of that gap, and a proposal whose minimal gap falls below
/// min(min_gap, current_gap / 2) is halved (up to 20 times) and then accepted with the
/// atoms re-sorted. Sub-increments come from Brownian-bridge splits of the cell increment,
/// so the cell increments keep their exact law.
///
/// `tilt`, when non-empty, holds per-grid-node drifts added to the top particle, held
/// constant on each cell. The returned log-likelihood ratio is exact for the discretized chain.
inline ParticleRun integrate_particles(const SimConfig& cfg, std::uint64_t replica,
                                       std::span<const double> tilt = {}) {
    cfg.validate();
    if (!tilt.empty() && tilt.size() != cfg.grid.size())
        throw InvalidParameter("tilt must be sampled on the simulation grid");

    constexpr double kDriftFraction = 0.2;
    constexpr int kMaxHalvings = 20;

    const std::size_t n = cfg.n;
    const TimeGrid& grid = cfg.grid;
    const double sigma = cfg.sigma();
    Engine rng = make_engine(cfg.seed, replica);
    std::normal_distribution<double> gauss;

    ParticleRun run{EnsemblePath(grid, n, replica, cfg.seed), 0.0, 0};
    std::vector<double> lam(n), prop(n), drift(n);
    for (std::size_t i = 0; i < n; ++i)
        lam[i] = (i == 0 ? cfg.theta : 0.0) + cfg.eps_spread / static_cast<double>(i + 1);
    std::copy(lam.begin(), lam.end(), run.path.row(0).begin());

    struct Segment {
        double dt;
        std::vector<double> w;
        int depth;
    };
    std::vector<Segment> stack;
    std::vector<double> w1, w2;

    double t = grid[0];
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double cell = grid.dt(k);
        const double h = tilt.empty() ? 0.0 : tilt[k];
        if (k == 0 && h == 0.0 && n > 1) {
            detail::exact_step(lam, cell, cfg.beta, rng, gauss);
            for (double x : lam)
                if (!std::isfinite(x)) throw IntegrationFailure(t, detail::min_gap(lam));
            t = grid[1];
            std::copy(lam.begin(), lam.end(), run.path.row(1).begin());
            ++run.substeps;
            continue;
        }

        Segment whole{cell, std::vector<double>(n), 0};
        const double sd = std::sqrt(cell);
        for (auto& x : whole.w) x = sd * gauss(rng);
        if (h != 0.0) {
            const double u = h / sigma;
            run.log_lr += u * whole.w[0] + 0.5 * u * u * cell;
        }
        stack.clear();
        stack.push_back(std::move(whole));

        while (!stack.empty()) {
            detail::pair_drift(lam, drift);
            drift[0] += h;
            const double gap = detail::min_gap(lam);

            double cap = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const double rel = std::abs(drift[i + 1] - drift[i]);
                if (rel > 0.0) cap = std::min(cap, kDriftFraction * (lam[i] - lam[i + 1]) / rel);
            }

            Segment& seg = stack.back();
            if (seg.dt > cap * (1.0 + 1e-12)) {
                detail::bridge_split(seg.w, seg.dt, cap, rng, w1, w2);
                seg.dt -= cap;
                seg.w = w2;
                stack.push_back(Segment{cap, w1, 0});
                continue;
            }

            for (std::size_t i = 0; i < n; ++i) prop[i] = lam[i] + drift[i] * seg.dt + sigma * seg.w[i];
            bool ordered = true;
            double new_gap = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const double g = prop[i] - prop[i + 1];
                if (!(g > 0.0)) ordered = false;
                new_gap = std::min(new_gap, g);
            }
            const bool ok = ordered && new_gap >= std::min(cfg.min_gap, 0.5 * gap);
            if (!ok && seg.depth < kMaxHalvings) {
                const double half = 0.5 * seg.dt;
                const int depth = seg.depth + 1;
                detail::bridge_split(seg.w, seg.dt, half, rng, w1, w2);
                seg.dt = half;
                seg.w = w2;
                seg.depth = depth;
                stack.push_back(Segment{half, w1, depth});
                continue;
            }
            if (!ordered) std::sort(prop.begin(), prop.end(), std::greater<>());
            for (double x : prop)
                if (!std::isfinite(x)) throw IntegrationFailure(t, gap);
            lam.swap(prop);
            t += seg.dt;
            ++run.substeps;
            stack.pop_back();
        }
        t = grid[k + 1];
        std::copy(lam.begin(), lam.end(), run.path.row(k + 1).begin());
    }
    return run;
}

inline EnsemblePath simulate_particle(const SimConfig& cfg, std::uint64_t replica = 0) {
    return integrate_particles(cfg, replica).path;
}

namespace detail {

/// Shared noise driver for matrix mode: calls emit(k, W(t_k)) with the accumulated
/// Brownian matrix (without spike) at every grid time.
template <typename Matrix, typename Emit>
void drive_matrix(const SimConfig& cfg, std::uint64_t replica, Emit&& emit) {
    const auto n = static_cast<Eigen::Index>(cfg.n);
    const double dn = static_cast<double>(cfg.n);
    Engine rng = make_engine(cfg.seed, replica);
    std::normal_distribution<double> gauss;
    Matrix w = Matrix::Zero(n, n);
    emit(std::size_t{0}, w);
    for (std::size_t k = 0; k + 1 < cfg.grid.size(); ++k) {
        add_increment(w, std::sqrt(cfg.grid.dt(k)), dn, rng, gauss);
        emit(k + 1, w);
    }
}

template <typename Matrix>
std::pair<EnsemblePath, EnsemblePath> matrix_paths(const SimConfig& cfg, std::uint64_t replica,
                                                   double theta_a, double theta_b, bool both) {
    EnsemblePath a(cfg.grid, cfg.n, replica, cfg.seed);
    EnsemblePath b = both ? EnsemblePath(cfg.grid, cfg.n, replica, cfg.seed) : EnsemblePath();
    Matrix h;
    drive_matrix<Matrix>(cfg, replica, [&](std::size_t k, const Matrix& w) {
        h = w;
        h(0, 0) += theta_a;
        eigenvalues_desc(h, a.row(k));
        if (both) {
            h(0, 0) += theta_b - theta_a;
            eigenvalues_desc(h, b.row(k));
        }
    });
    return {std::move(a), std::move(b)};
}

}  // namespace detail

/// Exact-in-law sampling: Gaussian matrix increments with the GUE (beta=2) or GOE
/// (beta=1) variance profile, plus diag(theta, 0, ..., 0), diagonalized at every grid time.
inline EnsemblePath simulate_matrix(const SimConfig& cfg, std::uint64_t replica = 0) {
    cfg.validate();
    if (cfg.beta == 2)
        return detail::matrix_paths<Eigen::MatrixXcd>(cfg, replica, cfg.theta, 0.0, false).first;
    return detail::matrix_paths<Eigen::MatrixXd>(cfg, replica, cfg.theta, 0.0, false).first;
}

inline EnsemblePath simulate(const SimConfig& cfg, std::uint64_t replica = 0) {
    return cfg.mode == SimMode::particle ? simulate_particle(cfg, replica)
                                         : simulate_matrix(cfg, replica);
}

/// Spike-0 and spike-theta ensembles driven by the same matrix noise (matrix mode only).
inline std::pair<EnsemblePath, EnsemblePath> coupled_spike_pair(const SimConfig& cfg, double theta,
                                                                std::uint64_t replica = 0) {
    cfg.validate();
    if (cfg.mode != SimMode::matrix) throw InvalidParameter("coupled_spike_pair needs matrix mode");
    if (!(theta >= 0.0)) throw InvalidParameter("theta must be >= 0");
    if (cfg.beta == 2) return detail::matrix_paths<Eigen::MatrixXcd>(cfg, replica, 0.0, theta, true);
    return detail::matrix_paths<Eigen::MatrixXd>(cfg, replica, 0.0, theta, true);
}

}  // namespace dyson_ldp
