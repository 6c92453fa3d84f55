#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "dyson_ldp/error.hpp"
#include "dyson_ldp/grid.hpp"
#include "dyson_ldp/rate.hpp"

namespace dyson_ldp {

/// Discretized path rate in the variable x = x_phi, where phi = x + t/x and
/// k_phi = x' (1 - t/x^2). The obstacle phi >= 2 sqrt(t) becomes the bound x >= sqrt(t),
/// and the integrand vanishes identically on the wall.
///
///   E(x) = sum_i (1/2) ((x_{i+1} - x_i)/dt_i)^2 * (w_i^2 + w_{i+1}^2)/2 * dt_i,
///   w_i  = 1 - t_i / x_i^2  (w = 0 at t = x = 0).
class DiscreteRate {
public:
    explicit DiscreteRate(TimeGrid grid) : grid_(std::move(grid)) {}

    const TimeGrid& grid() const { return grid_; }
    std::size_t size() const { return grid_.size(); }

    double lower_bound(std::size_t i) const { return std::sqrt(grid_[i]); }

    double value(const std::vector<double>& x) const {
        double e = 0.0;
        for (std::size_t i = 0; i + 1 < size(); ++i) {
            const double h = grid_.dt(i), d = x[i + 1] - x[i];
            const double wa = weight(i, x[i]), wb = weight(i + 1, x[i + 1]);
            e += 0.25 * d * d / h * (wa * wa + wb * wb);
        }
        return e;
    }

    /// Full gradient (endpoint entries included; callers pin them).
    std::vector<double> gradient(const std::vector<double>& x) const {
        std::vector<double> g(size(), 0.0);
        for (std::size_t i = 0; i + 1 < size(); ++i) {
            const double h = grid_.dt(i), d = x[i + 1] - x[i];
            const double wa = weight(i, x[i]), wb = weight(i + 1, x[i + 1]);
            const double q = 0.5 * (wa * wa + wb * wb);
            g[i] += -d / h * q + 0.5 * d * d / h * wa * weight_dx(i, x[i]);
            g[i + 1] += d / h * q + 0.5 * d * d / h * wb * weight_dx(i + 1, x[i + 1]);
        }
        return g;
    }

    /// Gauss-Newton approximation J^T J of the Hessian as (diagonal, super-diagonal).
    std::pair<std::vector<double>, std::vector<double>> gauss_newton(const std::vector<double>& x) const {
        std::vector<double> diag(size(), 0.0), off(size() - 1, 0.0);
        for (std::size_t i = 0; i + 1 < size(); ++i) {
            const double s = 1.0 / std::sqrt(2.0 * grid_.dt(i)), d = x[i + 1] - x[i];
            const double wa = weight(i, x[i]), wb = weight(i + 1, x[i + 1]);
            const double pa = (-wa + d * weight_dx(i, x[i])) * s, qa = wa * s;
            const double pb = -wb * s, qb = d * weight_dx(i + 1, x[i + 1]) * s;
            diag[i] += pa * pa + pb * pb;
            diag[i + 1] += qa * qa + qb * qb;
            off[i] += pa * qa + pb * qb;
        }
        return {diag, off};
    }

private:
    double weight(std::size_t i, double x) const {
        const double t = grid_[i];
        if (t == 0.0) return x == 0.0 ? 0.0 : 1.0;
        return 1.0 - t / (x * x);
    }
    double weight_dx(std::size_t i, double x) const {
        const double t = grid_[i];
        if (t == 0.0) return 0.0;
        return 2.0 * t / (x * x * x);
    }

    TimeGrid grid_;
};

struct VarOptions {
    std::size_t max_iterations = 2000;
    double tolerance = 1e-10;  // on the projected-gradient sup norm
    double armijo = 1e-4;
    bool record_trace = false;
    bool multilevel = true;  // warm start from a solve on every other node
};

struct VarProblem {
    double theta = 0.0;
    double x = 2.0;
    double eta = 0.0;
    TimeGrid grid = TimeGrid::unit(800);
    VarOptions options{};
    std::optional<ScalarPath> initial{};  // phi-space starting path on `grid`

    void validate() const {
        if (!(eta >= 0.0 && eta < 1.0)) throw InvalidParameter("eta must lie in [0, 1)");
        if (std::abs(grid.front() - eta) > 1e-12 || std::abs(grid.back() - 1.0) > 1e-12)
            throw InvalidParameter("variational grid must span [eta, 1]");
        if (theta < 2.0 * std::sqrt(eta) - 1e-12) throw InvalidParameter("theta must be >= 2 sqrt(eta)");
        if (!(x >= 2.0)) throw InvalidParameter("x must be >= 2");
    }
};

struct TraceRow {
    std::size_t iter;
    double objective;
    double step;
};

struct VarResult {
    ScalarPath path;
    double objective = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
    std::vector<TraceRow> trace;
};

namespace detail {

inline double x_of_phi(double t, double phi) {
    return 0.5 * (phi + std::sqrt(std::max(phi * phi - 4.0 * t, 0.0)));
}

/// Thomas algorithm for a symmetric tridiagonal system; `off[i]` couples i and i+1.
inline std::vector<double> solve_tridiagonal(std::vector<double> diag, std::vector<double> off,
                                             std::vector<double> rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = off[i - 1] / diag[i - 1];
        diag[i] -= m * off[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    std::vector<double> x(n);
    x[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - off[i] * x[i + 1]) / diag[i];
    return x;
}

}  // namespace detail

/// Straight line from (eta, theta) to (1, x), lifted onto the obstacle.
inline ScalarPath default_initial_path(const VarProblem& p) {
    const double slope = (p.x - p.theta) / (1.0 - p.eta);
    return ScalarPath::sample(p.grid, [&](double t) {
        return std::max(p.theta + slope * (t - p.eta), 2.0 * std::sqrt(t));
    });
}

/// Minimizes the discretized rate over paths pinned at (eta, theta) and (1, x) subject to
/// phi >= 2 sqrt(t).
///
/// Projected Newton iteration (Bertsekas): nodes at the bound with outward gradient form the
/// active set and take a diagonally scaled gradient step; free nodes take a Gauss-Newton step
/// (tridiagonal solve). Every trial point is projected onto the bound, and the step length is
/// halved from 1 until the Armijo condition E(x_a) <= E(x) + c g.(x_a - x) holds, so accepted
/// objectives never increase.
///
/// The free boundary of the contact set moves by about one node per iteration, so with
/// `multilevel` the problem is first solved on the even-indexed subgrid and interpolated.
inline VarResult minimize_path(const VarProblem& p) {
    p.validate();
    const DiscreteRate rate(p.grid);
    const std::size_t n = p.grid.size();
    const VarOptions& opt = p.options;

    std::optional<ScalarPath> warm = p.initial;
    if (opt.multilevel && n > 65) {
        std::vector<double> coarse;
        for (std::size_t i = 0; i < n; i += 2) coarse.push_back(p.grid[i]);
        if (coarse.back() != p.grid.back()) coarse.push_back(p.grid.back());
        VarProblem q = p;
        q.grid = TimeGrid(std::move(coarse));
        q.options.record_trace = false;
        if (p.initial) {
            std::vector<double> v(q.grid.size());
            for (std::size_t i = 0; i < v.size(); ++i) v[i] = p.initial->at(q.grid[i]);
            q.initial = ScalarPath(q.grid, std::move(v));
        }
        const VarResult c = minimize_path(q);
        warm = ScalarPath::sample(p.grid, [&](double t) { return std::max(c.path.at(t), 2.0 * std::sqrt(t)); });
    }

    const ScalarPath init = warm ? *warm : default_initial_path(p);
    if (!(init.grid == p.grid)) throw InvalidParameter("initial path must be on the problem grid");
    std::vector<double> x(n), lb(n);
    for (std::size_t i = 0; i < n; ++i) {
        lb[i] = rate.lower_bound(i);
        x[i] = std::max(detail::x_of_phi(p.grid[i], init[i]), lb[i]);
    }
    x.front() = detail::x_of_phi(p.grid.front(), p.theta);
    x.back() = detail::x_of_phi(1.0, p.x);

    auto project = [&](std::vector<double>& v) {
        for (std::size_t i = 1; i + 1 < n; ++i) v[i] = std::max(v[i], lb[i]);
    };
    auto projected_gradient_norm = [&](const std::vector<double>& v, const std::vector<double>& g) {
        double m = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) m = std::max(m, std::abs(v[i] - std::max(v[i] - g[i], lb[i])));
        return m;
    };

    VarResult result;
    double e = rate.value(x);
    if (opt.record_trace) result.trace.push_back({0, e, 0.0});

    std::vector<double> trial(n), dir(n, 0.0);
    std::size_t stalls = 0;
    for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
        result.iterations = it;
        const auto g = rate.gradient(x);
        const double pg = projected_gradient_norm(x, g);
        if (pg <= opt.tolerance) {
            result.converged = true;
            break;
        }
        const double eps = std::min(1e-9, pg);
        auto [diag, off] = rate.gauss_newton(x);
        double dmax = 0.0;
        for (double d : diag) dmax = std::max(dmax, d);
        const double damping = 1e-10 * std::max(dmax, 1e-300);

        // Interior unknowns 1..n-2, active ones decoupled from their neighbours.
        const std::size_t m = n - 2;
        std::vector<char> active(n, 0);
        for (std::size_t i = 1; i + 1 < n; ++i) active[i] = (x[i] - lb[i] <= eps && g[i] > 0.0);
        std::vector<double> hd(m), ho(m > 0 ? m - 1 : 0), rhs(m);
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t i = j + 1;
            hd[j] = diag[i] + damping;
            rhs[j] = -g[i];
            if (j + 1 < m) ho[j] = (active[i] || active[i + 1]) ? 0.0 : off[i];
        }
        const auto sol = m > 0 ? detail::solve_tridiagonal(hd, ho, rhs) : std::vector<double>{};
        for (std::size_t j = 0; j < m; ++j) dir[j + 1] = sol[j];

        bool accepted = false;
        double step = 1.0, e_new = e;
        for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + step * dir[i];
            trial.front() = x.front();
            trial.back() = x.back();
            project(trial);
            double decrease = 0.0;
            for (std::size_t i = 1; i + 1 < n; ++i) decrease += g[i] * (trial[i] - x[i]);
            e_new = rate.value(trial);
            if (decrease < 0.0 && e_new <= e + opt.armijo * decrease) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // Fall back to a plain projected-gradient step scaled by the diagonal.
            step = 1.0;
            for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
                for (std::size_t i = 1; i + 1 < n; ++i) trial[i] = x[i] - step * g[i] / (diag[i] + damping);
                trial.front() = x.front();
                trial.back() = x.back();
                project(trial);
                double decrease = 0.0;
                for (std::size_t i = 1; i + 1 < n; ++i) decrease += g[i] * (trial[i] - x[i]);
                e_new = rate.value(trial);
                if (decrease < 0.0 && e_new <= e + opt.armijo * decrease) {
                    accepted = true;
                    break;
                }
            }
        }
        if (!accepted) {
            result.converged = pg <= 1e3 * opt.tolerance;
            break;
        }
        const double rel = (e - e_new) / std::max(e, 1e-300);
        x.swap(trial);
        e = e_new;
        if (opt.record_trace) result.trace.push_back({it, e, step});
        stalls = rel < 1e-12 ? stalls + 1 : 0;
        if (stalls >= 5) {
            result.converged = true;
            break;
        }
    }

    std::vector<double> phi(n);
    for (std::size_t i = 0; i < n; ++i) phi[i] = p.grid[i] == 0.0 ? p.theta : x[i] + p.grid[i] / x[i];
    phi.front() = p.theta;
    phi.back() = p.x;
    result.path = ScalarPath(p.grid, std::move(phi));
    result.objective = e;
    return result;
}

/// Best of `restarts` runs: the default start, then starts bent away from the straight line.
inline VarResult minimize_path_restarts(const VarProblem& p, std::size_t restarts) {
    p.validate();
    VarResult best;
    best.objective = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
        VarProblem q = p;
        if (r > 0) {
            const double amp = (r % 2 ? 0.4 : -0.4) * static_cast<double>((r + 1) / 2);
            const ScalarPath base = default_initial_path(p);
            q.initial = ScalarPath::sample(p.grid, [&](double t) {
                const double s = (t - p.eta) / (1.0 - p.eta);
                return std::max(base.at(t) + amp * std::sin(std::numbers::pi * s), 2.0 * std::sqrt(t));
            });
        }
        VarResult res = minimize_path(q);
        if (res.objective < best.objective) best = std::move(res);
    }
    return best;
}

/// Euler-Lagrange residual d/dt (df/dy) - df/dx of f(t, x, y) = (1/2)(y - b(x, t))^2 on the
/// grid; nodes with phi^2 - 4t below kActiveThreshold are reported as active (obstacle
/// binding) and excluded.
struct ElResidual {
    std::vector<double> residual;  // NaN at active and end nodes
    std::vector<bool> active;
    bool empty = true;
    double max_abs = 0.0;
};

inline constexpr double kActiveThreshold = 1e-8;

namespace detail {

struct LagrangianTerms {
    std::vector<double> fy;    // df/dy = k_phi
    std::vector<double> fx;    // df/dx = k_phi * b / sqrt(phi^2 - 4t)
    std::vector<bool> active;
};

inline LagrangianTerms lagrangian_terms(const ScalarPath& phi) {
    const auto dphi = derivative_of(phi);
    const std::size_t n = phi.size();
    LagrangianTerms out{std::vector<double>(n), std::vector<double>(n, 0.0), std::vector<bool>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const double t = phi.grid[i];
        const double d = wall_discriminant(t, phi[i]);
        out.active[i] = d < kActiveThreshold;
        const double b = (t == 0.0 && phi[i] == 0.0) ? dphi[i] : 2.0 / (phi[i] + std::sqrt(d));
        out.fy[i] = dphi[i] - b;
        if (!out.active[i]) out.fx[i] = out.fy[i] * b / std::sqrt(d);
    }
    return out;
}

}  // namespace detail

inline ElResidual el_residual(const ScalarPath& phi) {
    const auto terms = detail::lagrangian_terms(phi);
    const std::size_t n = phi.size();
    const auto dfy = finite_difference(phi.grid, terms.fy);
    ElResidual r{std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()), terms.active, true, 0.0};
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (terms.active[i] || terms.active[i - 1] || terms.active[i + 1]) continue;
        r.residual[i] = dfy[i] - terms.fx[i];
        r.max_abs = std::max(r.max_abs, std::abs(r.residual[i]));
        r.empty = false;
    }
    return r;
}

/// DuBois-Reymond check on the longest off-wall run: r(t) = df/dy(t) - int df/dx should be
/// constant on an extremal arc. Returns (mean of r, max |r - mean|).
inline std::pair<double, double> dbr_constant(const ScalarPath& phi) {
    const auto terms = detail::lagrangian_terms(phi);
    const std::size_t n = phi.size();
    std::size_t best_start = 0, best_len = 0;
    for (std::size_t i = 0; i < n;) {
        if (terms.active[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && !terms.active[j]) ++j;
        if (j - i > best_len) {
            best_len = j - i;
            best_start = i;
        }
        i = j;
    }
    if (best_len < 3) throw DomainError("dbr_constant: no off-wall segment");

    std::vector<double> r(best_len);
    double integral = 0.0;
    for (std::size_t k = 0; k < best_len; ++k) {
        const std::size_t i = best_start + k;
        if (k > 0) integral += 0.5 * (terms.fx[i - 1] + terms.fx[i]) * phi.grid.dt(i - 1);
        r[k] = terms.fy[i] - integral;
    }
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    double dev = 0.0;
    for (double v : r) dev = std::max(dev, std::abs(v - mean));
    return {mean, dev};
}

}  // namespace dyson_ldp
