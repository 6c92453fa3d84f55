#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dyson_ldp/error.hpp"
#include "dyson_ldp/grid.hpp"
#include "dyson_ldp/measures.hpp"

namespace dyson_ldp {

/// phi^2 - 4t values in [-kWallTolerance, 0) are treated as lying on the wall.
inline constexpr double kWallTolerance = 1e-10;

struct RateParams {
    double theta = 0.0;
    int beta = 2;

    void validate() const {
        if (!(theta >= 0.0)) throw InvalidParameter("theta must be >= 0");
        if (beta != 1 && beta != 2) throw InvalidParameter("beta must be 1 or 2");
    }
    /// Factor applied to the Hermitian rate (1/2 for the symmetric ensemble).
    double beta_factor() const { return beta == 2 ? 1.0 : 0.5; }
};

namespace detail {

/// Clamped phi^2 - 4t, factored so that it is exactly 0 on phi = 2 sqrt(t);
/// throws WallViolation below the tolerance.
inline double wall_discriminant(double t, double phi) {
    const double wall = 2.0 * std::sqrt(t);
    const double d = (phi - wall) * (phi + wall);
    if (d < -kWallTolerance || phi < 0.0) throw WallViolation(t, phi);
    return std::max(d, 0.0);
}

/// b(phi, sigma_t) = 2 / (phi + sqrt(phi^2 - 4t)); right limit 1/phi at t = 0.
inline double wall_drift(double t, double phi) {
    const double d = wall_discriminant(t, phi);
    return 2.0 / (phi + std::sqrt(d));
}

}  // namespace detail

/// Almost-sure limit of the top eigenvalue path.
inline double lln_value(double theta, double t) {
    if (theta == 0.0 || t >= theta * theta) return 2.0 * std::sqrt(t);
    return theta + t / theta;
}

inline ScalarPath lln_path(double theta, const TimeGrid& grid) {
    if (!(theta >= 0.0)) throw InvalidParameter("lln_path: theta must be >= 0");
    return ScalarPath::sample(
        grid, [theta](double t) { return lln_value(theta, t); },
        [theta](double t) {
            if (theta > 0.0 && t < theta * theta) return 1.0 / theta;
            return t > 0.0 ? 1.0 / std::sqrt(t) : std::numeric_limits<double>::infinity();
        });
}

/// k_phi(s) = phi'(s) - b(phi(s), sigma_s). At s = 0 the right limit 1/phi(0) is used for
/// the drift; when phi(0) = 0 the node is taken to be on the wall with k = 0.
///
/// Without an analytic derivative the difference scheme works on x = x_phi, using
/// k_phi = x'(1 - s/x^2): the factor vanishes on the wall, so wall segments contribute
/// exactly 0 however steep sqrt(s) is near s = 0.
inline ScalarPath k_phi(const ScalarPath& phi, double theta) {
    if (!(theta >= 0.0)) throw InvalidParameter("k_phi: theta must be >= 0");
    const TimeGrid& g = phi.grid;
    std::vector<double> k(g.size());
    if (!phi.derivative) {
        std::vector<double> x(g.size());
        for (std::size_t i = 0; i < g.size(); ++i)
            x[i] = 0.5 * (phi[i] + std::sqrt(detail::wall_discriminant(g[i], phi[i])));
        const auto dx = finite_difference(g, x);
        for (std::size_t i = 0; i < g.size(); ++i)
            k[i] = x[i] == 0.0 ? 0.0 : dx[i] * (1.0 - g[i] / (x[i] * x[i]));
        return ScalarPath(g, std::move(k));
    }
    const auto& dphi = *phi.derivative;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double t = g[i], v = phi[i];
        if (t == 0.0 && v == 0.0) {
            k[i] = 0.0;
            continue;
        }
        k[i] = dphi[i] - detail::wall_drift(t, v);
    }
    return ScalarPath(g, std::move(k));
}

/// x_phi(s) = (phi + sqrt(phi^2 - 4s)) / 2, so that phi = x_phi + s / x_phi.
inline ScalarPath x_transform(const ScalarPath& phi) {
    std::vector<double> x(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const double d = detail::wall_discriminant(phi.grid[i], phi[i]);
        x[i] = 0.5 * (phi[i] + std::sqrt(d));
    }
    return ScalarPath(phi.grid, std::move(x));
}

/// Inverse of x_transform: phi = x + s / x (phi(0) = x(0) when x(0) > 0, else 0).
inline ScalarPath from_x_transform(const ScalarPath& x) {
    std::vector<double> phi(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = x.grid[i];
        phi[i] = s == 0.0 ? x[i] : x[i] + s / x[i];
    }
    return ScalarPath(x.grid, std::move(phi));
}

/// Path-space rate functional: (1/2) int k_phi^2 by the trapezoid rule on the path's grid,
/// halved for beta = 1. Returns +inf when phi dips below the wall.
inline double rate_I(const ScalarPath& phi, const RateParams& p) {
    p.validate();
    if (std::abs(phi.front() - p.theta) > 1e-9 * (1.0 + p.theta))
        throw InvalidParameter("rate_I: phi(0) must equal theta");
    ScalarPath k;
    try {
        k = k_phi(phi, p.theta);
    } catch (const WallViolation&) {
        return std::numeric_limits<double>::infinity();
    }
    std::vector<double> k2(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) k2[i] = k[i] * k[i];
    return p.beta_factor() * 0.5 * trapezoid(phi.grid, k2);
}

inline double rate_I(const ScalarPath& phi, double theta) { return rate_I(phi, RateParams{theta, 2}); }

/// The semicircle process (sigma_t)_t as a measure path.
struct SemicircleProcess {};

/// A measure path given by one empirical measure per grid node.
using EmpiricalMeasurePath = std::vector<EmpiricalMeasure>;

using MeasurePath = std::variant<SemicircleProcess, EmpiricalMeasurePath>;

namespace detail {

/// b(phi(s), mu_s) on the grid, scaled by `drift_scale`.
inline std::vector<double> path_drift(const ScalarPath& phi, const MeasurePath& mu, double drift_scale) {
    const TimeGrid& g = phi.grid;
    std::vector<double> b(g.size());
    if (std::holds_alternative<SemicircleProcess>(mu)) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g[i] == 0.0 && phi[i] == 0.0) {
                b[i] = std::numeric_limits<double>::infinity();
                continue;
            }
            b[i] = wall_drift(g[i], phi[i]);
        }
    } else {
        const auto& path = std::get<EmpiricalMeasurePath>(mu);
        if (path.size() != g.size()) throw InvalidParameter("measure path does not match the grid");
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (phi[i] == path[i].max()) throw SingularDrift("path touches the top atom of the measure");
            if (phi[i] < path[i].max())
                throw InvalidParameter("path must stay above the support of the measure");
            b[i] = emp_drift(phi[i], path[i]);
        }
    }
    for (auto& v : b) v *= drift_scale;
    return b;
}

/// Trapezoid integral of b*h, with an integrable 1/sqrt(s) singularity at a first node where
/// b is infinite (b(s) ~ c / sqrt(s) fitted from the second node).
inline double drift_integral(const TimeGrid& g, const std::vector<double>& b, std::span<const double> h) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        if (i == 0 && std::isinf(b[0])) {
            const double c = b[1] * std::sqrt(g[1] - g[0]);
            s += 2.0 * c * std::sqrt(g.dt(0)) * 0.5 * (h[0] + h[1]);
            continue;
        }
        s += 0.5 * (b[i] * h[i] + b[i + 1] * h[i + 1]) * g.dt(i);
    }
    return s;
}

}  // namespace detail

/// G(phi, mu; h) = h(1)phi(1) - h(0)phi(0) - int phi h' - int b(phi, mu) h, by grid quadrature.
/// `drift_scale` multiplies b (e.g. (N-1)/N for the finite-N functional).
inline double G_functional(const ScalarPath& phi, const MeasurePath& mu, const ScalarPath& h,
                           double drift_scale = 1.0) {
    require_same_grid(phi, h);
    const TimeGrid& g = phi.grid;
    const auto dh = derivative_of(h);
    std::vector<double> phi_dh(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) phi_dh[i] = phi[i] * dh[i];
    bool h_zero = std::all_of(h.values.begin(), h.values.end(), [](double v) { return v == 0.0; });
    if (h_zero) return 0.0;
    const auto b = detail::path_drift(phi, mu, drift_scale);
    return h.back() * phi.back() - h.front() * phi.front() - trapezoid(g, phi_dh) -
           detail::drift_integral(g, b, h.values);
}

/// F(phi, mu; h) = G(phi, mu; h) - (1/2) int h^2.
inline double F_functional(const ScalarPath& phi, const MeasurePath& mu, const ScalarPath& h,
                           double drift_scale = 1.0) {
    std::vector<double> h2(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) h2[i] = h[i] * h[i];
    return G_functional(phi, mu, h, drift_scale) - 0.5 * trapezoid(h.grid, h2);
}

/// Cosine basis on [t0, t1]: e_0 = 1/sqrt(L), e_j = sqrt(2/L) cos(j pi (t - t0)/L),
/// orthonormal in L^2, with analytic derivatives.
inline ScalarPath cosine_basis(const TimeGrid& g, std::size_t j) {
    const double t0 = g.front(), len = g.back() - g.front();
    if (j == 0)
        return ScalarPath::sample(g, [len](double) { return 1.0 / std::sqrt(len); },
                                  [](double) { return 0.0; });
    const double a = std::sqrt(2.0 / len), w = static_cast<double>(j) * std::numbers::pi / len;
    return ScalarPath::sample(
        g, [=](double t) { return a * std::cos(w * (t - t0)); },
        [=](double t) { return -a * w * std::sin(w * (t - t0)); });
}

/// Lower bound on rate_I(phi): sup of F(phi, sigma; h) over h in the span of the first
/// `basis_size` cosine modes. F is quadratic in the coefficients c, F = c.G - c.M.c/2,
/// so the maximum is G.M^{-1}.G/2 with M the Gram matrix.
inline double sup_J_lower(const ScalarPath& phi, std::size_t basis_size) {
    if (basis_size == 0) return 0.0;
    const TimeGrid& g = phi.grid;
    std::vector<ScalarPath> basis;
    basis.reserve(basis_size);
    for (std::size_t j = 0; j < basis_size; ++j) basis.push_back(cosine_basis(g, j));

    const auto m = static_cast<Eigen::Index>(basis_size);
    Eigen::VectorXd gv(m);
    Eigen::MatrixXd gram(m, m);
    std::vector<double> prod(g.size());
    for (Eigen::Index a = 0; a < m; ++a) {
        gv(a) = G_functional(phi, SemicircleProcess{}, basis[static_cast<std::size_t>(a)]);
        for (Eigen::Index b = 0; b <= a; ++b) {
            const auto& ea = basis[static_cast<std::size_t>(a)].values;
            const auto& eb = basis[static_cast<std::size_t>(b)].values;
            for (std::size_t i = 0; i < g.size(); ++i) prod[i] = ea[i] * eb[i];
            gram(a, b) = gram(b, a) = trapezoid(g, prod);
        }
    }
    const Eigen::VectorXd c = gram.ldlt().solve(gv);
    return std::max(0.0, 0.5 * gv.dot(c));
}

/// Last grid time at which phi sits on the wall 2 sqrt(t) (0 if it leaves immediately).
inline double t0_of(const ScalarPath& phi, double tol = 1e-9) {
    if (std::abs(phi.front()) > tol) throw InvalidParameter("t0_of: phi(0) must be 0");
    double t0 = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const double t = phi.grid[i];
        if (std::abs(phi[i] - 2.0 * std::sqrt(t)) <= tol * (1.0 + phi[i])) t0 = t;
    }
    return t0;
}

}  // namespace dyson_ldp
