#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "dyson_ldp/error.hpp"
#include "dyson_ldp/grid.hpp"

namespace dyson_ldp {

struct FixedTimeQuery {
    double theta = 0.0;
    double x = 2.0;
    double eta = 0.0;
};

/// int_2^x sqrt(z^2 - 4) dz = (x/2) sqrt(x^2 - 4) - 2 ln((x + sqrt(x^2 - 4)) / 2).
inline double int_sqrt(double x) {
    if (!(x >= 2.0)) throw DomainError("int_sqrt: x must be >= 2");
    const double r = std::sqrt(x * x - 4.0);
    return 0.5 * x * r - 2.0 * std::log(0.5 * (x + r));
}

/// Branch of K_theta beyond theta + 1/theta for theta <= 1.
inline double M_theta(double theta, double x) {
    if (!(theta > 0.0)) throw InvalidParameter("M_theta: theta must be > 0");
    return 0.5 * int_sqrt(x) - theta * x + 0.25 * x * x + 0.5 + 0.5 * theta * theta + std::log(theta);
}

/// K_theta for theta >= 1.
inline double L_theta(double theta, double x) {
    if (!(theta >= 1.0)) throw InvalidParameter("L_theta: theta must be >= 1");
    const double c = theta + 1.0 / theta;
    return 0.5 * (int_sqrt(x) - int_sqrt(c)) - theta * (x - c) + 0.25 * (x * x - c * c);
}

/// Fixed-time rate function of the top eigenvalue at t = 1.
inline double K_theta(const FixedTimeQuery& q) {
    if (q.eta != 0.0) throw InvalidParameter("K_theta: only eta = 0 has a closed form");
    if (!(q.theta >= 0.0)) throw InvalidParameter("K_theta: theta must be >= 0");
    if (q.x < 2.0) return std::numeric_limits<double>::infinity();
    if (q.theta >= 1.0) return L_theta(q.theta, q.x);
    if (q.theta == 0.0 || q.x <= q.theta + 1.0 / q.theta) return int_sqrt(q.x);
    return M_theta(q.theta, q.x);
}

inline double K_theta(double theta, double x) { return K_theta(FixedTimeQuery{theta, x, 0.0}); }

/// Rate of the straight path phi(t) = (x - theta) t + theta.
inline double closed_form_linear_rate(double theta, double x) {
    if (!(theta > 0.0)) throw InvalidParameter("closed_form_linear_rate: theta must be > 0");
    if (!(x >= 2.0)) throw DomainError("closed_form_linear_rate: x must be >= 2");
    const double r = std::sqrt(x * x - 4.0);
    return -std::log((x + r) / (2.0 * theta)) + 0.25 * x * r + 0.25 * x * x - theta * x +
           0.5 * theta * theta + 0.5;
}

/// sqrt(t*) of the wall point whose tangent line reaches x at t = 1.
inline double wall_exit_root(double x) {
    if (!(x >= 2.0)) throw DomainError("wall exit needs x >= 2");
    return 0.5 * (x - std::sqrt(x * x - 4.0));
}

/// Minimizer of the path rate among paths from (eta, theta) to (1, x).
///
/// Three shapes occur: the straight line; the wall 2 sqrt(t) followed by its tangent line
/// from t* (theta = 2 sqrt(eta)); and, for 2 sqrt(eta) < theta < 1 + eta with x below
/// the switch value, a line of slope 1/sqrt(s*) onto the wall at s*, the wall, and the
/// tangent line from t*. The returned path carries analytic derivatives.
inline ScalarPath optimal_path(const FixedTimeQuery& q, const TimeGrid& grid) {
    const double theta = q.theta, x = q.x, eta = q.eta;
    if (!(eta >= 0.0 && eta < 1.0)) throw InvalidParameter("optimal_path: eta must lie in [0, 1)");
    if (!(x >= 2.0)) throw DomainError("optimal_path: x must be >= 2");
    const double wall0 = 2.0 * std::sqrt(eta);
    if (theta < wall0 - 1e-12) throw InvalidParameter("optimal_path: theta must be >= 2 sqrt(eta)");
    if (std::abs(grid.front() - eta) > 1e-12 || std::abs(grid.back() - 1.0) > 1e-12)
        throw InvalidParameter("optimal_path: grid must span [eta, 1]");

    const double se = wall_exit_root(x);  // sqrt(t*)
    const double tstar = se * se;
    auto tangent = [se](double t) { return 2.0 * se + (t - se * se) / se; };

    const bool on_wall_start = std::abs(theta - wall0) <= 1e-12;
    double entry = 0.0;  // sqrt(s*)
    bool wall_shape = on_wall_start;
    if (!on_wall_start && theta < 1.0 + eta) {
        entry = 0.5 * (theta + std::sqrt(theta * theta - 4.0 * eta));
        wall_shape = se >= entry;  // x <= sqrt(s*) + 1/sqrt(s*)
    }

    if (!wall_shape) {
        const double slope = (x - theta) / (1.0 - eta);
        return ScalarPath::sample(
            grid, [=](double t) { return theta + slope * (t - eta); }, [=](double) { return slope; });
    }

    const double sstar = on_wall_start ? eta : entry * entry;
    auto value = [=](double t) {
        if (t >= tstar) return t >= 1.0 ? x : tangent(t);
        if (t >= sstar) return 2.0 * std::sqrt(t);
        return theta + (t - eta) / entry;
    };
    auto slope = [=](double t) {
        if (t >= tstar) return 1.0 / se;
        if (t >= sstar)
            return t > 0.0 ? 1.0 / std::sqrt(t) : std::numeric_limits<double>::infinity();
        return 1.0 / entry;
    };
    return ScalarPath::sample(grid, value, slope);
}

}  // namespace dyson_ldp
