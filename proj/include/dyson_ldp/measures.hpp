#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dyson_ldp/error.hpp"

namespace dyson_ldp {

/// Adaptive Gauss-Kronrod (21-point) on [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double abs_tol = 1e-10) {
    if (a == b) return 0.0;
    using Rule = boost::math::quadrature::gauss_kronrod<double, 21>;
    const double rel = std::max(abs_tol / std::max(1.0, std::abs(b - a)), 1e-15);
    return Rule::integrate(f, a, b, 20, rel);
}

/// Semicircle law sigma_t with variance t; sigma_0 is the point mass at 0.
class SemicircleLaw {
public:
    explicit SemicircleLaw(double t) : t_(t) {
        if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidParameter("semicircle needs t >= 0");
    }

    double t() const { return t_; }
    double edge() const { return 2.0 * std::sqrt(t_); }
    bool degenerate() const { return t_ == 0.0; }

    double density(double x) const {
        if (degenerate()) throw DomainError("sigma_0 is a point mass and has no density");
        const double r = 4.0 * t_ - x * x;
        return r <= 0.0 ? 0.0 : std::sqrt(r) / (2.0 * std::numbers::pi * t_);
    }

    double cdf(double x) const {
        const double e = edge();
        if (x >= e) return 1.0;
        if (x < -e) return 0.0;
        if (degenerate()) return 1.0;
        const double u = x / e;
        return 0.5 + (u * std::sqrt(1.0 - u * u) + std::asin(u)) / std::numbers::pi;
    }

    /// Antiderivative of the cdf, continuous on R and zero left of the support.
    double cdf_antiderivative(double x) const {
        if (degenerate()) return std::max(x, 0.0);
        const double r = std::max(4.0 * t_ - x * x, 0.0);
        return x * cdf(x) + r * std::sqrt(r) / (6.0 * std::numbers::pi * t_);
    }

    /// Integral of g against sigma_t, with y = 2 sqrt(t) cos(u) removing the edge singularities.
    double expectation(const std::function<double(double)>& g, double abs_tol = 1e-10) const {
        if (degenerate()) return g(0.0);
        const double e = edge();
        auto integrand = [&](double u) {
            const double s = std::sin(u);
            return g(e * std::cos(u)) * s * s;
        };
        return 2.0 / std::numbers::pi * integrate(integrand, 0.0, std::numbers::pi, abs_tol);
    }

private:
    double t_;
};

inline double sc_density(double t, double x) {
    if (t < 0.0) throw InvalidParameter("sc_density: t must be >= 0");
    return SemicircleLaw(t).density(x);
}

/// Hilbert transform of sigma_t at x >= 2 sqrt(t): (x - sqrt(x^2 - 4t)) / (2t),
/// evaluated in the cancellation-free form 2 / (x + sqrt(x^2 - 4t)).
/// x^2 - 4t in [-1e-10, 0) counts as the edge.
inline double sc_drift(double x, double t) {
    if (!(t > 0.0)) throw InvalidParameter("sc_drift: t must be > 0");
    double disc = x * x - 4.0 * t;
    if (x < 0.0 || disc < -1e-10)
        throw DomainError("sc_drift: x is inside the bulk [-2 sqrt(t), 2 sqrt(t)]");
    disc = std::max(disc, 0.0);
    return 2.0 / (x + std::sqrt(disc));
}

/// Direct quadrature of the Cauchy integral of sigma_t at x outside the support.
inline double sc_drift_quadrature(double x, double t) {
    SemicircleLaw law(t);
    if (!(x > law.edge())) throw DomainError("Cauchy integral needs x > 2 sqrt(t)");
    return law.expectation([x](double y) { return 1.0 / (x - y); }, 1e-12);
}

/// Uniformly weighted atoms, kept sorted in descending order.
class EmpiricalMeasure {
public:
    EmpiricalMeasure() = default;

    explicit EmpiricalMeasure(std::vector<double> atoms) : atoms_(std::move(atoms)) {
        if (atoms_.empty()) throw InvalidParameter("empirical measure needs at least one atom");
        std::sort(atoms_.begin(), atoms_.end(), std::greater<>());
    }

    std::size_t size() const { return atoms_.size(); }
    double weight() const { return 1.0 / static_cast<double>(atoms_.size()); }
    const std::vector<double>& atoms() const { return atoms_; }
    double max() const { return atoms_.front(); }
    double min() const { return atoms_.back(); }

private:
    std::vector<double> atoms_;
};

/// One-sided Stieltjes drift: sum over atoms strictly below x of w / (x - a).
/// Returns +inf when an atom sits exactly at x.
inline double emp_drift(double x, const EmpiricalMeasure& mu) {
    double s = 0.0;
    for (double a : mu.atoms()) {
        if (a == x) return std::numeric_limits<double>::infinity();
        if (a < x) s += 1.0 / (x - a);
    }
    return s * mu.weight();
}

/// Drops the j largest atoms and reweights the rest uniformly.
inline EmpiricalMeasure leave_top_out(const EmpiricalMeasure& mu, std::size_t j) {
    if (j >= mu.size()) throw InvalidParameter("leave_top_out: j must be below the atom count");
    return EmpiricalMeasure(std::vector<double>(mu.atoms().begin() + static_cast<long>(j),
                                                mu.atoms().end()));
}

/// Wasserstein-1 distance between two empirical measures, exact via the CDF difference.
inline double w1_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    std::vector<double> a(mu.atoms().rbegin(), mu.atoms().rend());
    std::vector<double> b(nu.atoms().rbegin(), nu.atoms().rend());
    const double wa = mu.weight(), wb = nu.weight();
    std::size_t i = 0, j = 0;
    double fa = 0.0, fb = 0.0, dist = 0.0;
    double x = std::min(a.front(), b.front());
    while (i < a.size() || j < b.size()) {
        const double next = std::min(i < a.size() ? a[i] : std::numeric_limits<double>::infinity(),
                                     j < b.size() ? b[j] : std::numeric_limits<double>::infinity());
        dist += std::abs(fa - fb) * (next - x);
        x = next;
        while (i < a.size() && a[i] == x) { fa += wa; ++i; }
        while (j < b.size() && b[j] == x) { fb += wb; ++j; }
    }
    return dist;
}

/// Wasserstein-1 distance from an empirical measure to sigma_t, exact up to root finding
/// of the semicircle CDF.
inline double w1_distance(const EmpiricalMeasure& mu, const SemicircleLaw& sc) {
    if (sc.degenerate()) {
        double s = 0.0;
        for (double a : mu.atoms()) s += std::abs(a);
        return s * mu.weight();
    }
    const double e = sc.edge();
    std::vector<double> pts(mu.atoms().rbegin(), mu.atoms().rend());
    pts.push_back(-e);
    pts.push_back(e);
    std::sort(pts.begin(), pts.end());

    const auto& atoms = mu.atoms();
    auto mu_cdf = [&](double x) {  // right-continuous, x between breakpoints
        const auto below = std::count_if(atoms.begin(), atoms.end(), [x](double a) { return a <= x; });
        return static_cast<double>(below) * mu.weight();
    };
    auto area = [&](double c, double p, double q) {  // integral of (c - F_sigma) over [p, q]
        return c * (q - p) - (sc.cdf_antiderivative(q) - sc.cdf_antiderivative(p));
    };

    double dist = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double p = pts[k], q = pts[k + 1];
        if (q <= p) continue;
        const double c = mu_cdf(0.5 * (p + q));
        const double fp = c - sc.cdf(p), fq = c - sc.cdf(q);
        if (fp * fq >= 0.0) {
            dist += std::abs(area(c, p, q));
            continue;
        }
        double lo = p, hi = q;  // c - F_sigma is decreasing
        for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
            const double mid = 0.5 * (lo + hi);
            (c - sc.cdf(mid) > 0.0 ? lo : hi) = mid;
        }
        const double r = 0.5 * (lo + hi);
        dist += std::abs(area(c, p, r)) + std::abs(area(c, r, q));
    }
    return dist;
}

}  // namespace dyson_ldp
