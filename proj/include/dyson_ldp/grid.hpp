#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dyson_ldp/error.hpp"

namespace dyson_ldp {

/// Strictly increasing time points. Every path in the library is sampled on one.
class TimeGrid {
public:
    TimeGrid() = default;

    explicit TimeGrid(std::vector<double> points) : t_(std::move(points)) {
        if (t_.size() < 2) throw InvalidParameter("time grid needs at least two points");
        for (std::size_t i = 1; i < t_.size(); ++i) {
            if (!(t_[i] > t_[i - 1]))
                throw InvalidParameter("time grid must be strictly increasing");
        }
        if (!std::isfinite(t_.front()) || !std::isfinite(t_.back()))
            throw InvalidParameter("time grid must be finite");
    }

    /// `steps` equal cells on [start, stop].
    static TimeGrid uniform(double start, double stop, std::size_t steps) {
        if (steps == 0) throw InvalidParameter("uniform grid needs at least one step");
        if (!(stop > start)) throw InvalidParameter("uniform grid needs stop > start");
        std::vector<double> t(steps + 1);
        const double h = (stop - start) / static_cast<double>(steps);
        for (std::size_t i = 0; i <= steps; ++i) t[i] = start + h * static_cast<double>(i);
        t.back() = stop;
        return TimeGrid(std::move(t));
    }

    static TimeGrid unit(std::size_t steps) { return uniform(0.0, 1.0, steps); }

    std::size_t size() const { return t_.size(); }
    std::size_t steps() const { return t_.size() - 1; }
    double operator[](std::size_t i) const { return t_[i]; }
    double front() const { return t_.front(); }
    double back() const { return t_.back(); }
    double dt(std::size_t i) const { return t_[i + 1] - t_[i]; }
    std::span<const double> points() const { return t_; }

    /// Index of the cell [t_i, t_{i+1}) containing `t` (clamped to the grid).
    std::size_t cell(double t) const {
        if (t <= t_.front()) return 0;
        if (t >= t_.back()) return t_.size() - 2;
        auto it = std::upper_bound(t_.begin(), t_.end(), t);
        return static_cast<std::size_t>(it - t_.begin()) - 1;
    }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    std::vector<double> t_;
};

/// A real function sampled on a TimeGrid, optionally with analytic derivative samples.
struct ScalarPath {
    TimeGrid grid;
    std::vector<double> values;
    std::optional<std::vector<double>> derivative;

    ScalarPath() = default;
    ScalarPath(TimeGrid g, std::vector<double> v,
               std::optional<std::vector<double>> d = std::nullopt)
        : grid(std::move(g)), values(std::move(v)), derivative(std::move(d)) {
        if (values.size() != grid.size())
            throw InvalidParameter("path values do not match the grid size");
        if (derivative && derivative->size() != grid.size())
            throw InvalidParameter("derivative samples do not match the grid size");
        for (double v : values)
            if (!std::isfinite(v)) throw InvalidParameter("path values must be finite");
    }

    /// Samples f (and optionally its derivative) on the grid.
    static ScalarPath sample(const TimeGrid& g, const std::function<double(double)>& f,
                             const std::function<double(double)>& df = nullptr) {
        std::vector<double> v(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) v[i] = f(g[i]);
        if (!df) return ScalarPath(g, std::move(v));
        std::vector<double> d(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) d[i] = df(g[i]);
        return ScalarPath(g, std::move(v), std::move(d));
    }

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    double front() const { return values.front(); }
    double back() const { return values.back(); }

    /// Piecewise-linear interpolation, constant extension outside the grid.
    double at(double t) const {
        if (t <= grid.front()) return values.front();
        if (t >= grid.back()) return values.back();
        const std::size_t i = grid.cell(t);
        const double w = (t - grid[i]) / grid.dt(i);
        return (1.0 - w) * values[i] + w * values[i + 1];
    }
};

/// Second-order finite differences on a (possibly non-uniform) grid:
/// three-point centered stencil inside, three-point one-sided stencil at the ends.
inline std::vector<double> finite_difference(const TimeGrid& g, std::span<const double> v) {
    const std::size_t n = g.size();
    std::vector<double> d(n);
    if (n == 2) {
        d[0] = d[1] = (v[1] - v[0]) / g.dt(0);
        return d;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hm = g.dt(i - 1), hp = g.dt(i);
        d[i] = (-hp / (hm * (hm + hp))) * v[i - 1] + ((hp - hm) / (hm * hp)) * v[i] +
               (hm / (hp * (hm + hp))) * v[i + 1];
    }
    {
        const double h1 = g.dt(0), h2 = g.dt(1);
        d[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * v[0] + (h1 + h2) / (h1 * h2) * v[1] -
               h1 / (h2 * (h1 + h2)) * v[2];
    }
    {
        const double h1 = g.dt(n - 2), h2 = g.dt(n - 3);
        d[n - 1] = (2.0 * h1 + h2) / (h1 * (h1 + h2)) * v[n - 1] -
                   (h1 + h2) / (h1 * h2) * v[n - 2] + h1 / (h2 * (h1 + h2)) * v[n - 3];
    }
    return d;
}

/// Analytic derivative samples when the path carries them, finite differences otherwise.
inline std::vector<double> derivative_of(const ScalarPath& p) {
    if (p.derivative) return *p.derivative;
    return finite_difference(p.grid, p.values);
}

/// Composite trapezoid rule of samples `f` over the grid.
inline double trapezoid(const TimeGrid& g, std::span<const double> f) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) s += 0.5 * (f[i] + f[i + 1]) * g.dt(i);
    return s;
}

inline void require_same_grid(const ScalarPath& a, const ScalarPath& b) {
    if (!(a.grid == b.grid)) throw InvalidParameter("paths are sampled on different grids");
}

}  // namespace dyson_ldp
