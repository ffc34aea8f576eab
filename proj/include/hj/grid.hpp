#ifndef HJ_GRID_HPP
#define HJ_GRID_HPP

#include <cmath>
#include <string>
#include <vector>

namespace hj {

inline constexpr double two_pi = 6.283185307179586476925286766559;

/** Uniform periodic grid on [0, period), node i at i*spacing. */
struct PeriodicGrid {
    int n = 0;
    double period = two_pi;
    double spacing = 0.0;

    double node(int i) const { return i * spacing; }

    /** Wrap x into [0, period). */
    double wrap(double x) const {
        double y = x - period * std::floor(x / period);
        if (y >= period) y -= period;
        if (y < 0) y = 0;
        return y;
    }

    bool same_as(const PeriodicGrid& o) const {
        return n == o.n && period == o.period;
    }
};

/** Throws std::invalid_argument for n < 4 ("grid too coarse") or period <= 0. */
PeriodicGrid make_grid(int n, double period = two_pi);

/** Real values sampled at the nodes of a PeriodicGrid. */
struct GridFunction {
    PeriodicGrid grid;
    std::vector<double> values;

    GridFunction() = default;
    GridFunction(const PeriodicGrid& g, std::vector<double> v);

    static GridFunction constant(const PeriodicGrid& g, double value);

    template <class F>
    static GridFunction sample(const PeriodicGrid& g, F&& f) {
        std::vector<double> v(static_cast<size_t>(g.n));
        for (int i = 0; i < g.n; ++i) v[static_cast<size_t>(i)] = f(g.node(i));
        return GridFunction(g, std::move(v));
    }

    double operator[](int i) const { return values[static_cast<size_t>(i)]; }
    double& operator[](int i) { return values[static_cast<size_t>(i)]; }
    int size() const { return grid.n; }

    double min() const;
    double max() const;
};

/** Periodic piecewise-linear interpolation; exact at nodes. */
double interpolate(const GridFunction& f, double x);

/** Sup-norm distance over nodes; throws on grid mismatch. */
double sup_diff(const GridFunction& f, const GridFunction& g);

/** CSV with header "x,value", one row per node, LF endings. */
void write_csv(const std::string& path, const GridFunction& f);
GridFunction read_csv(const std::string& path);

}  // namespace hj

#endif
