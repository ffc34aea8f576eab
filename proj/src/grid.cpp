#include "hj/grid.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hj {

PeriodicGrid make_grid(int n, double period) {
    if (n < 4) throw std::invalid_argument("make_grid: grid too coarse (n < 4)");
    if (!(period > 0.0)) throw std::invalid_argument("make_grid: period must be positive");
    PeriodicGrid g;
    g.n = n;
    g.period = period;
    g.spacing = period / n;
    return g;
}

GridFunction::GridFunction(const PeriodicGrid& g, std::vector<double> v)
    : grid(g), values(std::move(v)) {
    if (static_cast<int>(values.size()) != g.n)
        throw std::invalid_argument("GridFunction: values length != grid.n");
    for (double x : values)
        if (!std::isfinite(x))
            throw std::invalid_argument("GridFunction: non-finite value");
}

GridFunction GridFunction::constant(const PeriodicGrid& g, double value) {
    return GridFunction(g, std::vector<double>(static_cast<size_t>(g.n), value));
}

double GridFunction::min() const { return *std::min_element(values.begin(), values.end()); }
double GridFunction::max() const { return *std::max_element(values.begin(), values.end()); }

double interpolate(const GridFunction& f, double x) {
    const PeriodicGrid& g = f.grid;
    double y = g.wrap(x);
    int i = static_cast<int>(y / g.spacing);
    if (i >= g.n) i = g.n - 1;
    // the truncation above can undershoot by one when y sits exactly on a node
    if (i + 1 < g.n && y >= g.node(i + 1)) ++i;
    // theta computed against the actual node coordinate so nodes are exact
    double theta = (y - g.node(i)) / g.spacing;
    if (theta < 0.0) theta = 0.0;
    if (theta > 1.0) theta = 1.0;
    int j = i + 1 == g.n ? 0 : i + 1;
    return f[i] * (1.0 - theta) + f[j] * theta;
}

double sup_diff(const GridFunction& f, const GridFunction& g) {
    if (!f.grid.same_as(g.grid)) throw std::invalid_argument("sup_diff: grid mismatch");
    double m = 0.0;
    for (int i = 0; i < f.size(); ++i) m = std::max(m, std::abs(f[i] - g[i]));
    return m;
}

void write_csv(const std::string& path, const GridFunction& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    out << "x,value\n";
    char buf[96];
    for (int i = 0; i < f.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.15g,%.15g\n", f.grid.node(i), f[i]);
        out << buf;
    }
}

GridFunction read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> xs, vs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string a, b;
        std::getline(ss, a, ',');
        std::getline(ss, b, ',');
        xs.push_back(std::stod(a));
        vs.push_back(std::stod(b));
    }
    if (xs.size() < 4) throw std::runtime_error("read_csv: too few rows in " + path);
    double period = xs.back() + (xs[1] - xs[0]);
    // snap to the default circle so round-tripped grids compare equal
    if (std::abs(period - two_pi) < 1e-9) period = two_pi;
    PeriodicGrid g = make_grid(static_cast<int>(xs.size()), period);
    return GridFunction(g, std::move(vs));
}

}  // namespace hj
