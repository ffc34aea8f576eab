#include "hj/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hj {

std::vector<double> symmetric_samples(double half, int count) {
    if (count < 2) throw std::invalid_argument("symmetric_samples: count < 2");
    std::vector<double> v(static_cast<size_t>(count));
    for (int k = 0; 2 * k <= count - 1; ++k) {
        double a = half * (static_cast<double>(count - 1 - 2 * k) / (count - 1));
        v[static_cast<size_t>(k)] = -a;
        v[static_cast<size_t>(count - 1 - k)] = a;
    }
    return v;
}

ModelSpec ModelSpec::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("ModelSpec: cannot open " + path);
    ModelSpec spec;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto sep = line.find_first_of("=:");
        if (sep == std::string::npos) continue;
        auto trim = [](std::string s) {
            auto a = s.find_first_not_of(" \t\r");
            auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, sep));
        std::string val = trim(line.substr(sep + 1));
        if (key == "builtin") spec.builtin = val;
        else if (key == "c") spec.c = std::stod(val);
        else if (key == "p_max") spec.p_max = std::stod(val);
        else if (key == "v_max") spec.v_max = std::stod(val);
        else if (key == "n_velocities") spec.n_velocities = std::stoi(val);
        else throw std::runtime_error("ModelSpec: unknown key '" + key + "' in " + path);
    }
    return spec;
}

namespace {

void fill_builtin(const std::string& name, Model& m) {
    if (name == "e1") {
        m.hamiltonian = [](double, double p) { return 0.5 * p * p; };
        m.discount = [](double x) { return std::sin(x); };
    } else if (name == "e3") {
        m.hamiltonian = [](double x, double p) { return 0.5 * p * p + std::cos(2.0 * x) - 1.0; };
        m.discount = [](double x) { return std::sin(x); };
    } else {
        throw std::invalid_argument("unknown builtin model '" + name + "'");
    }
    m.name = name;
}

void finalize_on_grid(Model& m, const PeriodicGrid& grid) {
    double lmax = 0.0;
    bool pos = false, neg = false;
    for (int i = 0; i < grid.n; ++i) {
        double l = m.discount(grid.node(i));
        lmax = std::max(lmax, std::abs(l));
        if (l > 0) pos = true;
        if (l < 0) neg = true;
    }
    m.lambda_max = lmax;
    m.lambda_sign_change = pos && neg;

    // convexity of H(x, .) on a sampled p-grid, by second differences
    const int np = 257;
    std::vector<double> ps = symmetric_samples(m.p_range.hi, np);
    double scale = 1.0;
    for (int i = 0; i < grid.n; ++i) {
        double x = grid.node(i);
        std::vector<double> h(static_cast<size_t>(np));
        for (int k = 0; k < np; ++k) {
            h[static_cast<size_t>(k)] = m.hamiltonian(x, ps[static_cast<size_t>(k)]);
            scale = std::max(scale, std::abs(h[static_cast<size_t>(k)]));
        }
        for (int k = 1; k + 1 < np; ++k) {
            double d2 = h[static_cast<size_t>(k) - 1] - 2.0 * h[static_cast<size_t>(k)] +
                        h[static_cast<size_t>(k) + 1];
            if (d2 < -1e-9 * scale)
                throw std::runtime_error("build_model: hamiltonian not convex in p at x=" +
                                         std::to_string(x));
        }
    }
}

}  // namespace

Model build_model(const ModelSpec& spec, const PeriodicGrid& grid) {
    Model m;
    if (!spec.builtin.empty()) {
        fill_builtin(spec.builtin, m);
    } else {
        if (!spec.hamiltonian || !spec.discount)
            throw std::invalid_argument("build_model: custom spec needs hamiltonian and discount");
        m.hamiltonian = spec.hamiltonian;
        m.discount = spec.discount;
    }
    m.c = spec.c;
    if (!(spec.p_max > 0) || !(spec.v_max > 0))
        throw std::invalid_argument("build_model: empty p/v range");
    m.p_range = {-spec.p_max, spec.p_max};
    m.v_range = {-spec.v_max, spec.v_max};
    finalize_on_grid(m, grid);
    return m;
}

DifferentiableModel builtin_differentiable(const std::string& name, double c) {
    DifferentiableModel m;
    fill_builtin(name, static_cast<Model&>(m));
    m.c = c;
    m.dlambda_dx = [](double x) { return std::cos(x); };
    m.dH_dp = [](double, double p) { return p; };
    if (name == "e1") {
        m.dH_dx = [](double, double) { return 0.0; };
    } else {
        m.dH_dx = [](double x, double) { return -2.0 * std::sin(2.0 * x); };
    }
    PeriodicGrid g = make_grid(256);
    finalize_on_grid(m, g);
    return m;
}

double LagrangianTable::eval(int node, double v) const {
    const int mm = m();
    double lo = velocities.front(), hi = velocities.back();
    if (v <= lo) return at(node, 0);
    if (v >= hi) return at(node, mm - 1);
    double s = (v - lo) / (hi - lo) * (mm - 1);
    int j = static_cast<int>(s);
    if (j >= mm - 1) j = mm - 2;
    // recompute against actual sample points (exact at table velocities)
    if (v < velocities[static_cast<size_t>(j)]) --j;
    else if (v >= velocities[static_cast<size_t>(j) + 1]) ++j;
    double va = velocities[static_cast<size_t>(j)], vb = velocities[static_cast<size_t>(j) + 1];
    double theta = (v - va) / (vb - va);
    if (theta < 0.0) theta = 0.0;
    if (theta > 1.0) theta = 1.0;
    return at(node, j) * (1.0 - theta) + at(node, j + 1) * theta;
}

LagrangianTable LagrangianTable::reflected() const {
    LagrangianTable r;
    r.grid = grid;
    r.velocities = velocities;
    r.boundary_argmax = boundary_argmax;
    r.values.resize(values.size());
    const int mm = m();
    for (int i = 0; i < grid.n; ++i)
        for (int j = 0; j < mm; ++j)
            r.values[static_cast<size_t>(i) * mm + static_cast<size_t>(j)] = at(i, mm - 1 - j);
    return r;
}

LagrangianTable legendre_transform(const Model& model, const PeriodicGrid& grid, int m,
                                   int p_samples, bool strict) {
    if (m < 64) throw std::invalid_argument("legendre_transform: need m >= 64 velocities");
    LagrangianTable t;
    t.grid = grid;
    t.velocities = symmetric_samples(model.v_range.hi, m);
    t.values.assign(static_cast<size_t>(grid.n) * m, 0.0);
    std::vector<double> ps = symmetric_samples(model.p_range.hi, p_samples);

    bool boundary = false;
#pragma omp parallel for reduction(|| : boundary)
    for (int i = 0; i < grid.n; ++i) {
        double x = grid.node(i);
        std::vector<double> h(ps.size());
        for (size_t k = 0; k < ps.size(); ++k) h[k] = model.hamiltonian(x, ps[k]);
        for (int j = 0; j < m; ++j) {
            double v = t.velocities[static_cast<size_t>(j)];
            double best = -1e300;
            size_t arg = 0;
            for (size_t k = 0; k < ps.size(); ++k) {
                double cand = v * ps[k] - h[k];
                if (cand > best) {
                    best = cand;
                    arg = k;
                }
            }
            if (arg == 0 || arg + 1 == ps.size()) boundary = true;
            t.values[static_cast<size_t>(i) * m + static_cast<size_t>(j)] = best;
        }
    }
    t.boundary_argmax = boundary;
    if (strict && boundary)
        throw std::runtime_error("legendre_transform: argmax on p_range boundary (range too small)");
    return t;
}

GridFunction subsolution_residual(const GridFunction& u, const Model& model) {
    const PeriodicGrid& g = u.grid;
    std::vector<double> r(static_cast<size_t>(g.n));
    for (int i = 0; i < g.n; ++i) {
        int im = (i + g.n - 1) % g.n;
        int ip = (i + 1) % g.n;
        double pb = (u[i] - u[im]) / g.spacing;
        double pf = (u[ip] - u[i]) / g.spacing;
        double x = g.node(i);
        double zero = model.discount(x) * u[i] - model.c;
        double best = -1e300;
        for (int k = 0; k <= 10; ++k) {
            double p = pb + (pf - pb) * (k / 10.0);
            best = std::max(best, model.hamiltonian(x, p) + zero);
        }
        r[static_cast<size_t>(i)] = best;
    }
    return GridFunction(g, std::move(r));
}

}  // namespace hj
