#ifndef HJ_MODEL_HPP
#define HJ_MODEL_HPP

#include <functional>
#include <string>
#include <vector>

#include "hj/grid.hpp"

namespace hj {

struct Interval {
    double lo = 0.0, hi = 0.0;
    double width() const { return hi - lo; }
};

/**
 * Hamiltonian data for H(x,Du) + lambda(x) u = c on the circle.
 * `hamiltonian` is the u-free part H(x,p); it must be convex in p.
 */
struct Model {
    std::string name = "custom";
    std::function<double(double, double)> hamiltonian;
    std::function<double(double)> discount;  // lambda(x)
    double c = 0.0;
    Interval p_range{-10.0, 10.0};
    Interval v_range{-8.0, 8.0};
    double lambda_max = 0.0;       // max |lambda| over grid nodes
    bool lambda_sign_change = false;  // lambda attains both signs on the grid

    Model with_c(double new_c) const {
        Model m = *this;
        m.c = new_c;
        return m;
    }
};

/** Model plus analytic first partials, for the contact flow. */
struct DifferentiableModel : Model {
    std::function<double(double, double)> dH_dx, dH_dp;
    std::function<double(double)> dlambda_dx;
};

/** Description of a model prior to grid binding; parsed from spec files. */
struct ModelSpec {
    std::string builtin;  // "e1" or "e3"; empty means custom samplers below
    double c = 0.0;
    double p_max = 10.0;
    double v_max = 8.0;
    int n_velocities = 129;
    std::function<double(double, double)> hamiltonian;  // custom only
    std::function<double(double)> discount;             // custom only

    /** Lines of "key = value" (or "key: value"); keys builtin, c, p_max, v_max, n_velocities. */
    static ModelSpec from_file(const std::string& path);
};

/**
 * Bind a spec to a grid: computes lambda_max and the sign-change diagnostic,
 * checks convexity of H in p by second differences on the p-grid.
 */
Model build_model(const ModelSpec& spec, const PeriodicGrid& grid);

/** Builtin models with analytic partials ("e1", "e3"). */
DifferentiableModel builtin_differentiable(const std::string& name, double c);

/** Tabulated Lagrangian L(x_i, v_j) = sup_p [ v_j p - H(x_i, p) ]. */
struct LagrangianTable {
    PeriodicGrid grid;
    std::vector<double> velocities;  // symmetric, odd count, includes 0
    std::vector<double> values;      // grid.n x m, row-major
    bool boundary_argmax = false;    // some sup was attained at the p_range edge

    int m() const { return static_cast<int>(velocities.size()); }
    double at(int node, int j) const {
        return values[static_cast<size_t>(node) * velocities.size() + static_cast<size_t>(j)];
    }
    /** Linear interpolation along v, clamped to the velocity range. */
    double eval(int node, double v) const;
    /** Table of L~(x,v) = L(x,-v); lambda must be negated separately. */
    LagrangianTable reflected() const;
};

/**
 * Discrete Legendre transform over a dense symmetric p-grid.
 * In strict mode a boundary argmax raises std::runtime_error.
 */
LagrangianTable legendre_transform(const Model& model, const PeriodicGrid& grid, int m,
                                   int p_samples = 2049, bool strict = false);

/** Symmetric sample points on [-half, half]: odd count, includes 0, v[k] == -v[m-1-k] exactly. */
std::vector<double> symmetric_samples(double half, int count);

/**
 * Per-node residual max_p [ H(x,p) + lambda(x) u(x) - c ] over backward/forward
 * one-sided difference gradients and 9 convex combinations between them.
 */
GridFunction subsolution_residual(const GridFunction& u, const Model& model);

}  // namespace hj

#endif
