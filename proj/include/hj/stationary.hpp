#ifndef HJ_STATIONARY_HPP
#define HJ_STATIONARY_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hj/grid.hpp"
#include "hj/model.hpp"
#include "hj/semigroup.hpp"

namespace hj {

/** Thrown when a long-time run blows down where a solution was expected. */
struct NoSolutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/** Starting constant above (sign=+1) or below (sign=-1) every stationary solution. */
double starting_constant(const Model& model, const PeriodicGrid& grid, int sign);

/**
 * Fixed point of the backward semigroup from a large constant start.
 * With probe_maximality, a second run from +10 higher must land within
 * tol_fix of the first; a discrepancy throws.
 */
GridFunction compute_u_max(const Model& model, const PeriodicGrid& grid,
                           const SemigroupParams& params, bool probe_maximality = false,
                           EvolveReport* report = nullptr);

struct StationaryPair {
    GridFunction u_max;
    GridFunction u_min;
    GridFunction u_min_plus;  // forward limit from a very negative constant
    double gap = 0.0;         // sup_diff(u_max, u_min)
};

/** Forward evolution to u+_min, then backward from it to u_min; u_max alongside. */
StationaryPair compute_u_min(const Model& model, const PeriodicGrid& grid,
                             const SemigroupParams& params);

enum class Solvability { solvable, unsolvable, ambiguous };

struct ProbeReport {
    double c = 0.0;
    Solvability cls = Solvability::ambiguous;
    EvolveStatus status = EvolveStatus::time_capped;
    double t_elapsed = 0.0;
};

struct C0Estimate {
    double lo = 0.0;  // largest tested c classified unsolvable
    double hi = 0.0;  // smallest tested c classified solvable
    int iterations = 0;
    bool monotone = true;  // classification stayed monotone in c
    std::vector<ProbeReport> probes;
    double mid() const { return 0.5 * (lo + hi); }
};

/**
 * Bisection on the solvable/unsolvable outcome of the backward iteration.
 * The bracket endpoints are verified first. Probes warm-start from the last
 * solvable solution (which lies above the target fixed point, since the
 * fixed point is monotone in c) and use a short time cap; a time-capped probe
 * is classified by whether its minimum kept drifting down.
 */
C0Estimate estimate_c0(const Model& model_family, const PeriodicGrid& grid,
                       double c_lo, double c_hi, int iterations, int m_velocities = 129);

struct InfSupOptions {
    int stages = 30;       // temperature stages, geometric 1 -> 1e-3
    int steps_per_stage = 200;
    double step_size = 0.05;
};

/**
 * Upper bound on the critical value: descent on u of the log-sum-exp
 * smoothed max of H(x, Du) + lambda(x) u, with one-sided difference
 * gradients. Returns the best (smallest) true max residual found.
 */
double estimate_c0_infsup(const Model& model, const PeriodicGrid& grid,
                          const InfSupOptions& opts = {});

/**
 * Conjugate of a backward solution: the forward-flow limit started from
 * u_minus. Iterates just above the limit blow up under the forward flow, so
 * the computation tracks the closest approach of the trajectory and polishes
 * it by policy iteration, as compute_u_min does for the minimal solution.
 */
GridFunction compute_conjugate(const GridFunction& u_minus, const Model& model,
                               const SemigroupParams& params);

/** Node indices where |u_minus - u_plus| <= tol. */
std::vector<int> compute_aubry_set(const GridFunction& u_minus, const GridFunction& u_plus,
                                   double tol);

}  // namespace hj

#endif
