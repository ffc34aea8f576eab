#ifndef HJ_SEMIGROUP_HPP
#define HJ_SEMIGROUP_HPP

#include <utility>
#include <vector>

#include "hj/grid.hpp"
#include "hj/model.hpp"

namespace hj {

struct SemigroupParams {
    double dt = 0.0;
    LagrangianTable table;
    double tol_fix = 1e-6;           // sup-norm change per unit time
    int window = 10;                 // consecutive converged steps required
    double divergence_floor = -1e3;  // min-value threshold signalling blow-down
    double t_max = 200.0;
    bool strict = false;             // escalate boundary-argmin warnings
    bool accelerate = false;         // geometric extrapolation toward the fixed point

    /** dt = 2*spacing capped by 0.5/lambda_max; table with m velocities. */
    static SemigroupParams defaults(const Model& model, const PeriodicGrid& grid, int m = 129);
};

enum class EvolveStatus { converged, diverged_down, time_capped };
enum class Direction { backward, forward };

struct EvolveReport {
    GridFunction final;
    EvolveStatus status = EvolveStatus::time_capped;
    double t_elapsed = 0.0;
    int steps = 0;
    std::vector<std::pair<double, double>> min_history, max_history;  // (t, value)
    bool boundary_hit = false;   // some argmin/argmax touched the velocity range edge
    bool tail_decreasing = false;  // min history non-increasing over the last window
    int jumps = 0;               // extrapolation jumps taken (accelerate mode)
    int reverts = 0;             // extrapolation jumps undone by the verification check
};

struct StepDiag {
    bool boundary = false;
};

/**
 * One implicit semi-Lagrangian step of the backward semigroup:
 *   u'(x_i) = [ min_v ( u(x_i - v dt) + dt L(x_i, v) ) + dt c ] / (1 + dt lambda(x_i)).
 * The minimum is taken exactly over the kinks of the piecewise-linear objective
 * (table velocities plus node-crossing velocities), keeping the scheme monotone.
 */
GridFunction backward_step(const GridFunction& u, const Model& model,
                           const SemigroupParams& params, StepDiag* diag = nullptr);

/**
 * Forward semigroup step:
 *   u'(x_i) = [ max_v ( u(x_i + v dt) - dt L(x_i, v) ) - dt c ] / (1 - dt lambda(x_i)).
 */
GridFunction forward_step(const GridFunction& u, const Model& model,
                          const SemigroupParams& params, StepDiag* diag = nullptr);

/**
 * One in-place Gauss-Seidel sweep of the backward fixed-point update, visiting
 * nodes left-to-right (or right-to-left with reverse). Returns the sup change.
 * The node update is identical to backward_step's, so the fixed points agree;
 * in-place updates let information cross the domain in a few alternating sweeps
 * instead of one grid cell per step.
 */
double backward_sweep(GridFunction& u, const Model& model, const SemigroupParams& params,
                      bool reverse, StepDiag* diag = nullptr);

/** Forward counterpart of backward_sweep. */
double forward_sweep(GridFunction& u, const Model& model, const SemigroupParams& params,
                     bool reverse, StepDiag* diag = nullptr);

/**
 * Linearization of one step at u: freezing each node's minimizing velocity
 * turns the update into out[i] = wa*u[a] + wb*u[b] + rhs. A candidate whose
 * frozen row would be the identity (a self-referencing foot at a node where
 * the discount vanishes) is skipped in favour of the next-best candidate, so
 * the rows always carry information.
 */
struct PolicyRow {
    int a = 0, b = 0;
    double wa = 0.0, wb = 0.0, rhs = 0.0;
};
std::vector<PolicyRow> extract_policy(const GridFunction& u, const Model& model,
                                      const SemigroupParams& params, Direction direction);

/**
 * Iterate one of the steps until converged, diverged below the floor, or time-capped.
 * With params.accelerate, the iteration periodically estimates the geometric decay
 * rate of the per-step change and extrapolates along the change direction; a jump
 * that fails to shrink the change is reverted and acceleration is switched off.
 */
EvolveReport evolve(const GridFunction& u0, const Model& model, const SemigroupParams& params,
                    Direction direction);

}  // namespace hj

#endif
