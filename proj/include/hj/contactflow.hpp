#ifndef HJ_CONTACTFLOW_HPP
#define HJ_CONTACTFLOW_HPP

#include <array>
#include <complex>
#include <vector>

#include "hj/grid.hpp"
#include "hj/model.hpp"
#include "hj/semigroup.hpp"

namespace hj {

/** Point (x, u, p) of the contact phase space. */
struct ContactState {
    double x = 0.0, u = 0.0, p = 0.0;
};

struct ContactDeriv {
    double dx = 0.0, dp = 0.0, du = 0.0;
};

/** Full contact Hamiltonian H(x,u,p) = H0(x,p) + lambda(x) u - c. */
double contact_hamiltonian(const ContactState& s, const DifferentiableModel& model);

/**
 * Contact equations: dx = dH/dp, dp = -dH/dx - p dH/du, du = p dH/dp - H,
 * with dH/du = lambda(x).
 */
ContactDeriv contact_rhs(const ContactState& s, const DifferentiableModel& model);

struct TrajectoryPoint {
    double t = 0.0;
    ContactState state;
    double H = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryPoint> points;
    double h = 0.0;
    Direction direction = Direction::forward;
    bool blew_up = false;  // |u| or |p| exceeded 1e6; points holds the partial orbit
};

/** Classical RK4 with fixed step h; H recorded at every step. */
Trajectory integrate(const ContactState& s0, const DifferentiableModel& model, double t_span,
                     double h, Direction direction = Direction::forward);

enum class StabilityClass {
    saddle,
    stable_focus,
    unstable_focus,
    stable_node,
    unstable_node,
    center,
    degenerate
};

const char* to_string(StabilityClass c);

/** Eigenvalues of a 2x2 matrix, stored row-major. */
std::pair<std::complex<double>, std::complex<double>> eigenvalues_2x2(
    const std::array<double, 4>& j);

/** Classification by determinant / trace / discriminant signs. */
StabilityClass classify(const std::array<double, 4>& jacobian);

struct FixedPointReport {
    ContactState state;
    std::array<double, 4> jacobian{};  // reduced (x,p) linearization, u held fixed
    std::complex<double> eig1, eig2;
    StabilityClass cls = StabilityClass::degenerate;
};

/**
 * Newton search for rest points of the flow: p = 0, H(x,u,0) = 0 and
 * dp/dt = 0, from n_seeds seeds over (x,u); duplicates merged at 1e-6.
 */
std::vector<FixedPointReport> find_fixed_points(const DifferentiableModel& model,
                                                int n_seeds = 64);

enum class Branch { left, right };  // [0,pi] and [pi,2pi]

struct ShootingDiag {
    double worst_radicand = 0.0;  // most negative radicand seen before clamping
    bool flagged = false;         // radicand below -1e-8
};

/**
 * Stationary solution of the v' = sqrt(2(1 - cos 2x - v sin x)) shooting
 * problem on one branch: one-sided integrals from each degenerate endpoint
 * (series start v(eps) = eps^2), combined by pointwise minimum.
 * Returns values at the nodes of an n-point grid that fall on the branch.
 */
std::vector<std::pair<double, double>> shooting_branch(Branch branch, int n,
                                                       ShootingDiag* diag = nullptr);

/** Both branches assembled into a grid function on an n-node grid over [0, 2pi). */
GridFunction shooting_oracle(int n, ShootingDiag* diag = nullptr);

/** Solution value at an arbitrary point, by dense integration (step h_ode). */
double shooting_value(double x, double h_ode = 1e-5);

}  // namespace hj

#endif
