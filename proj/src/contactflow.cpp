#include "hj/contactflow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hj {

double contact_hamiltonian(const ContactState& s, const DifferentiableModel& model) {
    return model.hamiltonian(s.x, s.p) + model.discount(s.x) * s.u - model.c;
}

ContactDeriv contact_rhs(const ContactState& s, const DifferentiableModel& model) {
    ContactDeriv d;
    double hp = model.dH_dp(s.x, s.p);
    d.dx = hp;
    d.dp = -(model.dH_dx(s.x, s.p) + model.dlambda_dx(s.x) * s.u) - s.p * model.discount(s.x);
    d.du = s.p * hp - contact_hamiltonian(s, model);
    return d;
}

namespace {

ContactState advance(const ContactState& s, const ContactDeriv& d, double h) {
    return {s.x + h * d.dx, s.u + h * d.du, s.p + h * d.dp};
}

ContactState rk4_step(const ContactState& s, const DifferentiableModel& model, double h) {
    ContactDeriv k1 = contact_rhs(s, model);
    ContactDeriv k2 = contact_rhs(advance(s, k1, h / 2), model);
    ContactDeriv k3 = contact_rhs(advance(s, k2, h / 2), model);
    ContactDeriv k4 = contact_rhs(advance(s, k3, h), model);
    ContactState out;
    out.x = s.x + h / 6 * (k1.dx + 2 * k2.dx + 2 * k3.dx + k4.dx);
    out.u = s.u + h / 6 * (k1.du + 2 * k2.du + 2 * k3.du + k4.du);
    out.p = s.p + h / 6 * (k1.dp + 2 * k2.dp + 2 * k3.dp + k4.dp);
    return out;
}

}  // namespace

Trajectory integrate(const ContactState& s0, const DifferentiableModel& model, double t_span,
                     double h, Direction direction) {
    if (!(h > 0) || !(t_span > 0))
        throw std::invalid_argument("integrate: h and t_span must be positive");
    Trajectory traj;
    traj.h = h;
    traj.direction = direction;
    double step = direction == Direction::forward ? h : -h;
    int n_steps = static_cast<int>(std::llround(t_span / h));
    ContactState s = s0;
    traj.points.push_back({0.0, s, contact_hamiltonian(s, model)});
    for (int k = 1; k <= n_steps; ++k) {
        s = rk4_step(s, model, step);
        if (std::abs(s.u) > 1e6 || std::abs(s.p) > 1e6) {
            traj.blew_up = true;
            break;
        }
        traj.points.push_back({k * step, s, contact_hamiltonian(s, model)});
    }
    return traj;
}

const char* to_string(StabilityClass c) {
    switch (c) {
        case StabilityClass::saddle: return "saddle";
        case StabilityClass::stable_focus: return "stable-focus";
        case StabilityClass::unstable_focus: return "unstable-focus";
        case StabilityClass::stable_node: return "stable-node";
        case StabilityClass::unstable_node: return "unstable-node";
        case StabilityClass::center: return "center";
        case StabilityClass::degenerate: return "degenerate";
    }
    return "?";
}

std::pair<std::complex<double>, std::complex<double>> eigenvalues_2x2(
    const std::array<double, 4>& j) {
    double tr = j[0] + j[3];
    double det = j[0] * j[3] - j[1] * j[2];
    std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr - 4 * det, 0.0));
    return {(tr + disc) / 2.0, (tr - disc) / 2.0};
}

StabilityClass classify(const std::array<double, 4>& j) {
    double tr = j[0] + j[3];
    double det = j[0] * j[3] - j[1] * j[2];
    const double tol = 1e-10;
    if (std::abs(det) < tol) return StabilityClass::degenerate;
    if (det < 0) return StabilityClass::saddle;
    double disc = tr * tr - 4 * det;
    if (disc < 0) {
        if (std::abs(tr) < tol) return StabilityClass::center;
        return tr < 0 ? StabilityClass::stable_focus : StabilityClass::unstable_focus;
    }
    return tr < 0 ? StabilityClass::stable_node : StabilityClass::unstable_node;
}

namespace {

constexpr double fd_h = 1e-5;

double d_dx(const std::function<double(double, double)>& f, double x, double p) {
    return (f(x + fd_h, p) - f(x - fd_h, p)) / (2 * fd_h);
}
double d_dp(const std::function<double(double, double)>& f, double x, double p) {
    return (f(x, p + fd_h) - f(x, p - fd_h)) / (2 * fd_h);
}
double d1(const std::function<double(double)>& f, double x) {
    return (f(x + fd_h) - f(x - fd_h)) / (2 * fd_h);
}

}  // namespace

std::vector<FixedPointReport> find_fixed_points(const DifferentiableModel& model, int n_seeds) {
    // rest points have p = 0; solve H0(x,0)+lambda(x)u-c = 0, d/dx[H0(x,0)]+lambda'(x)u = 0
    auto F1 = [&](double x, double u) {
        return model.hamiltonian(x, 0.0) + model.discount(x) * u - model.c;
    };
    auto F2 = [&](double x, double u) {
        return model.dH_dx(x, 0.0) + model.dlambda_dx(x) * u;
    };

    int nx = std::max(4, static_cast<int>(std::lround(std::sqrt(static_cast<double>(n_seeds)))));
    int nu = std::max(2, n_seeds / nx);
    const double u_span = 6.0;

    std::vector<FixedPointReport> found;
    auto make_report = [&](double xw, double u) {
        FixedPointReport rep;
        rep.state = {xw, u, 0.0};
        // reduced (x,p) linearization with u frozen (du/dt vanishes to first order)
        rep.jacobian = {d_dx(model.dH_dp, xw, 0.0), d_dp(model.dH_dp, xw, 0.0),
                        -(d_dx(model.dH_dx, xw, 0.0) + d1(model.dlambda_dx, xw) * u),
                        -model.discount(xw)};
        auto [e1, e2] = eigenvalues_2x2(rep.jacobian);
        rep.eig1 = e1;
        rep.eig2 = e2;
        rep.cls = classify(rep.jacobian);
        return rep;
    };
    auto is_duplicate = [&](double xw, double u) {
        for (const auto& r : found) {
            double ddx = std::abs(xw - r.state.x);
            ddx = std::min(ddx, two_pi - ddx);
            if (ddx + std::abs(u - r.state.u) < 1e-4) return true;
        }
        return false;
    };

    // Rest points where lambda vanishes make the (x,u) system quadratically
    // degenerate and cap plain Newton near 1e-6 accuracy, so they are found
    // directly: x* from lambda(x) = 0 (simple roots, Newton to machine
    // precision), u* from the dp/dt equation, accepted only if H vanishes too.
    {
        const int scan = 1024;
        for (int k = 0; k < scan; ++k) {
            double x0 = two_pi * k / scan, x1 = two_pi * (k + 1) / scan;
            double l0 = model.discount(x0), l1 = model.discount(x1);
            if (l0 == 0.0 ? false : (l1 == 0.0 || (l0 > 0) == (l1 > 0))) continue;
            double x = l0 == 0.0 ? x0 : 0.5 * (x0 + x1);
            for (int it = 0; it < 60; ++it) {
                double l = model.discount(x), dl = model.dlambda_dx(x);
                if (l == 0.0 || std::abs(dl) < 1e-12) break;
                double step = l / dl;
                if (std::abs(step) > (x1 - x0)) break;
                x -= step;
            }
            if (std::abs(model.discount(x)) > 1e-12) continue;
            double dl = model.dlambda_dx(x);
            if (std::abs(dl) < 1e-8) continue;
            double u = -model.dH_dx(x, 0.0) / dl;
            if (std::abs(F1(x, u)) > 1e-9) continue;  // not on the H = 0 shell
            double xw = x - two_pi * std::floor(x / two_pi);
            if (xw >= two_pi) xw = 0.0;
            if (is_duplicate(xw, u)) continue;
            found.push_back(make_report(xw, u));
        }
    }

    for (int ix = 0; ix < nx; ++ix) {
        for (int iu = 0; iu < nu; ++iu) {
            double x = two_pi * ix / nx;
            double u = -u_span + 2 * u_span * (iu + 0.5) / nu;
            bool ok = false;
            for (int it = 0; it < 80; ++it) {
                double f1 = F1(x, u), f2 = F2(x, u);
                if (std::abs(f1) < 1e-13 && std::abs(f2) < 1e-13) {
                    ok = true;
                    break;
                }
                double a = d_dx(model.hamiltonian, x, 0.0) + model.dlambda_dx(x) * u;
                double b = model.discount(x);
                double c2 = (F2(x + fd_h, u) - F2(x - fd_h, u)) / (2 * fd_h);
                double d2 = model.dlambda_dx(x);
                // damped Gauss-Newton step, tolerant of rank-deficient systems
                double g1 = a * f1 + c2 * f2, g2 = b * f1 + d2 * f2;
                double m11 = a * a + c2 * c2 + 1e-12, m12 = a * b + c2 * d2;
                double m22 = b * b + d2 * d2 + 1e-12;
                double det = m11 * m22 - m12 * m12;
                double dx = (m22 * g1 - m12 * g2) / det;
                double du = (m11 * g2 - m12 * g1) / det;
                x -= dx;
                u -= du;
                if (!std::isfinite(x) || !std::isfinite(u) || std::abs(u) > 100) break;
            }
            if (!ok) continue;
            double xw = x - two_pi * std::floor(x / two_pi);
            if (xw >= two_pi) xw = 0.0;
            if (is_duplicate(xw, u)) continue;
            found.push_back(make_report(xw, u));
        }
    }
    std::sort(found.begin(), found.end(), [](const FixedPointReport& a, const FixedPointReport& b) {
        return a.state.x < b.state.x;
    });
    return found;
}

namespace {

// right-hand side of the stationary shooting ODE for the e3 model
double shoot_f(double x, double v, ShootingDiag* diag) {
    double r = 2.0 * (1.0 - std::cos(2.0 * x) - v * std::sin(x));
    if (diag) {
        diag->worst_radicand = std::min(diag->worst_radicand, r);
        if (r < -1e-8) diag->flagged = true;
    }
    return std::sqrt(std::max(0.0, r));
}

constexpr double shoot_eps = 1e-4;

// integrate v' = sign * f from x0 towards x1 with n uniform RK4 steps,
// storing the dense output (x ascending not required)
std::vector<std::pair<double, double>> integrate_shoot(double x0, double v0, double x1, int n,
                                                       double sign, ShootingDiag* diag) {
    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<size_t>(n) + 1);
    double h = (x1 - x0) / n;
    double x = x0, v = v0;
    out.emplace_back(x, v);
    for (int k = 1; k <= n; ++k) {
        double k1 = sign * shoot_f(x, v, diag);
        double k2 = sign * shoot_f(x + h / 2, v + h / 2 * k1, diag);
        double k3 = sign * shoot_f(x + h / 2, v + h / 2 * k2, diag);
        double k4 = sign * shoot_f(x + h, v + h * k3, diag);
        v += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        if (v < 0) v = 0;
        x = x0 + k * h;
        out.emplace_back(x, v);
    }
    return out;
}

double sample_sorted(const std::vector<std::pair<double, double>>& a, double x) {
    // a sorted by x ascending
    if (x <= a.front().first) return a.front().second;
    if (x >= a.back().first) return a.back().second;
    size_t lo = 0, hi = a.size() - 1;
    while (hi - lo > 1) {
        size_t mid = (lo + hi) / 2;
        (a[mid].first <= x ? lo : hi) = mid;
    }
    double t = (x - a[lo].first) / (a[hi].first - a[lo].first);
    return a[lo].second * (1 - t) + a[hi].second * t;
}

struct BranchCurves {
    std::vector<std::pair<double, double>> from_left, from_right;  // both sorted by x
};

BranchCurves integrate_branch(double a, double b, int n_steps, ShootingDiag* diag) {
    BranchCurves c;
    // rising integral out of the left endpoint, series start v ~ (x-a)^2
    c.from_left = integrate_shoot(a + shoot_eps, shoot_eps * shoot_eps, b, n_steps, +1.0, diag);
    c.from_left.insert(c.from_left.begin(), {a, 0.0});
    // descending-to-zero integral into the right endpoint, integrated leftward
    c.from_right = integrate_shoot(b - shoot_eps, shoot_eps * shoot_eps, a, n_steps, -1.0, diag);
    std::reverse(c.from_right.begin(), c.from_right.end());
    c.from_right.push_back({b, 0.0});
    return c;
}

double pi() { return two_pi / 2; }

}  // namespace

namespace {

// The one-sided integrals intentionally overrun their valid region (the
// pointwise min discards the overrun), so the radicand diagnostic is taken
// on the combined solution only.
void record_radicand(double x, double v, ShootingDiag* diag) {
    if (!diag) return;
    double r = 2.0 * (1.0 - std::cos(2.0 * x) - v * std::sin(x));
    diag->worst_radicand = std::min(diag->worst_radicand, r);
    if (r < -1e-8) diag->flagged = true;
}

}  // namespace

std::vector<std::pair<double, double>> shooting_branch(Branch branch, int n,
                                                       ShootingDiag* diag) {
    if (n < 128) throw std::invalid_argument("shooting_branch: need n >= 128");
    double a = branch == Branch::left ? 0.0 : pi();
    double b = branch == Branch::left ? pi() : two_pi;
    BranchCurves c = integrate_branch(a, b, 200000, nullptr);
    std::vector<std::pair<double, double>> out;
    double spacing = two_pi / n;
    for (int i = 0; i <= n; ++i) {
        double x = i * spacing;
        if (x < a - 1e-12 || x > b + 1e-12) continue;
        double v = std::min(sample_sorted(c.from_left, x), sample_sorted(c.from_right, x));
        record_radicand(x, v, diag);
        out.emplace_back(x, v);
    }
    return out;
}

GridFunction shooting_oracle(int n, ShootingDiag* diag) {
    PeriodicGrid g = make_grid(n);
    BranchCurves left = integrate_branch(0.0, pi(), 200000, nullptr);
    BranchCurves right = integrate_branch(pi(), two_pi, 200000, nullptr);
    std::vector<double> v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        double x = g.node(i);
        const BranchCurves& c = x <= pi() ? left : right;
        double val = std::min(sample_sorted(c.from_left, x), sample_sorted(c.from_right, x));
        record_radicand(x, val, diag);
        v[static_cast<size_t>(i)] = val;
    }
    return GridFunction(g, std::move(v));
}

double shooting_value(double x, double h_ode) {
    PeriodicGrid g = make_grid(4);
    x = g.wrap(x);
    double a = x <= pi() ? 0.0 : pi();
    double b = x <= pi() ? pi() : two_pi;
    if (x <= a + shoot_eps || x >= b - shoot_eps) return shoot_eps * shoot_eps;
    int n1 = std::max(16, static_cast<int>(std::ceil((x - a - shoot_eps) / h_ode)));
    auto up = integrate_shoot(a + shoot_eps, shoot_eps * shoot_eps, x, n1, +1.0, nullptr);
    int n2 = std::max(16, static_cast<int>(std::ceil((b - shoot_eps - x) / h_ode)));
    auto down = integrate_shoot(b - shoot_eps, shoot_eps * shoot_eps, x, n2, -1.0, nullptr);
    return std::min(up.back().second, down.back().second);
}

}  // namespace hj
