#include "hj/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hj {

SemigroupParams SemigroupParams::defaults(const Model& model, const PeriodicGrid& grid, int m) {
    SemigroupParams p;
    p.dt = 2.0 * grid.spacing;
    if (model.lambda_max > 0.0) p.dt = std::min(p.dt, 0.5 / model.lambda_max);
    p.table = legendre_transform(model, grid, m);
    return p;
}

namespace {

enum class StepKind { backward, forward };

/**
 * Per-node fixed-point update shared by the full step and the in-place sweep.
 * The per-node objective is piecewise linear in v (linear interpolation of u
 * at the characteristic foot, linear interpolation of L along v), so its exact
 * minimum over [-V, V] sits at a kink: a table velocity or a velocity at which
 * the foot crosses a grid node. Scanning that fixed candidate set gives the
 * exact minimum, which keeps the scheme monotone and makes the backward /
 * forward duality identity hold at rounding level.
 */
struct StepKernel {
    const Model& model;
    const PeriodicGrid& g;
    const LagrangianTable& table;
    double dt, h, vmax, sgn;
    int n, m;
    bool fwd;
    std::vector<int> shift;      // integer part of the foot offset per table velocity
    std::vector<double> weight;  // fractional part of the foot offset
    bool boundary = false;

    StepKernel(const Model& mdl, const GridFunction& u, const SemigroupParams& params,
               StepKind kind)
        : model(mdl), g(u.grid), table(params.table), dt(params.dt), h(u.grid.spacing),
          vmax(params.table.velocities.back()), n(u.grid.n), m(params.table.m()),
          fwd(kind == StepKind::forward) {
        if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
        if (!(dt * model.lambda_max < 1.0))
            throw std::invalid_argument("step: dt * lambda_max must be < 1");
        if (!table.grid.same_as(g)) throw std::invalid_argument("step: table grid mismatch");
        sgn = fwd ? -1.0 : 1.0;
        // The foot offset v_j*dt of a table velocity is the same at every node,
        // so its integer shift and interpolation weight are precomputed once.
        shift.resize(static_cast<size_t>(m));
        weight.resize(static_cast<size_t>(m));
        for (int j = 0; j < m; ++j) {
            double s = sgn * table.velocities[static_cast<size_t>(j)] * dt / h;
            double q = std::floor(s);
            weight[static_cast<size_t>(j)] = s - q;  // foot = node (i - q) minus this fraction
            int qi = static_cast<int>(q) % n;
            shift[static_cast<size_t>(j)] = qi < 0 ? qi + n : qi;
        }
    }

    double update(const GridFunction& u, int i) {
        const double x = g.node(i);
        double best = 1e300;
        double best_v = 0.0;

        for (int j = 0; j < m; ++j) {
            int a = i - shift[static_cast<size_t>(j)];
            if (a < 0) a += n;
            int b = a - 1;
            if (b < 0) b += n;
            double w = weight[static_cast<size_t>(j)];
            double val = sgn * ((1.0 - w) * u[a] + w * u[b]) + dt * table.at(i, j);
            if (val < best) {
                best = val;
                best_v = table.velocities[static_cast<size_t>(j)];
            }
        }

        // velocities at which the foot point lands exactly on a grid node
        int k_lo = static_cast<int>(std::ceil((x - vmax * dt) / h));
        int k_hi = static_cast<int>(std::floor((x + vmax * dt) / h));
        for (int k = k_lo; k <= k_hi; ++k) {
            double v = fwd ? (k * h - x) / dt : (x - k * h) / dt;
            if (!(v > -vmax && v < vmax)) continue;
            int a = k % n;
            if (a < 0) a += n;
            double val = sgn * u[a] + dt * table.eval(i, v);
            if (val < best) {
                best = val;
                best_v = v;
            }
        }

        if (std::abs(best_v) == vmax) boundary = true;

        double lam = model.discount(x);
        return fwd ? (-best - dt * model.c) / (1.0 - dt * lam)
                   : (best + dt * model.c) / (1.0 + dt * lam);
    }

    PolicyRow policy_row(const GridFunction& u, int i) {
        const double x = g.node(i);
        const double lam = model.discount(x);
        const double alpha = 1.0 / (fwd ? 1.0 - dt * lam : 1.0 + dt * lam);
        double best = 1e300;
        bool found = false;
        int ra = i, rb = i;
        double rwa = 0.0, rwb = 0.0, rl = 0.0;

        auto consider = [&](int a, int b, double wa, double wb, double dtl) {
            double val = sgn * (wa * u[a] + wb * u[b]) + dtl;
            // a row that reproduces u[i] exactly carries no information; skip it
            double self = alpha * ((a == i ? wa : 0.0) + (b == i ? wb : 0.0));
            if (self >= 1.0 - 1e-9) return;
            if (val < best) {
                best = val;
                found = true;
                ra = a;
                rb = b;
                rwa = wa;
                rwb = wb;
                rl = dtl;
            }
        };

        for (int j = 0; j < m; ++j) {
            int a = i - shift[static_cast<size_t>(j)];
            if (a < 0) a += n;
            int b = a - 1;
            if (b < 0) b += n;
            double w = weight[static_cast<size_t>(j)];
            consider(a, b, 1.0 - w, w, dt * table.at(i, j));
        }
        int k_lo = static_cast<int>(std::ceil((x - vmax * dt) / h));
        int k_hi = static_cast<int>(std::floor((x + vmax * dt) / h));
        for (int k = k_lo; k <= k_hi; ++k) {
            double v = fwd ? (k * h - x) / dt : (x - k * h) / dt;
            if (!(v > -vmax && v < vmax)) continue;
            int a = k % n;
            if (a < 0) a += n;
            consider(a, a, 1.0, 0.0, dt * table.eval(i, v));
        }

        PolicyRow row;
        if (!found) {  // no usable candidate: freeze the node at its step value
            row.a = row.b = i;
            row.rhs = update(u, i);
            return row;
        }
        row.a = ra;
        row.b = rb;
        row.wa = alpha * rwa;
        row.wb = alpha * rwb;
        row.rhs = alpha * (fwd ? -rl - dt * model.c : rl + dt * model.c);
        return row;
    }
};

GridFunction step_impl(const GridFunction& u, const Model& model, const SemigroupParams& params,
                       StepKind kind, StepDiag* diag) {
    StepKernel kernel(model, u, params, kind);
    std::vector<double> out(static_cast<size_t>(kernel.n));
    for (int i = 0; i < kernel.n; ++i) out[static_cast<size_t>(i)] = kernel.update(u, i);

    if (kernel.boundary) {
        if (params.strict)
            throw std::runtime_error("step: arg optimum on velocity range boundary");
        if (diag) diag->boundary = true;
    }
    return GridFunction(u.grid, std::move(out));
}

double sweep_impl(GridFunction& u, const Model& model, const SemigroupParams& params,
                  StepKind kind, bool reverse, StepDiag* diag) {
    StepKernel kernel(model, u, params, kind);
    double change = 0.0;
    for (int k = 0; k < kernel.n; ++k) {
        int i = reverse ? kernel.n - 1 - k : k;
        double v = kernel.update(u, i);
        change = std::max(change, std::abs(v - u[i]));
        u[i] = v;
    }
    if (kernel.boundary) {
        if (params.strict)
            throw std::runtime_error("sweep: arg optimum on velocity range boundary");
        if (diag) diag->boundary = true;
    }
    return change;
}

}  // namespace

GridFunction backward_step(const GridFunction& u, const Model& model,
                           const SemigroupParams& params, StepDiag* diag) {
    return step_impl(u, model, params, StepKind::backward, diag);
}

GridFunction forward_step(const GridFunction& u, const Model& model,
                          const SemigroupParams& params, StepDiag* diag) {
    return step_impl(u, model, params, StepKind::forward, diag);
}

double backward_sweep(GridFunction& u, const Model& model, const SemigroupParams& params,
                      bool reverse, StepDiag* diag) {
    return sweep_impl(u, model, params, StepKind::backward, reverse, diag);
}

double forward_sweep(GridFunction& u, const Model& model, const SemigroupParams& params,
                     bool reverse, StepDiag* diag) {
    return sweep_impl(u, model, params, StepKind::forward, reverse, diag);
}

std::vector<PolicyRow> extract_policy(const GridFunction& u, const Model& model,
                                      const SemigroupParams& params, Direction direction) {
    StepKernel kernel(model, u, params,
                      direction == Direction::forward ? StepKind::forward : StepKind::backward);
    std::vector<PolicyRow> rows(static_cast<size_t>(kernel.n));
    for (int i = 0; i < kernel.n; ++i) rows[static_cast<size_t>(i)] = kernel.policy_row(u, i);
    return rows;
}

EvolveReport evolve(const GridFunction& u0, const Model& model, const SemigroupParams& params,
                    Direction direction) {
    EvolveReport rep;
    GridFunction u = u0;
    rep.min_history.emplace_back(0.0, u.min());
    rep.max_history.emplace_back(0.0, u.max());

    // extrapolation state: per-step change vectors at block boundaries, jump backup
    const int block = 25;
    const bool accel = params.accelerate;
    int since_block = 0, cooldown = 0;
    double block_change = -1.0;
    bool pending = false;
    double saved_change = 0.0;
    GridFunction saved;
    std::vector<double> delta, prev_delta;

    double t = 0.0;
    int consecutive = 0;
    while (true) {
        StepDiag diag;
        GridFunction next = direction == Direction::backward
                                ? backward_step(u, model, params, &diag)
                                : forward_step(u, model, params, &diag);
        t += params.dt;
        ++rep.steps;
        rep.boundary_hit = rep.boundary_hit || diag.boundary;
        double change = sup_diff(next, u);
        if (accel) {
            delta.resize(static_cast<size_t>(u.size()));
            for (int i = 0; i < u.size(); ++i) delta[static_cast<size_t>(i)] = next[i] - u[i];
        }
        u = std::move(next);

        if (accel && ++since_block == block) {
            since_block = 0;
            if (pending) {
                pending = false;
                if (change >= saved_change) {  // the jump made things worse: undo it
                    u = saved;
                    change = saved_change;
                    prev_delta.clear();
                    cooldown = 4;  // keep stepping plainly for a few blocks
                    ++rep.reverts;
                }
            }
            if (cooldown > 0) --cooldown;
            if (cooldown == 0 && block_change > 0.0 && change > 0.0 && change < block_change &&
                !prev_delta.empty()) {
                // each node decays at its own geometric rate near the fixed point;
                // extrapolate node-wise to the limit of that geometric sequence
                saved = u;
                saved_change = change;
                pending = true;
                ++rep.jumps;
                for (int i = 0; i < u.size(); ++i) {
                    double d = delta[static_cast<size_t>(i)];
                    double p0 = prev_delta[static_cast<size_t>(i)];
                    if (d == 0.0 || p0 == 0.0 || (d > 0.0) != (p0 > 0.0)) continue;
                    double ratio = d / p0;
                    if (!(ratio < 1.0)) continue;
                    double rho = std::pow(ratio, 1.0 / block);
                    double scale = std::min(rho / (1.0 - rho), 0.5 / std::abs(d));
                    u[i] += scale * d;
                }
                consecutive = 0;
            }
            prev_delta = delta;
            block_change = change;
        }

        rep.min_history.emplace_back(t, u.min());
        rep.max_history.emplace_back(t, u.max());

        consecutive = change / params.dt <= params.tol_fix ? consecutive + 1 : 0;
        if (consecutive >= params.window) {
            rep.status = EvolveStatus::converged;
            break;
        }
        if (u.min() < params.divergence_floor) {
            rep.status = EvolveStatus::diverged_down;
            break;
        }
        if (t >= params.t_max) {
            rep.status = EvolveStatus::time_capped;
            break;
        }
    }

    rep.t_elapsed = t;
    rep.final = std::move(u);

    const auto& mh = rep.min_history;
    if (mh.size() > static_cast<size_t>(params.window)) {
        bool dec = true;
        size_t start = mh.size() - static_cast<size_t>(params.window);
        for (size_t k = start; k + 1 < mh.size(); ++k)
            if (mh[k + 1].second > mh[k].second) dec = false;
        rep.tail_decreasing = dec && mh.back().second < mh[start].second;
    }
    return rep;
}

}  // namespace hj
