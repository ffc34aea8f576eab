#include "hj/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <limits>

namespace hj {

double starting_constant(const Model& model, const PeriodicGrid& grid, int sign) {
    double h0 = 0.0;
    double min_pos = 1e300;
    for (int i = 0; i < grid.n; ++i) {
        double x = grid.node(i);
        h0 = std::max(h0, std::abs(model.hamiltonian(x, 0.0)));
        double l = model.discount(x);
        if (l > 0) min_pos = std::min(min_pos, l);
    }
    double denom = std::max(min_pos == 1e300 ? 0.0 : min_pos, 0.1);
    return sign * (h0 + std::abs(model.c) + 10.0) / denom;
}

namespace {

/**
 * Band LU with partial pivoting, LAPACK-style storage: ab[kl+ku+i-j][j] holds
 * entry (i,j), with kl extra superdiagonal rows on top for pivoting fill.
 */
class BandLU {
  public:
    BandLU(int n, int kl, int ku)
        : n_(n), kl_(kl), ku_(ku), lda_(2 * kl + ku + 1),
          ab_(static_cast<size_t>(lda_) * static_cast<size_t>(n), 0.0),
          piv_(static_cast<size_t>(n)) {}

    double& at(int i, int j) {
        return ab_[static_cast<size_t>(kl_ + ku_ + i - j) +
                   static_cast<size_t>(j) * static_cast<size_t>(lda_)];
    }

    bool factor() {
        for (int j = 0; j < n_; ++j) {
            int imax = j;
            double amax = std::abs(at(j, j));
            int ilim = std::min(n_ - 1, j + kl_);
            for (int i = j + 1; i <= ilim; ++i)
                if (std::abs(at(i, j)) > amax) {
                    amax = std::abs(at(i, j));
                    imax = i;
                }
            if (amax == 0.0) return false;
            piv_[static_cast<size_t>(j)] = imax;
            int jlim = std::min(n_ - 1, j + kl_ + ku_);
            if (imax != j)
                for (int k = j; k <= jlim; ++k) std::swap(at(j, k), at(imax, k));
            for (int i = j + 1; i <= ilim; ++i) {
                double l = at(i, j) / at(j, j);
                at(i, j) = l;
                for (int k = j + 1; k <= jlim; ++k) at(i, k) -= l * at(j, k);
            }
        }
        return true;
    }

    void solve(std::vector<double>& x) {
        for (int j = 0; j < n_; ++j) {
            int p = piv_[static_cast<size_t>(j)];
            if (p != j) std::swap(x[static_cast<size_t>(j)], x[static_cast<size_t>(p)]);
            int ilim = std::min(n_ - 1, j + kl_);
            for (int i = j + 1; i <= ilim; ++i)
                x[static_cast<size_t>(i)] -= at(i, j) * x[static_cast<size_t>(j)];
        }
        for (int i = n_ - 1; i >= 0; --i) {
            int jlim = std::min(n_ - 1, i + kl_ + ku_);
            double s = x[static_cast<size_t>(i)];
            for (int j = i + 1; j <= jlim; ++j) s -= at(i, j) * x[static_cast<size_t>(j)];
            x[static_cast<size_t>(i)] = s / at(i, i);
        }
    }

  private:
    int n_, kl_, ku_, lda_;
    std::vector<double> ab_;
    std::vector<int> piv_;
};

/**
 * Exact solve of (I - A) x = rhs for the frozen-policy system. A couples each
 * node only to feet within vmax*dt of it, so I - A is banded apart from the
 * periodic wrap, which enters as a low-rank Woodbury correction.
 */
bool solve_policy_system(const std::vector<PolicyRow>& rows, std::vector<double>& x) {
    const int n = static_cast<int>(rows.size());
    struct Entry {
        int i, j;
        double val;
    };
    std::vector<Entry> banded, wraps;
    int bw = 1;
    auto classify = [&](int i, int j, double val) {
        if (val == 0.0) return;
        int d = j - i;
        if (d > n / 2) d -= n;
        if (d < -(n / 2)) d += n;
        if (i + d >= 0 && i + d < n) {
            banded.push_back({i, i + d, val});
            bw = std::max(bw, std::abs(d));
        } else {
            wraps.push_back({i, j, val});
        }
    };
    for (int i = 0; i < n; ++i) {
        classify(i, rows[static_cast<size_t>(i)].a, -rows[static_cast<size_t>(i)].wa);
        classify(i, rows[static_cast<size_t>(i)].b, -rows[static_cast<size_t>(i)].wb);
    }
    if (2 * bw + 1 >= n) return false;  // band formulation degenerates on tiny grids

    BandLU lu(n, bw, bw);
    for (int i = 0; i < n; ++i) lu.at(i, i) += 1.0;
    for (const Entry& e : banded) lu.at(e.i, e.j) += e.val;
    if (!lu.factor()) return false;

    std::vector<double> y(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) y[static_cast<size_t>(i)] = rows[static_cast<size_t>(i)].rhs;
    lu.solve(y);

    const int r = static_cast<int>(wraps.size());
    if (r == 0) {
        x = std::move(y);
        return true;
    }
    // Woodbury: A = B + sum_p e_{i_p} (val_p e_{j_p})^T; solve the r x r capacitance system
    std::vector<std::vector<double>> z(static_cast<size_t>(r));
    for (int p = 0; p < r; ++p) {
        std::vector<double> e(static_cast<size_t>(n), 0.0);
        e[static_cast<size_t>(wraps[static_cast<size_t>(p)].i)] = 1.0;
        lu.solve(e);
        z[static_cast<size_t>(p)] = std::move(e);
    }
    auto S = [r](std::vector<double>& m, int i, int j) -> double& {
        return m[static_cast<size_t>(i) * static_cast<size_t>(r) + static_cast<size_t>(j)];
    };
    std::vector<double> cap(static_cast<size_t>(r) * static_cast<size_t>(r), 0.0);
    std::vector<double> w(static_cast<size_t>(r));
    for (int p = 0; p < r; ++p) {
        const Entry& wp = wraps[static_cast<size_t>(p)];
        w[static_cast<size_t>(p)] = wp.val * y[static_cast<size_t>(wp.j)];
        for (int q = 0; q < r; ++q)
            S(cap, p, q) =
                (p == q ? 1.0 : 0.0) + wp.val * z[static_cast<size_t>(q)][static_cast<size_t>(wp.j)];
    }
    for (int col = 0; col < r; ++col) {  // dense Gaussian elimination with partial pivoting
        int piv = col;
        for (int i = col + 1; i < r; ++i)
            if (std::abs(S(cap, i, col)) > std::abs(S(cap, piv, col))) piv = i;
        if (S(cap, piv, col) == 0.0) return false;
        if (piv != col) {
            for (int k = 0; k < r; ++k) std::swap(S(cap, piv, k), S(cap, col, k));
            std::swap(w[static_cast<size_t>(piv)], w[static_cast<size_t>(col)]);
        }
        for (int i = col + 1; i < r; ++i) {
            double f = S(cap, i, col) / S(cap, col, col);
            for (int k = col; k < r; ++k) S(cap, i, k) -= f * S(cap, col, k);
            w[static_cast<size_t>(i)] -= f * w[static_cast<size_t>(col)];
        }
    }
    for (int i = r - 1; i >= 0; --i) {
        double s = w[static_cast<size_t>(i)];
        for (int k = i + 1; k < r; ++k) s -= S(cap, i, k) * w[static_cast<size_t>(k)];
        w[static_cast<size_t>(i)] = s / S(cap, i, i);
    }
    x.assign(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double s = y[static_cast<size_t>(i)];
        for (int p = 0; p < r; ++p)
            s -= z[static_cast<size_t>(p)][static_cast<size_t>(i)] * w[static_cast<size_t>(p)];
        x[static_cast<size_t>(i)] = s;
    }
    return true;
}

/**
 * Policy iteration: freeze each node's minimizing velocity, solve the frozen
 * linear fixed-point system exactly, re-extract the policy, repeat. The number
 * of iterations needed does not grow with the grid size, unlike plain value
 * iteration whose slowest mode decays like exp(-spacing * t) near degenerate
 * discount points. Returns false (leaving u at its best iterate) on any
 * irregularity; the caller then falls back to value iteration.
 */
bool howard_refine(GridFunction& u, const Model& model, const SemigroupParams& params,
                   Direction dir, double leash = 5.0, double res_accept = -1.0) {
    // At nodes nearest the projected Aubry points the optimal velocity is zero
    // and the discount vanishes, leaving an irreducible step residual of order
    // dt*(L+c) = O(dt*h); callers polishing the minimal solution pass a
    // res_accept of that size instead of the default tight tolerance.
    if (res_accept < 0.0) res_accept = 0.5 * params.tol_fix * params.dt;
    const GridFunction anchor = u;
    double best_res = 1e300;
    int stall = 0;
    for (int iter = 0; iter < 80; ++iter) {
        std::vector<PolicyRow> rows = extract_policy(u, model, params, dir);
        std::vector<double> x(static_cast<size_t>(u.size()));
        for (int i = 0; i < u.size(); ++i) x[static_cast<size_t>(i)] = u[i];
        if (!solve_policy_system(rows, x)) return false;
        GridFunction cand(u.grid, std::move(x));
        // a leash around the entry state rejects slides toward a different fixed
        // point (and NaN); the caller sets it tight when polishing u_min, whose
        // upper basin drains to u_max
        if (!(sup_diff(cand, anchor) <= leash)) return false;
        GridFunction stepped = dir == Direction::backward ? backward_step(cand, model, params)
                                                          : forward_step(cand, model, params);
        double res = sup_diff(stepped, cand);
        if (!(res < 1e300)) return false;
        u = std::move(cand);
        if (res <= res_accept) return true;
        if (res < 0.5 * best_res) {
            best_res = res;
            stall = 0;
        } else if (++stall >= 8) {
            return false;
        }
    }
    return false;
}

/**
 * Stationary solve: a short burst of (accelerated) semigroup iteration settles
 * the fast transient and decides solvable-versus-blow-down; policy iteration
 * then closes the slow tail. If policy iteration declines, the semigroup
 * iteration resumes with the caller's full time budget.
 */
EvolveReport solve_stationary(const GridFunction& start, const Model& model,
                              const SemigroupParams& params, Direction dir) {
    SemigroupParams phase1 = params;
    phase1.t_max = std::min(params.t_max, 40.0);
    EvolveReport rep = evolve(start, model, phase1, dir);
    if (rep.status != EvolveStatus::time_capped) return rep;
    GridFunction u = rep.final;
    if (howard_refine(u, model, params, dir)) {
        rep.status = EvolveStatus::converged;
        rep.final = std::move(u);
        return rep;
    }
    return evolve(rep.final, model, params, dir);
}

/**
 * Backward relaxation toward the minimal solution. That fixed point sits on a
 * knife edge: iterates above it drain to the maximal solution, iterates below
 * it blow down, so discretization error always pushes the trajectory off
 * eventually. Track the iterate with the smallest per-step change (the closest
 * approach to a stationary point) and, whenever the trajectory escapes, try a
 * policy-iteration polish from that iterate, leashed to a trust region
 * proportional to its residual change so the polish cannot slide to a distant
 * fixed point. If no stationary point exists at or below the trajectory and
 * the closest approach hugs u_max to within discretization error, the minimal
 * and maximal solutions have merged (uniqueness at criticality): return u_max.
 */
EvolveReport approach_minimal(const GridFunction& start, const GridFunction& u_max,
                              const Model& model, const SemigroupParams& params) {
    EvolveReport rep;
    GridFunction u = start;
    GridFunction best = u;
    double best_change = std::numeric_limits<double>::infinity();
    double next_attempt = 1.0;  // polish when the change halves below this
    int worse = 0, consecutive = 0;
    double t = 0.0;
    auto polish = [&](const GridFunction& from, double leash, GridFunction& out) {
        out = from;
        double res_accept = 1.5 * params.dt * from.grid.spacing;
        return howard_refine(out, model, params, Direction::backward,
                             std::min(leash, 5.0), res_accept);
    };
    bool escaped = false;
    while (true) {
        GridFunction next = backward_step(u, model, params);
        double change = sup_diff(next, u);
        u = std::move(next);
        t += params.dt;
        ++rep.steps;
        if (change < best_change) {
            best_change = change;
            best = u;
            worse = 0;
        }
        if (u.min() < params.divergence_floor) {
            rep.status = EvolveStatus::diverged_down;
            escaped = true;
            break;
        }
        if (change <= next_attempt) {
            next_attempt = change / 2.0;
            GridFunction cand;
            if (polish(u, 50.0 * change, cand)) {
                rep.status = EvolveStatus::converged;
                rep.t_elapsed = t;
                rep.final = std::move(cand);
                return rep;
            }
        }
        if (change > 3.0 * best_change && ++worse >= 50) {
            escaped = true;
            break;
        }
        consecutive = (change / params.dt <= params.tol_fix) ? consecutive + 1 : 0;
        if (consecutive >= params.window) {
            rep.status = EvolveStatus::converged;
            rep.t_elapsed = t;
            rep.final = std::move(u);
            return rep;
        }
        if (t >= params.t_max) {
            rep.status = EvolveStatus::time_capped;
            break;
        }
    }
    rep.t_elapsed = t;
    // last chance: a stationary point right next to the closest approach
    GridFunction cand;
    if (polish(best, 50.0 * best_change, cand)) {
        rep.status = EvolveStatus::converged;
        rep.final = std::move(cand);
        return rep;
    }
    double pinch = 20.0 * (u.grid.spacing + params.dt);
    if (escaped && sup_diff(best, u_max) <= pinch) {
        rep.status = EvolveStatus::converged;
        rep.final = u_max;
        return rep;
    }
    rep.final = std::move(best);
    if (rep.status == EvolveStatus::converged) rep.status = EvolveStatus::time_capped;
    return rep;
}

}  // namespace

GridFunction compute_u_max(const Model& model, const PeriodicGrid& grid,
                           const SemigroupParams& params, bool probe_maximality,
                           EvolveReport* report) {
    double c1 = starting_constant(model, grid, +1);
    EvolveReport rep =
        solve_stationary(GridFunction::constant(grid, c1), model, params, Direction::backward);
    if (rep.status == EvolveStatus::diverged_down)
        throw NoSolutionError("compute_u_max: diverged down, no solution at c=" +
                              std::to_string(model.c));
    if (rep.status == EvolveStatus::time_capped)
        throw std::runtime_error("compute_u_max: time-capped before convergence (ambiguous)");
    if (probe_maximality) {
        EvolveReport rep2 = solve_stationary(GridFunction::constant(grid, c1 + 10.0), model,
                                             params, Direction::backward);
        if (rep2.status != EvolveStatus::converged ||
            sup_diff(rep.final, rep2.final) > 10.0 * params.tol_fix)
            throw std::runtime_error("compute_u_max: maximality probe failed");
    }
    if (report) *report = rep;
    return rep.final;
}

StationaryPair compute_u_min(const Model& model, const PeriodicGrid& grid,
                             const SemigroupParams& params) {
    StationaryPair pair{GridFunction(), GridFunction(), GridFunction(), 0.0};
    pair.u_max = compute_u_max(model, grid, params);

    double c2 = starting_constant(model, grid, -1);
    EvolveReport fwd = solve_stationary(GridFunction::constant(grid, c2), model, params,
                                        Direction::forward);
    if (fwd.status != EvolveStatus::converged)
        throw NoSolutionError("compute_u_min: forward stage did not converge at c=" +
                              std::to_string(model.c));
    pair.u_min_plus = fwd.final;

    EvolveReport back = approach_minimal(pair.u_min_plus, pair.u_max, model, params);
    if (back.status != EvolveStatus::converged)
        throw NoSolutionError("compute_u_min: backward stage did not converge at c=" +
                              std::to_string(model.c));
    pair.u_min = back.final;
    pair.gap = sup_diff(pair.u_max, pair.u_min);
    return pair;
}

namespace {

ProbeReport classify_c(const Model& family, const PeriodicGrid& grid,
                       const SemigroupParams& params, double c,
                       const GridFunction* warm_start, GridFunction* solution_out) {
    Model m = family.with_c(c);
    GridFunction start = warm_start ? *warm_start
                                    : GridFunction::constant(grid, starting_constant(m, grid, +1));
    SemigroupParams p = params;
    p.t_max = 150.0;
    // blow-down drifts at a rate set by the distance to the critical value, so a
    // start-relative floor catches it much sooner than an absolute one; that is
    // only sound for warm starts already near a solution -- a cold start from a
    // high constant legitimately descends a long way, so its floor must sit
    // below any possible solution instead
    p.divergence_floor = warm_start ? start.min() - 30.0
                                    : starting_constant(m, grid, -1) - 10.0;
    EvolveReport rep = solve_stationary(start, m, p, Direction::backward);
    ProbeReport probe;
    probe.c = c;
    probe.status = rep.status;
    probe.t_elapsed = rep.t_elapsed;
    switch (rep.status) {
        case EvolveStatus::converged:
            probe.cls = Solvability::solvable;
            if (solution_out) *solution_out = rep.final;
            break;
        case EvolveStatus::diverged_down:
            probe.cls = Solvability::unsolvable;
            break;
        case EvolveStatus::time_capped: {
            // a sustained net descent of the minimum over the second half of the
            // run is blow-down in progress; an inert minimum means a fixed point
            // is being approached (possibly slowly near degeneracies)
            const auto& mh = rep.min_history;
            double drop = mh[mh.size() / 2].second - mh.back().second;
            probe.cls = drop > 1e-3 ? Solvability::unsolvable : Solvability::solvable;
            if (probe.cls == Solvability::solvable && solution_out) *solution_out = rep.final;
            break;
        }
    }
    return probe;
}

}  // namespace

C0Estimate estimate_c0(const Model& model_family, const PeriodicGrid& grid, double c_lo,
                       double c_hi, int iterations, int m_velocities) {
    if (!(c_lo < c_hi)) throw std::invalid_argument("estimate_c0: need c_lo < c_hi");
    SemigroupParams params = SemigroupParams::defaults(model_family, grid, m_velocities);

    C0Estimate est;
    est.iterations = iterations;

    GridFunction warm;
    bool have_warm = false;

    ProbeReport lo_probe = classify_c(model_family, grid, params, c_lo, nullptr, nullptr);
    if (lo_probe.cls != Solvability::unsolvable)
        throw std::invalid_argument("estimate_c0: bracket invalid, c_lo not unsolvable");
    est.probes.push_back(lo_probe);

    ProbeReport hi_probe = classify_c(model_family, grid, params, c_hi, nullptr, &warm);
    if (hi_probe.cls != Solvability::solvable)
        throw std::invalid_argument("estimate_c0: bracket invalid, c_hi not solvable");
    have_warm = true;
    est.probes.push_back(hi_probe);

    double lo = c_lo, hi = c_hi;
    for (int it = 0; it < iterations; ++it) {
        double mid = 0.5 * (lo + hi);
        GridFunction sol;
        ProbeReport probe =
            classify_c(model_family, grid, params, mid, have_warm ? &warm : nullptr, &sol);
        est.probes.push_back(probe);
        if (probe.cls == Solvability::ambiguous)
            throw std::runtime_error("estimate_c0: ambiguous probe outcome at c=" +
                                     std::to_string(mid));
        if (probe.cls == Solvability::solvable) {
            hi = mid;
            warm = sol;
            have_warm = true;
        } else {
            lo = mid;
        }
    }
    est.lo = lo;
    est.hi = hi;
    for (const auto& a : est.probes)
        for (const auto& b : est.probes)
            if (a.cls == Solvability::unsolvable && b.cls == Solvability::solvable && a.c > b.c)
                est.monotone = false;
    return est;
}

double estimate_c0_infsup(const Model& model, const PeriodicGrid& grid,
                          const InfSupOptions& opts) {
    const int n = grid.n;
    const double h = grid.spacing;
    Model m0 = model.with_c(0.0);
    GridFunction u = GridFunction::constant(grid, 0.0);

    auto true_max = [&](const GridFunction& w) { return subsolution_residual(w, m0).max(); };
    double best = true_max(u);

    std::vector<double> r(static_cast<size_t>(n)), pstar(static_cast<size_t>(n)),
        theta(static_cast<size_t>(n)), grad(static_cast<size_t>(n));

    for (int stage = 0; stage < opts.stages; ++stage) {
        double temp = std::pow(10.0, -3.0 * stage / std::max(1, opts.stages - 1));
        for (int step = 0; step < opts.steps_per_stage; ++step) {
            double rmax = -1e300;
            for (int i = 0; i < n; ++i) {
                int im = (i + n - 1) % n, ip = (i + 1) % n;
                double pb = (u[i] - u[im]) / h, pf = (u[ip] - u[i]) / h;
                double x = grid.node(i);
                double bestr = -1e300, bp = pb, bth = 0.0;
                for (int k = 0; k <= 10; ++k) {
                    double th = k / 10.0;
                    double p = pb + (pf - pb) * th;
                    double val = m0.hamiltonian(x, p) + m0.discount(x) * u[i];
                    if (val > bestr) {
                        bestr = val;
                        bp = p;
                        bth = th;
                    }
                }
                r[static_cast<size_t>(i)] = bestr;
                pstar[static_cast<size_t>(i)] = bp;
                theta[static_cast<size_t>(i)] = bth;
                rmax = std::max(rmax, bestr);
            }
            double wsum = 0.0;
            std::fill(grad.begin(), grad.end(), 0.0);
            for (int i = 0; i < n; ++i) {
                double w = std::exp((r[static_cast<size_t>(i)] - rmax) / temp);
                wsum += w;
                int im = (i + n - 1) % n, ip = (i + 1) % n;
                double x = grid.node(i);
                double p = pstar[static_cast<size_t>(i)], th = theta[static_cast<size_t>(i)];
                double hp = (m0.hamiltonian(x, p + 1e-6) - m0.hamiltonian(x, p - 1e-6)) / 2e-6;
                grad[static_cast<size_t>(i)] += w * (m0.discount(x) + hp * (1.0 - 2.0 * th) / h);
                grad[static_cast<size_t>(im)] += w * hp * (-(1.0 - th) / h);
                grad[static_cast<size_t>(ip)] += w * hp * (th / h);
            }
            double gmax = 0.0;
            for (double gv : grad) gmax = std::max(gmax, std::abs(gv));
            if (gmax < 1e-300) break;
            double scale = opts.step_size / std::max(gmax / wsum, 1e-12);
            for (int i = 0; i < n; ++i) u[i] -= scale * grad[static_cast<size_t>(i)] / wsum;
        }
        best = std::min(best, true_max(u));
    }
    return best;
}

GridFunction compute_conjugate(const GridFunction& u_minus, const Model& model,
                               const SemigroupParams& params) {
    GridFunction u = u_minus;
    GridFunction best = u;
    double best_change = std::numeric_limits<double>::infinity();
    double next_attempt = 1.0;
    double ceiling = u_minus.max() + 30.0;
    int worse = 0, consecutive = 0;
    double t = 0.0;
    auto polish = [&](const GridFunction& from, double leash, GridFunction& out) {
        out = from;
        return howard_refine(out, model, params, Direction::forward, std::min(leash, 5.0),
                             1.5 * params.dt * from.grid.spacing);
    };
    while (t < params.t_max) {
        GridFunction next = forward_step(u, model, params);
        double change = sup_diff(next, u);
        u = std::move(next);
        t += params.dt;
        if (change < best_change) {
            best_change = change;
            best = u;
            worse = 0;
        }
        if (u.max() > ceiling) break;  // discretization error tipped into blow-up
        if (change <= next_attempt) {
            next_attempt = change / 2.0;
            GridFunction cand;
            if (polish(u, 50.0 * change, cand)) return cand;
        }
        if (change > 3.0 * best_change && ++worse >= 50) break;
        consecutive = (change / params.dt <= params.tol_fix) ? consecutive + 1 : 0;
        if (consecutive >= params.window) return u;
    }
    GridFunction cand;
    if (polish(best, 50.0 * best_change, cand)) return cand;
    return best;
}

std::vector<int> compute_aubry_set(const GridFunction& u_minus, const GridFunction& u_plus,
                                   double tol) {
    if (!u_minus.grid.same_as(u_plus.grid))
        throw std::invalid_argument("compute_aubry_set: grid mismatch");
    std::vector<int> idx;
    for (int i = 0; i < u_minus.size(); ++i)
        if (std::abs(u_minus[i] - u_plus[i]) <= tol) idx.push_back(i);
    return idx;
}

}  // namespace hj
