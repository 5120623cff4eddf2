#pragma once

#include <cstddef>
#include <utility>

#include "classical.hpp"
#include "implicit.hpp"
#include "model.hpp"
#include "types.hpp"

namespace weakkam {

/** Applies the discounted one-step operator:
 *  (T_lambda phi)(x) solves t = min_z phi(z) + cost(z, x, lambda phi(z), lambda t).
 *
 * For an affine coupling with no target weights and source-homogeneous
 * weights alpha(z), the operator reduces exactly to the plain one-step update
 * of the rescaled potential (1 - lambda alpha) phi; that shortcut is taken
 * whenever the model's structure allows so the identity holds bit for bit.
 * Otherwise each state is solved by the inner scalar contraction, whose rate
 * is lambda * kappa_v < 1.
 */
inline Potential apply_T_lambda(const CostModel& model, const Potential& phi, double lambda,
                                double tol_inner = 1e-13) {
    const std::size_t n = model.size();
    if (phi.size() != n)
        throw std::invalid_argument("apply_T_lambda: potential size mismatch");
    if (!(lambda > 0.0) || !(lambda < model.lambda_max))
        throw std::invalid_argument("apply_T_lambda: lambda must lie in (0, lambda_max)");
    if (model.source_affine()) {
        const std::vector<double>& alpha = model.source_weights();
        Potential scaled(n);
        for (std::size_t z = 0; z < n; ++z) scaled[z] = (1.0 - lambda * alpha[z]) * phi[z];
        return lax_oleinik(model.l0, scaled);
    }
    GeneralCost cost;
    cost.kappa_u = 1.0;
    cost.kappa_v = lambda * model.kappa_v();
    cost.evaluator = [&model, lambda](std::size_t z, std::size_t x, double u, double v) {
        return u + model.cost(z, x, lambda * u, lambda * v);
    };
    return apply_implicit(cost, phi, n, tol_inner);
}

namespace detail {

/** Value at the target of a single policy edge z -> x given the source value:
 *  solves ux = uz + cost(z, x, lambda uz, lambda ux).  Closed form for the
 *  affine coupling (and bit-compatible with the rescaling shortcut when the
 *  target weight vanishes); scalar contraction otherwise. */
inline double policy_edge_value(const CostModel& m, double lambda, std::size_t z, std::size_t x,
                                double uz) {
    if (m.coupling.variant == CouplingVariant::Affine) {
        const double a = m.coupling.A(z, x), b = m.coupling.B(z, x);
        return (uz * (1.0 - lambda * a) + m.l0(z, x)) / (1.0 + lambda * b);
    }
    double t = uz + m.cost(z, x, lambda * uz, lambda * uz);
    for (std::size_t it = 0; it < 100000; ++it) {
        const double next = uz + m.cost(z, x, lambda * uz, lambda * t);
        const bool done = std::abs(next - t) <= 1e-15 * (1.0 + std::abs(next));
        t = next;
        if (done) break;
    }
    return t;
}

struct PolicyFailure {};

/** Values along one policy cycle.  head is the smallest state on the cycle;
 *  orbit = [head, pi(head), ..., head] lists the predecessor chain.  The
 *  cycle value solves a one-dimensional fixed point whose slope is the
 *  product of the per-edge slopes; for degenerate cycles with no coupling
 *  weight at all the equation is only solvable when the constants cancel. */
inline void solve_policy_cycle(const CostModel& m, double lambda,
                               const std::vector<std::size_t>& orbit, double hint,
                               Potential& u) {
    const std::size_t len = orbit.size() - 1;
    if (m.coupling.variant == CouplingVariant::Affine) {
        // u(head) = slope * u(head) + inter across the composed edge maps,
        // with 1 - slope accumulated without cancellation.
        double slope = 1.0, inter = 0.0, om = 0.0;
        for (std::size_t j = 0; j < len; ++j) {
            const std::size_t x = orbit[j], z = orbit[j + 1];
            const double a = m.coupling.A(z, x), b = m.coupling.B(z, x);
            const double denom = 1.0 + lambda * b;
            const double eps = lambda * (a + b) / denom;
            inter += slope * (m.l0(z, x) / denom);
            slope *= (1.0 - lambda * a) / denom;
            om += (1.0 - om) * eps;
        }
        double head_value;
        if (om > 0.0) {
            head_value = inter / om;
        } else {
            if (std::abs(inter) > 1e-12 * (1.0 + static_cast<double>(len)))
                throw PolicyFailure{};
            head_value = hint;
        }
        u[orbit[0]] = head_value;
    } else {
        double weight = 0.0;
        for (std::size_t j = 0; j < len; ++j)
            weight += m.coupling.A(orbit[j + 1], orbit[j]) + m.coupling.B(orbit[j + 1], orbit[j]);
        auto propagate = [&](double t) {
            double w = t;
            for (std::size_t j = len; j-- > 0;)
                w = policy_edge_value(m, lambda, orbit[j + 1], orbit[j], w);
            return w;
        };
        if (weight == 0.0) {
            if (std::abs(propagate(hint) - hint) > 1e-12 * (1.0 + static_cast<double>(len)))
                throw PolicyFailure{};
            u[orbit[0]] = hint;
            return;
        }
        // G(t) = propagate(t) - t is non-increasing with negative drift at
        // +inf; bracket the root starting from the hint, then bisect.
        double lo = hint, hi = hint;
        double glo = propagate(lo) - lo;
        if (glo >= 0.0) {
            double step = std::max(1.0, 0.1 * std::abs(hint));
            for (std::size_t k = 0; k < 300; ++k) {
                hi = lo + step;
                if (propagate(hi) - hi <= 0.0) break;
                lo = hi;
                step *= 2.0;
                if (k + 1 == 300) throw PolicyFailure{};
            }
        } else {
            double step = std::max(1.0, 0.1 * std::abs(hint));
            for (std::size_t k = 0; k < 300; ++k) {
                lo = hi - step;
                if (propagate(lo) - lo >= 0.0) break;
                hi = lo;
                step *= 2.0;
                if (k + 1 == 300) throw PolicyFailure{};
            }
        }
        for (std::size_t k = 0; k < 200; ++k) {
            const double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi) break;
            if (propagate(mid) - mid > 0.0)
                lo = mid;
            else
                hi = mid;
        }
        u[orbit[0]] = 0.5 * (lo + hi);
    }
    // Remaining cycle values follow the edges from the head.
    for (std::size_t j = len; j-- > 1;)
        u[orbit[j]] = policy_edge_value(m, lambda, orbit[j + 1], orbit[j], u[orbit[j + 1]]);
}

/// Exact values of one stationary policy (pi[x] = source used by x).
inline Potential evaluate_policy(const CostModel& m, double lambda,
                                 const std::vector<std::size_t>& pi, const Potential& hints) {
    const std::size_t n = m.size();
    Potential u(n, 0.0);
    std::vector<int> color(n, 0);  // 0 new, 1 on stack, 2 resolved
    std::vector<std::size_t> stack;
    for (std::size_t s = 0; s < n; ++s) {
        if (color[s] != 0) continue;
        stack.clear();
        std::size_t x = s;
        while (color[x] == 0) {
            color[x] = 1;
            stack.push_back(x);
            x = pi[x];
        }
        if (color[x] == 1) {
            // Found a new cycle: extract it, anchor at its smallest state.
            std::size_t start = 0;
            while (stack[start] != x) ++start;
            std::vector<std::size_t> cyc(stack.begin() + static_cast<std::ptrdiff_t>(start),
                                         stack.end());
            std::size_t head_pos = 0;
            for (std::size_t i = 1; i < cyc.size(); ++i)
                if (cyc[i] < cyc[head_pos]) head_pos = i;
            // orbit follows predecessors: orbit[j+1] = pi(orbit[j]), which is
            // exactly the stack order of cyc.
            std::vector<std::size_t> orbit(cyc.size() + 1);
            for (std::size_t i = 0; i < cyc.size(); ++i)
                orbit[i] = cyc[(head_pos + i) % cyc.size()];
            orbit[cyc.size()] = orbit[0];
            solve_policy_cycle(m, lambda, orbit, hints[orbit[0]], u);
            for (std::size_t v : cyc) color[v] = 2;
        }
        // Nodes on the stack above the cycle form a chain into resolved
        // territory; resolve them in dependency order.
        for (std::size_t i = stack.size(); i-- > 0;) {
            const std::size_t v = stack[i];
            if (color[v] == 2) continue;
            u[v] = policy_edge_value(m, lambda, pi[v], v, u[pi[v]]);
            color[v] = 2;
        }
    }
    return u;
}

inline std::vector<std::size_t> greedy_policy(const CostModel& m, double lambda,
                                              const Potential& u) {
    const std::size_t n = m.size();
    std::vector<std::size_t> pi(n, 0);
    for (std::size_t x = 0; x < n; ++x) {
        double best = u[0] + m.cost(0, x, lambda * u[0], lambda * u[x]);
        std::size_t bz = 0;
        for (std::size_t z = 1; z < n; ++z) {
            const double cand = u[z] + m.cost(z, x, lambda * u[z], lambda * u[x]);
            if (cand < best) {
                best = cand;
                bz = z;
            }
        }
        pi[x] = bz;
    }
    return pi;
}

struct PolicyOutcome {
    Potential u;
    std::size_t rounds = 0;
    bool ok = false;
};

/** Policy iteration from a starting guess: alternate exact policy evaluation
 *  with greedy improvement until the policy is stable.  Lands on a fixed
 *  point to evaluation accuracy; failures (degenerate policy systems, no
 *  stabilization) are reported through ok = false for the caller to fall
 *  back on plain iteration. */
inline PolicyOutcome policy_solve(const CostModel& m, double lambda, const Potential& start,
                                  std::size_t round_cap = 100) {
    PolicyOutcome out;
    try {
        std::vector<std::size_t> pi = greedy_policy(m, lambda, start);
        Potential u = start;
        for (std::size_t round = 1; round <= round_cap; ++round) {
            u = evaluate_policy(m, lambda, pi, u);
            std::vector<std::size_t> next = greedy_policy(m, lambda, u);
            out.rounds = round;
            if (next == pi) {
                out.u = std::move(u);
                out.ok = true;
                return out;
            }
            pi = std::move(next);
        }
    } catch (const PolicyFailure&) {
        out.ok = false;
    }
    return out;
}

}  // namespace detail

/** Result of a discounted solve.  u is the fixed point reached from the
 *  non-positive start, u_from_upper the one reached from the non-negative
 *  start; the two agree within 2 * tol exactly when unique_within_tol. */
struct DiscountedSolution {
    double lambda = 0.0;
    Potential u;
    double residual = 0.0;
    std::size_t iterations = 0;
    bool lower_bound_ok = false;
    bool upper_bound_ok = false;
    Potential u_from_upper;
    bool unique_within_tol = false;
    /// Iterates of the monotone chains, first entry the start, last the result.
    std::vector<Potential> lower_log, upper_log;
};

/** Solves u = T_lambda u by monotone iteration from a bracketing pair of
 *  starts, then polishes the limit with policy iteration.
 *
 * The starts come from the barrier of the (normalized) base cost: with base
 * the barrier row at the first vanishing-cost state, the chain from
 * base - max(base) <= 0 is entrywise non-decreasing and the chain from
 * base - min(base) >= 0 non-increasing; every fixed point lies between them.
 * Plain iteration stalls when lambda is tiny (its rate degrades like
 * 1 / lambda), so after a warm-up the limit is located exactly by policy
 * iteration and certified by the residual of the true operator.
 *
 * \param model  normalized model (critical constant zero within 1e-9)
 * \param lambda discount factor in (0, lambda_max)
 * \param tol    accepted sup-norm residual of the returned fixed point
 */
inline DiscountedSolution solve_discounted(const CostModel& model, double lambda,
                                           double tol = defaults::tol_fp,
                                           std::size_t outer_cap = defaults::outer_iteration_cap,
                                           std::size_t warmup = 400) {
    const std::size_t n = model.size();
    if (!(lambda > 0.0) || !(lambda < model.lambda_max))
        throw std::invalid_argument("solve_discounted: lambda must lie in (0, lambda_max)");
    if (std::abs(critical_constant(model.l0)) > 1e-9)
        throw std::invalid_argument(
            "solve_discounted: model must be normalized (critical constant zero)");

    const BarrierTable bt = peierls_barrier(model.l0);
    const std::size_t basepoint = aubry_set(bt).front();
    const Potential base = weak_kam_solution(bt, basepoint);
    double mx = base[0], mn = base[0];
    for (double v : base) {
        mx = std::max(mx, v);
        mn = std::min(mn, v);
    }
    Potential lower(n), upper(n);
    for (std::size_t i = 0; i < n; ++i) {
        lower[i] = base[i] - mx;
        upper[i] = base[i] - mn;
    }

    const double kappa = std::max(model.kappa_u(), model.kappa_v());
    const double step_tol = tol * (1.0 - lambda * kappa) / 2.0;

    DiscountedSolution sol;
    sol.lambda = lambda;
    std::size_t applications = 0;

    // Monotone warm-up chains; direction +1 must not decrease, -1 not increase.
    auto run_chain = [&](const Potential& start, int direction, std::vector<Potential>& log,
                         std::size_t budget) {
        Potential phi = start;
        log.push_back(phi);
        for (std::size_t it = 0; it < budget; ++it) {
            Potential next = apply_T_lambda(model, phi, lambda);
            ++applications;
            for (std::size_t i = 0; i < n; ++i) {
                const double drift = (next[i] - phi[i]) * direction;
                if (drift < -1e-10)
                    throw ConvergenceError(
                        "solve_discounted: monotone iteration moved the wrong way", drift);
            }
            const double step = sup_dist(next, phi);
            phi = std::move(next);
            log.push_back(phi);
            if (step <= step_tol) break;
        }
        return phi;
    };

    Potential lo_end = run_chain(lower, +1, sol.lower_log, warmup);
    Potential up_end = run_chain(upper, -1, sol.upper_log, warmup);

    auto residual_of = [&](const Potential& u) {
        Potential tu = apply_T_lambda(model, u, lambda);
        ++applications;
        return sup_dist(tu, u);
    };
    auto within_bracket = [&](const Potential& u) {
        for (std::size_t i = 0; i < n; ++i)
            if (u[i] < lower[i] - 1e-9 || u[i] > upper[i] + 1e-9) return false;
        return true;
    };

    // Polish each chain end exactly; fall back to plain iteration if policy
    // iteration fails or lands outside the bracket.
    auto finish = [&](Potential chain_end) {
        detail::PolicyOutcome po = detail::policy_solve(model, lambda, chain_end);
        if (po.ok && within_bracket(po.u) && residual_of(po.u) <= tol) {
            sol.iterations += po.rounds;
            return po.u;
        }
        Potential phi = std::move(chain_end);
        for (std::size_t it = applications; it < outer_cap; ++it) {
            Potential next = apply_T_lambda(model, phi, lambda);
            ++applications;
            const double step = sup_dist(next, phi);
            phi = std::move(next);
            if (step <= step_tol && residual_of(phi) <= tol) return phi;
        }
        throw ConvergenceError("solve_discounted: iteration cap reached", residual_of(phi));
    };

    sol.u = finish(std::move(lo_end));
    sol.u_from_upper = finish(std::move(up_end));
    sol.lower_log.push_back(sol.u);
    sol.upper_log.push_back(sol.u_from_upper);
    sol.residual = residual_of(sol.u);
    sol.iterations += applications;
    sol.lower_bound_ok = true;
    sol.upper_bound_ok = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (sol.u[i] < lower[i] - 1e-9) sol.lower_bound_ok = false;
        if (sol.u[i] > upper[i] + 1e-9) sol.upper_bound_ok = false;
    }
    sol.unique_within_tol = sup_dist(sol.u, sol.u_from_upper) <= 2.0 * tol;
    return sol;
}

/** Follows minimizing predecessors of a fixed point u backwards from x0:
 *  the next state is the lowest-index minimizer of
 *  u(z) + cost(z, x, lambda u(z), lambda u(x)), and the minimum must
 *  reproduce u(x) within 2 * tol at every step.
 *
 * Returns [x0, x_-1, ..., x_-length].
 */
inline std::vector<std::size_t> backward_orbit(const CostModel& model, const Potential& u,
                                               double lambda, std::size_t x0,
                                               std::size_t length,
                                               double tol = defaults::tol_fp) {
    const std::size_t n = model.size();
    if (u.size() != n) throw std::invalid_argument("backward_orbit: potential size mismatch");
    if (x0 >= n) throw std::invalid_argument("backward_orbit: start state out of range");
    if (!(lambda > 0.0) || !(lambda < model.lambda_max))
        throw std::invalid_argument("backward_orbit: lambda must lie in (0, lambda_max)");
    std::vector<std::size_t> orbit{x0};
    std::size_t x = x0;
    for (std::size_t k = 0; k < length; ++k) {
        double best = u[0] + model.cost(0, x, lambda * u[0], lambda * u[x]);
        std::size_t bz = 0;
        for (std::size_t z = 1; z < n; ++z) {
            const double cand = u[z] + model.cost(z, x, lambda * u[z], lambda * u[x]);
            if (cand < best) {
                best = cand;
                bz = z;
            }
        }
        if (std::abs(u[x] - best) > 2.0 * tol)
            throw ConvergenceError("backward_orbit: potential is not a fixed point here",
                                   std::abs(u[x] - best));
        orbit.push_back(bz);
        x = bz;
    }
    return orbit;
}

}  // namespace weakkam
