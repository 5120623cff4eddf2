#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "discounted.hpp"
#include "limit.hpp"
#include "types.hpp"

namespace weakkam {

namespace detail {

/// Runs fn(i) for i in [0, count) on a small worker pool; rethrows the first failure.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers = std::min(count, hw);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace detail

/** One row per grid point: distance of the discounted fixed point to the
 *  limit potential, its certified residual, and the work it took. */
struct SweepReport {
    std::vector<double> grid;
    double c0 = 0.0;
    /// Limit potential the errors are measured against.
    Potential u0;
    std::vector<double> sup_errors;
    std::vector<double> residuals;
    std::vector<std::size_t> iterations;
    bool converged = false;
};

/** Solves the discounted problem along a geometric grid of discount factors
 *  and measures convergence to the limit potential.
 *
 * The default grid is lambda_k = 0.5 * lambda_max * 2^-k for k = 0..19.
 * The sweep counts as converged when the final error is at most 1e-6, or
 * when the last five errors are non-increasing and all below 1e-3.
 *
 * \param model model with arbitrary critical constant
 * \param grid  discount factors to visit (decreasing recommended); empty
 *              selects the default grid
 */
inline SweepReport vanishing_discount_sweep(const CostModel& model,
                                            std::vector<double> grid = {}) {
    const LimitReport lim = u0_detailed(model);
    const CostModel norm = normalize_critical(model, lim.c0);
    if (grid.empty()) {
        double lambda = 0.5 * norm.lambda_max;
        for (int k = 0; k < 20; ++k, lambda *= 0.5) grid.push_back(lambda);
    }
    for (double lambda : grid)
        if (!(lambda > 0.0) || !(lambda < norm.lambda_max))
            throw std::invalid_argument(
                "vanishing_discount_sweep: grid entries must lie in (0, lambda_max)");

    SweepReport rep;
    rep.grid = std::move(grid);
    rep.c0 = lim.c0;
    rep.u0 = lim.u0;
    const std::size_t m = rep.grid.size();
    rep.sup_errors.assign(m, 0.0);
    rep.residuals.assign(m, 0.0);
    rep.iterations.assign(m, 0);
    detail::parallel_for(m, [&](std::size_t i) {
        const DiscountedSolution s = solve_discounted(norm, rep.grid[i]);
        rep.sup_errors[i] = sup_dist(s.u, rep.u0);
        rep.residuals[i] = s.residual;
        rep.iterations[i] = s.iterations;
    });

    if (rep.sup_errors.back() <= 1e-6) {
        rep.converged = true;
    } else if (m >= 5) {
        bool ok = true;
        for (std::size_t i = m - 5; i < m; ++i) {
            if (rep.sup_errors[i] >= 1e-3) ok = false;
            if (i > m - 5 && rep.sup_errors[i] > rep.sup_errors[i - 1] + 1e-12) ok = false;
        }
        rep.converged = ok;
    }
    return rep;
}

/** Fixed points reached from several starts at one discount factor. */
struct UniquenessReport {
    double lambda = 0.0;
    std::vector<std::string> start_names;
    std::vector<Potential> fixed_points;
    std::vector<double> residuals;
    std::vector<bool> converged;
    /// Largest sup distance between fixed points of converged runs.
    double max_pairwise_gap = 0.0;
    /// All runs converged and their fixed points agree within 2 * tol.
    bool unique = false;
};

/** Probes uniqueness of the discounted fixed point by solving from the
 *  bracketing starts, from zero, and from any caller-supplied extras, then
 *  comparing the limits pairwise.
 *
 * Non-convergence of a run is reported, not thrown; only a degenerate
 * discount factor is rejected outright.
 */
inline UniquenessReport uniqueness_probe(const CostModel& model, double lambda,
                                         const std::vector<Potential>& extra_starts = {},
                                         double tol = defaults::tol_fp) {
    if (!(lambda > 0.0))
        throw std::invalid_argument("uniqueness_probe: lambda must be positive");
    const double c0 = critical_constant_cross_checked(model.l0);
    const CostModel norm = normalize_critical(model, c0);
    if (!(lambda < norm.lambda_max))
        throw std::invalid_argument("uniqueness_probe: lambda must be below lambda_max");
    const std::size_t n = norm.size();

    const BarrierTable bt = peierls_barrier(norm.l0);
    const Potential base = weak_kam_solution(bt, aubry_set(bt).front());
    double mx = base[0], mn = base[0];
    for (double v : base) {
        mx = std::max(mx, v);
        mn = std::min(mn, v);
    }
    std::vector<std::pair<std::string, Potential>> starts;
    Potential lower(n), upper(n);
    for (std::size_t i = 0; i < n; ++i) {
        lower[i] = base[i] - mx;
        upper[i] = base[i] - mn;
    }
    starts.emplace_back("lower", std::move(lower));
    starts.emplace_back("upper", std::move(upper));
    starts.emplace_back("zero", Potential(n, 0.0));
    for (std::size_t i = 0; i < extra_starts.size(); ++i) {
        if (extra_starts[i].size() != n)
            throw std::invalid_argument("uniqueness_probe: start size mismatch");
        starts.emplace_back("extra" + std::to_string(i), extra_starts[i]);
    }

    const double kappa = std::max(norm.kappa_u(), norm.kappa_v());
    const double step_tol = tol * (1.0 - lambda * kappa) / 2.0;

    UniquenessReport rep;
    rep.lambda = lambda;
    for (auto& [name, start] : starts) {
        Potential phi = start;
        for (std::size_t it = 0; it < 400; ++it) {
            Potential next = apply_T_lambda(norm, phi, lambda);
            const double step = sup_dist(next, phi);
            phi = std::move(next);
            if (step <= step_tol) break;
        }
        const detail::PolicyOutcome po = detail::policy_solve(norm, lambda, phi);
        if (po.ok) phi = po.u;
        Potential tphi = apply_T_lambda(norm, phi, lambda);
        double residual = sup_dist(tphi, phi);
        for (std::size_t it = 0; it < 20000 && residual > tol; ++it) {
            phi = std::move(tphi);
            tphi = apply_T_lambda(norm, phi, lambda);
            residual = sup_dist(tphi, phi);
        }
        rep.start_names.push_back(name);
        rep.fixed_points.push_back(phi);
        rep.residuals.push_back(residual);
        rep.converged.push_back(residual <= tol);
    }

    bool all_ok = true;
    for (std::size_t i = 0; i < rep.fixed_points.size(); ++i) {
        if (!rep.converged[i]) {
            all_ok = false;
            continue;
        }
        for (std::size_t j = i + 1; j < rep.fixed_points.size(); ++j)
            if (rep.converged[j])
                rep.max_pairwise_gap =
                    std::max(rep.max_pairwise_gap,
                             sup_dist(rep.fixed_points[i], rep.fixed_points[j]));
    }
    rep.unique = all_ok && rep.max_pairwise_gap <= 2.0 * tol;
    return rep;
}

}  // namespace weakkam
