#pragma once

#include <cstddef>
#include <functional>
#include <sstream>

#include "types.hpp"

namespace weakkam {

/** A transition cost that may depend on the values at both endpoints.
 *
 * The evaluator receives (z, x, u, v): source, target, value at the source
 * and value at the target.  kappa_u and kappa_v bound the Lipschitz constants
 * in u and v; the solver requires kappa_u <= 1 and kappa_v < 1, and the cost
 * must be non-decreasing in u and non-increasing in v for the order
 * properties to hold. */
struct GeneralCost {
    std::function<double(std::size_t z, std::size_t x, double u, double v)> evaluator;
    double kappa_u = 0.0;
    double kappa_v = 0.0;
};

/// Optional per-call counters for the inner solves.
struct ImplicitStats {
    std::size_t total_inner_iterations = 0;
    std::vector<std::size_t> per_state;
};

/** Applies the implicitly defined one-step operator:
 *  (T phi)(x) solves t = min_z cost(z, x, phi(z), t).
 *
 * Each state is handled by iterating the scalar contraction
 * t <- min_z cost(z, x, phi(z), t) from t = 0; the v-slot Lipschitz bound
 * kappa_v < 1 makes this a contraction with that rate.  Iteration stops once
 * the step is below tol_inner * (1 - kappa_v), which bounds the final
 * residual |t - min_z cost(z, x, phi(z), t)| by tol_inner.
 *
 * \param cost      endpoint-coupled transition cost (see GeneralCost)
 * \param phi       values at the source states
 * \param n         state count (the evaluator is opaque, so it is explicit)
 * \param tol_inner accepted residual of each scalar solve
 * \param stats     optional iteration counters
 */
inline Potential apply_implicit(const GeneralCost& cost, const Potential& phi, std::size_t n,
                                double tol_inner = defaults::tol_inner,
                                ImplicitStats* stats = nullptr) {
    if (!cost.evaluator) throw std::invalid_argument("apply_implicit: missing evaluator");
    if (n == 0 || phi.size() != n)
        throw std::invalid_argument("apply_implicit: potential size mismatch");
    if (!(cost.kappa_u <= 1.0) || cost.kappa_u < 0.0)
        throw std::invalid_argument("apply_implicit: kappa_u must lie in [0, 1]");
    if (!(cost.kappa_v < 1.0) || cost.kappa_v < 0.0)
        throw std::invalid_argument("apply_implicit: kappa_v must lie in [0, 1)");
    const double step_tol = tol_inner * (1.0 - cost.kappa_v);
    Potential out(n);
    if (stats) {
        stats->total_inner_iterations = 0;
        stats->per_state.assign(n, 0);
    }
    for (std::size_t x = 0; x < n; ++x) {
        double t = 0.0;
        std::size_t it = 0;
        double step = infinity;
        while (true) {
            double best = cost.evaluator(0, x, phi[0], t);
            for (std::size_t z = 1; z < n; ++z) {
                const double cand = cost.evaluator(z, x, phi[z], t);
                if (cand < best) best = cand;
            }
            step = std::abs(best - t);
            t = best;
            ++it;
            if (step <= step_tol) break;
            if (it >= defaults::inner_iteration_cap)
                throw ConvergenceError("apply_implicit: inner iteration cap reached", step);
        }
        out[x] = t;
        if (stats) {
            stats->per_state[x] = it;
            stats->total_inner_iterations += it;
        }
    }
    return out;
}

/** Samples the evaluator on a 17 x 17 grid of (u, v) in [-10, 10]^2 per state
 *  pair and reports violations of the declared slope bounds or of the
 *  monotonicity (non-decreasing in u, non-increasing in v) as warning
 *  strings.  Violations are reported, never thrown. */
inline std::vector<std::string> hypothesis_warnings(const GeneralCost& cost, std::size_t n,
                                                    double lo = -10.0, double hi = 10.0,
                                                    std::size_t grid = 17) {
    std::vector<std::string> warnings;
    if (!cost.evaluator || n == 0 || grid < 2) return warnings;
    const double slack = 1e-9;
    std::vector<double> pts(grid);
    for (std::size_t i = 0; i < grid; ++i)
        pts[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
    auto warn = [&](std::size_t z, std::size_t x, const char* what) {
        std::ostringstream os;
        os << "cost(" << z << ", " << x << ", ., .): " << what;
        warnings.push_back(os.str());
    };
    for (std::size_t z = 0; z < n; ++z)
        for (std::size_t x = 0; x < n; ++x) {
            bool mono_u = true, mono_v = true, lip_u = true, lip_v = true;
            for (std::size_t i = 0; i < grid; ++i)
                for (std::size_t j = 0; j + 1 < grid; ++j) {
                    const double du = pts[j + 1] - pts[j];
                    const double cu0 = cost.evaluator(z, x, pts[j], pts[i]);
                    const double cu1 = cost.evaluator(z, x, pts[j + 1], pts[i]);
                    if (cu1 < cu0 - slack) mono_u = false;
                    if (std::abs(cu1 - cu0) > cost.kappa_u * du + slack) lip_u = false;
                    const double cv0 = cost.evaluator(z, x, pts[i], pts[j]);
                    const double cv1 = cost.evaluator(z, x, pts[i], pts[j + 1]);
                    if (cv1 > cv0 + slack) mono_v = false;
                    if (std::abs(cv1 - cv0) > cost.kappa_v * du + slack) lip_v = false;
                }
            if (!mono_u) warn(z, x, "not non-decreasing in the source value");
            if (!mono_v) warn(z, x, "not non-increasing in the target value");
            if (!lip_u) warn(z, x, "source-value slope exceeds the declared bound");
            if (!lip_v) warn(z, x, "target-value slope exceeds the declared bound");
        }
    return warnings;
}

}  // namespace weakkam
