#pragma once

#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "classical.hpp"
#include "mather.hpp"
#include "model.hpp"
#include "types.hpp"

namespace weakkam {

namespace detail {

inline void require_normalized(const CostModel& model, const char* who) {
    if (std::abs(critical_constant(model.l0)) > 1e-9)
        throw std::invalid_argument(std::string(who) +
                                    ": model must be normalized (critical constant zero)");
}

inline std::string join_messages(const std::vector<std::string>& messages) {
    std::string out;
    for (const std::string& m : messages) {
        if (!out.empty()) out += "; ";
        out += m;
    }
    return out.empty() ? std::string("hypothesis check failed") : out;
}

}  // namespace detail

/** Tests membership in the admissible class that characterizes the limit:
 *  w must be a subsolution of the normalized base cost and for every vertex
 *  measure mu the integral of du(z,x) w(z) + dv(z,x) w(x) must be >= -tol,
 *  where (du, dv) are the coupling derivatives at zero. */
inline bool in_S0(const CostModel& model, const Potential& w,
                  const std::vector<PairMeasure>& vertices, double tol = 1e-9) {
    const std::size_t n = model.size();
    if (w.size() != n) throw std::invalid_argument("in_S0: potential size mismatch");
    detail::require_normalized(model, "in_S0");
    if (!is_subsolution(model.l0, 0.0, w, tol)) return false;
    const auto [du, dv] = model.derivative_at_zero();
    for (const PairMeasure& mu : vertices) {
        if (!mu.weights.same_shape(model.l0))
            throw std::invalid_argument("in_S0: measure shape mismatch");
        double val = 0.0;
        for (std::size_t z = 0; z < n; ++z)
            for (std::size_t x = 0; x < n; ++x) {
                const double c = mu.weights(z, x);
                if (c != 0.0) val += c * (du(z, x) * w[z] + dv(z, x) * w[x]);
            }
        if (val < -tol) return false;
    }
    return true;
}

/** Limit potential as the pointwise supremum of the admissible class,
 *  evaluated by one linear program per state.
 *
 * Variables are a split representation w = p - q plus one slack per
 * subsolution row and one surplus per vertex row; the program maximizes
 * w(x*).  The strict negativity of the coupling integrals at every vertex
 * (verified up front) is exactly what keeps these programs bounded, so a
 * failed precheck throws HypothesisError before any solve runs.
 *
 * \param model    normalized model
 * \param vertices vertex measures of the base cost's minimizing polytope
 */
inline Potential compute_u0_sup_formula(const CostModel& model,
                                        const std::vector<PairMeasure>& vertices,
                                        double tol_l4 = defaults::tol_l4) {
    const std::size_t n = model.size();
    detail::require_normalized(model, "compute_u0_sup_formula");
    const AssumptionReport rep = check_assumptions(model, vertices, tol_l4);
    if (!rep.l4_ok)
        throw HypothesisError("compute_u0_sup_formula: " + detail::join_messages(rep.messages));
    const auto [du, dv] = model.derivative_at_zero();

    const std::size_t nvert = vertices.size();
    const std::size_t nvars = 2 * n + n * n + nvert;
    const std::size_t nrows = n * n + nvert;
    Matrix a(nrows, nvars, 0.0);
    std::vector<double> rhs(nrows, 0.0);
    for (std::size_t z = 0; z < n; ++z)
        for (std::size_t x = 0; x < n; ++x) {
            const std::size_t r = z * n + x;
            a(r, x) += 1.0;
            a(r, n + x) -= 1.0;
            a(r, z) -= 1.0;
            a(r, n + z) += 1.0;
            a(r, 2 * n + r) = 1.0;
            rhs[r] = model.l0(z, x);
        }
    for (std::size_t i = 0; i < nvert; ++i) {
        const std::size_t r = n * n + i;
        for (std::size_t z = 0; z < n; ++z)
            for (std::size_t x = 0; x < n; ++x) {
                const double c = vertices[i].weights(z, x);
                if (c == 0.0) continue;
                a(r, z) += c * du(z, x);
                a(r, n + z) -= c * du(z, x);
                a(r, x) += c * dv(z, x);
                a(r, n + x) -= c * dv(z, x);
            }
        a(r, 2 * n + n * n + i) = -1.0;
    }

    Potential u0(n, 0.0);
    for (std::size_t xs = 0; xs < n; ++xs) {
        std::vector<double> obj(nvars, 0.0);
        obj[xs] = -1.0;
        obj[n + xs] = 1.0;
        const LpSolution s = solve_lp(obj, a, rhs);
        if (s.status == LpStatus::Unbounded)
            throw NumericalError(
                "compute_u0_sup_formula: unbounded program despite verified hypotheses");
        if (s.status != LpStatus::Optimal)
            throw NumericalError("compute_u0_sup_formula: admissible polytope is empty");
        u0[xs] = -s.value + 0.0;  // avoid negative zero in reports
    }
    return u0;
}

/** Limit potential through the minimizing measures: at each state the
 *  minimum over vertices of the barrier-weighted coupling integral divided
 *  by the (strictly negative) total coupling integral.
 *
 * \param model    normalized model
 * \param bt       barrier tables of the normalized base cost
 * \param vertices vertex measures of the base cost's minimizing polytope
 */
inline Potential compute_u0_mather_formula(const CostModel& model, const BarrierTable& bt,
                                           const std::vector<PairMeasure>& vertices,
                                           double tol_l4 = defaults::tol_l4) {
    const std::size_t n = model.size();
    detail::require_normalized(model, "compute_u0_mather_formula");
    if (bt.h.rows() != n || bt.h.cols() != n)
        throw std::invalid_argument("compute_u0_mather_formula: barrier shape mismatch");
    if (vertices.empty())
        throw std::invalid_argument("compute_u0_mather_formula: vertex list must not be empty");
    const auto [du, dv] = model.derivative_at_zero();
    Matrix total(n, n);
    for (std::size_t z = 0; z < n; ++z)
        for (std::size_t x = 0; x < n; ++x) total(z, x) = du(z, x) + dv(z, x);
    std::vector<double> dens(vertices.size());
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        dens[i] = integrate(total, vertices[i]);
        if (!(dens[i] < -tol_l4)) {
            std::ostringstream os;
            os << "compute_u0_mather_formula: coupling integral " << dens[i] << " at vertex " << i
               << " is not strictly negative";
            throw HypothesisError(os.str());
        }
    }
    Potential u0(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        double best = infinity;
        for (std::size_t i = 0; i < vertices.size(); ++i) {
            double num = 0.0;
            for (std::size_t z = 0; z < n; ++z)
                for (std::size_t y = 0; y < n; ++y) {
                    const double c = vertices[i].weights(z, y);
                    if (c != 0.0) num += c * (du(z, y) * bt.h(z, x) + dv(z, y) * bt.h(y, x));
                }
            const double cand = num / dens[i];
            if (cand < best) best = cand;
        }
        u0[x] = best + 0.0;
    }
    return u0;
}

namespace detail {

inline bool all_entries_equal(const Matrix& m) {
    for (double v : m.data())
        if (v != m.data().front()) return false;
    return true;
}

}  // namespace detail

/** Simplified measure formula valid when the target derivative dv is the
 *  same on every pair: the barrier is then sampled at the measure's source
 *  argument only.  Throws invalid_argument when the structure is absent. */
inline Potential compute_u0_reduced_target_constant(const CostModel& model, const BarrierTable& bt,
                                                    const std::vector<PairMeasure>& vertices,
                                                    double tol_l4 = defaults::tol_l4) {
    const std::size_t n = model.size();
    detail::require_normalized(model, "compute_u0_reduced_target_constant");
    const auto [du, dv] = model.derivative_at_zero();
    if (!detail::all_entries_equal(dv))
        throw std::invalid_argument(
            "compute_u0_reduced_target_constant: target derivative is not constant");
    Matrix total(n, n);
    for (std::size_t z = 0; z < n; ++z)
        for (std::size_t x = 0; x < n; ++x) total(z, x) = du(z, x) + dv(z, x);
    Potential u0(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        double best = infinity;
        for (const PairMeasure& mu : vertices) {
            const double den = integrate(total, mu);
            if (!(den < -tol_l4))
                throw HypothesisError(
                    "compute_u0_reduced_target_constant: coupling integral is not strictly "
                    "negative");
            double num = 0.0;
            for (std::size_t z = 0; z < n; ++z)
                for (std::size_t y = 0; y < n; ++y) {
                    const double c = mu.weights(z, y);
                    if (c != 0.0) num += c * total(z, y) * bt.h(z, x);
                }
            best = std::min(best, num / den);
        }
        u0[x] = best + 0.0;
    }
    return u0;
}

/** Simplified measure formula valid when the source derivative du is the
 *  same on every pair: the barrier is then sampled at the measure's target
 *  argument only. */
inline Potential compute_u0_reduced_source_constant(const CostModel& model, const BarrierTable& bt,
                                                    const std::vector<PairMeasure>& vertices,
                                                    double tol_l4 = defaults::tol_l4) {
    const std::size_t n = model.size();
    detail::require_normalized(model, "compute_u0_reduced_source_constant");
    const auto [du, dv] = model.derivative_at_zero();
    if (!detail::all_entries_equal(du))
        throw std::invalid_argument(
            "compute_u0_reduced_source_constant: source derivative is not constant");
    Matrix total(n, n);
    for (std::size_t z = 0; z < n; ++z)
        for (std::size_t x = 0; x < n; ++x) total(z, x) = du(z, x) + dv(z, x);
    Potential u0(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        double best = infinity;
        for (const PairMeasure& mu : vertices) {
            const double den = integrate(total, mu);
            if (!(den < -tol_l4))
                throw HypothesisError(
                    "compute_u0_reduced_source_constant: coupling integral is not strictly "
                    "negative");
            double num = 0.0;
            for (std::size_t z = 0; z < n; ++z)
                for (std::size_t y = 0; y < n; ++y) {
                    const double c = mu.weights(z, y);
                    if (c != 0.0) num += c * total(z, y) * bt.h(y, x);
                }
            best = std::min(best, num / den);
        }
        u0[x] = best + 0.0;
    }
    return u0;
}

/** Everything computed on the way to the vanishing-discount limit. */
struct LimitReport {
    double c0 = 0.0;
    /// Limit potential from the supremum characterization (the canonical one).
    Potential u0;
    /// Same limit from the measure characterization; gap is the sup distance.
    Potential mather_u0;
    double gap = 0.0;
    MatherPolytope polytope;
    AssumptionReport assumptions;
    BarrierTable barrier;
};

/** Runs the whole limit pipeline on a raw model: cross-checked critical
 *  constant, normalization, vertex measures, hypothesis checks, both limit
 *  formulas, and the consistency certificates (formula agreement, fixed
 *  point property, admissibility).
 *
 * \param model      model with arbitrary critical constant
 * \param tol_agree  allowed sup distance between the two characterizations
 * \param tol_fixed  allowed one-step defect of the limit potential
 */
inline LimitReport u0_detailed(const CostModel& model, double tol_agree = 1e-7,
                               double tol_fixed = 1e-8) {
    LimitReport rep;
    rep.c0 = critical_constant_cross_checked(model.l0);
    const CostModel norm = normalize_critical(model, rep.c0);
    rep.polytope = mather_vertices(norm.l0);
    rep.assumptions = check_assumptions(norm, rep.polytope.vertices);
    if (!rep.assumptions.l2_ok || !rep.assumptions.l4_ok)
        throw HypothesisError("u0_detailed: " + detail::join_messages(rep.assumptions.messages));
    rep.barrier = peierls_barrier(norm.l0);
    rep.u0 = compute_u0_sup_formula(norm, rep.polytope.vertices);
    rep.mather_u0 = compute_u0_mather_formula(norm, rep.barrier, rep.polytope.vertices);
    rep.gap = sup_dist(rep.u0, rep.mather_u0);
    if (rep.gap > tol_agree) {
        std::ostringstream os;
        os << "u0_detailed: limit characterizations disagree by " << rep.gap;
        throw NumericalError(os.str());
    }
    const Potential tu = lax_oleinik(norm.l0, rep.u0);
    const double defect = sup_dist(tu, rep.u0);
    if (defect > tol_fixed) {
        std::ostringstream os;
        os << "u0_detailed: limit potential misses the fixed point property by " << defect;
        throw NumericalError(os.str());
    }
    if (!in_S0(norm, rep.u0, rep.polytope.vertices, tol_agree))
        throw NumericalError("u0_detailed: limit potential fails the admissibility conditions");
    return rep;
}

/// Limit potential of the discounted family, from the supremum characterization.
inline Potential u0(const CostModel& model) { return u0_detailed(model).u0; }

}  // namespace weakkam
