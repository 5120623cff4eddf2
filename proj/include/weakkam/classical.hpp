#pragma once

#include <cstddef>
#include <utility>

#include "types.hpp"

namespace weakkam {

inline void validate_cost_table(const Matrix& l0) {
    if (l0.rows() == 0 || l0.rows() != l0.cols())
        throw std::invalid_argument("cost table must be a non-empty square matrix");
    if (!l0.all_finite())
        throw std::invalid_argument("cost table must be finite");
}

/** One-step minimal-cost update: (T f)(x) = min_z f(z) + l0(z, x).
 *
 * Order preserving and non-expansive in the sup norm; adding a constant to f
 * adds the same constant to the result.  Ties are resolved toward the lowest
 * state index so repeated runs are bit-identical.
 *
 * \param l0 one-step costs, entry (z, x) = cost of the transition z -> x
 * \param f  value at the source states
 */
inline Potential lax_oleinik(const Matrix& l0, const Potential& f) {
    validate_cost_table(l0);
    const std::size_t n = l0.rows();
    if (f.size() != n)
        throw std::invalid_argument("lax_oleinik: potential size mismatch");
    Potential out(n);
    for (std::size_t x = 0; x < n; ++x) {
        double best = f[0] + l0(0, x);
        for (std::size_t z = 1; z < n; ++z) {
            const double cand = f[z] + l0(z, x);
            if (cand < best) best = cand;
        }
        out[x] = best;
    }
    return out;
}

/// Same update, also reporting the minimizing source per state (lowest index on ties).
inline std::pair<Potential, std::vector<std::size_t>> lax_oleinik_argmin(const Matrix& l0,
                                                                         const Potential& f) {
    validate_cost_table(l0);
    const std::size_t n = l0.rows();
    if (f.size() != n)
        throw std::invalid_argument("lax_oleinik_argmin: potential size mismatch");
    Potential out(n);
    std::vector<std::size_t> arg(n, 0);
    for (std::size_t x = 0; x < n; ++x) {
        double best = f[0] + l0(0, x);
        std::size_t bz = 0;
        for (std::size_t z = 1; z < n; ++z) {
            const double cand = f[z] + l0(z, x);
            if (cand < best) {
                best = cand;
                bz = z;
            }
        }
        out[x] = best;
        arg[x] = bz;
    }
    return {std::move(out), std::move(arg)};
}

/** Smallest mean weight over all directed cycles (self-loops included) of the
 *  complete weighted digraph given by w.
 *
 * Uses the classical dynamic program over walk lengths from a fixed source:
 * with D_k(v) the minimal weight of a k-edge walk 0 -> v, the minimum cycle
 * mean equals min_v max_k (D_n(v) - D_k(v)) / (n - k).  All weights are
 * finite, so the graph is strongly connected and the formula applies.
 */
inline double minimum_cycle_mean(const Matrix& w) {
    validate_cost_table(w);
    const std::size_t n = w.rows();
    std::vector<std::vector<double>> D(n + 1, std::vector<double>(n, infinity));
    D[0][0] = 0.0;
    for (std::size_t k = 1; k <= n; ++k)
        for (std::size_t v = 0; v < n; ++v) {
            double best = infinity;
            for (std::size_t u = 0; u < n; ++u) {
                if (D[k - 1][u] == infinity) continue;
                const double cand = D[k - 1][u] + w(u, v);
                if (cand < best) best = cand;
            }
            D[k][v] = best;
        }
    double result = infinity;
    for (std::size_t v = 0; v < n; ++v) {
        if (D[n][v] == infinity) continue;
        double worst = -infinity;
        for (std::size_t k = 0; k < n; ++k) {
            if (D[k][v] == infinity) continue;
            const double ratio = (D[n][v] - D[k][v]) / static_cast<double>(n - k);
            if (ratio > worst) worst = ratio;
        }
        if (worst < result) result = worst;
    }
    return result;
}

/** The unique constant c such that the one-step operator shifted by c admits
 *  a fixed point; equals minus the minimum cycle mean of the cost table. */
inline double critical_constant(const Matrix& l0) {
    double c = -minimum_cycle_mean(l0);
    if (c == 0.0) c = 0.0;  // canonicalize -0.0
    return c;
}

/// Min-plus matrix product: C(i, j) = min_k A(i, k) + B(k, j).
inline Matrix minplus_product(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("minplus_product: shape mismatch");
    Matrix c(a.rows(), b.cols(), infinity);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                const double cand = aik + b(k, j);
                if (cand < c(i, j)) c(i, j) = cand;
            }
        }
    return c;
}

/** Pairwise minimal walk costs and the barrier built on top of them.
 *
 * All tables refer to the normalized cost `tilde` = l0 + c0, whose minimum
 * cycle mean is zero.  `mane(x, y)` is the cheapest walk x -> y of length at
 * least one; `h(x, y)` is the long-run barrier obtained by routing through a
 * state whose closed-walk cost vanishes. */
struct BarrierTable {
    double c0 = 0.0;
    Matrix tilde;
    Matrix mane;
    Matrix h;
};

/** States whose closed-walk cost vanishes (diagonal of h within tol).
 * Non-empty for every valid table; an empty result signals that the tolerance
 * was defeated by rounding and is reported as an error. */
inline std::vector<std::size_t> aubry_set(const BarrierTable& bt,
                                          double tol = defaults::tol_aubry) {
    std::vector<std::size_t> out;
    for (std::size_t x = 0; x < bt.h.rows(); ++x)
        if (std::abs(bt.h(x, x)) <= tol) out.push_back(x);
    if (out.empty())
        throw NumericalError(
            "no state with vanishing closed-walk cost found; "
            "tolerance defeated by rounding");
    return out;
}

/** Builds the barrier table for a cost matrix.
 *
 * Steps: normalize by the critical constant, accumulate minimal walk costs of
 * lengths 1..n, detect the states with zero closed-walk cost, and assemble
 * h(x, y) as the cheapest route through such a state.  The result is checked
 * against direct long-horizon walk costs (lengths 4n..8n).  Since the
 * through-route can be padded by its zero cycle to land in that window, h may
 * never undercut the window minimum; a window value below h is legitimate
 * when a positive excursion is still cheaper than the detour at these
 * lengths, and such entries are re-checked at a horizon long enough that
 * every excursion prices above the barrier.
 */
inline BarrierTable peierls_barrier(const Matrix& l0, double tol_aubry = defaults::tol_aubry,
                                    bool verify = true) {
    validate_cost_table(l0);
    const std::size_t n = l0.rows();
    BarrierTable bt;
    bt.c0 = critical_constant(l0);
    bt.tilde = Matrix(n, n);
    for (std::size_t z = 0; z < n; ++z)
        for (std::size_t x = 0; x < n; ++x) bt.tilde(z, x) = l0(z, x) + bt.c0;

    // Walks longer than n edges contain a cycle of non-negative normalized
    // cost, so lengths 1..n already realize the minimum over all lengths.
    bt.mane = bt.tilde;
    Matrix power = bt.tilde;
    for (std::size_t k = 2; k <= n; ++k) {
        power = minplus_product(power, bt.tilde);
        for (std::size_t i = 0; i < n * n; ++i)
            bt.mane.data()[i] = std::min(bt.mane.data()[i], power.data()[i]);
    }

    std::vector<char> vanishing(n, 0);
    bool any = false;
    for (std::size_t a = 0; a < n; ++a) {
        if (std::abs(bt.mane(a, a)) <= tol_aubry) {
            vanishing[a] = 1;
            any = true;
        }
    }
    if (!any)
        throw NumericalError(
            "no state with vanishing closed-walk cost; tolerance defeated by rounding");

    bt.h = Matrix(n, n, infinity);
    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = 0; y < n; ++y) {
            double best = infinity;
            for (std::size_t a = 0; a < n; ++a) {
                if (!vanishing[a]) continue;
                const double in = (x == a) ? 0.0 : bt.mane(x, a);
                const double out = (a == y) ? 0.0 : bt.mane(a, y);
                const double cand = in + out;
                if (cand < best) best = cand;
            }
            bt.h(x, y) = best;
        }

    if (verify) {
        const std::size_t lo = 4 * n, hi = 8 * n;
        Matrix p = bt.tilde;
        std::size_t plen = 1;
        // Smallest strictly positive closed-walk mean seen along the way; it
        // prices the excursions that can undercut an early window.
        double qpos = infinity;
        for (std::size_t i = 0; i < n; ++i)
            if (p(i, i) > 1e-7) qpos = std::min(qpos, p(i, i));
        while (plen < lo) {
            p = minplus_product(p, bt.tilde);
            ++plen;
            if (plen <= n)
                for (std::size_t i = 0; i < n; ++i)
                    if (p(i, i) > 1e-7 * static_cast<double>(plen))
                        qpos = std::min(qpos, p(i, i) / static_cast<double>(plen));
        }
        Matrix window = p;  // length lo
        for (std::size_t k = lo + 1; k <= hi; ++k) {
            p = minplus_product(p, bt.tilde);
            ++plen;
            for (std::size_t i = 0; i < n * n; ++i)
                window.data()[i] = std::min(window.data()[i], p.data()[i]);
        }
        // Every through-route fits inside the window, so the window minimum
        // can never exceed h; the reverse gap is legitimate whenever a
        // positive excursion is still cheaper than the detour at these
        // horizons, and is re-checked at a horizon where it no longer is.
        bool undershoot = false;
        for (std::size_t i = 0; i < n * n; ++i) {
            const double gap = window.data()[i] - bt.h.data()[i];
            if (gap > 1e-9)
                throw NumericalError(
                    "barrier undercuts the long-horizon walk costs; the through-route "
                    "assembly lost a cheaper option");
            if (gap < -1e-9) undershoot = true;
        }
        if (undershoot && qpos < infinity) {
            double horizon = 0.0;
            for (std::size_t i = 0; i < n * n; ++i)
                horizon = std::max(horizon, (bt.h.data()[i] - bt.mane.data()[i]) / qpos);
            const std::size_t far = static_cast<std::size_t>(horizon) + 2 * n + 2;
            if (far <= 300000) {
                while (plen < far) {
                    p = minplus_product(p, bt.tilde);
                    ++plen;
                }
                Matrix settled = p;
                for (std::size_t k = 0; k < 2 * n; ++k) {
                    p = minplus_product(p, bt.tilde);
                    ++plen;
                    for (std::size_t i = 0; i < n * n; ++i)
                        settled.data()[i] = std::min(settled.data()[i], p.data()[i]);
                }
                for (std::size_t i = 0; i < n * n; ++i)
                    if (std::abs(settled.data()[i] - bt.h.data()[i]) > 1e-8)
                        throw NumericalError(
                            "barrier disagrees with the settled long-horizon walk costs");
            }
        }
    }
    return bt;
}

/** Row of the barrier at a state with vanishing closed-walk cost; such a row
 *  is a fixed point of the normalized one-step operator, which is verified
 *  before returning. */
inline Potential weak_kam_solution(const BarrierTable& bt, std::size_t basepoint,
                                   double tol_fp = defaults::tol_fp) {
    const std::size_t n = bt.h.rows();
    if (basepoint >= n)
        throw std::invalid_argument("weak_kam_solution: basepoint out of range");
    if (std::abs(bt.h(basepoint, basepoint)) > defaults::tol_aubry)
        throw std::invalid_argument(
            "weak_kam_solution: basepoint has non-vanishing closed-walk cost");
    Potential u(n);
    for (std::size_t y = 0; y < n; ++y) u[y] = bt.h(basepoint, y);
    const Potential tu = lax_oleinik(bt.tilde, u);
    if (sup_dist(tu, u) > tol_fp)
        throw NumericalError("weak_kam_solution: fixed-point residual exceeds tolerance");
    return u;
}

/// True iff w(x) - w(z) <= l0(z, x) + c0 + tol for every ordered pair (z, x).
inline bool is_subsolution(const Matrix& l0, double c0, const Potential& w,
                           double tol = 1e-9) {
    validate_cost_table(l0);
    const std::size_t n = l0.rows();
    if (w.size() != n)
        throw std::invalid_argument("is_subsolution: potential size mismatch");
    for (std::size_t z = 0; z < n; ++z)
        for (std::size_t x = 0; x < n; ++x)
            if (w[x] - w[z] > l0(z, x) + c0 + tol) return false;
    return true;
}

/** Domination check: a fixed point u dominates a subsolution v everywhere as
 *  soon as it dominates it on the states with vanishing closed-walk cost.
 *
 * Returns true when the domination hypothesis holds on those states (and then
 * asserts it globally); returns false when the hypothesis fails.  u must be a
 * fixed point of the normalized operator and v a subsolution, both verified.
 */
inline bool comparison_check(const BarrierTable& bt, const Potential& u, const Potential& v,
                             double tol = 1e-9) {
    const std::size_t n = bt.h.rows();
    if (u.size() != n || v.size() != n)
        throw std::invalid_argument("comparison_check: potential size mismatch");
    const Potential tu = lax_oleinik(bt.tilde, u);
    if (sup_dist(tu, u) > defaults::tol_fp)
        throw std::invalid_argument("comparison_check: u is not a fixed point");
    if (!is_subsolution(bt.tilde, 0.0, v, tol))
        throw std::invalid_argument("comparison_check: v is not a subsolution");
    const std::vector<std::size_t> core = aubry_set(bt);
    for (std::size_t a : core)
        if (u[a] < v[a] - tol) return false;
    for (std::size_t x = 0; x < n; ++x)
        if (u[x] < v[x] - tol)
            throw NumericalError(
                "comparison_check: domination on the vanishing-cost states did not "
                "propagate; tolerance defeated by rounding");
    return true;
}

}  // namespace weakkam
