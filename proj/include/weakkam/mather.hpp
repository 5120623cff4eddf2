#pragma once

#include <cstddef>
#include <functional>
#include <utility>

#include "classical.hpp"
#include "types.hpp"

namespace weakkam {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Optimal;
    double value = 0.0;
    std::vector<double> x;
};

namespace detail {

// **************************************************************************
// Dense two-phase simplex on the full tableau.
// Bland's rule throughout (lowest eligible index enters; ratio ties resolved
// toward the lowest basic index), which makes every run deterministic and
// rules out cycling.
// **************************************************************************
class SimplexTableau {
public:
    SimplexTableau(const Matrix& a, const std::vector<double>& b, std::size_t nvars)
        : m_(a.rows()), nvars_(nvars), cols_(nvars + a.rows() + 1),
          t_(a.rows() + 1, std::vector<double>(nvars + a.rows() + 1, 0.0)),
          basis_(a.rows()) {
        for (std::size_t i = 0; i < m_; ++i) {
            const double sign = (b[i] < 0.0) ? -1.0 : 1.0;
            for (std::size_t j = 0; j < nvars_; ++j) t_[i][j] = sign * a(i, j);
            t_[i][rhs()] = sign * b[i];
            t_[i][nvars_ + i] = 1.0;
            basis_[i] = nvars_ + i;
        }
    }

    LpStatus run(const std::vector<double>& objective) {
        // Phase 1: drive the artificial variables to zero.
        {
            std::vector<double> phase1(cols_ - 1, 0.0);
            for (std::size_t j = nvars_; j < cols_ - 1; ++j) phase1[j] = 1.0;
            price(phase1);
            const LpStatus st = iterate(cols_ - 1);
            if (st != LpStatus::Optimal) return LpStatus::Infeasible;
            if (-t_[m_][rhs()] > feas_tol) return LpStatus::Infeasible;
        }
        remove_artificial_rows();
        // Phase 2: the actual objective over the original columns only.
        {
            std::vector<double> full(cols_ - 1, 0.0);
            for (std::size_t j = 0; j < nvars_; ++j) full[j] = objective[j];
            price(full);
            return iterate(nvars_);
        }
    }

    std::vector<double> solution() const {
        std::vector<double> x(nvars_, 0.0);
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] < nvars_) x[basis_[i]] = t_[i][rhs()];
        return x;
    }

private:
    static constexpr double eps = 1e-9;
    static constexpr double feas_tol = 1e-7;
    static constexpr std::size_t pivot_cap = 200000;

    std::size_t rhs() const { return cols_ - 1; }

    void price(const std::vector<double>& c) {
        // Rebuild the reduced-cost row for the given objective.
        for (std::size_t j = 0; j < cols_; ++j) t_[m_][j] = (j < cols_ - 1) ? c[j] : 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            const double cb = c[basis_[i]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j < cols_; ++j) t_[m_][j] -= cb * t_[i][j];
        }
    }

    LpStatus iterate(std::size_t allowed_cols) {
        for (std::size_t step = 0; step < pivot_cap; ++step) {
            std::size_t enter = allowed_cols;
            for (std::size_t j = 0; j < allowed_cols; ++j)
                if (t_[m_][j] < -eps) {
                    enter = j;
                    break;
                }
            if (enter == allowed_cols) return LpStatus::Optimal;
            std::size_t leave = m_;
            double best_ratio = infinity;
            for (std::size_t i = 0; i < m_; ++i) {
                if (t_[i][enter] <= eps) continue;
                const double ratio = t_[i][rhs()] / t_[i][enter];
                if (ratio < best_ratio - 1e-12 ||
                    (ratio < best_ratio + 1e-12 && (leave == m_ || basis_[i] < basis_[leave]))) {
                    best_ratio = ratio;
                    leave = i;
                }
            }
            if (leave == m_) return LpStatus::Unbounded;
            pivot(leave, enter);
        }
        throw NumericalError("simplex failed to terminate within the pivot cap");
    }

    void pivot(std::size_t row, std::size_t col) {
        const double p = t_[row][col];
        for (std::size_t j = 0; j < cols_; ++j) t_[row][j] /= p;
        t_[row][col] = 1.0;
        for (std::size_t i = 0; i <= m_; ++i) {
            if (i == row) continue;
            const double f = t_[i][col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < cols_; ++j) t_[i][j] -= f * t_[row][j];
            t_[i][col] = 0.0;
        }
        basis_[row] = col;
    }

    void remove_artificial_rows() {
        // Pivot artificial variables out of the basis; rows that cannot be
        // repaired are redundant equalities and are dropped.
        for (std::size_t i = 0; i < m_;) {
            if (basis_[i] < nvars_) {
                ++i;
                continue;
            }
            std::size_t col = nvars_;
            for (std::size_t j = 0; j < nvars_; ++j)
                if (std::abs(t_[i][j]) > eps) {
                    col = j;
                    break;
                }
            if (col < nvars_) {
                pivot(i, col);
                ++i;
            } else {
                t_.erase(t_.begin() + static_cast<std::ptrdiff_t>(i));
                basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(i));
                --m_;
            }
        }
    }

    std::size_t m_, nvars_, cols_;
    std::vector<std::vector<double>> t_;
    std::vector<std::size_t> basis_;
};

}  // namespace detail

/** Solves min c'x subject to Ax = b, x >= 0 with a dense two-phase simplex.
 *
 * Deterministic (Bland's rule); infeasible and unbounded programs are
 * reported through the status field rather than by exception.
 */
inline LpSolution solve_lp(const std::vector<double>& objective, const Matrix& eq_lhs,
                           const std::vector<double>& eq_rhs) {
    if (eq_lhs.rows() != eq_rhs.size())
        throw std::invalid_argument("solve_lp: row count mismatch");
    if (eq_lhs.rows() > 0 && eq_lhs.cols() != objective.size())
        throw std::invalid_argument("solve_lp: column count mismatch");
    LpSolution out;
    if (eq_lhs.rows() == 0) {
        // No constraints: optimum is zero unless some cost is negative.
        out.x.assign(objective.size(), 0.0);
        for (double c : objective)
            if (c < 0.0) {
                out.status = LpStatus::Unbounded;
                return out;
            }
        out.status = LpStatus::Optimal;
        out.value = 0.0;
        return out;
    }
    detail::SimplexTableau tab(eq_lhs, eq_rhs, objective.size());
    out.status = tab.run(objective);
    if (out.status != LpStatus::Optimal) return out;
    out.x = tab.solution();
    double v = 0.0;
    for (std::size_t j = 0; j < objective.size(); ++j) v += objective[j] * out.x[j];
    out.value = v;
    return out;
}

struct MatherValue {
    double value = 0.0;
    PairMeasure witness;
};

/** Minimal average cost over probability weights on pairs whose marginals
 *  coincide, as a linear program over the n^2 pair weights.
 *
 * The program: minimize sum l0(z,x) mu(z,x) subject to mu >= 0, total mass
 * one, and outflow equal to inflow at every state (one of those balance
 * equations is implied by the others and is omitted).
 */
inline MatherValue mather_value_lp(const Matrix& l0) {
    validate_cost_table(l0);
    const std::size_t n = l0.rows();
    const std::size_t nv = n * n;
    const std::size_t rows = 1 + (n - 1);
    Matrix a(rows, nv, 0.0);
    std::vector<double> b(rows, 0.0);
    for (std::size_t j = 0; j < nv; ++j) a(0, j) = 1.0;
    b[0] = 1.0;
    for (std::size_t z = 0; z + 1 < n; ++z) {
        for (std::size_t x = 0; x < n; ++x) {
            a(1 + z, z * n + x) += 1.0;
            a(1 + z, x * n + z) -= 1.0;
        }
    }
    std::vector<double> c(l0.data());
    const LpSolution sol = solve_lp(c, a, b);
    if (sol.status != LpStatus::Optimal)
        throw NumericalError("pair-measure program unexpectedly infeasible or unbounded");
    MatherValue out;
    out.value = sol.value;
    out.witness.weights = Matrix(n, n);
    for (std::size_t z = 0; z < n; ++z)
        for (std::size_t x = 0; x < n; ++x)
            out.witness.weights(z, x) = std::max(0.0, sol.x[z * n + x]);
    validate_measure(out.witness);
    return out;
}

struct SimpleCycle {
    std::vector<std::size_t> states;  // anchored at the smallest member
    double total = 0.0;
    double mean = 0.0;
};

/** Every simple directed cycle of the complete digraph on n states, self-loops
 *  included, each listed exactly once.
 *
 * A cycle is anchored at its smallest state and extensions are tried in
 * increasing order, so the output order is deterministic.  On a complete
 * digraph no pruning helps; the count is sum_k C(n,k)(k-1)! (16072 at n = 8).
 */
inline std::vector<SimpleCycle> enumerate_simple_cycles(const Matrix& w) {
    validate_cost_table(w);
    const std::size_t n = w.rows();
    std::vector<SimpleCycle> out;
    std::vector<std::size_t> path;
    std::vector<char> used(n, 0);

    auto close = [&](std::size_t anchor, double path_cost) {
        SimpleCycle c;
        c.states = path;
        c.total = path_cost + w(path.back(), anchor);
        c.mean = c.total / static_cast<double>(path.size());
        out.push_back(std::move(c));
    };

    std::function<void(std::size_t, double)> extend = [&](std::size_t anchor, double path_cost) {
        close(anchor, path_cost);
        for (std::size_t next = anchor + 1; next < n; ++next) {
            if (used[next]) continue;
            used[next] = 1;
            const double edge = w(path.back(), next);
            path.push_back(next);
            extend(anchor, path_cost + edge);
            path.pop_back();
            used[next] = 0;
        }
    };

    for (std::size_t anchor = 0; anchor < n; ++anchor) {
        path.assign(1, anchor);
        std::fill(used.begin(), used.end(), 0);
        used[anchor] = 1;
        extend(anchor, 0.0);
    }
    return out;
}

/** The minimizing pair measures: value and vertex list.
 *
 * Vertices are the uniform measures on the simple cycles of minimal mean
 * weight; `cycles[i]` records the states of the cycle behind `vertices[i]`.
 */
struct MatherPolytope {
    double value = 0.0;
    std::vector<PairMeasure> vertices;
    std::vector<std::vector<std::size_t>> cycles;
};

/** Enumerates the vertices of the minimizing-measure polytope by exhausting
 *  simple cycles.
 *
 * \param l0  square cost table
 * \param cap largest admissible state count (enumeration is exhaustive)
 */
inline MatherPolytope mather_vertices(const Matrix& l0,
                                      std::size_t cap = defaults::cycle_state_cap) {
    validate_cost_table(l0);
    const std::size_t n = l0.rows();
    if (n > cap)
        throw std::invalid_argument("mather_vertices: state count exceeds the enumeration cap");
    const std::vector<SimpleCycle> cycles = enumerate_simple_cycles(l0);
    MatherPolytope out;
    out.value = infinity;
    for (const SimpleCycle& c : cycles) out.value = std::min(out.value, c.mean);
    for (const SimpleCycle& c : cycles) {
        if (c.mean > out.value + 1e-9) continue;
        PairMeasure mu;
        mu.weights = Matrix(n, n, 0.0);
        const double wgt = 1.0 / static_cast<double>(c.states.size());
        for (std::size_t i = 0; i < c.states.size(); ++i) {
            const std::size_t z = c.states[i];
            const std::size_t x = c.states[(i + 1) % c.states.size()];
            mu.weights(z, x) += wgt;
        }
        bool duplicate = false;
        for (const PairMeasure& kept : out.vertices) {
            double diff = 0.0;
            for (std::size_t i = 0; i < n * n; ++i)
                diff = std::max(diff,
                                std::abs(kept.weights.data()[i] - mu.weights.data()[i]));
            if (diff <= 1e-12) {
                duplicate = true;
                break;
            }
        }
        if (duplicate) continue;
        validate_measure(mu);
        out.vertices.push_back(std::move(mu));
        out.cycles.push_back(c.states);
    }
    return out;
}

/// Integral of a pairwise table against a pair measure (fixed summation order).
inline double integrate(const Matrix& f, const PairMeasure& mu) {
    if (!f.same_shape(mu.weights))
        throw std::invalid_argument("integrate: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < f.data().size(); ++i) s += f.data()[i] * mu.weights.data()[i];
    return s;
}

/** Critical constant with an independent cross-check: the dynamic-programming
 *  value must agree with the pair-measure linear program within tol. */
inline double critical_constant_cross_checked(const Matrix& l0, double tol = 1e-9) {
    const double c0 = critical_constant(l0);
    const MatherValue mv = mather_value_lp(l0);
    if (std::abs(mv.value + c0) > tol)
        throw NumericalError("critical constant and pair-measure program disagree");
    return c0;
}

}  // namespace weakkam
