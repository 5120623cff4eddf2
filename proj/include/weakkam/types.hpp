#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace weakkam {

/// Value vector indexed by state; the basic object all operators act on.
using Potential = std::vector<double>;

inline constexpr double infinity = std::numeric_limits<double>::infinity();

namespace defaults {
/// Tolerance for deciding that a closed-walk cost vanishes.
inline constexpr double tol_aubry = 1e-9;
/// Sup-norm residual accepted for a fixed point.
inline constexpr double tol_fp = 1e-9;
/// Strictness margin for the negativity of coupling-weight integrals.
inline constexpr double tol_l4 = 1e-9;
/// Residual accepted by the per-state inner solves.
inline constexpr double tol_inner = 1e-12;
inline constexpr std::size_t inner_iteration_cap = 1000000;
inline constexpr std::size_t outer_iteration_cap = 100000;
/// Largest state count accepted by exhaustive cycle enumeration.
inline constexpr std::size_t cycle_state_cap = 8;
}  // namespace defaults

/** Dense row-major matrix of doubles, sized for small state spaces. */
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    double max_entry() const {
        double m = -infinity;
        for (double v : data_) m = std::max(m, v);
        return m;
    }

    double min_entry() const {
        double m = infinity;
        for (double v : data_) m = std::min(m, v);
        return m;
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

inline double sup_norm(const Potential& f) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
}

inline double sup_dist(const Potential& f, const Potential& g) {
    if (f.size() != g.size())
        throw std::invalid_argument("sup_dist: size mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) m = std::max(m, std::abs(f[i] - g[i]));
    return m;
}

/** Ordered list of state labels; every table in the library is indexed by
 *  positions in this list. */
struct FiniteSpace {
    std::vector<std::string> labels;

    std::size_t size() const { return labels.size(); }

    std::size_t index_of(const std::string& label) const {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) return i;
        throw std::invalid_argument("unknown state label: " + label);
    }
};

inline void validate_space(const FiniteSpace& space) {
    if (space.labels.empty())
        throw std::invalid_argument("state space must not be empty");
    for (std::size_t i = 0; i < space.labels.size(); ++i)
        for (std::size_t j = i + 1; j < space.labels.size(); ++j)
            if (space.labels[i] == space.labels[j])
                throw std::invalid_argument("duplicate state label: " + space.labels[i]);
}

/** Probability weights on ordered state pairs; entry (z, x) carries the mass
 *  of the transition z -> x.  A valid measure is non-negative, sums to one
 *  and has coinciding first and second marginals. */
struct PairMeasure {
    Matrix weights;

    double total() const {
        double s = 0.0;
        for (double v : weights.data()) s += v;
        return s;
    }

    /// Largest absolute difference between the two marginals at any state.
    double marginal_defect() const {
        const std::size_t n = weights.rows();
        double worst = 0.0;
        for (std::size_t z = 0; z < n; ++z) {
            double out = 0.0, in = 0.0;
            for (std::size_t x = 0; x < n; ++x) {
                out += weights(z, x);
                in += weights(x, z);
            }
            worst = std::max(worst, std::abs(out - in));
        }
        return worst;
    }
};

inline void validate_measure(const PairMeasure& mu, double tol_sum = 1e-12,
                             double tol_marginal = 1e-10) {
    const Matrix& w = mu.weights;
    if (w.rows() == 0 || w.rows() != w.cols())
        throw std::invalid_argument("pair measure needs a non-empty square weight table");
    for (double v : w.data())
        if (!(v >= 0.0))
            throw std::invalid_argument("pair measure has a negative or non-finite weight");
    if (std::abs(mu.total() - 1.0) > tol_sum)
        throw std::invalid_argument("pair measure weights do not sum to one");
    if (mu.marginal_defect() > tol_marginal)
        throw std::invalid_argument("pair measure marginals do not coincide");
}

/// Raised when an iterative scheme fails to reach its target residual.
struct ConvergenceError : std::runtime_error {
    double residual;
    explicit ConvergenceError(const std::string& what, double res = std::numeric_limits<double>::quiet_NaN())
        : std::runtime_error(what), residual(res) {}
};

/// Raised when input data violates a structural hypothesis the algorithms rely on.
struct HypothesisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when an internal cross-check fails beyond the allowed tolerance.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace weakkam
