#pragma once

#include <cstddef>
#include <sstream>
#include <utility>

#include "classical.hpp"
#include "types.hpp"

namespace weakkam {

/// Shape of the value coupling subtracted from the base cost.
enum class CouplingVariant { Affine, Saturating };

/** Weights of the value coupling.  Entry A(z, x) multiplies the value at the
 *  source state, B(z, x) the value at the target state; both tables are
 *  non-negative so the cost is non-increasing in each value slot.  The
 *  Saturating variant passes the values through s * tanh(t / s) first, which
 *  bounds the coupling while keeping unit slope at zero. */
struct CouplingSpec {
    CouplingVariant variant = CouplingVariant::Affine;
    Matrix A;
    Matrix B;
    double scale = 1.0;
};

/** A base cost table together with its value coupling.
 *
 * cost(z, x, u, v) = l0(z, x) - A(z, x) sigma(u) - B(z, x) sigma(v)
 * with sigma the identity (Affine) or the saturation s tanh(t/s).
 */
class CostModel {
public:
    FiniteSpace space;
    Matrix l0;
    CouplingSpec coupling;
    /// Largest admissible discount factor; lambda_max * max(kappa_u, kappa_v) < 1.
    double lambda_max = 1.0;

    std::size_t size() const { return space.size(); }

    double sigma(double t) const {
        if (coupling.variant == CouplingVariant::Affine) return t;
        return coupling.scale * std::tanh(t / coupling.scale);
    }

    double cost(std::size_t z, std::size_t x, double u, double v) const {
        return l0(z, x) - coupling.A(z, x) * sigma(u) - coupling.B(z, x) * sigma(v);
    }

    /// Lipschitz bound of the cost in the source-value slot.
    double kappa_u() const { return coupling.A.empty() ? 0.0 : std::max(0.0, coupling.A.max_entry()); }
    /// Lipschitz bound of the cost in the target-value slot.
    double kappa_v() const { return coupling.B.empty() ? 0.0 : std::max(0.0, coupling.B.max_entry()); }

    /** Slopes of the cost in the two value slots at (u, v) = (0, 0); the
     *  saturation has unit slope at zero, so both variants give (-A, -B). */
    std::pair<Matrix, Matrix> derivative_at_zero() const {
        const std::size_t n = size();
        Matrix du(n, n), dv(n, n);
        for (std::size_t z = 0; z < n; ++z)
            for (std::size_t x = 0; x < n; ++x) {
                du(z, x) = -coupling.A(z, x);
                dv(z, x) = -coupling.B(z, x);
            }
        return {std::move(du), std::move(dv)};
    }

    /** Modulus bounding the first-order remainder of the cost in the value
     *  slots: |cost - cost(.,.,0,0) + A u + B v| <= m * modulus(m) with
     *  m = (|u| + |v|)/2.  Zero for the Affine variant; for the Saturating
     *  variant 2 (kappa_u + kappa_v) t / s, the factor two covering the
     *  one-sided worst case |t - s tanh(t/s)| <= t^2 / (2s). */
    double coupling_modulus(double t) const {
        if (coupling.variant == CouplingVariant::Affine) return 0.0;
        return 2.0 * (kappa_u() + kappa_v()) * t / coupling.scale;
    }

    /// True when the coupling is affine, target-free, and source-homogeneous
    /// (A(z, x) depends on z only); enables the exact rescaling shortcut.
    bool source_affine() const { return source_affine_; }

    /// Source weights alpha(z) = A(z, .) valid when source_affine() holds.
    const std::vector<double>& source_weights() const { return alpha_; }

    void cache_structure() {
        source_affine_ = false;
        alpha_.clear();
        if (coupling.variant != CouplingVariant::Affine) return;
        for (double v : coupling.B.data())
            if (v != 0.0) return;
        const std::size_t n = size();
        alpha_.resize(n);
        for (std::size_t z = 0; z < n; ++z) {
            alpha_[z] = coupling.A(z, 0);
            for (std::size_t x = 1; x < n; ++x)
                if (coupling.A(z, x) != alpha_[z]) {
                    alpha_.clear();
                    return;
                }
        }
        source_affine_ = true;
    }

private:
    bool source_affine_ = false;
    std::vector<double> alpha_;
};

/** Validates and finalizes a model; a negative lambda_max requests the
 *  default 0.9 / max(kappa_u, kappa_v, 1e-12) capped at one. */
inline CostModel make_model(FiniteSpace space, Matrix l0, CouplingSpec coupling,
                            double lambda_max = -1.0) {
    validate_space(space);
    const std::size_t n = space.size();
    if (l0.rows() != n || l0.cols() != n)
        throw std::invalid_argument("base cost table must be n x n");
    if (!l0.all_finite())
        throw std::invalid_argument("base cost table must be finite");
    if (coupling.A.empty()) coupling.A = Matrix(n, n, 0.0);
    if (coupling.B.empty()) coupling.B = Matrix(n, n, 0.0);
    if (coupling.A.rows() != n || coupling.A.cols() != n || coupling.B.rows() != n ||
        coupling.B.cols() != n)
        throw std::invalid_argument("coupling weight tables must be n x n");
    for (double v : coupling.A.data())
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("source coupling weights must be non-negative");
    for (double v : coupling.B.data())
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("target coupling weights must be non-negative");
    if (coupling.variant == CouplingVariant::Saturating &&
        (!(coupling.scale > 0.0) || !std::isfinite(coupling.scale)))
        throw std::invalid_argument("saturation scale must be positive");

    CostModel m;
    m.space = std::move(space);
    m.l0 = std::move(l0);
    m.coupling = std::move(coupling);
    const double kappa = std::max(m.kappa_u(), m.kappa_v());
    if (lambda_max < 0.0) {
        m.lambda_max = std::min(1.0, 0.9 / std::max(kappa, 1e-12));
    } else {
        if (!(lambda_max > 0.0) || lambda_max * kappa >= 1.0)
            throw std::invalid_argument("lambda_max must be positive with lambda_max * kappa < 1");
        m.lambda_max = lambda_max;
    }
    m.cache_structure();
    return m;
}

/** Outcome of the structural checks a model must pass before the limit and
 *  discounted solvers are meaningful. */
struct AssumptionReport {
    double kappa_u = 0.0;
    double kappa_v = 0.0;
    /// Coupling weights are non-negative (cost non-increasing in both slots).
    bool l2_ok = true;
    /// Total coupling weight is strictly negative on every minimizing measure.
    bool l4_ok = true;
    /// Integral of -(A + B) against each vertex measure, in vertex order.
    std::vector<double> l4_values;
    std::vector<std::string> messages;
};

namespace detail {
inline std::string measure_support_string(const FiniteSpace& space, const PairMeasure& mu) {
    std::ostringstream os;
    os << "{";
    bool first = true;
    for (std::size_t z = 0; z < mu.weights.rows(); ++z)
        for (std::size_t x = 0; x < mu.weights.cols(); ++x)
            if (mu.weights(z, x) > 0.0) {
                if (!first) os << ", ";
                os << "(" << space.labels[z] << "," << space.labels[x] << ")";
                first = false;
            }
    os << "}";
    return os.str();
}
}  // namespace detail

/** Evaluates the structural hypotheses at the given vertex measures.
 *
 * \param model    the cost model under test
 * \param vertices vertex measures of the minimizing polytope (must be non-empty)
 * \param tol_l4   strictness margin: each integral must stay below -tol_l4
 */
inline AssumptionReport check_assumptions(const CostModel& model,
                                          const std::vector<PairMeasure>& vertices,
                                          double tol_l4 = defaults::tol_l4) {
    if (vertices.empty())
        throw std::invalid_argument("check_assumptions: vertex list must not be empty");
    AssumptionReport rep;
    rep.kappa_u = model.kappa_u();
    rep.kappa_v = model.kappa_v();
    rep.l2_ok = true;
    for (double v : model.coupling.A.data())
        if (v < 0.0) rep.l2_ok = false;
    for (double v : model.coupling.B.data())
        if (v < 0.0) rep.l2_ok = false;
    if (!rep.l2_ok) rep.messages.push_back("coupling weights must be non-negative");

    const std::size_t n = model.size();
    Matrix total(n, n);
    for (std::size_t z = 0; z < n; ++z)
        for (std::size_t x = 0; x < n; ++x)
            total(z, x) = -(model.coupling.A(z, x) + model.coupling.B(z, x));
    rep.l4_ok = true;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        double integral = 0.0;
        for (std::size_t k = 0; k < n * n; ++k)
            integral += total.data()[k] * vertices[i].weights.data()[k];
        rep.l4_values.push_back(integral);
        if (!(integral < -tol_l4)) {
            rep.l4_ok = false;
            std::ostringstream os;
            os << "coupling weight integral at vertex " << i << " is " << integral
               << " (needs < " << -tol_l4 << "); support "
               << detail::measure_support_string(model.space, vertices[i]);
            rep.messages.push_back(os.str());
        }
    }
    return rep;
}

/** Shifts the base cost by the critical constant so the shifted table has
 *  critical constant zero; verified to 1e-12 before returning.  Passing
 *  c0 = 0 reproduces the model unchanged. */
inline CostModel normalize_critical(const CostModel& model, double c0) {
    CostModel out = model;
    for (double& v : out.l0.data()) v += c0;
    const double check = critical_constant(out.l0);
    if (std::abs(check) > 1e-12)
        throw NumericalError("normalization left a non-zero critical constant");
    out.cache_structure();
    return out;
}

}  // namespace weakkam
