#include "catch2/catch_amalgamated.hpp"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "weakkam/mather.hpp"
#include "weakkam/model.hpp"

using namespace weakkam;

namespace {

Matrix make2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m(0, 0) = a;
    m(0, 1) = b;
    m(1, 0) = c;
    m(1, 1) = d;
    return m;
}

CostModel two_state_alpha(const Matrix& l0, double a0, double a1) {
    CouplingSpec cp;
    cp.A = Matrix(2, 2);
    cp.A(0, 0) = cp.A(0, 1) = a0;
    cp.A(1, 0) = cp.A(1, 1) = a1;
    return make_model(FiniteSpace{{"a", "b"}}, l0, cp);
}

}  // namespace

TEST_CASE("model construction rejects malformed input") {
    const Matrix l0 = make2(0, -1, 2, 1);
    REQUIRE_THROWS_AS(make_model(FiniteSpace{{}}, l0, CouplingSpec{}), std::invalid_argument);
    REQUIRE_THROWS_AS(make_model(FiniteSpace{{"a", "a"}}, l0, CouplingSpec{}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(make_model(FiniteSpace{{"a", "b", "c"}}, l0, CouplingSpec{}),
                      std::invalid_argument);

    Matrix bad = l0;
    bad(0, 1) = infinity;
    REQUIRE_THROWS_AS(make_model(FiniteSpace{{"a", "b"}}, bad, CouplingSpec{}),
                      std::invalid_argument);

    CouplingSpec wrong_shape;
    wrong_shape.A = Matrix(3, 3, 0.5);
    REQUIRE_THROWS_AS(make_model(FiniteSpace{{"a", "b"}}, l0, wrong_shape),
                      std::invalid_argument);

    CouplingSpec negative;
    negative.A = Matrix(2, 2, -0.25);
    REQUIRE_THROWS_AS(make_model(FiniteSpace{{"a", "b"}}, l0, negative), std::invalid_argument);

    CouplingSpec sat;
    sat.variant = CouplingVariant::Saturating;
    sat.A = Matrix(2, 2, 0.5);
    sat.scale = 0.0;
    REQUIRE_THROWS_AS(make_model(FiniteSpace{{"a", "b"}}, l0, sat), std::invalid_argument);
}

TEST_CASE("discount ceiling defaults from the coupling slopes") {
    const Matrix l0 = make2(0, -1, 2, 1);

    // No coupling: the ceiling is capped at one.
    const CostModel free = make_model(FiniteSpace{{"a", "b"}}, l0, CouplingSpec{});
    REQUIRE(free.kappa_u() == 0.0);
    REQUIRE(free.kappa_v() == 0.0);
    REQUIRE(free.lambda_max == 1.0);

    CouplingSpec strong;
    strong.A = Matrix(2, 2, 2.0);
    const CostModel tight = make_model(FiniteSpace{{"a", "b"}}, l0, strong);
    REQUIRE(tight.kappa_u() == 2.0);
    REQUIRE(tight.lambda_max == Catch::Approx(0.45).margin(1e-15));

    // Explicit ceilings must keep lambda * kappa below one; a negative
    // request falls back to the default.
    REQUIRE_THROWS_AS(make_model(FiniteSpace{{"a", "b"}}, l0, strong, 0.5),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(make_model(FiniteSpace{{"a", "b"}}, l0, strong, 0.0),
                      std::invalid_argument);
    REQUIRE(make_model(FiniteSpace{{"a", "b"}}, l0, strong, -1e-3).lambda_max ==
            Catch::Approx(0.45).margin(1e-15));
    const CostModel chosen = make_model(FiniteSpace{{"a", "b"}}, l0, strong, 0.25);
    REQUIRE(chosen.lambda_max == 0.25);
}

TEST_CASE("cost evaluation matches the declared formula") {
    const Matrix l0 = make2(0, -1, 2, 1);
    CouplingSpec cp;
    cp.A = Matrix(2, 2, 0.5);
    cp.B = Matrix(2, 2, 0.25);
    const CostModel affine = make_model(FiniteSpace{{"a", "b"}}, l0, cp);
    REQUIRE(affine.cost(0, 1, 2.0, 4.0) == -1.0 - 0.5 * 2.0 - 0.25 * 4.0);
    REQUIRE(affine.sigma(3.5) == 3.5);

    cp.variant = CouplingVariant::Saturating;
    cp.scale = 1.5;
    const CostModel sat = make_model(FiniteSpace{{"a", "b"}}, l0, cp);
    REQUIRE(sat.sigma(2.0) == 1.5 * std::tanh(2.0 / 1.5));
    REQUIRE(std::abs(sat.sigma(100.0)) <= 1.5);  // saturation bounds the slot
    REQUIRE(sat.cost(1, 0, 2.0, -1.0) ==
            2.0 - 0.5 * sat.sigma(2.0) - 0.25 * sat.sigma(-1.0));
}

TEST_CASE("value-slot slopes at zero match a finite difference") {
    std::mt19937 rng(8101);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 1 + rng() % 5;
        const bool saturating = (trial % 2) == 1;
        const CostModel m = oracle::random_admissible(rng, n, true, saturating);
        const auto [du, dv] = m.derivative_at_zero();
        for (std::size_t z = 0; z < n; ++z)
            for (std::size_t x = 0; x < n; ++x) {
                REQUIRE(du(z, x) == -m.coupling.A(z, x));
                REQUIRE(dv(z, x) == -m.coupling.B(z, x));
                REQUIRE(std::abs(oracle::fd_du(m, z, x) - du(z, x)) < 1e-6);
                REQUIRE(std::abs(oracle::fd_dv(m, z, x) - dv(z, x)) < 1e-6);
            }
    }
}

TEST_CASE("coupling modulus bounds the first-order remainder") {
    std::mt19937 rng(8102);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng() % 4;
        const CostModel m = oracle::random_admissible(rng, n, true, true);
        std::uniform_real_distribution<double> slot(-3.0, 3.0);
        for (int probe = 0; probe < 50; ++probe) {
            const double u = slot(rng), v = slot(rng);
            const double mid = 0.5 * (std::abs(u) + std::abs(v));
            for (std::size_t z = 0; z < n; ++z)
                for (std::size_t x = 0; x < n; ++x) {
                    const double rem = m.cost(z, x, u, v) - m.cost(z, x, 0.0, 0.0) +
                                       m.coupling.A(z, x) * u + m.coupling.B(z, x) * v;
                    REQUIRE(std::abs(rem) <= mid * m.coupling_modulus(mid) + 1e-12);
                }
        }
    }

    const CostModel affine = oracle::random_admissible(rng, 3, true, false);
    REQUIRE(affine.coupling_modulus(2.0) == 0.0);
}

TEST_CASE("source-homogeneous affine couplings are detected") {
    const Matrix l0 = make2(0, -1, 2, 1);
    const CostModel plain = two_state_alpha(l0, 1.0, 0.5);
    REQUIRE(plain.source_affine());
    REQUIRE(plain.source_weights() == std::vector<double>{1.0, 0.5});

    // Target weights or source weights varying with the target break the shortcut.
    CouplingSpec with_target;
    with_target.A = Matrix(2, 2, 1.0);
    with_target.B = Matrix(2, 2, 0.1);
    REQUIRE_FALSE(make_model(FiniteSpace{{"a", "b"}}, l0, with_target).source_affine());

    CouplingSpec skew;
    skew.A = Matrix(2, 2, 1.0);
    skew.A(0, 1) = 0.75;
    REQUIRE_FALSE(make_model(FiniteSpace{{"a", "b"}}, l0, skew).source_affine());

    CouplingSpec sat;
    sat.variant = CouplingVariant::Saturating;
    sat.A = Matrix(2, 2, 1.0);
    sat.scale = 1.0;
    REQUIRE_FALSE(make_model(FiniteSpace{{"a", "b"}}, l0, sat).source_affine());
}

TEST_CASE("structural checks flag the vanishing coupling vertex") {
    const Matrix l0 = make2(0, 2, 3, 0);
    const CostModel bad = two_state_alpha(l0, 1.0, 0.0);
    const MatherPolytope poly = mather_vertices(bad.l0);
    REQUIRE(poly.vertices.size() == 2);

    const AssumptionReport rep = check_assumptions(bad, poly.vertices);
    REQUIRE(rep.l2_ok);
    REQUIRE_FALSE(rep.l4_ok);
    REQUIRE(rep.l4_values.size() == 2);
    REQUIRE(rep.l4_values[0] == Catch::Approx(-1.0).margin(1e-12));
    REQUIRE(rep.l4_values[1] == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(rep.messages.size() == 1);
    REQUIRE(rep.messages[0].find("(b,b)") != std::string::npos);

    // The same base cost with both weights positive passes.
    const CostModel good = two_state_alpha(l0, 1.0, 1.0);
    const AssumptionReport ok = check_assumptions(good, poly.vertices);
    REQUIRE(ok.l2_ok);
    REQUIRE(ok.l4_ok);
    REQUIRE(ok.messages.empty());

    REQUIRE_THROWS_AS(check_assumptions(good, {}), std::invalid_argument);
}

TEST_CASE("negative coupling weights fail the sign check") {
    // Such weights cannot pass model construction, so assemble the model by hand.
    CostModel m;
    m.space = FiniteSpace{{"a", "b"}};
    m.l0 = make2(0, 2, 3, 0);
    m.coupling.A = Matrix(2, 2, 1.0);
    m.coupling.A(0, 0) = -0.5;
    m.coupling.B = Matrix(2, 2, 0.0);
    const MatherPolytope poly = mather_vertices(m.l0);
    const AssumptionReport rep = check_assumptions(m, poly.vertices);
    REQUIRE_FALSE(rep.l2_ok);
    REQUIRE_FALSE(rep.messages.empty());
}

TEST_CASE("critical normalization shifts the base cost and nothing else") {
    Matrix shifted = make2(0, -1, 2, 1);
    for (double& v : shifted.data()) v += 3.0;
    const CostModel m = two_state_alpha(shifted, 1.0, 1.0);
    const double c0 = critical_constant(m.l0);
    REQUIRE(c0 == Catch::Approx(-3.0).margin(1e-12));

    const CostModel normalized = normalize_critical(m, c0);
    REQUIRE(normalized.l0(0, 0) == 0.0);
    REQUIRE(normalized.l0(0, 1) == -1.0);
    REQUIRE(normalized.l0(1, 0) == 2.0);
    REQUIRE(normalized.l0(1, 1) == 1.0);
    REQUIRE(normalized.source_affine());
    REQUIRE(normalized.source_weights() == m.source_weights());
    REQUIRE(normalized.lambda_max == m.lambda_max);

    // A zero shift reproduces the model bit for bit.
    const CostModel same = normalize_critical(normalized, 0.0);
    REQUIRE(same.l0.data() == normalized.l0.data());

    // A wrong shift leaves a non-zero critical constant behind.
    REQUIRE_THROWS_AS(normalize_critical(m, c0 + 0.5), NumericalError);
}
