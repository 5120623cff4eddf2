#include "catch2/catch_amalgamated.hpp"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "weakkam/discounted.hpp"

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

const Matrix kFirst = make2(0, -1, 2, 1);
const Matrix kSecond = make2(0, 2, 3, 0);

}  // namespace

TEST_CASE("discounted operator rescales the source on homogeneous couplings") {
    const CostModel m = two_state_alpha(kFirst, 1.0, 0.5);
    std::mt19937 rng(8401);
    for (int trial = 0; trial < 50; ++trial) {
        const Potential phi = oracle::random_potential(rng, 2);
        const double lambda = 0.3;
        const Potential fast = apply_T_lambda(m, phi, lambda);
        // The shortcut is a plain one-step operator on rescaled sources.
        const Potential scaled{(1.0 - lambda * 1.0) * phi[0], (1.0 - lambda * 0.5) * phi[1]};
        const Potential direct = lax_oleinik(m.l0, scaled);
        REQUIRE(fast[0] == direct[0]);
        REQUIRE(fast[1] == direct[1]);
    }
}

TEST_CASE("discounted operator matches the implicit route on coupled targets") {
    std::mt19937 rng(8402);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 1 + rng() % 5;
        const CostModel m = oracle::random_admissible(rng, n, true, (trial % 2) == 1);
        const double lambda = 0.5 * m.lambda_max;
        const Potential phi = oracle::random_potential(rng, n);
        const Potential out = apply_T_lambda(m, phi, lambda);
        for (std::size_t x = 0; x < n; ++x) {
            double best = infinity;
            for (std::size_t z = 0; z < n; ++z)
                best = std::min(best, phi[z] + m.cost(z, x, lambda * phi[z], lambda * out[x]));
            REQUIRE(std::abs(best - out[x]) <= 1e-12);
        }
    }
}

TEST_CASE("discounted operator validates the discount factor") {
    const CostModel m = two_state_alpha(kFirst, 1.0, 1.0);
    REQUIRE_THROWS_AS(apply_T_lambda(m, Potential{0.0, 0.0}, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(apply_T_lambda(m, Potential{0.0, 0.0}, m.lambda_max),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(apply_T_lambda(m, Potential{0.0}, 0.3), std::invalid_argument);
    REQUIRE_THROWS_AS(solve_discounted(m, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(solve_discounted(m, m.lambda_max), std::invalid_argument);

    // The solver insists on a normalized base cost.
    Matrix shifted = kFirst;
    for (double& v : shifted.data()) v += 1.0;
    const CostModel off = two_state_alpha(shifted, 1.0, 1.0);
    REQUIRE_THROWS_AS(solve_discounted(off, 0.3), std::invalid_argument);
}

TEST_CASE("the loop-anchored table is solved exactly at every discount") {
    const CostModel m = two_state_alpha(kFirst, 1.0, 1.0);
    for (double lambda : {1e-6, 0.05, 0.3, 0.6, 0.89}) {
        const DiscountedSolution sol = solve_discounted(m, lambda);
        REQUIRE(sol.u[0] == 0.0);
        REQUIRE(sol.u[1] == -1.0);
        REQUIRE(sol.u_from_upper[0] == 0.0);
        REQUIRE(sol.u_from_upper[1] == -1.0);
        REQUIRE(sol.residual == 0.0);
        REQUIRE(sol.lower_bound_ok);
        REQUIRE(sol.upper_bound_ok);
        REQUIRE(sol.unique_within_tol);
    }
}

TEST_CASE("the two-loop table lands on the zero fixed point exactly") {
    const CostModel m = two_state_alpha(kSecond, 1.0, 1.0);
    for (double lambda : {1e-5, 0.1, 0.45}) {
        const DiscountedSolution sol = solve_discounted(m, lambda);
        REQUIRE(sol.u[0] == 0.0);
        REQUIRE(sol.u[1] == 0.0);
        REQUIRE_FALSE(std::signbit(sol.u[0]));
        REQUIRE_FALSE(std::signbit(sol.u[1]));
        REQUIRE(sol.residual == 0.0);
        REQUIRE(sol.unique_within_tol);
    }
}

TEST_CASE("solver logs are monotone and bracket the fixed point") {
    std::mt19937 rng(8403);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 1 + rng() % 5;
        CostModel m = oracle::random_admissible(rng, n, (trial % 2) == 0, (trial % 3) == 0);
        m = normalize_critical(m, critical_constant(m.l0));
        std::uniform_real_distribution<double> pick(0.05, 0.95);
        const double lambda = pick(rng) * m.lambda_max;
        const DiscountedSolution sol = solve_discounted(m, lambda);

        REQUIRE(sol.residual <= defaults::tol_fp);
        REQUIRE(sol.lower_bound_ok);
        REQUIRE(sol.upper_bound_ok);
        for (std::size_t k = 0; k + 1 < sol.lower_log.size(); ++k)
            for (std::size_t i = 0; i < n; ++i)
                REQUIRE(sol.lower_log[k + 1][i] >= sol.lower_log[k][i] - 1e-10);
        for (std::size_t k = 0; k + 1 < sol.upper_log.size(); ++k)
            for (std::size_t i = 0; i < n; ++i)
                REQUIRE(sol.upper_log[k + 1][i] <= sol.upper_log[k][i] + 1e-10);
        for (std::size_t i = 0; i < n; ++i) {
            REQUIRE(sol.u[i] >= sol.lower_log.front()[i] - 1e-9);
            REQUIRE(sol.u[i] <= sol.upper_log.front()[i] + 1e-9);
        }
        REQUIRE(sol.lower_log.back() == sol.u);
        REQUIRE(sol.upper_log.back() == sol.u_from_upper);

        // Certify independently: one more application moves u by at most tol.
        const Potential tu = apply_T_lambda(m, sol.u, lambda);
        REQUIRE(sup_dist(tu, sol.u) <= defaults::tol_fp);
    }
}

TEST_CASE("tiny discounts are still solved to tolerance") {
    std::mt19937 rng(8404);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 2 + rng() % 4;
        CostModel m = oracle::random_admissible(rng, n, true, false);
        m = normalize_critical(m, critical_constant(m.l0));
        const double lambda = 1e-7 * m.lambda_max;
        const DiscountedSolution sol = solve_discounted(m, lambda);
        REQUIRE(sol.residual <= defaults::tol_fp);
        REQUIRE(sol.unique_within_tol);
    }
}

TEST_CASE("backward orbits follow minimizing predecessors") {
    const CostModel m = two_state_alpha(kFirst, 1.0, 1.0);
    const double lambda = 0.3;
    const DiscountedSolution sol = solve_discounted(m, lambda);
    const std::vector<std::size_t> orbit = backward_orbit(m, sol.u, lambda, 1, 4);
    REQUIRE(orbit == std::vector<std::size_t>{1, 0, 0, 0, 0});

    // A corrupted potential is rejected at the first defective step.
    Potential bogus = sol.u;
    bogus[1] += 0.5;
    REQUIRE_THROWS_AS(backward_orbit(m, bogus, lambda, 1, 3), ConvergenceError);

    REQUIRE_THROWS_AS(backward_orbit(m, sol.u, 0.0, 1, 3), std::invalid_argument);
    REQUIRE_THROWS_AS(backward_orbit(m, sol.u, lambda, 7, 3), std::invalid_argument);
    REQUIRE_THROWS_AS(backward_orbit(m, Potential{0.0}, lambda, 0, 3), std::invalid_argument);
}
