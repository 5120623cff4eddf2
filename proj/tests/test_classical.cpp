#include "catch2/catch_amalgamated.hpp"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "weakkam/classical.hpp"

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

const Matrix kFirst = make2(0, -1, 2, 1);   // two states, loop at the first
const Matrix kSecond = make2(0, 2, 3, 0);   // two states, loops at both

}  // namespace

TEST_CASE("one-step operator takes the cheapest source") {
    const Potential f{1.0, 0.0};
    const Potential out = lax_oleinik(kFirst, f);
    REQUIRE(out[0] == 1.0);   // min(1 + 0, 0 + 2)
    REQUIRE(out[1] == 0.0);   // min(1 - 1, 0 + 1)
}

TEST_CASE("one-step operator matches the brute-force scan") {
    std::mt19937 rng(7001);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng() % 6;
        const Matrix l0 = oracle::random_integer_cost(rng, n);
        const Potential f = oracle::random_potential(rng, n);
        const Potential mine = lax_oleinik(l0, f);
        const Potential ref = oracle::lax(l0, f);
        REQUIRE(sup_dist(mine, ref) == 0.0);
    }
}

TEST_CASE("argmin variant breaks ties toward the lowest source index") {
    Matrix l0 = make2(1, 1, 1, 1);
    const Potential f{0.0, 0.0};
    // Both sources give 1 at each target; index 0 must win.
    const auto [values, argmin] = lax_oleinik_argmin(l0, f);
    REQUIRE(values[0] == 1.0);
    REQUIRE(values[1] == 1.0);
    REQUIRE(argmin[0] == 0);
    REQUIRE(argmin[1] == 0);
}

TEST_CASE("cycle mean and critical constant on hand examples") {
    REQUIRE(critical_constant(kFirst) == 0.0);
    REQUIRE(critical_constant(kSecond) == 0.0);

    Matrix single(1, 1);
    single(0, 0) = 3.0;
    REQUIRE(minimum_cycle_mean(single) == 3.0);
    REQUIRE(critical_constant(single) == -3.0);

    const Matrix constant(2, 2, 4.0);
    REQUIRE(critical_constant(constant) == -4.0);
}

TEST_CASE("critical constant never returns a negative zero") {
    const double c = critical_constant(kFirst);
    REQUIRE(c == 0.0);
    REQUIRE_FALSE(std::signbit(c));
}

TEST_CASE("cycle mean agrees with the closed-walk oracle") {
    std::mt19937 rng(7002);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 6;
        const Matrix l0 = oracle::random_integer_cost(rng, n);
        REQUIRE(std::abs(minimum_cycle_mean(l0) - oracle::min_cycle_mean(l0)) <= 1e-9);
    }
}

TEST_CASE("min-plus product agrees with the index-wise oracle") {
    std::mt19937 rng(7003);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 1 + rng() % 5;
        const Matrix a = oracle::random_integer_cost(rng, n);
        const Matrix b = oracle::random_integer_cost(rng, n);
        const Matrix mine = minplus_product(a, b);
        const Matrix ref = oracle::minplus(a, b);
        for (std::size_t k = 0; k < n * n; ++k)
            REQUIRE(mine.data()[k] == ref.data()[k]);
    }
}

TEST_CASE("barrier tables of the first hand example") {
    const BarrierTable bt = peierls_barrier(kFirst);
    REQUIRE(bt.c0 == 0.0);
    REQUIRE(bt.h(0, 0) == 0.0);
    REQUIRE(bt.h(0, 1) == -1.0);
    REQUIRE(bt.h(1, 0) == 2.0);
    REQUIRE(bt.h(1, 1) == 1.0);
    const std::vector<std::size_t> aubry = aubry_set(bt);
    REQUIRE(aubry == std::vector<std::size_t>{0});
}

TEST_CASE("barrier tables of the second hand example") {
    const BarrierTable bt = peierls_barrier(kSecond);
    REQUIRE(bt.c0 == 0.0);
    REQUIRE(bt.h(0, 0) == 0.0);
    REQUIRE(bt.h(0, 1) == 2.0);
    REQUIRE(bt.h(1, 0) == 3.0);
    REQUIRE(bt.h(1, 1) == 0.0);
    const std::vector<std::size_t> aubry = aubry_set(bt);
    REQUIRE(aubry == std::vector<std::size_t>{0, 1});
}

TEST_CASE("barrier equals the windowed power oracle on random models") {
    std::mt19937 rng(7004);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 1 + rng() % 6;
        const Matrix l0 = oracle::random_integer_cost(rng, n);
        const BarrierTable bt = peierls_barrier(l0);
        const Matrix ref = oracle::barrier_window(l0);
        for (std::size_t k = 0; k < n * n; ++k)
            REQUIRE(std::abs(bt.h.data()[k] - ref.data()[k]) <= 1e-9);
    }
}

TEST_CASE("barrier rows from the projected set solve the critical equation") {
    std::mt19937 rng(7005);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + rng() % 5;
        const Matrix l0 = oracle::random_integer_cost(rng, n);
        const BarrierTable bt = peierls_barrier(l0);
        for (std::size_t a : aubry_set(bt)) {
            const Potential u = weak_kam_solution(bt, a);
            const Potential tu = lax_oleinik(bt.tilde, u);
            REQUIRE(sup_dist(tu, u) <= 1e-9);
        }
    }
}

TEST_CASE("weak KAM solution rejects a basepoint outside the projected set") {
    const BarrierTable bt = peierls_barrier(kFirst);
    REQUIRE_NOTHROW(weak_kam_solution(bt, 0));
    REQUIRE_THROWS_AS(weak_kam_solution(bt, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(weak_kam_solution(bt, 5), std::invalid_argument);
}

TEST_CASE("generated subsolutions verify and gross violations are caught") {
    std::mt19937 rng(7006);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + rng() % 5;
        const Matrix l0 = oracle::random_integer_cost(rng, n);
        const BarrierTable bt = peierls_barrier(l0);
        Potential w = oracle::random_subsolution(rng, bt.tilde);
        REQUIRE(is_subsolution(l0, bt.c0, w));
        w[rng() % n] += 1000.0;
        REQUIRE_FALSE(is_subsolution(l0, bt.c0, w));
    }
}

TEST_CASE("solutions dominate subsolutions exactly when they do on the projected set") {
    const BarrierTable bt = peierls_barrier(kFirst);
    const Potential u = weak_kam_solution(bt, 0);
    Potential below = u;
    for (double& v : below) v -= 1.0;
    REQUIRE(comparison_check(bt, u, below));
    Potential above = u;
    for (double& v : above) v += 1.0;
    REQUIRE_FALSE(comparison_check(bt, u, above));
}

TEST_CASE("comparison rejects inputs that are not solution and subsolution") {
    const BarrierTable bt = peierls_barrier(kFirst);
    const Potential u = weak_kam_solution(bt, 0);
    const Potential junk{10.0, -10.0};
    REQUIRE_THROWS_AS(comparison_check(bt, junk, u), std::invalid_argument);
    REQUIRE_THROWS_AS(comparison_check(bt, u, junk), std::invalid_argument);
}

TEST_CASE("comparison holds across random models") {
    std::mt19937 rng(7007);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + rng() % 5;
        const Matrix l0 = oracle::random_integer_cost(rng, n);
        const BarrierTable bt = peierls_barrier(l0);
        const std::vector<std::size_t> aubry = aubry_set(bt);
        const Potential u = weak_kam_solution(bt, aubry.front());
        Potential w = oracle::random_subsolution(rng, bt.tilde);
        // Push the subsolution below u on the projected set; domination must
        // then propagate everywhere.
        double shift = 0.0;
        for (std::size_t a : aubry) shift = std::max(shift, w[a] - u[a]);
        for (double& v : w) v -= shift;
        REQUIRE(comparison_check(bt, u, w));
    }
}

TEST_CASE("an empty projected set is reported as a numerical failure") {
    BarrierTable bt;
    bt.c0 = 0.0;
    bt.tilde = Matrix(2, 2, 1.0);
    bt.mane = Matrix(2, 2, 1.0);  // strictly positive diagonal: no vanishing state
    bt.h = Matrix(2, 2, 1.0);
    REQUIRE_THROWS_AS(aubry_set(bt), NumericalError);
}

TEST_CASE("cost tables must be square and finite") {
    Matrix bad(2, 3, 0.0);
    REQUIRE_THROWS_AS(validate_cost_table(bad), std::invalid_argument);
    Matrix nan(2, 2, 0.0);
    nan(0, 1) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(validate_cost_table(nan), std::invalid_argument);
}
