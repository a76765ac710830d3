#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ergoflow/discrete.hpp"
#include "oracles.hpp"

using namespace ergoflow;

namespace {

std::vector<cplx> ctable(std::vector<double> v) { return {v.begin(), v.end()}; }

// random permutation table of size n
std::vector<std::int64_t> random_perm(std::mt19937_64& rng, std::int64_t n)
{
    std::vector<std::int64_t> t(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        t[static_cast<std::size_t>(i)] = i;
    std::shuffle(t.begin(), t.end(), rng);
    return t;
}

// x stepped k times through the table, k reduced mod the cycle length
std::int64_t step_table(const std::vector<std::int64_t>& t, std::int64_t x, std::int64_t k)
{
    std::int64_t len = 1;
    for (std::int64_t y = t[static_cast<std::size_t>(x)]; y != x; y = t[static_cast<std::size_t>(y)])
        ++len;
    std::int64_t steps = ((k % len) + len) % len;
    for (std::int64_t s = 0; s < steps; ++s)
        x = t[static_cast<std::size_t>(x)];
    return x;
}

}  // namespace

TEST(Birkhoff, ConstantObservable)
{
    DiscreteSystem sys(PermutationMap::cyclic(7, 3));
    EXPECT_EQ(birkhoff_average(sys, Observable::constant(cplx(2, -1)), {4, {}}, 17), cplx(2, -1));
}

TEST(Birkhoff, ThreeCycleMean)
{
    DiscreteSystem sys(PermutationMap::cyclic(3));
    auto f = Observable::base_function(std::vector<double>{1, 2, 4});
    for (std::int64_t x = 0; x < 3; ++x)
        EXPECT_EQ(birkhoff_average(sys, f, {x, {}}, 3), cplx(7.0 / 3.0));
}

TEST(Birkhoff, RotationGeometricSumBound)
{
    double rho = std::sqrt(2.0) - 1.0;
    DiscreteSystem sys(RotationMap{{rho}});
    const std::int64_t N = 10000;
    cplx v = birkhoff_average(sys, Observable::character({1}), {0, {0.3}}, N);
    double bound = 2.0 / (static_cast<double>(N) * std::abs(oracle::e(rho) - 1.0));
    EXPECT_LE(std::abs(v), bound);
}

TEST(CondExp, ErgodicFiveCycle)
{
    DiscreteSystem sys(PermutationMap::cyclic(5, 2));
    std::vector<double> t{3, -1, 4, 1, 5};
    auto est = conditional_expectation(sys, Observable::base_function(t), {2, {}}, 10, 100);
    EXPECT_NEAR(est.value.real(), 12.0 / 5.0, 1e-15);
    EXPECT_EQ(est.err, 0.0);
    EXPECT_TRUE(est.converged);
}

TEST(CondExp, SeparatesCycles)
{
    std::vector<std::int64_t> perm{1, 2, 0, 4, 5, 3};
    DiscreteSystem sys{PermutationMap(perm)};
    auto tab = ctable({1, 2, 3, 10, 20, 60});
    auto f = Observable::base_function(tab);
    for (std::int64_t x = 0; x < 6; ++x)
        EXPECT_LT(std::abs(conditional_expectation(sys, f, {x, {}}, 1, 10).value - oracle::cycle_mean(perm, tab, x)), 1e-14);
}

TEST(CondExp, ConstantAnyHorizon)
{
    DiscreteSystem rot(RotationMap{{0.1234}});
    for (std::int64_t N : {1, 7, 100})
        EXPECT_EQ(conditional_expectation(rot, Observable::constant(0.25), {0, {0.5}}, N, 10).value, cplx(0.25));
}

TEST(CondExp, RotationUnconvergedFlag)
{
    DiscreteSystem rot(RotationMap{{1e-4 * std::sqrt(2.0)}});
    auto slow = conditional_expectation(rot, Observable::character({1}), {0, {0.0}}, 100, 100);
    EXPECT_FALSE(slow.converged);
    DiscreteSystem fast(RotationMap{{std::sqrt(2.0) - 1.0}});
    auto ok = conditional_expectation(fast, Observable::character({1}), {0, {0.0}}, 100000, 100);
    EXPECT_TRUE(ok.converged);
    EXPECT_LT(std::abs(ok.value), 1e-3);
}

TEST(CondExp, ProjectionLawAndInvariance)
{
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        std::int64_t n = 2 + static_cast<std::int64_t>(rng() % 200);
        auto perm = random_perm(rng, n);
        DiscreteSystem sys{PermutationMap(perm)};
        std::vector<cplx> tab;
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (std::int64_t i = 0; i < n; ++i)
            tab.emplace_back(u(rng), u(rng));
        auto f = Observable::base_function(tab);
        cplx global = 0.0, projected = 0.0;
        for (std::int64_t x = 0; x < n; ++x) {
            global += tab[static_cast<std::size_t>(x)];
            auto ce = conditional_expectation(sys, f, {x, {}}, 1, 10);
            projected += ce.value;
            auto ce_next = conditional_expectation(sys, f, {perm[static_cast<std::size_t>(x)], {}}, 1, 10);
            EXPECT_EQ(ce.value, ce_next.value);
        }
        EXPECT_LT(std::abs(projected - global) / static_cast<double>(n), 1e-12);
    }
}

TEST(PolynomialAverage, DegenerateIsBirkhoff)
{
    DiscreteSystem sys(PermutationMap::cyclic(9, 2));
    auto f = Observable::base_function(std::vector<double>{1, 5, 2, 8, 3, 7, 4, 6, 0});
    EXPECT_EQ(polynomial_average(sys, f, {3, {}}, Polynomial{0, 1}, 50), birkhoff_average(sys, f, {3, {}}, 50));
}

TEST(PolynomialAverage, SixCycleSquares)
{
    DiscreteSystem sys(PermutationMap::cyclic(6));
    std::vector<double> t{1, 2, 4, 8, 16, 32};
    auto f = Observable::base_function(t);
    for (std::int64_t x = 0; x < 6; ++x) {
        // n^2 mod 6 over one period: 0 1 4 3 4 1
        double s = 0.0;
        for (std::int64_t n = 0; n < 6; ++n)
            s += t[static_cast<std::size_t>((x + (n * n) % 6) % 6)];
        EXPECT_EQ(polynomial_average(sys, f, {x, {}}, Polynomial{0, 0, 1}, 36), cplx(s / 6.0));
    }
}

TEST(PolynomialAverage, Constant)
{
    DiscreteSystem sys(RotationMap{{0.3}});
    EXPECT_EQ(polynomial_average(sys, Observable::constant(4.0), {0, {0.2}}, Polynomial{0, 0, 0.5}, 20), cplx(4.0));
}

TEST(DoubleRecurrence, Examples)
{
    DiscreteSystem sys(PermutationMap::cyclic(4));
    std::vector<double> t1{1, 2, 3, 4}, t2{5, 7, 11, 13};
    auto f1 = Observable::base_function(t1), f2 = Observable::base_function(t2);
    EXPECT_EQ(double_recurrence_average(sys, f1, f2, 0, 0, {2, {}}, 5), cplx(3.0 * 11.0));
    for (std::int64_t x = 0; x < 4; ++x) {
        double s = 0.0;
        for (std::int64_t n = 0; n < 4; ++n)
            s += t1[static_cast<std::size_t>((x + n) % 4)] * t2[static_cast<std::size_t>((x + 2 * n) % 4)];
        EXPECT_EQ(double_recurrence_average(sys, f1, f2, 1, 2, {x, {}}, 4 * 7), cplx(s / 4.0));
    }
    EXPECT_EQ(double_recurrence_average(sys, f1, Observable::constant(2.0), 3, 5, {1, {}}, 12),
              2.0 * polynomial_average(sys, f1, {1, {}}, Polynomial{0, 3}, 12));
}

TEST(FloorMulti, SingleMapIsPolynomialAverage)
{
    DiscreteSystem sys(PermutationMap::cyclic(5, 2));
    auto f = Observable::base_function(std::vector<double>{1, 2, 3, 4, 5});
    Polynomial P{0, std::sqrt(3.0), 0.5};
    EXPECT_EQ(floor_multi_average({sys}, {P}, f, {1, {}}, 200), polynomial_average(sys, f, {1, {}}, P, 200));
}

TEST(FloorMulti, CommutingShiftsOnZ6xZ6)
{
    DiscreteSystem A(std::vector<DiscreteSystem::Component>{PermutationMap::cyclic(6, 1), PermutationMap::cyclic(6, 0)});
    DiscreteSystem B(std::vector<DiscreteSystem::Component>{PermutationMap::cyclic(6, 0), PermutationMap::cyclic(6, 1)});
    std::vector<double> t(36);
    for (std::size_t i = 0; i < 36; ++i)
        t[i] = static_cast<double>((i * 7) % 11);
    auto f = Observable::base_function(t);
    Polynomial P1{0, std::sqrt(2.0)}, P2{0, 0, 1};
    const std::int64_t N = 720;
    for (std::int64_t x : {0, 13, 35}) {
        double s = 0.0;
        for (std::int64_t n = 0; n < N; ++n) {
            auto e1 = static_cast<std::int64_t>(std::floor(static_cast<long double>(n) * std::sqrt(2.0L)));
            std::int64_t a = oracle::shift_steps(x % 6, 1, 6, e1);
            std::int64_t b = oracle::shift_steps(x / 6, 1, 6, n * n);
            s += t[static_cast<std::size_t>(a + 6 * b)];
        }
        EXPECT_EQ(floor_multi_average({A, B}, {P1, P2}, f, {x, {}}, N), cplx(s / static_cast<double>(N)));
    }
    EXPECT_EQ(floor_multi_average({A, B}, {P1, P2}, Observable::constant(1.5), {4, {}}, N), cplx(1.5));
}

TEST(FloorMulti, NonCommutingRejected)
{
    DiscreteSystem A{PermutationMap(std::vector<std::int64_t>{1, 0, 2})};
    DiscreteSystem B{PermutationMap(std::vector<std::int64_t>{0, 2, 1})};
    EXPECT_THROW(floor_multi_average({A, B}, {Polynomial{0, 1}, Polynomial{0, 1}}, Observable::constant(1.0), {0, {}}, 5),
                 DomainError);
}

TEST(OracleEquivalence, RandomFiniteSystems)
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        std::int64_t n = 1 + static_cast<std::int64_t>(rng() % 1000);
        auto perm = random_perm(rng, n);
        DiscreteSystem sys{PermutationMap(perm)};
        std::vector<double> tab(static_cast<std::size_t>(n));
        for (auto& v : tab)
            v = static_cast<double>(rng() % 64);
        auto f = Observable::base_function(tab);
        std::int64_t x = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(n));
        std::int64_t N = 1 + static_cast<std::int64_t>(rng() % 300);

        // integer orbits: sums of small integers are exact in double
        Polynomial P{static_cast<double>(rng() % 5), static_cast<double>(rng() % 7) - 3.0, static_cast<double>(rng() % 3)};
        double s = 0.0;
        for (std::int64_t k = 0; k < N; ++k)
            s += tab[static_cast<std::size_t>(step_table(perm, x, static_cast<std::int64_t>(P(static_cast<double>(k)))))];
        EXPECT_EQ(polynomial_average(sys, f, {x, {}}, P, N), cplx(s / static_cast<double>(N)));

        // floor orbits
        Polynomial Pf{0.0, std::sqrt(5.0) * static_cast<double>(rng() % 4), 0.25 * static_cast<double>(rng() % 4)};
        double sf = 0.0;
        for (std::int64_t k = 0; k < N; ++k) {
            long double v = static_cast<long double>(Pf.coeff(1)) * k + static_cast<long double>(Pf.coeff(2)) * k * k;
            sf += tab[static_cast<std::size_t>(step_table(perm, x, static_cast<std::int64_t>(std::floor(v))))];
        }
        EXPECT_NEAR(polynomial_average(sys, f, {x, {}}, Pf, N).real(), sf / static_cast<double>(N), 1e-12);

        std::int64_t a = static_cast<std::int64_t>(rng() % 5), b = static_cast<std::int64_t>(rng() % 5) - 2;
        double sd = 0.0;
        for (std::int64_t k = 0; k < N; ++k)
            sd += tab[static_cast<std::size_t>(step_table(perm, x, a * k))] *
                  tab[static_cast<std::size_t>(step_table(perm, x, b * k))];
        EXPECT_EQ(double_recurrence_average(sys, f, f, a, b, {x, {}}, N), cplx(sd / static_cast<double>(N)));
    }
}

TEST(Transfer, SingleMapSquares)
{
    MultiSuspensionSpec spec{{DiscreteSystem(PermutationMap::cyclic(3))}};
    auto f = Observable::base_function(std::vector<double>{1, 2, 4});
    auto r = suspension_transfer_check(spec, f, {Polynomial{0, 0, 1}}, {1, {}}, {0.5}, 30);
    EXPECT_EQ(r.residual, 0.0);
    EXPECT_EQ(r.count_delta, 0);
    EXPECT_EQ(r.suspension_side, r.partitioned_side);
}

TEST(Transfer, ZeroPolynomialsGiveValueAtX)
{
    DiscreteSystem A(std::vector<DiscreteSystem::Component>{PermutationMap::cyclic(3, 1), PermutationMap::cyclic(3, 0)});
    DiscreteSystem B(std::vector<DiscreteSystem::Component>{PermutationMap::cyclic(3, 0), PermutationMap::cyclic(3, 1)});
    std::vector<double> t(9);
    for (std::size_t i = 0; i < 9; ++i)
        t[i] = static_cast<double>(i * i);
    auto r = suspension_transfer_check(MultiSuspensionSpec{{A, B}}, Observable::base_function(t), {Polynomial{}, Polynomial{}},
                                       {5, {}}, {0.3, 0.6}, 20);
    EXPECT_EQ(r.residual, 0.0);
    EXPECT_EQ(r.suspension_side, cplx(25.0));
    EXPECT_EQ(r.partitioned_side, cplx(25.0));
}

TEST(Transfer, TwoCommutingCycles)
{
    DiscreteSystem A(std::vector<DiscreteSystem::Component>{PermutationMap::cyclic(4, 1), PermutationMap::cyclic(5, 0)});
    DiscreteSystem B(std::vector<DiscreteSystem::Component>{PermutationMap::cyclic(4, 0), PermutationMap::cyclic(5, 2)});
    std::vector<double> t(20);
    for (std::size_t i = 0; i < 20; ++i)
        t[i] = static_cast<double>((3 * i) % 7);
    auto r = suspension_transfer_check(MultiSuspensionSpec{{A, B}}, Observable::base_function(t),
                                       {Polynomial{0, 0, 0.5}, Polynomial{0, std::sqrt(2.0)}}, {7, {}}, {0.25, 0.8}, 50);
    EXPECT_EQ(r.residual, 0.0);
    EXPECT_EQ(r.count_delta, 0);
}

TEST(Transfer, BoundaryFiberIsRedrawn)
{
    MultiSuspensionSpec spec{{DiscreteSystem(PermutationMap::cyclic(3))}};
    auto f = Observable::base_function(std::vector<double>{1, 2, 4});
    // P(n) + z is an integer for every n
    auto r = suspension_transfer_check(spec, f, {Polynomial{0, 0, 1}}, {0, {}}, {0.0}, 10, 4);
    EXPECT_GE(r.redraws, 1);
    EXPECT_NE(r.z[0], 0.0);
    EXPECT_EQ(r.residual, 0.0);
}

TEST(Exploratory, FractionalPowerRange)
{
    DiscreteSystem sys(PermutationMap::cyclic(5));
    auto f = Observable::constant(1.0);
    EXPECT_THROW(fractional_power_average(sys, f, f, 1, 2, 1.5, {0, {}}, 10), ConfigError);
    EXPECT_EQ(fractional_power_average(sys, f, f, 1, 2, 0.5, {0, {}}, 10), cplx(1.0));
}
