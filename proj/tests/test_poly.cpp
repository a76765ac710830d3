#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ergoflow/poly.hpp"

using namespace ergoflow;

namespace {

long double eval_ld(const std::vector<double>& c, long double t)
{
    long double v = 0.0L;
    for (auto it = c.rbegin(); it != c.rend(); ++it)
        v = v * t + static_cast<long double>(*it);
    return v;
}

// coefficients of prod_j (a t + b)^j weighted by c_j, by repeated multiplication
std::vector<double> brute_compose(const std::vector<double>& c, double a, double b)
{
    std::vector<long double> out(c.size(), 0.0L), power{1.0L};
    for (std::size_t j = 0; j < c.size(); ++j) {
        for (std::size_t i = 0; i < power.size(); ++i)
            out[i] += static_cast<long double>(c[j]) * power[i];
        std::vector<long double> next(power.size() + 1, 0.0L);
        for (std::size_t i = 0; i < power.size(); ++i) {
            next[i] += b * power[i];
            next[i + 1] += a * power[i];
        }
        power = next;
    }
    return {out.begin(), out.end()};
}

}  // namespace

TEST(Decompose, SquareWithSmallDelta)
{
    auto d = shift_scale_decompose(Polynomial{0, 0, 1}, 0.1);
    EXPECT_EQ(d.s, 2);
    EXPECT_EQ(d.P, (Polynomial{0, 0, 1}));
    ASSERT_EQ(d.Pi.size(), 1u);
    EXPECT_EQ(d.Pi[0], (Polynomial{0, 2}));
    EXPECT_EQ(d.P(0.0), 0.0);
}

TEST(Decompose, SquareWithUnitDelta)
{
    Polynomial Q{0, 0, 1};
    auto d = shift_scale_decompose(Q, 1.0);
    for (double n : {0.0, 1.0, 5.0, 17.0})
        for (double t : {0.0, 0.25, 0.9})
            EXPECT_DOUBLE_EQ(d.rhs(Q, n, t), n * n + t * t + 2 * n * t);
}

TEST(Decompose, CubicIdentityOnRandomPairs)
{
    Polynomial Q{0, 0, 1, 1};
    auto d = shift_scale_decompose(Q, 0.5);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> tt(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        double n = static_cast<double>(rng() % 100), t = tt(rng);
        long double direct = eval_ld(Q.coeffs(), n * 0.5L + t);
        EXPECT_LE(std::abs(static_cast<double>(direct) - d.rhs(Q, n, t)), 1e-12 * (1 + std::abs(static_cast<double>(direct))));
    }
}

TEST(Decompose, RandomIdentityAndLeadingLaw)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> coef(-2.0, 2.0), del(0.05, 2.0), tt(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        int s = 2 + static_cast<int>(rng() % 4);
        std::vector<double> c(static_cast<std::size_t>(s) + 1, 0.0);
        for (int j = 1; j <= s; ++j)
            c[static_cast<std::size_t>(j)] = coef(rng);
        if (c.back() == 0.0)
            c.back() = 1.0;
        Polynomial Q(c);
        double delta = del(rng), n = static_cast<double>(rng() % 50), t = tt(rng);
        auto d = shift_scale_decompose(Q, delta);
        EXPECT_EQ(d.Pi.front().lead(), s * Q.lead());
        for (int i = 1; i < s; ++i)
            EXPECT_EQ(d.Pi[static_cast<std::size_t>(i - 1)].degree(), s - i);
        long double direct = eval_ld(c, static_cast<long double>(n) * delta + t);
        double lhs = static_cast<double>(direct);
        EXPECT_LE(std::abs(lhs - d.rhs(Q, n, t)), 1e-10 * (1 + std::abs(lhs))) << "trial " << trial;
    }
}

TEST(Decompose, Preconditions)
{
    EXPECT_THROW(shift_scale_decompose(Polynomial{0, 1}, 0.1), DomainError);
    EXPECT_THROW(shift_scale_decompose(Polynomial{1, 0, 1}, 0.1), DomainError);
    EXPECT_THROW(shift_scale_decompose(Polynomial{0, 0, 1}, 0.0), DomainError);
}

TEST(Eval, ZeroAndHorner)
{
    EXPECT_EQ(Polynomial{}(123.5), 0.0);
    EXPECT_EQ(Polynomial({0, 0, 0}).degree(), -1);
    EXPECT_EQ((Polynomial{1, -2, 3})(2.0), 9.0);
}

TEST(ComposeLinear, ScalingLaw)
{
    EXPECT_EQ(Polynomial({0, 0, 1}).compose_linear(2.0, 0.0), (Polynomial{0, 0, 4}));
}

TEST(ComposeLinear, MatchesBruteExpansion)
{
    Polynomial Q{0, -1, 0, 1};
    auto got = Q.compose_linear(1.0, 1.0);
    auto want = brute_compose(Q.coeffs(), 1.0, 1.0);
    ASSERT_EQ(got.coeffs().size(), 4u);
    for (std::size_t i = 0; i < 4; ++i)
        EXPECT_NEAR(got.coeffs()[i], want[i], 1e-14);
    EXPECT_EQ(got, (Polynomial{0, 2, 3, 1}));
}

TEST(ComposeLinear, Associativity)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> c(5);
        for (auto& x : c)
            x = u(rng);
        Polynomial Q(c);
        double a = u(rng), b = u(rng), cc = u(rng), dd = u(rng);
        auto lhs = Q.compose_linear(a, b).compose_linear(cc, dd);
        auto rhs = Q.compose_linear(a * cc, a * dd + b);
        for (int j = 0; j <= 4; ++j)
            EXPECT_NEAR(lhs.coeff(j), rhs.coeff(j), 1e-12);
    }
}

TEST(FloorOrbit, Examples)
{
    EXPECT_EQ(floor_poly_orbit(Polynomial{0, 0, 1}, 7), 49);
    EXPECT_EQ(floor_poly_orbit(Polynomial{0, std::sqrt(2.0)}, 5), static_cast<std::int64_t>(std::floor(5.0L * std::sqrt(2.0L))));
    EXPECT_EQ(floor_poly_orbit(Polynomial{0, 0, 0.5}, 3), 4);
    EXPECT_EQ(floor_poly_orbit(Polynomial{0, 0, 1}, -4), 16);
}

TEST(FloorOrbit, GuardResolvesNearIntegerRounding)
{
    // double(1/3) * 3 rounds to 1 but the stored coefficient is below 1/3
    double third = 1.0 / 3.0;
    ASSERT_EQ(third * 3.0, 1.0);
    long double exact = static_cast<long double>(third) * 3.0L;
    ASSERT_LT(exact, 1.0L);
    EXPECT_EQ(floor_poly_orbit(Polynomial{0, third}, 3), 0);
    EXPECT_EQ(floor_poly_orbit(Polynomial{0, third}, -3), -1);
}

TEST(FloorOrbit, AgreesWithExtendedPrecision)
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<double> c{u(rng), u(rng), u(rng)};
        std::int64_t n = static_cast<std::int64_t>(rng() % 2000) - 1000;
        long double v = eval_ld(c, static_cast<long double>(n));
        long double fl = std::floor(v);
        if (std::abs(v - std::round(v)) < 1e-15L * (1 + std::abs(v)))
            continue;  // long double itself is not trustworthy here
        EXPECT_EQ(floor_poly_orbit(Polynomial(c), n), static_cast<std::int64_t>(fl));
    }
}

TEST(FloorOrbit, Overflow)
{
    EXPECT_THROW(floor_poly_orbit(Polynomial{0, 0, 0, 1}, 1 << 20), OverflowError);
}

TEST(Parse, RoundTripAndErrors)
{
    auto Q = parse_polynomial("t^3 - 2*t");
    EXPECT_EQ(Q, (Polynomial{0, -2, 0, 1}));
    EXPECT_EQ(parse_polynomial(to_string(Q)), Q);
    EXPECT_EQ(parse_polynomial("0.5 n^2 + 3"), (Polynomial{3, 0, 0.5}));
    EXPECT_EQ(to_string(Polynomial{0, 1.5, -1}), "-t^2 + 1.5*t");
    EXPECT_THROW(parse_polynomial(""), InputError);
    EXPECT_THROW(parse_polynomial("t^2 + s"), InputError);
    EXPECT_THROW(parse_polynomial("t t"), InputError);
}

TEST(RationalArith, LowestTermsAndOverflow)
{
    Rational r(6, -4);
    EXPECT_EQ(r.p, -3);
    EXPECT_EQ(r.q, 2);
    EXPECT_EQ(Rational(1, 2) + Rational(1, 3), Rational(5, 6));
    EXPECT_THROW(Rational(1, 0), DomainError);
    EXPECT_THROW(Rational(std::int64_t{1} << 62) * Rational(4), OverflowError);
}
