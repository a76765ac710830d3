#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "ergoflow/averaging.hpp"
#include "oracles.hpp"

using namespace ergoflow;

namespace {

const double r2 = std::sqrt(2.0), r3 = std::sqrt(3.0), r5 = std::sqrt(5.0);

FlowSpec kron(std::vector<double> v) { return KroneckerSpec::one_parameter(std::move(v)); }

AveragePlan thmA(FlowSpec T, FlowSpec S, Observable f1, Observable f2, Observable g, Polynomial Q, Rational a)
{
    AveragePlan p;
    p.form = Form::ThmA;
    p.flows = {std::move(T), std::move(S)};
    p.observables = {std::move(f1), std::move(f2), std::move(g)};
    p.Q = std::move(Q);
    p.a = a;
    return p;
}

QuadratureConfig horizons(std::vector<double> M)
{
    QuadratureConfig q;
    q.horizons = std::move(M);
    return q;
}

double dot(const std::vector<std::int64_t>& k, const std::vector<double>& v)
{
    double s = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i)
        s += static_cast<double>(k[i]) * v[i];
    return s;
}

}  // namespace

TEST(ContinuousAverage, ConstantsFactorOut)
{
    auto p = thmA(kron({r2}), kron({r3}), Observable::constant(2.0), Observable::constant(0.5),
                  Observable::constant(cplx(1, 1)), Polynomial{0, 0, 1}, Rational(1, 2));
    auto c = continuous_average(p, TorusPoint{{0.3}}, QuadratureConfig{});
    ASSERT_EQ(c.points.size(), 5u);
    for (const auto& pt : c.points)
        EXPECT_LT(std::abs(pt.value - cplx(1, 1)), 1e-14);
}

TEST(ContinuousAverage, LinearCharactersMatchClosedForm)
{
    std::vector<double> alpha{r2, r3};
    std::vector<double> x{0.12, 0.77};
    std::vector<std::int64_t> k{1, -2}, l{3, 1};
    auto p = thmA(kron(alpha), kron({r5, 0.0}), Observable::character(k), Observable::character(l),
                  Observable::constant(1.0), Polynomial{0, 0, 1}, Rational(1));
    auto c = continuous_average(p, TorusPoint{x}, horizons({1e3}));
    std::vector<std::int64_t> kl{k[0] + l[0], k[1] + l[1]};
    cplx want = oracle::e(dot(kl, x)) * oracle::linear_character_mean(dot(kl, alpha), 1e3);
    EXPECT_LT(std::abs(c.points[0].value - want), 1e-3 + c.points[0].err);
    EXPECT_LT(std::abs(c.points[0].value - want), 1e-12);
}

TEST(ContinuousAverage, FullTripleMatchesRiemannSum)
{
    std::vector<double> vT{r2, 0.0}, vS{0.0, 1e-3 * r5};
    std::vector<double> x{0.25, 0.6};
    std::vector<std::int64_t> k{1, 0}, l{-2, 1}, m{0, 3};
    auto p = thmA(kron(vT), kron(vS), Observable::character(k), Observable::character(l), Observable::character(m),
                  Polynomial{0, 0, 1}, Rational(1, 2));
    const double M = 1e3;
    auto c = continuous_average(p, TorusPoint{x}, horizons({M}));
    auto F = [&](double t) {
        std::vector<double> a(2), b(2), s(2);
        for (int i = 0; i < 2; ++i) {
            a[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] + vT[static_cast<std::size_t>(i)] * t;
            b[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] + vT[static_cast<std::size_t>(i)] * 0.5 * t;
            s[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] + vS[static_cast<std::size_t>(i)] * t * t;
        }
        return oracle::e(dot(k, a)) * oracle::e(dot(l, b)) * oracle::e(dot(m, s));
    };
    cplx want = oracle::riemann(F, M, static_cast<std::int64_t>(M / 1e-4)) / M;
    EXPECT_LT(std::abs(c.points[0].value - want), 1e-5);
}

TEST(ContinuousAverage, FractionalExponentMatchesSubstitution)
{
    // (1/M) int_0^M e(w sqrt t) dt = (2/M) int_0^sqrt(M) s e(w s) ds
    const double w = 0.37, M = 400.0;
    AveragePlan p;
    p.form = Form::Single;
    p.flows = {kron({w})};
    p.observables = {Observable::character({1})};
    p.Q = Polynomial{0, 1};
    p.beta = 0.5;
    auto c = continuous_average(p, TorusPoint{{0.0}}, horizons({M}));
    double R = std::sqrt(M);
    cplx iw(0.0, 2.0 * oracle::pi * w);
    cplx integral = (std::exp(iw * R) * (iw * R - 1.0) + 1.0) / (iw * iw);
    cplx want = 2.0 * integral / M;
    EXPECT_LT(std::abs(c.points[0].value - want), 1e-10);
}

TEST(ContinuousAverage, BoundedBySupProduct)
{
    auto f = Observable::sum({Observable::character({1}), Observable::constant(0.5)});
    auto p = thmA(kron({r2}), kron({0.01 * r3}), f, f, Observable::character({1}), Polynomial{0, 0.3, 1}, Rational(2));
    auto c = continuous_average(p, TorusPoint{{0.0}}, horizons({100, 1000}));
    for (const auto& pt : c.points)
        EXPECT_LE(std::abs(pt.value), p.sup_product() + 1e-12);
}

TEST(ContinuousAverage, ConjugationSymmetry)
{
    auto f1 = Observable::sum({Observable::character({1}), Observable::constant(cplx(0.2, 0.4))});
    auto f2 = Observable::character({2});
    auto g = Observable::sum({Observable::character({-1}), Observable::constant(cplx(0, 1))}, {cplx(0.5, 0.5), 1.0});
    Polynomial Q{0, 0, 1, 0.001};
    auto p = thmA(kron({r2}), kron({0.01 * r3}), f1, f2, g, Q, Rational(3, 2));
    auto q = thmA(kron({r2}), kron({0.01 * r3}), conjugate(f1), conjugate(f2), conjugate(g), Q, Rational(3, 2));
    auto x = TorusPoint{{0.41}};
    auto c1 = continuous_average(p, x, horizons({100, 300}));
    auto c2 = continuous_average(q, x, horizons({100, 300}));
    for (std::size_t i = 0; i < c1.points.size(); ++i)
        EXPECT_LT(std::abs(c1.points[i].value - std::conj(c2.points[i].value)), 1e-13);
}

TEST(ContinuousAverage, RefinementStaysWithinErrorEstimate)
{
    auto p = thmA(kron({r2}), kron({0.01 * r3}), Observable::character({1}), Observable::character({1}),
                  Observable::character({1}), Polynomial{0, 0, 1}, Rational(1));
    auto q1 = horizons({100, 1000});
    auto q2 = q1;
    q2.phase_step = 0.1;
    q2.step = 0.025;
    auto a = continuous_average(p, TorusPoint{{0.1}}, q1);
    auto b = continuous_average(p, TorusPoint{{0.1}}, q2);
    for (std::size_t i = 0; i < 2; ++i)
        EXPECT_LE(std::abs(a.points[i].value - b.points[i].value), a.points[i].err + b.points[i].err + 1e-14);
}

TEST(ContinuousAverage, ConfigurationErrors)
{
    auto p = thmA(kron({r2}), kron({r3}), Observable::character({1}), Observable::character({1}),
                  Observable::character({1}), Polynomial{0, 0, 1}, Rational(1));
    auto q = horizons({0.2, 10});
    EXPECT_THROW(continuous_average(p, TorusPoint{{0.1}}, q), ConfigError);
    auto bad = p;
    bad.observables.pop_back();
    EXPECT_THROW(continuous_average(bad, TorusPoint{{0.1}}, QuadratureConfig{}), ConfigError);
    auto nan = p;
    nan.observables[2] = Observable::constant(cplx(std::nan(""), 0.0));
    try {
        continuous_average(nan, TorusPoint{{0.1}}, horizons({10}));
        FAIL() << "expected EvaluationError";
    } catch (const EvaluationError& e) {
        EXPECT_GE(e.t, 0.0);
        EXPECT_LE(e.t, 10.0);
    }
}

TEST(ContinuousAverage, BitStableAcrossThreadCounts)
{
    auto p = thmA(kron({r2}), kron({0.01 * r3}), Observable::character({1}), Observable::character({-1}),
                  Observable::character({1}), Polynomial{0, 0, 1}, Rational(1, 2));
    auto q = horizons({300, 1e3});
    q.threads = 1;
    auto a = continuous_average(p, TorusPoint{{0.2}}, q);
    q.threads = 4;
    auto b = continuous_average(p, TorusPoint{{0.2}}, q);
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        EXPECT_EQ(std::memcmp(&a.points[i].value, &b.points[i].value, sizeof(cplx)), 0);
        EXPECT_EQ(a.points[i].err, b.points[i].err);
    }
}

TEST(BlockAverage, RebracketingOnRandomPlans)
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Rational as[] = {Rational(1), Rational(1, 2), Rational(2), Rational(3, 2)};
    for (int trial = 0; trial < 20; ++trial) {
        std::int64_t k = static_cast<std::int64_t>(rng() % 5) - 2, l = static_cast<std::int64_t>(rng() % 5) - 2;
        std::int64_t m = 1 + static_cast<std::int64_t>(rng() % 3);
        Polynomial Q{0, u(rng) - 0.5, 1.0, trial % 2 ? 0.01 * u(rng) : 0.0};
        auto p = thmA(kron({r2, r3}), kron({0.0, 0.02 * r5}), Observable::character({k, 1}),
                      Observable::character({l, 0}), Observable::character({0, m}), Q, as[rng() % 4]);
        double delta = std::vector<double>{0.5, 1.0, 2.5}[rng() % 3];
        std::int64_t N = 10 + static_cast<std::int64_t>(rng() % 190);
        TorusPoint x{{u(rng), u(rng)}};
        cplx blocks = block_average(p, x, delta, N);
        auto c = continuous_average(p, x, horizons({static_cast<double>(N) * delta}));
        EXPECT_LT(std::abs(blocks - c.points[0].value), std::max(1e-12, 2 * c.points[0].err)) << "trial " << trial;
    }
}

TEST(BlockAverage, ConstantsExact)
{
    auto p = thmA(kron({r2}), kron({r3}), Observable::constant(3.0), Observable::constant(0.5),
                  Observable::constant(2.0), Polynomial{0, 0, 1}, Rational(1));
    EXPECT_LT(std::abs(block_average(p, TorusPoint{{0.5}}, 0.7, 13) - cplx(3.0)), 1e-14);
}

TEST(BlockAverage, TruncationBound)
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        auto p = thmA(kron({r2}), kron({0.01 * r3}), Observable::sum({Observable::character({1}), Observable::constant(0.8)}),
                      Observable::character({-1}), Observable::character({1}), Polynomial{0, 0, 1}, Rational(1, 2));
        double delta = 0.5 + 4.0 * u(rng);
        double M = 20.0 + 300.0 * u(rng);
        double cut = std::floor(M / delta) * delta;
        if (cut <= 0.0 || cut == M)
            continue;
        auto c = continuous_average(p, TorusPoint{{u(rng)}}, horizons({cut, M}));
        double gap = std::abs(c.points[0].value - c.points[1].value);
        EXPECT_LE(gap, 2.0 * p.sup_product() * delta / M + c.points[0].err + c.points[1].err);
    }
}

TEST(PowerSubstitute, IdentityExponentGivesIdenticalCurves)
{
    auto [a, b] = power_substitute_check(kron({r2}), Observable::character({1}), 1.0, TorusPoint{{0.3}}, QuadratureConfig{});
    for (std::size_t i = 0; i < a.points.size(); ++i)
        EXPECT_EQ(a.points[i].value, b.points[i].value);
}

TEST(PowerSubstitute, ConstantObservable)
{
    auto [a, b] = power_substitute_check(kron({r2}), Observable::constant(0.7), 2.0, TorusPoint{{0.3}}, QuadratureConfig{});
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        EXPECT_LT(std::abs(a.points[i].value - 0.7), 1e-14);
        EXPECT_LT(std::abs(b.points[i].value - 0.7), 1e-14);
    }
}

TEST(PowerSubstitute, KroneckerSquareTailGap)
{
    auto [a, b] = power_substitute_check(kron({r2 - 1.0}), Observable::character({1}), 2.0, TorusPoint{{0.3}}, horizons({100, 1000}));
    EXPECT_LE(std::abs(a.points.back().value - b.points.back().value), 0.05);
    EXPECT_LT(std::abs(a.points.back().value - oracle::e(0.3) * oracle::linear_character_mean(r2 - 1.0, 1e3)), 1e-12);
}

TEST(BoxAverage, OneDimensionalReducesToContinuous)
{
    AveragePlan p;
    p.form = Form::ThmC;
    p.flows = {kron({r2}), kron({0.01 * r3})};
    p.observables = {Observable::character({1}), Observable::character({2})};
    p.P = LinearForm{{3}};
    p.c_box = 0.5;
    TorusPoint x{{0.15}};
    cplx box = box_average(p, x, {500.0}, QuadratureConfig{});
    auto q = thmA(kron({r2}), kron({0.01 * r3}), Observable::character({1}), Observable::constant(1.0),
                  Observable::character({2}), Polynomial{0, 1.5, 1}, Rational(1));
    auto c = continuous_average(q, x, horizons({500.0}));
    EXPECT_LT(std::abs(box - c.points[0].value), 1e-12);
}

TEST(BoxAverage, ConstantsGiveProduct)
{
    AveragePlan p;
    p.form = Form::ThmC;
    p.flows = {kron({r2}), kron({r3})};
    p.observables = {Observable::constant(0.5), Observable::constant(cplx(0, 3))};
    p.P = LinearForm{{1, -2}};
    p.c_box = 1.0;
    cplx v = box_average(p, TorusPoint{{0.0}}, {20.0, 30.0}, QuadratureConfig{});
    EXPECT_LT(std::abs(v - cplx(0, 1.5)), 1e-13);
}

TEST(BoxAverage, TwoDimensionalMatchesNestedRiemannSum)
{
    const double vT = 0.05 * r2, vS = 1e-4 * r3, c = 1.0;
    const std::int64_t l1 = 1, l2 = -2;
    const double x0 = 0.3, M = 300.0;
    AveragePlan p;
    p.form = Form::ThmC;
    p.flows = {kron({vT}), kron({vS})};
    p.observables = {Observable::character({1}), Observable::character({1})};
    p.P = LinearForm{{l1, l2}};
    p.c_box = c;
    cplx got = box_average(p, TorusPoint{{x0}}, {M, M}, QuadratureConfig{});

    // nested midpoint sums at two widths, Richardson-combined
    auto nested = [&](std::int64_t n) {
        double h = M / static_cast<double>(n);
        cplx total = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            double t1 = (static_cast<double>(i) + 0.5) * h;
            cplx row = 0.0;
            for (std::int64_t j = 0; j < n; ++j) {
                double t2 = (static_cast<double>(j) + 0.5) * h;
                double s = t1 + t2;
                row += oracle::e(x0 + vT * s) * oracle::e(x0 + vS * (s * s + c * (l1 * t1 + l2 * t2)));
            }
            total += row;
        }
        return total * h * h / (M * M);
    };
    cplx coarse = nested(5000), fine = nested(10000);
    cplx want = (4.0 * fine - coarse) / 3.0;
    EXPECT_LT(std::abs(got - want), 1e-4);
}

TEST(BoxAverage, ScaleAndShapeErrors)
{
    AveragePlan p;
    p.form = Form::ThmC;
    p.flows = {kron({r2}), kron({r3})};
    p.observables = {Observable::constant(1.0), Observable::constant(1.0)};
    p.P = LinearForm{{1, 1, 1, 1}};
    EXPECT_THROW(box_average(p, TorusPoint{{0.0}}, {10, 10, 10, 10}, QuadratureConfig{}), UnsupportedScale);
    p.P = LinearForm{{1, 1}};
    EXPECT_THROW(box_average(p, TorusPoint{{0.0}}, {10}, QuadratureConfig{}), ConfigError);
    EXPECT_THROW(box_average(p, TorusPoint{{0.0}}, {10, 0.1}, QuadratureConfig{}), ConfigError);
}
