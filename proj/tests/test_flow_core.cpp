#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "ergoflow/flows.hpp"
#include "ergoflow/sampler.hpp"

using namespace ergoflow;

namespace {

FlowSpec kron2() { return KroneckerSpec::one_parameter({std::sqrt(2.0), std::sqrt(3.0)}); }

FlowSpec suspension_z5() { return SuspensionSpec{DiscreteSystem(PermutationMap::cyclic(5, 2))}; }

FlowSpec two_map_suspension()
{
    DiscreteSystem a({PermutationMap::cyclic(3, 1), PermutationMap::cyclic(4, 0)});
    DiscreteSystem b({PermutationMap::cyclic(3, 0), PermutationMap::cyclic(4, 1)});
    return MultiSuspensionSpec{{a, b}};
}

}  // namespace

TEST(Evolve, KroneckerIdentityAndGroupLaw)
{
    FlowSpec f = kron2();
    PhasePoint x = TorusPoint{{0.1, 0.7}};
    EXPECT_EQ(evolve(f, x, 0.0), x);
    for (double s : {0.3, 17.25, 1e4}) {
        for (double t : {-2.5, 0.125, 333.0}) {
            auto lhs = evolve(f, evolve(f, x, s), t);
            auto rhs = evolve(f, x, s + t);
            EXPECT_LT(distance(f, lhs, rhs), 1e-9) << s << " " << t;
        }
    }
}

TEST(Evolve, KroneckerMatchesTranslation)
{
    FlowSpec f = kron2();
    auto y = evolve(f, TorusPoint{{0.0, 0.0}}, 1.0);
    EXPECT_NEAR(y.as<TorusPoint>().coords[0], std::sqrt(2.0) - 1.0, 1e-15);
    EXPECT_NEAR(y.as<TorusPoint>().coords[1], std::sqrt(3.0) - 1.0, 1e-15);
}

TEST(Evolve, SuspensionCrossesRoofAtIntegers)
{
    FlowSpec f = suspension_z5();
    PhasePoint x = SuspensionPoint{{0, {}}, {0.25}};
    auto y = evolve(f, x, 0.5);
    EXPECT_EQ(y.as<SuspensionPoint>().base.id, 0);
    EXPECT_DOUBLE_EQ(y.as<SuspensionPoint>().fiber[0], 0.75);
    y = evolve(f, x, 0.75);
    EXPECT_EQ(y.as<SuspensionPoint>().base.id, 2);
    EXPECT_DOUBLE_EQ(y.as<SuspensionPoint>().fiber[0], 0.0);
    y = evolve(f, x, -0.5);
    EXPECT_EQ(y.as<SuspensionPoint>().base.id, 3);
    EXPECT_DOUBLE_EQ(y.as<SuspensionPoint>().fiber[0], 0.75);
}

TEST(Evolve, SuspensionGroupLawExact)
{
    FlowSpec f = suspension_z5();
    PhasePoint x = SuspensionPoint{{3, {}}, {0.375}};
    for (double s : {0.5, 7.25, -13.125})
        for (double t : {1.75, -0.625, 100.5})
            EXPECT_EQ(evolve(f, evolve(f, x, s), t), evolve(f, x, s + t));
}

TEST(Evolve, MultiSuspensionCommutes)
{
    FlowSpec f = two_map_suspension();
    PhasePoint x = SuspensionPoint{{5, {}}, {0.5, 0.25}};
    std::vector<double> s{1.5, 0.0}, t{0.0, 2.75}, st{1.5, 2.75};
    EXPECT_EQ(evolve(f, evolve(f, x, s), t), evolve(f, x, st));
    EXPECT_EQ(evolve(f, evolve(f, x, t), s), evolve(f, x, st));
}

TEST(Evolve, MultiSuspensionRejectsNonCommutingMaps)
{
    DiscreteSystem a(PermutationMap({1, 0, 2}));
    DiscreteSystem b(PermutationMap({0, 2, 1}));
    EXPECT_THROW(FlowSpec(MultiSuspensionSpec{{a, b}}), DomainError);
}

TEST(Evolve, Sl2GroupLawAndDomain)
{
    auto pts = haar_sample_sl2(42, 20);
    for (auto kind : {Sl2FlowSpec::Kind::geodesic, Sl2FlowSpec::Kind::horocycle}) {
        FlowSpec f = Sl2FlowSpec{kind, 1.0};
        for (const auto& g : pts) {
            PhasePoint x = g;
            EXPECT_TRUE(contains(f, x));
            auto lhs = evolve(f, evolve(f, x, 3.5), 4.25);
            auto rhs = evolve(f, x, 7.75);
            EXPECT_TRUE(sl2::in_fundamental_domain(rhs.as<Sl2Point>()));
            EXPECT_LT(distance(f, lhs, rhs), 1e-9);
            EXPECT_NEAR(rhs.as<Sl2Point>().det(), 1.0, 1e-12);
        }
    }
}

TEST(Evolve, HorocycleOfIdentityByIntegerIsIdentity)
{
    FlowSpec f = Sl2FlowSpec{Sl2FlowSpec::Kind::horocycle, 1.0};
    PhasePoint id = Sl2Point{1.0, 0.0, 0.0, 1.0};
    auto y = evolve(f, id, 2.0);
    EXPECT_LT(distance(f, y, id), 1e-14);
}

TEST(Evolve, ProductRoutesParameters)
{
    ProductFlowSpec p;
    p.components = {KroneckerSpec::one_parameter({0.5}), KroneckerSpec::one_parameter({0.25})};
    p.routing = {{{1.0, 0.0}}, {{0.0, 2.0}}};
    FlowSpec f(p);
    EXPECT_EQ(f.params(), 2u);
    PhasePoint x = ProductPoint{{TorusPoint{{0.0}}, TorusPoint{{0.0}}}};
    std::vector<double> t{0.5, 0.5};
    auto y = evolve(f, x, t);
    EXPECT_DOUBLE_EQ(y.as<ProductPoint>().parts[0].as<TorusPoint>().coords[0], 0.25);
    EXPECT_DOUBLE_EQ(y.as<ProductPoint>().parts[1].as<TorusPoint>().coords[0], 0.25);
}

TEST(Evolve, ContractsAndInputs)
{
    FlowSpec f = kron2();
    PhasePoint x = TorusPoint{{0.1, 0.2}};
    std::vector<double> two{1.0, 2.0};
    EXPECT_THROW(evolve(f, x, two), ContractViolation);
    EXPECT_THROW(evolve(f, PhasePoint(TorusPoint{{0.1}}), 1.0), ContractViolation);
    EXPECT_THROW(evolve(f, x, std::numeric_limits<double>::quiet_NaN()), InputError);
    EXPECT_THROW(evolve(f, x, std::numeric_limits<double>::infinity()), InputError);
    EXPECT_THROW(evolve(suspension_z5(), x, 1.0), ContractViolation);
}

TEST(Distance, SuspensionIdentifiesRoof)
{
    FlowSpec f = suspension_z5();
    PhasePoint a = SuspensionPoint{{0, {}}, {0.999999}};
    PhasePoint b = SuspensionPoint{{2, {}}, {0.0}};
    EXPECT_LT(distance(f, a, b), 1e-5);
}

TEST(Sampler, DeterministicAndInDomain)
{
    MeasureSampler s{kron2(), 9};
    auto a = sample_invariant(s, 50), b = sample_invariant(s, 50);
    EXPECT_EQ(a, b);
    for (const auto& p : a)
        EXPECT_TRUE(contains(kron2(), p));
    MeasureSampler h{Sl2FlowSpec{}, 4};
    for (const auto& p : sample_invariant(h, 200))
        EXPECT_TRUE(sl2::in_fundamental_domain(p.as<Sl2Point>()));
}

TEST(Sampler, SchemeMismatchIsConfigError)
{
    MeasureSampler s{kron2(), 1, MeasureSampler::Scheme::haar_rejection};
    EXPECT_THROW(s.point(0), ConfigError);
    MeasureSampler h{Sl2FlowSpec{}, 1, MeasureSampler::Scheme::uniform_box};
    EXPECT_THROW(h.point(0), ConfigError);
}

TEST(Sampler, HaarBaseDensityMatchesHyperbolicArea)
{
    auto pts = haar_sample_sl2(123, 20000);
    int above = 0;
    for (const auto& g : pts)
        above += sl2::base_point(g).second > 2.0 ? 1 : 0;
    // area of F above height c >= 1 is 1/c; total area of F is pi/3
    double expected = (1.0 / 2.0 - 1.0 / sl2::y_max) / (std::numbers::pi / 3.0 - 1.0 / sl2::y_max);
    double p = above / 20000.0;
    EXPECT_NEAR(p, expected, 4.0 * std::sqrt(expected * (1 - expected) / 20000.0));
}
