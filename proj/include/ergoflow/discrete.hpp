#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "detail/parallel.hpp"
#include "detail/rng.hpp"
#include "detail/summation.hpp"
#include "discrete_map.hpp"
#include "error.hpp"
#include "flows.hpp"
#include "observable.hpp"
#include "poly.hpp"

namespace ergoflow {

struct CondExpEstimate {
    cplx value;
    std::int64_t N = 0;
    double err = 0.0;
    bool converged = true;
};

namespace discrete_detail {

inline void check_point(const DiscreteSystem& sys, const DiscretePoint& x)
{
    if (!sys.contains(x))
        throw ContractViolation("discrete point is outside the state space");
}

inline void check_N(std::int64_t N)
{
    if (N < 1)
        throw ConfigError("discrete average: N must be at least 1");
}

template <typename F>
cplx mean(std::int64_t N, F&& term)
{
    detail::Compensated<cplx> acc;
    for (std::int64_t n = 0; n < N; ++n)
        acc.add(term(n));
    return acc.value() / static_cast<double>(N);
}

}  // namespace discrete_detail

// (1/N) sum_{n<N} f(T^n x)
inline cplx birkhoff_average(const DiscreteSystem& sys, const Observable& f, const DiscretePoint& x, std::int64_t N)
{
    discrete_detail::check_N(N);
    discrete_detail::check_point(sys, x);
    return discrete_detail::mean(N, [&](std::int64_t n) { return f(PhasePoint(sys.power(x, n))); });
}

// E(f | I(T))(x). Finite systems: the mean over the orbit of x, enumerated
// from its smallest state so x and Tx give bit-identical results. Otherwise
// the Birkhoff average at N, flagged unconverged when it moves by 1/(2r) or
// more across [N/2, N].
inline CondExpEstimate conditional_expectation(const DiscreteSystem& sys, const Observable& f, const DiscretePoint& x,
                                               std::int64_t N, double r)
{
    discrete_detail::check_point(sys, x);
    if (!(r > 0.0))
        throw ConfigError("conditional_expectation: r must be positive");
    if (sys.is_finite()) {
        auto orb = sys.orbit(x.id);
        std::int64_t start = *std::min_element(orb.begin(), orb.end());
        orb = sys.orbit(start);
        detail::Compensated<cplx> acc;
        for (std::int64_t id : orb)
            acc.add(f(PhasePoint(DiscretePoint{id, {}})));
        return {acc.value() / static_cast<double>(orb.size()), static_cast<std::int64_t>(orb.size()), 0.0, true};
    }
    discrete_detail::check_N(N);
    std::vector<cplx> running;
    running.reserve(static_cast<std::size_t>(N - N / 2 + 1));
    detail::Compensated<cplx> acc;
    for (std::int64_t n = 0; n < N; ++n) {
        acc.add(f(PhasePoint(sys.power(x, n))));
        if (n + 1 >= N / 2)
            running.push_back(acc.value() / static_cast<double>(n + 1));
    }
    cplx final_value = running.back();
    double dev = 0.0;
    for (const cplx& v : running)
        dev = std::max(dev, std::abs(v - final_value));
    return {final_value, N, dev, 2.0 * dev < 1.0 / r};
}

// (1/N) sum_{n<N} f(T^{floor P(n)} x); integer-valued P gives exact orbits
inline cplx polynomial_average(const DiscreteSystem& sys, const Observable& f, const DiscretePoint& x,
                               const Polynomial& P, std::int64_t N)
{
    discrete_detail::check_N(N);
    discrete_detail::check_point(sys, x);
    return discrete_detail::mean(
        N, [&](std::int64_t n) { return f(PhasePoint(sys.power(x, floor_poly_orbit(P, n)))); });
}

// (1/N) sum_{n<N} f1(T^{an} x) f2(T^{bn} x)
inline cplx double_recurrence_average(const DiscreteSystem& sys, const Observable& f1, const Observable& f2,
                                      std::int64_t a, std::int64_t b, const DiscretePoint& x, std::int64_t N)
{
    discrete_detail::check_N(N);
    discrete_detail::check_point(sys, x);
    return discrete_detail::mean(N, [&](std::int64_t n) {
        std::int64_t an, bn;
        if (__builtin_mul_overflow(a, n, &an) || __builtin_mul_overflow(b, n, &bn))
            throw OverflowError("double_recurrence_average: exponent overflow");
        return f1(PhasePoint(sys.power(x, an))) * f2(PhasePoint(sys.power(x, bn)));
    });
}

inline void require_commuting(const std::vector<DiscreteSystem>& maps)
{
    if (maps.empty())
        throw ConfigError("no maps given");
    for (std::size_t i = 0; i < maps.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (!commute(maps[i], maps[j]))
                throw DomainError("maps " + std::to_string(j) + " and " + std::to_string(i) + " do not commute");
}

// T_1^{e_1} ... T_d^{e_d} x
inline DiscretePoint apply_powers(const std::vector<DiscreteSystem>& maps, const DiscretePoint& x,
                                  const std::vector<std::int64_t>& e)
{
    DiscretePoint y = x;
    for (std::size_t i = 0; i < maps.size(); ++i)
        if (e[i] != 0)
            y = maps[i].power(y, e[i]);
    return y;
}

// (1/N) sum_{n<N} f(T_1^{floor P_1(n)} ... T_d^{floor P_d(n)} x)
inline cplx floor_multi_average(const std::vector<DiscreteSystem>& maps, const std::vector<Polynomial>& polys,
                                const Observable& f, const DiscretePoint& x, std::int64_t N)
{
    require_commuting(maps);
    if (polys.size() != maps.size())
        throw ConfigError("floor_multi_average: one polynomial per map");
    discrete_detail::check_N(N);
    for (const auto& m : maps)
        discrete_detail::check_point(m, x);
    std::vector<std::int64_t> e(maps.size());
    return discrete_detail::mean(N, [&](std::int64_t n) {
        for (std::size_t i = 0; i < maps.size(); ++i)
            e[i] = floor_poly_orbit(polys[i], n);
        return f(PhasePoint(apply_powers(maps, x, e)));
    });
}

struct TransferResult {
    double residual = 0.0;        // sum over states of |count difference| |f| / N
    std::int64_t count_delta = 0;  // sum over states of |count difference|
    cplx suspension_side;
    cplx partitioned_side;
    std::vector<double> z;
    int redraws = 0;
};

// Both sides of the lift of a discrete floor average to the suspension:
// averaging f(base) along S^{P(n)} (x, z) equals the sum over crossing
// patterns i in {0,1}^d of the averages restricted to the n with
// {P_j(n)} + z_j >= 1 exactly when i_j = 1, of f(T^{floor P(n) + i} x).
// Visits are counted per base state, so on finite bases the residual is an
// exact integer comparison. Fibers within 1e-9 of a crossing are redrawn
// from a generator keyed by seed + 1.
inline TransferResult suspension_transfer_check(const MultiSuspensionSpec& spec, const Observable& f,
                                                const std::vector<Polynomial>& polys, const DiscretePoint& x,
                                                std::vector<double> z, std::int64_t N, std::uint64_t seed = 0)
{
    spec.validate();
    std::size_t d = spec.base_maps.size();
    if (polys.size() != d || z.size() != d)
        throw ConfigError("suspension_transfer_check: one polynomial and one fiber coordinate per map");
    if (d > 16)
        throw ConfigError("suspension_transfer_check: at most 16 maps");
    discrete_detail::check_N(N);
    for (const auto& m : spec.base_maps) {
        if (!m.is_finite())
            throw DomainError("suspension_transfer_check: base maps must be finite permutations");
        discrete_detail::check_point(m, x);
    }
    for (double zi : z)
        if (!(zi >= 0.0 && zi < 1.0))
            throw ConfigError("suspension_transfer_check: z must lie in [0,1)^d");

    std::vector<std::vector<std::int64_t>> fl(static_cast<std::size_t>(N), std::vector<std::int64_t>(d));
    std::vector<std::vector<double>> fr(static_cast<std::size_t>(N), std::vector<double>(d));
    for (std::int64_t n = 0; n < N; ++n)
        for (std::size_t i = 0; i < d; ++i) {
            std::int64_t k = floor_poly_orbit(polys[i], n);
            fl[n][i] = k;
            fr[n][i] = polys[i](static_cast<double>(n)) - static_cast<double>(k);
        }

    TransferResult res;
    detail::CounterRng rng{seed + 1};
    auto on_boundary = [&] {
        for (std::int64_t n = 0; n < N; ++n)
            for (std::size_t i = 0; i < d; ++i) {
                double u = fr[n][i] + z[i];
                if (std::abs(u - std::round(u)) < 1e-9)
                    return true;
            }
        return false;
    };
    while (on_boundary()) {
        if (res.redraws == 64)
            throw NumericInstability("suspension_transfer_check: no admissible fiber after 64 redraws", 0.0);
        for (std::size_t i = 0; i < d; ++i)
            z[i] = rng.uniform(static_cast<std::uint64_t>(res.redraws), i);
        ++res.redraws;
    }
    res.z = z;

    std::int64_t S = spec.base_maps.front().num_states();
    std::vector<std::int64_t> left(static_cast<std::size_t>(S), 0), right(static_cast<std::size_t>(S), 0);

    FlowSpec flow(spec);
    PhasePoint start(SuspensionPoint{x, z});
    std::vector<double> t(d);
    for (std::int64_t n = 0; n < N; ++n) {
        for (std::size_t i = 0; i < d; ++i)
            t[i] = polys[i](static_cast<double>(n));
        PhasePoint y = evolve(flow, start, t);
        ++left[static_cast<std::size_t>(y.as<SuspensionPoint>().base.id)];
    }

    std::vector<std::int64_t> e(d);
    for (std::uint32_t pattern = 0; pattern < (1u << d); ++pattern) {
        for (std::int64_t n = 0; n < N; ++n) {
            bool match = true;
            for (std::size_t i = 0; i < d && match; ++i)
                match = ((fr[n][i] + z[i] >= 1.0) == (((pattern >> i) & 1u) != 0));
            if (!match)
                continue;
            for (std::size_t i = 0; i < d; ++i)
                e[i] = fl[n][i] + static_cast<std::int64_t>((pattern >> i) & 1u);
            ++right[static_cast<std::size_t>(apply_powers(spec.base_maps, x, e).id)];
        }
    }

    detail::Compensated<cplx> ls, rs;
    detail::Compensated<double> resid;
    for (std::int64_t s = 0; s < S; ++s) {
        cplx fs = f(PhasePoint(DiscretePoint{s, {}}));
        auto L = left[static_cast<std::size_t>(s)], R = right[static_cast<std::size_t>(s)];
        ls.add(static_cast<double>(L) * fs);
        rs.add(static_cast<double>(R) * fs);
        res.count_delta += std::abs(L - R);
        resid.add(static_cast<double>(std::abs(L - R)) * std::abs(fs));
    }
    res.suspension_side = ls.value() / static_cast<double>(N);
    res.partitioned_side = rs.value() / static_cast<double>(N);
    res.residual = resid.value() / static_cast<double>(N);
    return res;
}

// (1/N) sum_{1<=n<=N} f(T^{floor(p n^gamma)} x) g(T^{floor(q n^gamma)} x).
// Exploratory: no limit theory backs these values.
inline cplx fractional_power_average(const DiscreteSystem& sys, const Observable& f, const Observable& g, double p,
                                     double q, double gamma, const DiscretePoint& x, std::int64_t N)
{
    discrete_detail::check_N(N);
    discrete_detail::check_point(sys, x);
    if (!(gamma > 0.0 && gamma < 1.0))
        throw ConfigError("fractional_power_average: gamma must lie in (0, 1)");
    return discrete_detail::mean(N, [&](std::int64_t n) {
        double s = std::pow(static_cast<double>(n + 1), gamma);
        auto e1 = static_cast<std::int64_t>(std::floor(p * s));
        auto e2 = static_cast<std::int64_t>(std::floor(q * s));
        return f(PhasePoint(sys.power(x, e1))) * g(PhasePoint(sys.power(x, e2)));
    });
}

// fraction of the sample whose conditional-expectation estimate at horizon
// N fails the 1/r tail criterion
inline double exceptional_set_frequency(const DiscreteSystem& sys, const Observable& f,
                                        const std::vector<DiscretePoint>& sample, std::int64_t N, double r,
                                        unsigned threads = 1)
{
    if (sample.empty())
        throw ConfigError("exceptional_set_frequency: empty sample");
    std::vector<char> bad(sample.size(), 0);
    detail::parallel_for(sample.size(), threads, [&](std::size_t i) {
        bad[i] = conditional_expectation(sys, f, sample[i], N, r).converged ? 0 : 1;
    });
    std::size_t count = static_cast<std::size_t>(std::count(bad.begin(), bad.end(), 1));
    return static_cast<double>(count) / static_cast<double>(sample.size());
}

}  // namespace ergoflow
