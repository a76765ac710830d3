#pragma once

// Exact resonance tests for character observables. A phase rate is an
// element of the Q-span of square roots of squarefree integers, kept as a
// map radicand -> rational coefficient, so "rate == 0" is decided exactly.

#include <algorithm>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "error.hpp"
#include "flows.hpp"
#include "observable.hpp"
#include "poly.hpp"

namespace ergoflow {

using SurdSum = std::map<std::int64_t, Rational>;

inline void add_scaled(SurdSum& into, const SurdSum& from, Rational c)
{
    if (c.p == 0)
        return;
    for (const auto& [r, v] : from) {
        Rational s = into.count(r) ? into[r] + v * c : v * c;
        if (s.p == 0)
            into.erase(r);
        else
            into[r] = s;
    }
}

inline bool is_zero(const SurdSum& s) { return s.empty(); }

// integer-valued routing coefficient as a rational; anything else is not
// handled exactly
inline std::optional<Rational> exact_coefficient(double x)
{
    if (std::isfinite(x) && x == std::round(x) && std::abs(x) < 1e15)
        return Rational(static_cast<std::int64_t>(x));
    return std::nullopt;
}

namespace spectral_detail {

struct Resolved {
    const FlowSpec* flow;
    // routing[q][p]: component parameter q per top-level parameter p
    std::vector<std::vector<Rational>> routing;
    bool exact = true;
};

inline Resolved resolve(const FlowSpec& top, const SpectralTerm::Path& path)
{
    std::size_t D = top.params();
    Resolved r{&top, {}, true};
    r.routing.assign(D, std::vector<Rational>(D, Rational(0)));
    for (std::size_t p = 0; p < D; ++p)
        r.routing[p][p] = Rational(1);
    for (std::size_t idx : path) {
        auto prod = std::get_if<ProductFlowSpec>(&r.flow->v);
        if (!prod || idx >= prod->components.size())
            throw ContractViolation("observable component path does not match the flow");
        const auto& R = prod->routing[idx];
        std::vector<std::vector<Rational>> next(R.size(), std::vector<Rational>(D, Rational(0)));
        for (std::size_t q = 0; q < R.size(); ++q)
            for (std::size_t m = 0; m < R[q].size(); ++m) {
                auto c = exact_coefficient(R[q][m]);
                if (!c) {
                    if (R[q][m] != 0.0)
                        r.exact = false;
                    continue;
                }
                for (std::size_t p = 0; p < D; ++p)
                    next[q][p] = next[q][p] + *c * r.routing[m][p];
            }
        r.routing = std::move(next);
        r.flow = &prod->components[idx];
    }
    return r;
}

inline bool moves(const Resolved& r)
{
    for (const auto& row : r.routing)
        for (const Rational& c : row)
            if (c.p != 0)
                return true;
    return !r.exact;
}

}  // namespace spectral_detail

// Per top-level parameter p, the exact phase rate d/dt_p of the term's
// phase, in cycles per unit time. Empty when not decidable exactly.
inline std::optional<std::vector<SurdSum>> exact_rates(const SpectralTerm& t, const FlowSpec& flow)
{
    using namespace spectral_detail;
    std::size_t D = flow.params();
    std::vector<SurdSum> out(D);

    for (const auto& [path, k] : t.torus) {
        Resolved r = resolve(flow, path);
        bool zero = std::all_of(k.begin(), k.end(), [](std::int64_t v) { return v == 0; });
        if (zero || !moves(r))
            continue;
        if (!r.exact)
            return std::nullopt;
        auto kr = std::get_if<KroneckerSpec>(&r.flow->v);
        if (!kr || !kr->lattice)
            return std::nullopt;
        const Lattice& lat = *kr->lattice;
        for (std::size_t q = 0; q < r.routing.size(); ++q) {
            SurdSum rate_q;
            for (std::size_t b = 0; b < lat.radicands.size(); ++b) {
                std::int64_t n = 0;
                for (std::size_t c = 0; c < k.size(); ++c)
                    n = Rational::checked_add(n, Rational::checked_mul(k[c], lat.gen[q][c][b]));
                if (n != 0)
                    add_scaled(rate_q, SurdSum{{lat.radicands[b], Rational(n)}}, lat.scale);
            }
            for (std::size_t p = 0; p < D; ++p)
                add_scaled(out[p], rate_q, r.routing[q][p]);
        }
    }
    for (const auto& [path, k] : t.fiber) {
        Resolved r = resolve(flow, path);
        bool zero = std::all_of(k.begin(), k.end(), [](std::int64_t v) { return v == 0; });
        if (zero || !moves(r))
            continue;
        if (!r.exact || !(r.flow->is<SuspensionSpec>() || r.flow->is<MultiSuspensionSpec>()))
            return std::nullopt;
        for (std::size_t q = 0; q < r.routing.size() && q < k.size(); ++q)
            for (std::size_t p = 0; p < D; ++p)
                add_scaled(out[p], SurdSum{{1, Rational(k[q])}}, r.routing[q][p]);
    }
    for (const auto& [path, tab] : t.table)
        if (moves(resolve(flow, path)))
            return std::nullopt;
    for (const auto& [path, leaf] : t.opaque)
        if (moves(resolve(flow, path)))
            return std::nullopt;
    return out;
}

// value of one expansion term at x
inline cplx eval_term(const SpectralTerm& t, const PhasePoint& x)
{
    auto at = [&](const SpectralTerm::Path& path) -> const PhasePoint& {
        const PhasePoint* p = &x;
        for (std::size_t idx : path) {
            if (!p->is<ProductPoint>() || idx >= p->as<ProductPoint>().parts.size())
                throw ContractViolation("term path does not match the point");
            p = &p->as<ProductPoint>().parts[idx];
        }
        return *p;
    };
    cplx v = t.coeff;
    for (const auto& [path, k] : t.torus)
        v *= Observable::character(k)(at(path));
    for (const auto& [path, k] : t.fiber)
        v *= Observable::fiber_character(k)(at(path));
    for (const auto& [path, tab] : t.table)
        v *= Observable::base_function(tab)(at(path));
    for (const auto& [path, leaf] : t.opaque)
        v *= (*leaf)(at(path));
    return v;
}

// Terms invariant under the subgroup spanned by `directions` (rational
// vectors in parameter space). Empty optional if some term is undecidable.
inline std::optional<std::vector<SpectralTerm>> invariant_terms(const std::vector<SpectralTerm>& terms,
                                                               const FlowSpec& flow,
                                                               const std::vector<std::vector<Rational>>& directions)
{
    std::vector<SpectralTerm> out;
    for (const auto& t : terms) {
        auto rates = exact_rates(t, flow);
        if (!rates)
            return std::nullopt;
        bool inv = true;
        for (const auto& dir : directions) {
            SurdSum s;
            for (std::size_t p = 0; p < dir.size() && p < rates->size(); ++p)
                add_scaled(s, (*rates)[p], dir[p]);
            inv = inv && is_zero(s);
        }
        if (inv)
            out.push_back(t);
    }
    return out;
}

inline std::vector<std::vector<Rational>> all_directions(std::size_t D)
{
    std::vector<std::vector<Rational>> dirs(D, std::vector<Rational>(D, Rational(0)));
    for (std::size_t p = 0; p < D; ++p)
        dirs[p][p] = Rational(1);
    return dirs;
}

// E(f | I(flow))(x) for an observable with a decidable expansion
inline std::optional<cplx> symbolic_conditional_expectation(const Observable& f, const FlowSpec& flow,
                                                            const PhasePoint& x)
{
    auto terms = f.expand();
    if (!terms)
        return std::nullopt;
    auto inv = invariant_terms(*terms, flow, all_directions(flow.params()));
    if (!inv)
        return std::nullopt;
    cplx v = 0.0;
    for (const auto& t : *inv)
        v += eval_term(t, x);
    return v;
}

struct LinearFactor {
    const FlowSpec* flow;
    std::vector<SpectralTerm> terms;
    std::vector<Rational> dir;  // time t maps to parameter t * dir
};

// lim (1/M) int_0^M prod_i f_i(flow_i^{t dir_i} x) dt: the sum over term
// tuples whose total phase rate vanishes.
inline std::optional<cplx> symbolic_linear_average(const std::vector<LinearFactor>& factors, const PhasePoint& x)
{
    struct Entry {
        SurdSum rate;
        cplx value;
    };
    std::vector<std::vector<Entry>> per;
    for (const auto& f : factors) {
        std::vector<Entry> list;
        for (const auto& t : f.terms) {
            auto rates = exact_rates(t, *f.flow);
            if (!rates)
                return std::nullopt;
            SurdSum s;
            for (std::size_t p = 0; p < f.dir.size() && p < rates->size(); ++p)
                add_scaled(s, (*rates)[p], f.dir[p]);
            list.push_back({std::move(s), eval_term(t, x)});
        }
        per.push_back(std::move(list));
    }
    cplx total = 0.0;
    // depth-first over tuples
    auto rec = [&](auto&& self, std::size_t level, const SurdSum& rate, cplx value) -> void {
        if (level == per.size()) {
            if (is_zero(rate))
                total += value;
            return;
        }
        for (const auto& e : per[level]) {
            SurdSum r = rate;
            add_scaled(r, e.rate, Rational(1));
            self(self, level + 1, r, value * e.value);
        }
    };
    rec(rec, 0, SurdSum{}, cplx(1.0));
    return total;
}

}  // namespace ergoflow
