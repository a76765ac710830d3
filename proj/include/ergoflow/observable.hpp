#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "detail/quadrature.hpp"
#include "error.hpp"
#include "flows.hpp"
#include "phase_point.hpp"

namespace ergoflow {

using cplx = std::complex<double>;

// e^{2 pi i phase}, reduced mod 1 first so large phases keep their accuracy
inline cplx expi(double phase)
{
    double f = phase - std::floor(phase);
    double s = std::sin(2.0 * std::numbers::pi * f);
    double c = std::cos(2.0 * std::numbers::pi * f);
    return {c, s};
}

class Observable;

// Term of the spectral expansion of an observable. Keys are component
// paths into nested product points; on each path the term is a product of
// one torus character, one fiber character, one base table and at most one
// opaque leaf (a bump).
struct SpectralTerm {
    using Path = std::vector<std::size_t>;

    cplx coeff{1.0, 0.0};
    std::map<Path, std::vector<std::int64_t>> torus;
    std::map<Path, std::vector<std::int64_t>> fiber;
    std::map<Path, std::vector<cplx>> table;
    std::map<Path, std::shared_ptr<const Observable>> opaque;
};

class Observable {
public:
    enum class Kind { constant, torus_character, fiber_character, base_function, smooth_bump, product, sum, real_part, component };

    // -- constructors ------------------------------------------------------

    static Observable constant(cplx c)
    {
        Observable o(Kind::constant);
        o.c_ = c;
        o.sup_ = std::abs(c);
        o.finish();
        return o;
    }

    // e^{2 pi i k.coords} on torus coordinates or rotation-base angles
    static Observable character(std::vector<std::int64_t> k)
    {
        Observable o(Kind::torus_character);
        o.k_ = std::move(k);
        o.sup_ = 1.0;
        o.finish();
        return o;
    }

    // e^{2 pi i k.z} on the suspension fiber
    static Observable fiber_character(std::vector<std::int64_t> k)
    {
        Observable o(Kind::fiber_character);
        o.k_ = std::move(k);
        o.sup_ = 1.0;
        o.finish();
        return o;
    }

    // state id -> value, for finite bases
    static Observable base_function(std::vector<cplx> table)
    {
        if (table.empty())
            throw InputError("base_function: empty table");
        Observable o(Kind::base_function);
        o.sup_ = 0.0;
        for (const cplx& v : table) {
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw InputError("base_function: non-finite entry");
            o.sup_ = std::max(o.sup_, std::abs(v));
        }
        o.table_ = std::move(table);
        o.finish();
        return o;
    }

    static Observable base_function(const std::vector<double>& table)
    {
        return base_function(std::vector<cplx>(table.begin(), table.end()));
    }

    // amplitude * e * exp(-1/(1 - r^2)) for r = d_hyp(z, x0 + i y0) / width < 1,
    // a function of the base point z of an SL2 point. The hyperbolic ball must
    // lie inside the open fundamental domain.
    static Observable smooth_bump(double x0, double y0, double width, double amplitude = 1.0)
    {
        if (!(y0 > 0.0) || !(width > 0.0) || !std::isfinite(amplitude) || !std::isfinite(x0))
            throw InputError("smooth_bump: need y0 > 0, width > 0 and finite parameters");
        double to_sides = std::asinh(std::min(std::abs(x0 - 0.5), std::abs(x0 + 0.5)) / y0);
        double to_circle = std::asinh((x0 * x0 + y0 * y0 - 1.0) / (2.0 * y0));
        if (std::abs(x0) >= 0.5 || x0 * x0 + y0 * y0 <= 1.0 || width >= std::min(to_sides, to_circle))
            throw DomainError("smooth_bump: support leaves the fundamental domain");
        Observable o(Kind::smooth_bump);
        o.x0_ = x0;
        o.y0_ = y0;
        o.width_ = width;
        o.amp_ = amplitude;
        o.sup_ = std::abs(amplitude);
        o.finish();
        return o;
    }

    static Observable product(std::vector<Observable> children)
    {
        if (children.empty())
            return constant(1.0);
        Observable o(Kind::product);
        o.sup_ = 1.0;
        for (const auto& ch : children)
            o.sup_ *= ch.sup_;
        o.children_ = std::move(children);
        o.finish();
        return o;
    }

    static Observable sum(std::vector<Observable> children, std::vector<cplx> weights = {})
    {
        if (weights.empty())
            weights.assign(children.size(), 1.0);
        if (weights.size() != children.size())
            throw InputError("sum: weight count differs from child count");
        Observable o(Kind::sum);
        o.sup_ = 0.0;
        for (std::size_t i = 0; i < children.size(); ++i)
            o.sup_ += std::abs(weights[i]) * children[i].sup_;
        o.children_ = std::move(children);
        o.weights_ = std::move(weights);
        o.finish();
        return o;
    }

    static Observable real_part(Observable child)
    {
        Observable o(Kind::real_part);
        o.sup_ = child.sup_;
        o.children_ = {std::move(child)};
        o.finish();
        return o;
    }

    // child evaluated on part `index` of a product point
    static Observable component(std::size_t index, Observable child)
    {
        Observable o(Kind::component);
        o.index_ = index;
        o.sup_ = child.sup_;
        o.children_ = {std::move(child)};
        o.finish();
        return o;
    }

    Observable scaled(cplx s) const { return sum({*this}, {s}); }

    // -- queries -----------------------------------------------------------

    Kind kind() const { return kind_; }
    double sup_norm() const { return sup_; }
    std::optional<cplx> exact_integral() const { return integral_; }
    const std::vector<std::int64_t>& frequencies() const { return k_; }
    const std::vector<cplx>& table() const { return table_; }
    const std::vector<Observable>& children() const { return children_; }
    const std::vector<cplx>& weights() const { return weights_; }
    cplx constant_value() const { return c_; }
    std::size_t index() const { return index_; }
    double bump_x0() const { return x0_; }
    double bump_y0() const { return y0_; }
    double bump_width() const { return width_; }
    double bump_amplitude() const { return amp_; }

    // expansion into character/table terms; empty when it would exceed
    // `cap` terms or when two opaque leaves meet on one path
    std::optional<std::vector<SpectralTerm>> expand(std::size_t cap = 4096) const
    {
        return expand_impl({}, cap);
    }

    cplx operator()(const PhasePoint& x) const
    {
        switch (kind_) {
        case Kind::constant:
            return c_;
        case Kind::torus_character: {
            const std::vector<double>* coords = nullptr;
            if (x.is<TorusPoint>())
                coords = &x.as<TorusPoint>().coords;
            else if (x.is<DiscretePoint>())
                coords = &x.as<DiscretePoint>().angles;
            else if (x.is<SuspensionPoint>())
                coords = &x.as<SuspensionPoint>().base.angles;
            if (!coords || coords->size() != k_.size())
                throw ContractViolation("character: point has no matching torus coordinates");
            return expi(dot(*coords));
        }
        case Kind::fiber_character:
            if (!x.is<SuspensionPoint>() || x.as<SuspensionPoint>().fiber.size() != k_.size())
                throw ContractViolation("fiber character: point has no matching fiber");
            return expi(dot(x.as<SuspensionPoint>().fiber));
        case Kind::base_function: {
            std::int64_t id;
            if (x.is<DiscretePoint>())
                id = x.as<DiscretePoint>().id;
            else if (x.is<SuspensionPoint>())
                id = x.as<SuspensionPoint>().base.id;
            else
                throw ContractViolation("base function: point has no discrete state");
            if (id < 0 || id >= static_cast<std::int64_t>(table_.size()))
                throw ContractViolation("base function: state id outside the table");
            return table_[static_cast<std::size_t>(id)];
        }
        case Kind::smooth_bump: {
            if (!x.is<Sl2Point>())
                throw ContractViolation("smooth bump: needs an SL2 point");
            auto [x1, y1] = sl2::base_point(x.as<Sl2Point>());
            return bump_profile(x1, y1);
        }
        case Kind::product: {
            cplx v = 1.0;
            for (const auto& ch : children_)
                v *= ch(x);
            return v;
        }
        case Kind::sum: {
            cplx v = 0.0;
            for (std::size_t i = 0; i < children_.size(); ++i)
                v += weights_[i] * children_[i](x);
            return v;
        }
        case Kind::real_part:
            return children_[0](x).real();
        case Kind::component:
            if (!x.is<ProductPoint>() || index_ >= x.as<ProductPoint>().parts.size())
                throw ContractViolation("component: point has no part " + std::to_string(index_));
            return children_[0](x.as<ProductPoint>().parts[index_]);
        }
        return 0.0;
    }

    // value of the bump at base point x1 + i y1
    double bump_profile(double x1, double y1) const
    {
        double q = ((x1 - x0_) * (x1 - x0_) + (y1 - y0_) * (y1 - y0_)) / (2.0 * y1 * y0_);
        double d = std::acosh(1.0 + q);
        double r = d / width_;
        if (r >= 1.0)
            return 0.0;
        return amp_ * std::exp(1.0 - 1.0 / (1.0 - r * r));
    }

    // integral of the bump against normalised hyperbolic area on the
    // fundamental domain, total area pi/3
    static double bump_integral(double width, double amplitude)
    {
        auto radial = [&](double r) {
            double s = r / width;
            return s >= 1.0 ? 0.0 : std::exp(1.0 - 1.0 / (1.0 - s * s)) * std::sinh(r);
        };
        double I = detail::composite_gl4(radial, 0.0, width, 4000);
        return amplitude * 2.0 * std::numbers::pi * I / (std::numbers::pi / 3.0);
    }

private:
    explicit Observable(Kind k) : kind_(k) {}

    double dot(const std::vector<double>& x) const
    {
        // each k_j x_j is reduced mod 1 before summing to keep the phase small
        double s = 0.0;
        for (std::size_t j = 0; j < k_.size(); ++j) {
            if (k_[j] == 0)
                continue;
            detail::DD p = detail::two_prod(static_cast<double>(k_[j]), x[j]);
            s += (p.hi - std::floor(p.hi)) + p.lo;
        }
        return s;
    }

    void finish()
    {
        if (kind_ == Kind::smooth_bump) {
            integral_ = cplx(bump_integral(width_, amp_), 0.0);
            return;
        }
        auto terms = expand();
        if (!terms)
            return;
        cplx total = 0.0;
        for (const auto& t : *terms) {
            auto v = term_integral(t);
            if (!v)
                return;
            total += *v;
        }
        integral_ = total;
    }

    static std::optional<cplx> term_integral(const SpectralTerm& t)
    {
        cplx v = t.coeff;
        for (const auto& [path, k] : t.torus)
            for (std::int64_t kj : k)
                if (kj != 0)
                    return cplx(0.0);
        for (const auto& [path, k] : t.fiber)
            for (std::int64_t kj : k)
                if (kj != 0)
                    return cplx(0.0);
        for (const auto& [path, tab] : t.table) {
            cplx m = 0.0;
            for (const cplx& e : tab)
                m += e;
            v *= m / static_cast<double>(tab.size());
        }
        for (const auto& [path, leaf] : t.opaque) {
            auto I = leaf->exact_integral();
            if (!I)
                return std::nullopt;
            v *= *I;
        }
        return v;
    }

    static SpectralTerm conjugate_term(SpectralTerm t)
    {
        t.coeff = std::conj(t.coeff);
        for (auto& [p, k] : t.torus)
            for (auto& kj : k)
                kj = -kj;
        for (auto& [p, k] : t.fiber)
            for (auto& kj : k)
                kj = -kj;
        for (auto& [p, tab] : t.table)
            for (auto& e : tab)
                e = std::conj(e);
        return t;  // opaque leaves are real
    }

    static std::optional<SpectralTerm> multiply(const SpectralTerm& a, const SpectralTerm& b)
    {
        SpectralTerm r = a;
        r.coeff *= b.coeff;
        auto merge_freq = [](auto& into, const auto& from) {
            for (const auto& [p, k] : from) {
                auto it = into.find(p);
                if (it == into.end()) {
                    into.emplace(p, k);
                    continue;
                }
                if (it->second.size() != k.size())
                    throw ContractViolation("observable: characters of different dimension multiplied");
                for (std::size_t j = 0; j < k.size(); ++j)
                    it->second[j] += k[j];
            }
        };
        merge_freq(r.torus, b.torus);
        merge_freq(r.fiber, b.fiber);
        for (const auto& [p, tab] : b.table) {
            auto it = r.table.find(p);
            if (it == r.table.end()) {
                r.table.emplace(p, tab);
                continue;
            }
            if (it->second.size() != tab.size())
                throw ContractViolation("observable: base tables of different size multiplied");
            for (std::size_t j = 0; j < tab.size(); ++j)
                it->second[j] *= tab[j];
        }
        for (const auto& [p, leaf] : b.opaque) {
            if (r.opaque.count(p))
                return std::nullopt;
            r.opaque.emplace(p, leaf);
        }
        return r;
    }

    std::optional<std::vector<SpectralTerm>> expand_impl(const SpectralTerm::Path& path, std::size_t cap) const
    {
        SpectralTerm t;
        switch (kind_) {
        case Kind::constant:
            t.coeff = c_;
            return std::vector<SpectralTerm>{t};
        case Kind::torus_character:
            t.torus[path] = k_;
            return std::vector<SpectralTerm>{t};
        case Kind::fiber_character:
            t.fiber[path] = k_;
            return std::vector<SpectralTerm>{t};
        case Kind::base_function:
            t.table[path] = table_;
            return std::vector<SpectralTerm>{t};
        case Kind::smooth_bump:
            t.opaque[path] = std::make_shared<const Observable>(*this);
            return std::vector<SpectralTerm>{t};
        case Kind::product: {
            std::vector<SpectralTerm> acc{SpectralTerm{}};
            for (const auto& ch : children_) {
                auto sub = ch.expand_impl(path, cap);
                if (!sub || acc.size() * sub->size() > cap)
                    return std::nullopt;
                std::vector<SpectralTerm> next;
                for (const auto& a : acc)
                    for (const auto& b : *sub) {
                        auto m = multiply(a, b);
                        if (!m)
                            return std::nullopt;
                        next.push_back(std::move(*m));
                    }
                acc = std::move(next);
            }
            return acc;
        }
        case Kind::sum: {
            std::vector<SpectralTerm> acc;
            for (std::size_t i = 0; i < children_.size(); ++i) {
                if (weights_[i] == cplx(0.0))
                    continue;
                auto sub = children_[i].expand_impl(path, cap);
                if (!sub || acc.size() + sub->size() > cap)
                    return std::nullopt;
                for (auto& s : *sub) {
                    s.coeff *= weights_[i];
                    acc.push_back(std::move(s));
                }
            }
            return acc;
        }
        case Kind::real_part: {
            auto sub = children_[0].expand_impl(path, cap);
            if (!sub || 2 * sub->size() > cap)
                return std::nullopt;
            std::vector<SpectralTerm> acc;
            for (const auto& s : *sub) {
                SpectralTerm a = s;
                a.coeff *= 0.5;
                SpectralTerm b = conjugate_term(s);
                b.coeff *= 0.5;
                acc.push_back(std::move(a));
                acc.push_back(std::move(b));
            }
            return acc;
        }
        case Kind::component: {
            SpectralTerm::Path p = path;
            p.push_back(index_);
            return children_[0].expand_impl(p, cap);
        }
        }
        return std::nullopt;
    }

    Kind kind_;
    cplx c_{0.0};
    std::vector<std::int64_t> k_;
    std::vector<cplx> table_;
    double x0_ = 0.0, y0_ = 1.0, width_ = 1.0, amp_ = 1.0;
    std::vector<Observable> children_;
    std::vector<cplx> weights_;
    std::size_t index_ = 0;
    double sup_ = 0.0;
    std::optional<cplx> integral_;
};

inline cplx eval_observable(const Observable& obs, const PhasePoint& x) { return obs(x); }

// complex conjugate observable
inline Observable conjugate(const Observable& o)
{
    using K = Observable::Kind;
    switch (o.kind()) {
    case K::constant:
        return Observable::constant(std::conj(o.constant_value()));
    case K::torus_character:
    case K::fiber_character: {
        auto k = o.frequencies();
        for (auto& kj : k)
            kj = -kj;
        return o.kind() == K::torus_character ? Observable::character(k) : Observable::fiber_character(k);
    }
    case K::base_function: {
        auto t = o.table();
        for (auto& e : t)
            e = std::conj(e);
        return Observable::base_function(t);
    }
    case K::smooth_bump:
    case K::real_part:
        return o;
    case K::product: {
        std::vector<Observable> ch;
        for (const auto& c : o.children())
            ch.push_back(conjugate(c));
        return Observable::product(std::move(ch));
    }
    case K::sum: {
        std::vector<Observable> ch;
        std::vector<cplx> w;
        for (std::size_t i = 0; i < o.children().size(); ++i) {
            ch.push_back(conjugate(o.children()[i]));
            w.push_back(std::conj(o.weights()[i]));
        }
        return Observable::sum(std::move(ch), std::move(w));
    }
    case K::component:
        return Observable::component(o.index(), conjugate(o.children()[0]));
    }
    return o;
}

// Upper bound on the angular rate (radians per unit time) at which
// t -> obs(evolve(flow, x, t * dir)) oscillates. Discontinuities of base
// tables count as one radian-2pi event per crossing.
inline double rate_bound(const Observable& obs, const FlowSpec& flow, std::span<const double> dir)
{
    using K = Observable::Kind;
    constexpr double two_pi = 2.0 * std::numbers::pi;
    // max |d phi / d r| of the bump profile in units of 1/width
    constexpr double bump_slope = 2.2;
    double speed_sum = 0.0;
    for (double d : dir)
        speed_sum += std::abs(d);

    switch (obs.kind()) {
    case K::constant:
        return 0.0;
    case K::torus_character: {
        if (auto k = std::get_if<KroneckerSpec>(&flow.v)) {
            double r = 0.0;
            for (std::size_t p = 0; p < dir.size(); ++p) {
                double kv = 0.0;
                for (std::size_t j = 0; j < obs.frequencies().size() && j < k->dim; ++j)
                    kv += static_cast<double>(obs.frequencies()[j]) * k->velocity[p][j];
                r += std::abs(dir[p] * kv);
            }
            return two_pi * r;
        }
        return two_pi * speed_sum;
    }
    case K::fiber_character: {
        double r = 0.0;
        for (std::size_t p = 0; p < dir.size() && p < obs.frequencies().size(); ++p)
            r += std::abs(dir[p] * static_cast<double>(obs.frequencies()[p]));
        return two_pi * r;
    }
    case K::base_function:
        return two_pi * speed_sum;
    case K::smooth_bump: {
        if (auto g = std::get_if<Sl2FlowSpec>(&flow.v)) {
            double hyperbolic_speed = g->kind == Sl2FlowSpec::Kind::geodesic ? 2.0 : 1.0;
            return bump_slope / obs.bump_width() * hyperbolic_speed * std::abs(g->speed) * speed_sum;
        }
        return 0.0;
    }
    case K::product: {
        double r = 0.0;
        for (const auto& c : obs.children())
            r += rate_bound(c, flow, dir);
        return r;
    }
    case K::sum: {
        double r = 0.0;
        for (std::size_t i = 0; i < obs.children().size(); ++i)
            if (obs.weights()[i] != cplx(0.0))
                r = std::max(r, rate_bound(obs.children()[i], flow, dir));
        return r;
    }
    case K::real_part:
        return rate_bound(obs.children()[0], flow, dir);
    case K::component: {
        auto p = std::get_if<ProductFlowSpec>(&flow.v);
        if (!p || obs.index() >= p->components.size())
            throw ContractViolation("component observable on a flow without that component");
        const auto& R = p->routing[obs.index()];
        std::vector<double> sub(R.size(), 0.0);
        for (std::size_t r = 0; r < R.size(); ++r)
            for (std::size_t j = 0; j < dir.size(); ++j)
                sub[r] += R[r][j] * dir[j];
        return rate_bound(obs.children()[0], p->components[obs.index()], sub);
    }
    }
    return 0.0;
}

}  // namespace ergoflow
