#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "detail/dd.hpp"
#include "detail/rng.hpp"
#include "detail/summation.hpp"
#include "discrete_map.hpp"
#include "error.hpp"
#include "phase_point.hpp"
#include "poly.hpp"

namespace ergoflow {

// Velocities given exactly as scale * sum_b gen[p][c][b] * sqrt(radicands[b])
// with distinct squarefree radicands, so every integer relation among them
// is decidable in integer arithmetic.
struct Lattice {
    std::vector<std::int64_t> radicands;
    Rational scale{1};
    std::vector<std::vector<std::vector<std::int64_t>>> gen;  // [param][coord][basis]
};

inline bool is_squarefree(std::int64_t r)
{
    if (r < 1)
        return false;
    for (std::int64_t p = 2; p * p <= r; ++p)
        if (r % (p * p) == 0)
            return false;
    return true;
}

// x -> x + sum_p t_p velocity[p] on T^dim
struct KroneckerSpec {
    std::size_t dim = 1;
    std::vector<std::vector<double>> velocity;  // [param][coord]
    std::optional<Lattice> lattice;

    static KroneckerSpec one_parameter(std::vector<double> alpha)
    {
        KroneckerSpec k;
        k.dim = alpha.size();
        k.velocity = {std::move(alpha)};
        return k;
    }

    static KroneckerSpec from_lattice(Lattice lat)
    {
        if (lat.gen.empty() || lat.gen.front().empty())
            throw InputError("lattice: empty generator table");
        if (lat.scale.p == 0)
            throw InputError("lattice: scale must be nonzero");
        for (std::size_t b = 0; b < lat.radicands.size(); ++b) {
            if (!is_squarefree(lat.radicands[b]))
                throw InputError("lattice: radicand " + std::to_string(lat.radicands[b]) + " is not squarefree");
            for (std::size_t b2 = 0; b2 < b; ++b2)
                if (lat.radicands[b] == lat.radicands[b2])
                    throw InputError("lattice: repeated radicand");
        }
        KroneckerSpec k;
        k.dim = lat.gen.front().size();
        for (const auto& per_param : lat.gen) {
            if (per_param.size() != k.dim)
                throw InputError("lattice: ragged generator table");
            std::vector<double> v(k.dim, 0.0);
            for (std::size_t c = 0; c < k.dim; ++c) {
                if (per_param[c].size() != lat.radicands.size())
                    throw InputError("lattice: generator width differs from radicand count");
                detail::Compensated<double> acc;
                for (std::size_t b = 0; b < lat.radicands.size(); ++b)
                    acc.add(static_cast<double>(per_param[c][b]) * std::sqrt(static_cast<double>(lat.radicands[b])));
                v[c] = lat.scale.value() * acc.value();
            }
            k.velocity.push_back(std::move(v));
        }
        k.lattice = std::move(lat);
        return k;
    }
};

// Unit-roof suspension (x, s) -> (T^{floor(s+t)} x, (s+t) mod 1).
struct SuspensionSpec {
    DiscreteSystem base;
};

// d-fold unit-roof suspension over commuting maps T_1..T_d; D = d.
struct MultiSuspensionSpec {
    std::vector<DiscreteSystem> base_maps;

    void validate() const
    {
        if (base_maps.empty())
            throw InputError("multi-suspension: no base maps");
        for (std::size_t i = 0; i < base_maps.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (!commute(base_maps[i], base_maps[j]))
                    throw DomainError("multi-suspension: base maps " + std::to_string(j) + " and " +
                                      std::to_string(i) + " do not commute");
    }
};

// geodesic: x -> a(speed t) x, horocycle: x -> u(speed t) x on SL2(R)/SL2(Z)
struct Sl2FlowSpec {
    enum class Kind { geodesic, horocycle };
    Kind kind = Kind::geodesic;
    double speed = 1.0;
};

struct FlowSpec;

// Component c is driven by routing[c] * t, routing[c] being D_c x D.
struct ProductFlowSpec {
    std::vector<FlowSpec> components;
    std::vector<std::vector<std::vector<double>>> routing;
};

struct FlowSpec {
    std::variant<KroneckerSpec, SuspensionSpec, MultiSuspensionSpec, Sl2FlowSpec, ProductFlowSpec> v;

    FlowSpec() = default;
    FlowSpec(KroneckerSpec s) : v(std::move(s)) {}
    FlowSpec(SuspensionSpec s) : v(std::move(s)) {}
    FlowSpec(MultiSuspensionSpec s) : v((s.validate(), std::move(s))) {}
    FlowSpec(Sl2FlowSpec s) : v(std::move(s)) {}
    FlowSpec(ProductFlowSpec s);

    template <typename T> bool is() const { return std::holds_alternative<T>(v); }
    template <typename T> const T& as() const { return std::get<T>(v); }

    // dimension D of the acting group R^D
    std::size_t params() const;
};

inline std::size_t FlowSpec::params() const
{
    struct {
        std::size_t operator()(const KroneckerSpec& k) const { return k.velocity.size(); }
        std::size_t operator()(const SuspensionSpec&) const { return 1; }
        std::size_t operator()(const MultiSuspensionSpec& m) const { return m.base_maps.size(); }
        std::size_t operator()(const Sl2FlowSpec&) const { return 1; }
        std::size_t operator()(const ProductFlowSpec& p) const
        {
            return p.routing.empty() || p.routing.front().empty() ? 0 : p.routing.front().front().size();
        }
    } visitor;
    return std::visit(visitor, v);
}

inline FlowSpec::FlowSpec(ProductFlowSpec s)
{
    if (s.components.empty())
        throw InputError("product flow: no components");
    if (s.routing.size() != s.components.size())
        throw InputError("product flow: routing needs one matrix per component");
    std::optional<std::size_t> D;
    for (std::size_t c = 0; c < s.components.size(); ++c) {
        if (s.routing[c].size() != s.components[c].params())
            throw InputError("product flow: routing rows differ from component parameter count");
        for (const auto& row : s.routing[c]) {
            if (D && row.size() != *D)
                throw InputError("product flow: inconsistent routing width");
            D = row.size();
        }
    }
    if (!D || *D == 0)
        throw InputError("product flow: empty routing");
    v = std::move(s);
}

// ---------------------------------------------------------------------------
// SL2 fundamental-domain reduction

namespace sl2 {

struct Mat {
    DD a, b, c, d;
};

inline Mat mul(const Mat& x, const Mat& y)
{
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
}

// inverse of a determinant-one matrix
inline Mat inv(const Mat& m) { return {m.d, -m.b, -m.c, m.a}; }

inline Mat to_h(const Sl2Point& g) { return inv(Mat{g.a, g.b, g.c, g.d}); }

inline Sl2Point from_h(const Mat& h)
{
    Mat g = inv(h);
    return Sl2Point{g.a, g.b, g.c, g.d};
}

// base point z = h.i on the upper half plane
inline std::pair<double, double> base_point(const Mat& h)
{
    DD cc = h.c * h.c + h.d * h.d;
    return {static_cast<double>((h.a * h.c + h.b * h.d) / cc), static_cast<double>(DD(1.0) / cc)};
}

inline std::pair<double, double> base_point(const Sl2Point& g) { return base_point(to_h(g)); }

inline constexpr int reduction_cap = 1000;

// Left-multiplies h by elements of SL2(Z) until h.i lies in the standard
// fundamental domain, then fixes the sign.
inline Mat reduce_h(Mat h, double t = 0.0)
{
    for (int it = 0;; ++it) {
        if (it >= reduction_cap)
            throw NumericInstability("sl2 reduction did not converge", t);
        DD cc = h.c * h.c + h.d * h.d;
        DD x = (h.a * h.c + h.b * h.d) / cc;
        if (!std::isfinite(x.hi) || !std::isfinite(cc.hi))
            throw NumericInstability("sl2 reduction hit a non-finite entry", t);
        if (std::abs(x.hi) > 0.5) {
            DD n = detail::round(x);
            h.a -= n * h.c;
            h.b -= n * h.d;
            continue;
        }
        DD aa = h.a * h.a + h.b * h.b;
        if (aa < cc) {
            h = Mat{-h.c, -h.d, h.a, h.b};
            continue;
        }
        break;
    }
    if (h.c.hi < 0.0 || (h.c.hi == 0.0 && h.c.lo == 0.0 && h.d.hi < 0.0))
        h = Mat{-h.a, -h.b, -h.c, -h.d};
    return h;
}

inline Sl2Point reduce(const Sl2Point& g, double t = 0.0) { return from_h(reduce_h(to_h(g), t)); }

inline bool in_fundamental_domain(const Sl2Point& g, double tol = 1e-12)
{
    if (std::abs(g.det() - 1.0) > tol)
        return false;
    Mat h = to_h(g);
    auto [x, y] = base_point(h);
    double r2 = static_cast<double>((h.a * h.a + h.b * h.b) / (h.c * h.c + h.d * h.d));
    bool sign_ok = h.c.hi > 0.0 || (h.c.hi == 0.0 && h.d.hi > 0.0);
    return y > 0.0 && std::abs(x) <= 0.5 + tol && r2 >= 1.0 - tol && sign_ok;
}

// h -> h a(-s), i.e. g -> a(s) g
inline Mat geodesic_step(const Mat& h, double s)
{
    DD e = detail::exp(DD(s));
    DD ei = DD(1.0) / e;
    return {h.a * ei, h.b * e, h.c * ei, h.d * e};
}

// h -> h u(-s), i.e. g -> u(s) g
inline Mat horocycle_step(const Mat& h, double s)
{
    return {h.a, h.b - h.a * DD(s), h.c, h.d - h.c * DD(s)};
}

// Moves h along the flow by time s in steps of length at most one,
// reducing after each step so entries stay O(e).
inline Mat flow_h(Mat h, Sl2FlowSpec::Kind kind, double s, double t_report)
{
    if (kind == Sl2FlowSpec::Kind::horocycle)
        return reduce_h(horocycle_step(h, s), t_report);
    double n = std::ceil(std::abs(s));
    if (n == 0.0)
        return h;
    double step = s / n;
    for (double k = 0; k < n; k += 1.0)
        h = reduce_h(geodesic_step(h, step), t_report);
    return h;
}

inline double frobenius(const Mat& x, const Mat& y)
{
    double s = 0.0;
    for (DD e : {x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d})
        s += static_cast<double>(e) * static_cast<double>(e);
    return std::sqrt(s);
}

// elements of SL2(Z) that can relate two representatives of nearby points
// across the boundary of the fundamental domain
inline const std::vector<Mat>& boundary_neighbours()
{
    static const std::vector<Mat> list = [] {
        std::vector<Mat> gens{{1, 1, 0, 1}, {1, -1, 0, 1}, {0, -1, 1, 0}};
        std::vector<Mat> out{{1, 0, 0, 1}};
        std::vector<Mat> frontier = out;
        for (int depth = 0; depth < 3; ++depth) {
            std::vector<Mat> next;
            for (const Mat& m : frontier)
                for (const Mat& g : gens)
                    next.push_back(mul(g, m));
            out.insert(out.end(), next.begin(), next.end());
            frontier = std::move(next);
        }
        std::size_t n = out.size();
        for (std::size_t i = 0; i < n; ++i)
            out.push_back({-out[i].a, -out[i].b, -out[i].c, -out[i].d});
        return out;
    }();
    return list;
}

inline double distance(const Sl2Point& p, const Sl2Point& q)
{
    Mat hp = to_h(p);
    Mat hq = to_h(q);
    double best = frobenius(hp, hq);
    for (const Mat& g : boundary_neighbours())
        best = std::min(best, frobenius(hp, mul(g, hq)));
    return best;
}

inline constexpr double y_max = 1e3;

// Area of the cusp part {y > y_max} of the fundamental domain, relative to
// the full hyperbolic area pi/3.
inline constexpr double cusp_truncated_mass = (1.0 / y_max) / (std::numbers::pi / 3.0);

// Haar-distributed point from counter (seed, index): base point from
// dx dy / y^2 on the domain truncated at y_max by rejection, frame angle
// uniform.
inline Sl2Point haar_point(const detail::CounterRng& rng, std::uint64_t index)
{
    const double y0 = std::sqrt(3.0) / 2.0;
    const double w = 1.0 / y0 - 1.0 / y_max;
    for (std::uint64_t attempt = 0;; ++attempt) {
        double u = rng.uniform(index, 3 * attempt);
        double y = 1.0 / (1.0 / y0 - u * w);
        double x = rng.uniform(index, 3 * attempt + 1) - 0.5;
        if (x * x + y * y < 1.0)
            continue;
        double theta = std::numbers::pi * rng.uniform(index, 3 * attempt + 2);
        double sy = std::sqrt(y);
        double ct = std::cos(theta), st = std::sin(theta);
        // h = n(x) a(sqrt y) k(theta)
        Mat n{1.0, x, 0.0, 1.0};
        Mat a{sy, 0.0, 0.0, 1.0 / sy};
        Mat k{ct, -st, st, ct};
        Mat h = mul(mul(n, a), k);
        return from_h(reduce_h(h));
    }
}

}  // namespace sl2

inline std::vector<Sl2Point> haar_sample_sl2(std::uint64_t seed, std::size_t n)
{
    if (n < 1)
        throw InputError("haar_sample_sl2: n must be at least 1");
    detail::CounterRng rng{seed};
    std::vector<Sl2Point> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(sl2::haar_point(rng, i));
    return out;
}

// ---------------------------------------------------------------------------
// evolution

namespace flow_detail {

inline void check_times(std::span<const double> t, std::size_t D)
{
    if (t.size() != D)
        throw ContractViolation("evolve: time vector has length " + std::to_string(t.size()) +
                                " but the flow has " + std::to_string(D) + " parameters");
    for (double s : t)
        if (!std::isfinite(s))
            throw InputError("evolve: non-finite time");
}

inline bool fiber_ok(const std::vector<double>& z)
{
    return std::all_of(z.begin(), z.end(), [](double s) { return s >= 0.0 && s < 1.0; });
}

// (x, z) with z_i + t_i split into floor crossings and the new fiber
inline SuspensionPoint suspension_step(const std::vector<const DiscreteSystem*>& maps, const SuspensionPoint& p,
                                       std::span<const double> t)
{
    if (p.fiber.size() != maps.size())
        throw ContractViolation("suspension: fiber dimension differs from the number of base maps");
    if (!fiber_ok(p.fiber))
        throw ContractViolation("suspension: fiber coordinate outside [0,1)");
    SuspensionPoint q{p.base, std::vector<double>(maps.size())};
    for (std::size_t i = 0; i < maps.size(); ++i) {
        double u = p.fiber[i] + t[i];
        double k = std::floor(u);
        double z = u - k;
        if (z >= 1.0) {
            z = 0.0;
            k += 1.0;
        }
        if (std::abs(k) > exact_integer_limit)
            throw OverflowError("suspension: crossing count exceeds exact range");
        q.fiber[i] = z;
        if (k != 0.0)
            q.base = maps[i]->power(q.base, static_cast<std::int64_t>(k));
    }
    return q;
}

}  // namespace flow_detail

inline PhasePoint evolve(const FlowSpec& flow, const PhasePoint& x, std::span<const double> t);

inline PhasePoint evolve(const FlowSpec& flow, const PhasePoint& x, double t)
{
    return evolve(flow, x, std::span<const double>(&t, 1));
}

inline PhasePoint evolve(const FlowSpec& flow, const PhasePoint& x, std::span<const double> t)
{
    flow_detail::check_times(t, flow.params());
    if (auto k = std::get_if<KroneckerSpec>(&flow.v)) {
        if (!x.is<TorusPoint>() || x.as<TorusPoint>().coords.size() != k->dim)
            throw ContractViolation("evolve: Kronecker flow needs a torus point of matching dimension");
        TorusPoint y = x.as<TorusPoint>();
        for (std::size_t p = 0; p < t.size(); ++p)
            if (t[p] != 0.0)
                for (std::size_t c = 0; c < k->dim; ++c)
                    y.coords[c] = advance_angle(y.coords[c], k->velocity[p][c], t[p]);
        return y;
    }
    if (auto s = std::get_if<SuspensionSpec>(&flow.v)) {
        if (!x.is<SuspensionPoint>())
            throw ContractViolation("evolve: suspension flow needs a suspension point");
        return flow_detail::suspension_step({&s->base}, x.as<SuspensionPoint>(), t);
    }
    if (auto m = std::get_if<MultiSuspensionSpec>(&flow.v)) {
        if (!x.is<SuspensionPoint>())
            throw ContractViolation("evolve: suspension flow needs a suspension point");
        std::vector<const DiscreteSystem*> maps;
        for (const auto& b : m->base_maps)
            maps.push_back(&b);
        return flow_detail::suspension_step(maps, x.as<SuspensionPoint>(), t);
    }
    if (auto g = std::get_if<Sl2FlowSpec>(&flow.v)) {
        if (!x.is<Sl2Point>())
            throw ContractViolation("evolve: SL2 flow needs an SL2 point");
        const Sl2Point& p = x.as<Sl2Point>();
        if (t[0] == 0.0)
            return p;
        double s = g->speed * t[0];
        return sl2::from_h(sl2::flow_h(sl2::to_h(p), g->kind, s, t[0]));
    }
    const auto& prod = std::get<ProductFlowSpec>(flow.v);
    if (!x.is<ProductPoint>() || x.as<ProductPoint>().parts.size() != prod.components.size())
        throw ContractViolation("evolve: product flow needs a product point with one part per component");
    ProductPoint y;
    for (std::size_t c = 0; c < prod.components.size(); ++c) {
        const auto& R = prod.routing[c];
        std::vector<double> tc(R.size(), 0.0);
        for (std::size_t r = 0; r < R.size(); ++r)
            for (std::size_t j = 0; j < t.size(); ++j)
                tc[r] += R[r][j] * t[j];
        y.parts.push_back(evolve(prod.components[c], x.as<ProductPoint>().parts[c], tc));
    }
    return y;
}

inline PhasePoint suspension_evolve(const SuspensionSpec& spec, const PhasePoint& x, double t)
{
    return evolve(FlowSpec(spec), x, t);
}

inline PhasePoint multi_suspension_evolve(const MultiSuspensionSpec& spec, const PhasePoint& x,
                                          std::span<const double> t)
{
    return evolve(FlowSpec(spec), x, t);
}

inline PhasePoint sl2_evolve(const Sl2FlowSpec& spec, const PhasePoint& x, double t)
{
    return evolve(FlowSpec(spec), x, t);
}

// Does x belong to the phase space of `flow`?
inline bool contains(const FlowSpec& flow, const PhasePoint& x)
{
    if (auto k = std::get_if<KroneckerSpec>(&flow.v))
        return x.is<TorusPoint>() && x.as<TorusPoint>().coords.size() == k->dim &&
               flow_detail::fiber_ok(x.as<TorusPoint>().coords);
    auto suspension_ok = [&](const std::vector<const DiscreteSystem*>& maps) {
        if (!x.is<SuspensionPoint>())
            return false;
        const auto& p = x.as<SuspensionPoint>();
        return p.fiber.size() == maps.size() && flow_detail::fiber_ok(p.fiber) && maps[0]->contains(p.base);
    };
    if (auto s = std::get_if<SuspensionSpec>(&flow.v))
        return suspension_ok({&s->base});
    if (auto m = std::get_if<MultiSuspensionSpec>(&flow.v)) {
        std::vector<const DiscreteSystem*> maps;
        for (const auto& b : m->base_maps)
            maps.push_back(&b);
        return suspension_ok(maps);
    }
    if (flow.is<Sl2FlowSpec>())
        return x.is<Sl2Point>() && sl2::in_fundamental_domain(x.as<Sl2Point>(), 1e-9);
    const auto& prod = std::get<ProductFlowSpec>(flow.v);
    if (!x.is<ProductPoint>() || x.as<ProductPoint>().parts.size() != prod.components.size())
        return false;
    for (std::size_t c = 0; c < prod.components.size(); ++c)
        if (!contains(prod.components[c], x.as<ProductPoint>().parts[c]))
            return false;
    return true;
}

// Phase-space metric: torus sup-wrap distance; suspensions identify
// (x, z + e_i) with (T_i x, z); SL2 uses the Frobenius distance minimised
// over nearby representatives; products take the max over components.
inline double distance(const FlowSpec& flow, const PhasePoint& p, const PhasePoint& q)
{
    if (flow.is<KroneckerSpec>())
        return torus_distance(p.as<TorusPoint>().coords, q.as<TorusPoint>().coords);
    auto suspension_distance = [&](const std::vector<const DiscreteSystem*>& maps) {
        const auto& a = p.as<SuspensionPoint>();
        const auto& b = q.as<SuspensionPoint>();
        std::size_t d = maps.size();
        double best = std::numeric_limits<double>::infinity();
        std::size_t combos = 1;
        for (std::size_t i = 0; i < d; ++i)
            combos *= 3;
        for (std::size_t code = 0; code < combos; ++code) {
            DiscretePoint base = a.base;
            double fib = 0.0;
            std::size_t c = code;
            for (std::size_t i = 0; i < d; ++i, c /= 3) {
                int sigma = static_cast<int>(c % 3) - 1;
                if (sigma != 0)
                    base = maps[i]->power(base, sigma);
                fib = std::max(fib, std::abs(a.fiber[i] - sigma - b.fiber[i]));
            }
            double bd = base.id == b.base.id ? torus_distance(base.angles, b.base.angles) : 1.0;
            best = std::min(best, std::max(bd, fib));
        }
        return best;
    };
    if (auto s = std::get_if<SuspensionSpec>(&flow.v))
        return suspension_distance({&s->base});
    if (auto m = std::get_if<MultiSuspensionSpec>(&flow.v)) {
        std::vector<const DiscreteSystem*> maps;
        for (const auto& b : m->base_maps)
            maps.push_back(&b);
        return suspension_distance(maps);
    }
    if (flow.is<Sl2FlowSpec>())
        return sl2::distance(p.as<Sl2Point>(), q.as<Sl2Point>());
    const auto& prod = std::get<ProductFlowSpec>(flow.v);
    double m = 0.0;
    for (std::size_t c = 0; c < prod.components.size(); ++c)
        m = std::max(m, distance(prod.components[c], p.as<ProductPoint>().parts[c], q.as<ProductPoint>().parts[c]));
    return m;
}

}  // namespace ergoflow
