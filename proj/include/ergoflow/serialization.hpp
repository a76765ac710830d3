#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "averaging.hpp"
#include "diagnostics.hpp"
#include "error.hpp"
#include "flows.hpp"
#include "observable.hpp"
#include "plan.hpp"
#include "poly.hpp"

namespace ergoflow {

using json = nlohmann::json;

// FNV-1a, 64 bit
inline std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t h)
{
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4)
        s[static_cast<std::size_t>(i)] = digits[h & 0xf];
    return s;
}

// sorted keys, two-space indent, trailing newline
inline std::string canonical_dump(const json& j) { return j.dump(2) + "\n"; }

namespace json_detail {

[[noreturn]] inline void fail(const std::string& where, const std::string& what)
{
    throw ConfigError(where + ": " + what);
}

inline void keys(const json& j, const std::string& where, std::initializer_list<const char*> required,
                 std::initializer_list<const char*> optional = {})
{
    if (!j.is_object())
        fail(where, "expected an object");
    std::set<std::string> allowed;
    for (const char* k : required) {
        allowed.insert(k);
        if (!j.contains(k))
            fail(where, std::string("missing key \"") + k + "\"");
    }
    for (const char* k : optional)
        allowed.insert(k);
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k))
            fail(where, "unknown key \"" + k + "\"");
}

inline double num(const json& j, const std::string& where)
{
    if (!j.is_number())
        fail(where, "expected a number");
    return j.get<double>();
}

inline std::int64_t integer(const json& j, const std::string& where)
{
    if (!j.is_number_integer())
        fail(where, "expected an integer");
    return j.get<std::int64_t>();
}

inline std::string str(const json& j, const std::string& where)
{
    if (!j.is_string())
        fail(where, "expected a string");
    return j.get<std::string>();
}

template <typename F>
auto list(const json& j, const std::string& where, F&& each)
{
    if (!j.is_array())
        fail(where, "expected an array");
    std::vector<decltype(each(j, where))> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(each(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

inline std::vector<double> nums(const json& j, const std::string& where) { return list(j, where, num); }
inline std::vector<std::int64_t> ints(const json& j, const std::string& where) { return list(j, where, integer); }

inline json cplx_json(cplx c) { return json::array({c.real(), c.imag()}); }

inline cplx cplx_from(const json& j, const std::string& where)
{
    if (j.is_number())
        return {j.get<double>(), 0.0};
    auto v = nums(j, where);
    if (v.size() != 2)
        fail(where, "complex values are [re, im]");
    return {v[0], v[1]};
}

}  // namespace json_detail

// ---------------------------------------------------------------------------
// scalars

inline json to_json(const Rational& r) { return r.q == 1 ? std::to_string(r.p) : std::to_string(r.p) + "/" + std::to_string(r.q); }

inline Rational rational_from(const json& j, const std::string& where)
{
    if (j.is_number_integer())
        return Rational(j.get<std::int64_t>());
    std::string s = json_detail::str(j, where);
    auto slash = s.find('/');
    try {
        std::size_t used = 0;
        std::int64_t p = std::stoll(s.substr(0, slash), &used);
        if (used != (slash == std::string::npos ? s.size() : slash))
            json_detail::fail(where, "bad rational \"" + s + "\"");
        std::int64_t q = 1;
        if (slash != std::string::npos) {
            std::string den = s.substr(slash + 1);
            q = std::stoll(den, &used);
            if (used != den.size())
                json_detail::fail(where, "bad rational \"" + s + "\"");
        }
        return Rational(p, q);
    } catch (const std::logic_error&) {
        json_detail::fail(where, "bad rational \"" + s + "\"");
    } catch (const DomainError& e) {
        json_detail::fail(where, e.what());
    }
}

inline Polynomial polynomial_from(const json& j, const std::string& where)
{
    try {
        return parse_polynomial(json_detail::str(j, where));
    } catch (const InputError& e) {
        json_detail::fail(where, e.what());
    }
}

// ---------------------------------------------------------------------------
// discrete systems and flows

inline json to_json(const DiscreteSystem& s)
{
    json comps = json::array();
    for (const auto& c : s.components()) {
        if (auto p = std::get_if<PermutationMap>(&c))
            comps.push_back({{"permutation", p->table()}});
        else
            comps.push_back({{"rotation", std::get<RotationMap>(c).rho}});
    }
    return {{"components", comps}};
}

inline DiscreteSystem discrete_from(const json& j, const std::string& where)
{
    using namespace json_detail;
    keys(j, where, {"components"});
    auto comps = list(j["components"], where + ".components", [](const json& c, const std::string& w) {
        keys(c, w, {}, {"permutation", "cyclic", "rotation"});
        if (c.size() != 1)
            fail(w, "exactly one of permutation, cyclic, rotation");
        try {
            if (c.contains("permutation"))
                return DiscreteSystem::Component(PermutationMap(ints(c["permutation"], w + ".permutation")));
            if (c.contains("cyclic")) {
                keys(c["cyclic"], w + ".cyclic", {"n"}, {"shift"});
                std::int64_t n = integer(c["cyclic"]["n"], w + ".cyclic.n");
                std::int64_t sh = c["cyclic"].contains("shift") ? integer(c["cyclic"]["shift"], w + ".cyclic.shift") : 1;
                if (n < 1)
                    fail(w, "cyclic n must be positive");
                return DiscreteSystem::Component(PermutationMap::cyclic(n, sh));
            }
            return DiscreteSystem::Component(RotationMap{nums(c["rotation"], w + ".rotation")});
        } catch (const InputError& e) {
            fail(w, e.what());
        }
    });
    try {
        return DiscreteSystem(std::move(comps));
    } catch (const InputError& e) {
        fail(where, e.what());
    }
}

inline json to_json(const FlowSpec& f)
{
    if (auto k = std::get_if<KroneckerSpec>(&f.v)) {
        if (k->lattice)
            return {{"type", "kronecker"},
                    {"lattice",
                     {{"radicands", k->lattice->radicands}, {"scale", to_json(k->lattice->scale)}, {"gen", k->lattice->gen}}}};
        return {{"type", "kronecker"}, {"velocity", k->velocity}};
    }
    if (auto s = std::get_if<SuspensionSpec>(&f.v))
        return {{"type", "suspension"}, {"base", to_json(s->base)}};
    if (auto m = std::get_if<MultiSuspensionSpec>(&f.v)) {
        json maps = json::array();
        for (const auto& b : m->base_maps)
            maps.push_back(to_json(b));
        return {{"type", "multi_suspension"}, {"base_maps", maps}};
    }
    if (auto g = std::get_if<Sl2FlowSpec>(&f.v))
        return {{"type", g->kind == Sl2FlowSpec::Kind::geodesic ? "geodesic" : "horocycle"}, {"speed", g->speed}};
    const auto& p = std::get<ProductFlowSpec>(f.v);
    json comps = json::array();
    for (const auto& c : p.components)
        comps.push_back(to_json(c));
    return {{"type", "product"}, {"components", comps}, {"routing", p.routing}};
}

inline FlowSpec flow_from(const json& j, const std::string& where)
{
    using namespace json_detail;
    if (!j.is_object() || !j.contains("type"))
        fail(where, "flow needs a type");
    std::string type = str(j["type"], where + ".type");
    try {
        if (type == "kronecker") {
            keys(j, where, {"type"}, {"velocity", "lattice"});
            if (j.contains("velocity") == j.contains("lattice"))
                fail(where, "kronecker flows take exactly one of velocity, lattice");
            if (j.contains("lattice")) {
                const json& l = j["lattice"];
                keys(l, where + ".lattice", {"radicands", "gen"}, {"scale"});
                Lattice lat;
                lat.radicands = ints(l["radicands"], where + ".lattice.radicands");
                if (l.contains("scale"))
                    lat.scale = rational_from(l["scale"], where + ".lattice.scale");
                lat.gen = list(l["gen"], where + ".lattice.gen", [](const json& a, const std::string& w) {
                    return list(a, w, [](const json& b, const std::string& w2) { return ints(b, w2); });
                });
                return KroneckerSpec::from_lattice(std::move(lat));
            }
            KroneckerSpec k;
            k.velocity = list(j["velocity"], where + ".velocity", nums);
            if (k.velocity.empty() || k.velocity.front().empty())
                fail(where, "empty velocity");
            k.dim = k.velocity.front().size();
            for (const auto& row : k.velocity)
                if (row.size() != k.dim)
                    fail(where, "ragged velocity table");
            return k;
        }
        if (type == "suspension") {
            keys(j, where, {"type", "base"});
            return SuspensionSpec{discrete_from(j["base"], where + ".base")};
        }
        if (type == "multi_suspension") {
            keys(j, where, {"type", "base_maps"});
            return MultiSuspensionSpec{list(j["base_maps"], where + ".base_maps", discrete_from)};
        }
        if (type == "geodesic" || type == "horocycle") {
            keys(j, where, {"type"}, {"speed"});
            Sl2FlowSpec s;
            s.kind = type == "geodesic" ? Sl2FlowSpec::Kind::geodesic : Sl2FlowSpec::Kind::horocycle;
            if (j.contains("speed"))
                s.speed = num(j["speed"], where + ".speed");
            return s;
        }
        if (type == "product") {
            keys(j, where, {"type", "components", "routing"});
            ProductFlowSpec p;
            p.components = list(j["components"], where + ".components", flow_from);
            p.routing = list(j["routing"], where + ".routing", [](const json& a, const std::string& w) {
                return list(a, w, nums);
            });
            return p;
        }
    } catch (const InputError& e) {
        fail(where, e.what());
    } catch (const DomainError& e) {
        fail(where, e.what());
    }
    fail(where, "unknown flow type \"" + type + "\"");
}

// ---------------------------------------------------------------------------
// observables

inline json to_json(const Observable& o)
{
    using K = Observable::Kind;
    using json_detail::cplx_json;
    auto children = [&] {
        json c = json::array();
        for (const auto& ch : o.children())
            c.push_back(to_json(ch));
        return c;
    };
    switch (o.kind()) {
    case K::constant:
        return {{"type", "constant"}, {"value", cplx_json(o.constant_value())}};
    case K::torus_character:
        return {{"type", "character"}, {"k", o.frequencies()}};
    case K::fiber_character:
        return {{"type", "fiber_character"}, {"k", o.frequencies()}};
    case K::base_function: {
        json t = json::array();
        for (const cplx& c : o.table())
            t.push_back(cplx_json(c));
        return {{"type", "base_function"}, {"table", t}};
    }
    case K::smooth_bump:
        return {{"type", "smooth_bump"},
                {"x0", o.bump_x0()},
                {"y0", o.bump_y0()},
                {"width", o.bump_width()},
                {"amplitude", o.bump_amplitude()}};
    case K::product:
        return {{"type", "product"}, {"children", children()}};
    case K::sum: {
        json w = json::array();
        for (const cplx& c : o.weights())
            w.push_back(cplx_json(c));
        return {{"type", "sum"}, {"children", children()}, {"weights", w}};
    }
    case K::real_part:
        return {{"type", "real_part"}, {"child", to_json(o.children()[0])}};
    case K::component:
        return {{"type", "component"}, {"index", o.index()}, {"child", to_json(o.children()[0])}};
    }
    return {};
}

inline Observable observable_from(const json& j, const std::string& where)
{
    using namespace json_detail;
    if (!j.is_object() || !j.contains("type"))
        fail(where, "observable needs a type");
    std::string type = str(j["type"], where + ".type");
    try {
        if (type == "constant") {
            keys(j, where, {"type", "value"});
            return Observable::constant(cplx_from(j["value"], where + ".value"));
        }
        if (type == "character" || type == "fiber_character") {
            keys(j, where, {"type", "k"});
            auto k = ints(j["k"], where + ".k");
            return type == "character" ? Observable::character(k) : Observable::fiber_character(k);
        }
        if (type == "base_function") {
            keys(j, where, {"type", "table"});
            return Observable::base_function(list(j["table"], where + ".table", cplx_from));
        }
        if (type == "smooth_bump") {
            keys(j, where, {"type", "x0", "y0", "width"}, {"amplitude"});
            double amp = j.contains("amplitude") ? num(j["amplitude"], where + ".amplitude") : 1.0;
            return Observable::smooth_bump(num(j["x0"], where + ".x0"), num(j["y0"], where + ".y0"),
                                           num(j["width"], where + ".width"), amp);
        }
        if (type == "product") {
            keys(j, where, {"type", "children"});
            return Observable::product(list(j["children"], where + ".children", observable_from));
        }
        if (type == "sum") {
            keys(j, where, {"type", "children"}, {"weights"});
            std::vector<cplx> w;
            if (j.contains("weights"))
                w = list(j["weights"], where + ".weights", cplx_from);
            return Observable::sum(list(j["children"], where + ".children", observable_from), w);
        }
        if (type == "real_part") {
            keys(j, where, {"type", "child"});
            return Observable::real_part(observable_from(j["child"], where + ".child"));
        }
        if (type == "component") {
            keys(j, where, {"type", "index", "child"});
            std::int64_t i = integer(j["index"], where + ".index");
            if (i < 0)
                fail(where, "negative component index");
            return Observable::component(static_cast<std::size_t>(i), observable_from(j["child"], where + ".child"));
        }
    } catch (const InputError& e) {
        fail(where, e.what());
    } catch (const DomainError& e) {
        fail(where, e.what());
    }
    fail(where, "unknown observable type \"" + type + "\"");
}

// ---------------------------------------------------------------------------
// points

inline json to_json(const PhasePoint& x)
{
    if (auto t = std::get_if<TorusPoint>(&x.v))
        return {{"torus", t->coords}};
    if (auto d = std::get_if<DiscretePoint>(&x.v))
        return {{"discrete", {{"id", d->id}, {"angles", d->angles}}}};
    if (auto s = std::get_if<SuspensionPoint>(&x.v))
        return {{"suspension", {{"id", s->base.id}, {"angles", s->base.angles}, {"fiber", s->fiber}}}};
    if (auto g = std::get_if<Sl2Point>(&x.v)) {
        auto d = [](const DD& v) { return v.hi + v.lo; };
        return {{"sl2", {d(g->a), d(g->b), d(g->c), d(g->d)}}};
    }
    json parts = json::array();
    for (const auto& p : x.as<ProductPoint>().parts)
        parts.push_back(to_json(p));
    return {{"product", parts}};
}

inline PhasePoint point_from(const json& j, const std::string& where)
{
    using namespace json_detail;
    keys(j, where, {}, {"torus", "discrete", "suspension", "sl2", "product"});
    if (j.size() != 1)
        fail(where, "a point has exactly one of torus, discrete, suspension, sl2, product");
    if (j.contains("torus"))
        return TorusPoint{nums(j["torus"], where + ".torus")};
    if (j.contains("discrete")) {
        const json& d = j["discrete"];
        keys(d, where + ".discrete", {"id"}, {"angles"});
        DiscretePoint p{integer(d["id"], where + ".discrete.id"), {}};
        if (d.contains("angles"))
            p.angles = nums(d["angles"], where + ".discrete.angles");
        return p;
    }
    if (j.contains("suspension")) {
        const json& d = j["suspension"];
        keys(d, where + ".suspension", {"id", "fiber"}, {"angles"});
        SuspensionPoint p;
        p.base.id = integer(d["id"], where + ".suspension.id");
        if (d.contains("angles"))
            p.base.angles = nums(d["angles"], where + ".suspension.angles");
        p.fiber = nums(d["fiber"], where + ".suspension.fiber");
        return p;
    }
    if (j.contains("sl2")) {
        auto v = nums(j["sl2"], where + ".sl2");
        if (v.size() != 4)
            fail(where, "sl2 points are [a, b, c, d]");
        Sl2Point g{v[0], v[1], v[2], v[3]};
        if (std::abs(g.det() - 1.0) > 1e-9)
            fail(where, "sl2 point must have determinant 1");
        return sl2::reduce(g);
    }
    return ProductPoint{list(j["product"], where + ".product", point_from)};
}

// ---------------------------------------------------------------------------
// plans and quadrature

inline QuadratureConfig quadrature_from(const json& j, const std::string& where)
{
    using namespace json_detail;
    keys(j, where, {}, {"rule", "step", "phase_step", "horizons", "boxes", "threads"});
    QuadratureConfig q;
    if (j.contains("rule")) {
        std::string r = str(j["rule"], where + ".rule");
        if (r == "gauss4")
            q.rule = QuadratureConfig::Rule::gauss4;
        else if (r == "midpoint")
            q.rule = QuadratureConfig::Rule::midpoint;
        else
            fail(where, "rule is gauss4 or midpoint");
    }
    if (j.contains("step"))
        q.step = num(j["step"], where + ".step");
    if (j.contains("phase_step"))
        q.phase_step = num(j["phase_step"], where + ".phase_step");
    if (j.contains("horizons"))
        q.horizons = nums(j["horizons"], where + ".horizons");
    if (j.contains("boxes"))
        q.boxes = list(j["boxes"], where + ".boxes", nums);
    if (j.contains("threads")) {
        auto t = integer(j["threads"], where + ".threads");
        if (t < 1)
            fail(where, "threads must be positive");
        q.threads = static_cast<unsigned>(t);
    }
    q.validate();
    return q;
}

inline json to_json(const QuadratureConfig& q)
{
    return {{"rule", q.rule == QuadratureConfig::Rule::gauss4 ? "gauss4" : "midpoint"},
            {"step", q.step},
            {"phase_step", q.phase_step},
            {"horizons", q.horizons},
            {"boxes", q.boxes},
            {"threads", q.threads}};
}

inline EstimatorConfig estimator_from(const json& j, const std::string& where, const QuadratureConfig& quad)
{
    using namespace json_detail;
    keys(j, where, {}, {"birkhoff_N", "r"});
    EstimatorConfig e;
    e.quad = quad;
    if (j.contains("birkhoff_N"))
        e.birkhoff_N = integer(j["birkhoff_N"], where + ".birkhoff_N");
    if (j.contains("r"))
        e.r = num(j["r"], where + ".r");
    if (e.birkhoff_N < 1 || !(e.r > 0.0))
        fail(where, "birkhoff_N and r must be positive");
    return e;
}

inline json to_json(const EstimatorConfig& e) { return {{"birkhoff_N", e.birkhoff_N}, {"r", e.r}}; }

// plan parameters only; flows and observables are referenced by name
struct PlanSpec {
    std::string name;
    Form form = Form::Single;
    std::vector<std::string> flows;
    std::vector<std::string> observables;
    json params = json::object();
};

inline void apply_plan_params(AveragePlan& p, const json& j, const std::string& where)
{
    using namespace json_detail;
    keys(j, where, {}, {"Q", "a", "alpha", "beta", "alphas", "c", "P", "cj"});
    if (j.contains("Q"))
        p.Q = polynomial_from(j["Q"], where + ".Q");
    if (j.contains("a"))
        p.a = rational_from(j["a"], where + ".a");
    if (j.contains("alpha"))
        p.alpha = num(j["alpha"], where + ".alpha");
    if (j.contains("beta"))
        p.beta = num(j["beta"], where + ".beta");
    if (j.contains("alphas"))
        p.alphas = nums(j["alphas"], where + ".alphas");
    if (j.contains("c")) {
        if (p.form == Form::ThmC)
            p.c_box = num(j["c"], where + ".c");
        else
            p.c = rational_from(j["c"], where + ".c");
    }
    if (j.contains("P"))
        p.P.l = ints(j["P"], where + ".P");
    if (j.contains("cj"))
        p.cj = list(j["cj"], where + ".cj", rational_from);
}

// canonical parameter block: only the fields the form uses
inline json plan_params_json(const AveragePlan& p)
{
    json j = json::object();
    switch (p.form) {
    case Form::ThmA:
        j = {{"Q", to_string(p.Q)}, {"a", to_json(p.a)}};
        break;
    case Form::ThmB:
        j = {{"Q", to_string(p.Q)}, {"a", to_json(p.a)}, {"alpha", p.alpha}, {"beta", p.beta}};
        break;
    case Form::ThmC:
        j = {{"c", p.c_box}, {"P", p.P.l}};
        break;
    case Form::ThmD1:
        j = {{"Q", to_string(p.Q)}, {"alphas", p.alphas}, {"beta", p.beta}};
        break;
    case Form::ThmD2:
        j = {{"Q", to_string(p.Q)}, {"c", to_json(p.c)}, {"beta", p.beta}};
        break;
    case Form::Corollary: {
        json c = json::array();
        for (const auto& r : p.cj)
            c.push_back(to_json(r));
        j = {{"Q", to_string(p.Q)}, {"cj", c}};
        break;
    }
    case Form::Single:
        j = {{"Q", to_string(p.Q)}, {"beta", p.beta}};
        break;
    }
    return j;
}

inline json plan_json(const AveragePlan& p)
{
    json flows = json::array(), obs = json::array();
    for (const auto& f : p.flows)
        flows.push_back(to_json(f));
    for (const auto& o : p.observables)
        obs.push_back(to_json(o));
    return {{"form", form_name(p.form)}, {"flows", flows}, {"observables", obs}, {"params", plan_params_json(p)}};
}

inline std::uint64_t plan_hash(const AveragePlan& p) { return fnv1a(plan_json(p).dump()); }

// curve rows: M..., re, im, err
inline json to_json(const AverageCurve& c)
{
    json pts = json::array();
    for (const auto& p : c.points)
        pts.push_back({{"M", p.M}, {"value", json_detail::cplx_json(p.value)}, {"err", p.err}});
    return {{"plan_hash", hex64(c.plan_hash)}, {"quadrature", to_json(c.quad)}, {"x", to_json(c.x)}, {"points", pts}};
}

inline json to_json(const PredictedLimit& p)
{
    json ings = json::array();
    for (const auto& i : p.ingredients)
        ings.push_back({{"name", i.name},
                        {"value", json_detail::cplx_json(i.value)},
                        {"err", i.err},
                        {"method", i.method},
                        {"converged", i.converged}});
    return {{"value", json_detail::cplx_json(p.value)},
            {"formula", p.formula},
            {"ingredients", ings},
            {"flagged", p.flagged},
            {"err", p.err}};
}

inline json to_json(const ConvergenceReport& r)
{
    json osc = json::array();
    for (const auto& [K, o] : r.oscillation)
        osc.push_back({K, o});
    return {{"curve", to_json(r.curve)},
            {"oscillation", osc},
            {"predicted", to_json(r.predicted)},
            {"residual", r.residual},
            {"tolerance", r.tolerance},
            {"final_oscillation", r.final_oscillation},
            {"verdict", verdict_name(r.verdict)},
            {"notes", r.notes}};
}

}  // namespace ergoflow
