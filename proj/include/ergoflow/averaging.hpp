#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "detail/parallel.hpp"
#include "detail/quadrature.hpp"
#include "detail/summation.hpp"
#include "error.hpp"
#include "flows.hpp"
#include "observable.hpp"
#include "plan.hpp"

namespace ergoflow {

struct CurvePoint {
    std::vector<double> M;
    cplx value;
    double err = 0.0;
};

struct AverageCurve {
    std::vector<CurvePoint> points;
    std::uint64_t plan_hash = 0;
    QuadratureConfig quad;
    PhasePoint x;
};

namespace avg_detail {

inline constexpr double gl4_error_constant = 5.624e-10;  // (4!)^4 / (9 (8!)^3)
inline constexpr double eps = std::numeric_limits<double>::epsilon();

// product-flow path resolved to a component with a numeric routing matrix
inline std::pair<const FlowSpec*, std::vector<std::vector<double>>> resolve_numeric(const FlowSpec& top,
                                                                                   const SpectralTerm::Path& path)
{
    std::size_t D = top.params();
    std::vector<std::vector<double>> R(D, std::vector<double>(D, 0.0));
    for (std::size_t p = 0; p < D; ++p)
        R[p][p] = 1.0;
    const FlowSpec* f = &top;
    for (std::size_t idx : path) {
        auto prod = std::get_if<ProductFlowSpec>(&f->v);
        if (!prod || idx >= prod->components.size())
            throw ContractViolation("observable component path does not match the flow");
        const auto& Rc = prod->routing[idx];
        std::vector<std::vector<double>> next(Rc.size(), std::vector<double>(D, 0.0));
        for (std::size_t q = 0; q < Rc.size(); ++q)
            for (std::size_t m = 0; m < Rc[q].size(); ++m)
                for (std::size_t p = 0; p < D; ++p)
                    next[q][p] += Rc[q][m] * R[m][p];
        R = std::move(next);
        f = &prod->components[idx];
    }
    return {f, std::move(R)};
}

inline const PhasePoint& sub_point(const PhasePoint& x, const SpectralTerm::Path& path)
{
    const PhasePoint* p = &x;
    for (std::size_t idx : path) {
        if (!p->is<ProductPoint>() || idx >= p->as<ProductPoint>().parts.size())
            throw ContractViolation("observable component path does not match the point");
        p = &p->as<ProductPoint>().parts[idx];
    }
    return *p;
}

// frac(tau * nu) with the product formed exactly
inline double frac_product(double tau, double nu)
{
    DD p = detail::two_prod(tau, nu);
    return (p.hi - std::floor(p.hi)) + p.lo;
}

// sum_j c_j e(sum_p tau_p nu_jp); valid when every term is a product of
// torus characters on Kronecker components
struct SpectralEval {
    std::vector<cplx> c0;
    std::vector<double> nu;  // [term * D + p]
    std::size_t D = 1;

    static std::optional<SpectralEval> make(const FlowSpec& flow, const Observable& obs, const PhasePoint& x)
    {
        auto terms = obs.expand(256);
        if (!terms)
            return std::nullopt;
        SpectralEval s;
        s.D = flow.params();
        for (const auto& t : *terms) {
            if (!t.fiber.empty() || !t.table.empty() || !t.opaque.empty())
                return std::nullopt;
            double phase0 = 0.0;
            std::vector<double> nu(s.D, 0.0);
            for (const auto& [path, k] : t.torus) {
                auto [comp, R] = resolve_numeric(flow, path);
                auto kr = std::get_if<KroneckerSpec>(&comp->v);
                if (!kr)
                    return std::nullopt;
                const PhasePoint& xp = sub_point(x, path);
                if (!xp.is<TorusPoint>() || xp.as<TorusPoint>().coords.size() != k.size() || k.size() != kr->dim)
                    throw ContractViolation("character dimension differs from the torus point");
                const auto& coords = xp.as<TorusPoint>().coords;
                for (std::size_t c = 0; c < k.size(); ++c)
                    phase0 += frac_product(static_cast<double>(k[c]), coords[c]);
                for (std::size_t q = 0; q < R.size(); ++q) {
                    detail::Compensated<double> kv;
                    for (std::size_t c = 0; c < k.size(); ++c)
                        kv.add(static_cast<double>(k[c]) * kr->velocity[q][c]);
                    for (std::size_t p = 0; p < s.D; ++p)
                        nu[p] += R[q][p] * kv.value();
                }
            }
            s.c0.push_back(t.coeff * expi(phase0));
            s.nu.insert(s.nu.end(), nu.begin(), nu.end());
        }
        return s;
    }

    cplx operator()(std::span<const double> tau) const
    {
        cplx v = 0.0;
        for (std::size_t j = 0; j < c0.size(); ++j) {
            double ph = 0.0;
            for (std::size_t p = 0; p < D; ++p) {
                double n = nu[j * D + p];
                if (n != 0.0 && tau[p] != 0.0)
                    ph += frac_product(tau[p], n);
            }
            v += c0[j] * expi(ph);
        }
        return v;
    }
};

// SL2 flows in double precision. The geodesic keeps a cursor so successive
// nodes cost O(1 + |delta tau|); it must be driven from a single thread.
struct Sl2Eval {
    struct M {
        double a, b, c, d;
    };

    Sl2FlowSpec spec;
    M h0;
    M cur;
    double cur_tau = 0.0;

    explicit Sl2Eval(const Sl2FlowSpec& s, const Sl2Point& g) : spec(s)
    {
        sl2::Mat h = sl2::to_h(g);
        h0 = {h.a.hi + h.a.lo, h.b.hi + h.b.lo, h.c.hi + h.c.lo, h.d.hi + h.d.lo};
        cur = h0;
    }

    static M reduce(M h, double t)
    {
        for (int it = 0;; ++it) {
            if (it >= sl2::reduction_cap)
                throw NumericInstability("sl2 reduction did not converge", t);
            double cc = h.c * h.c + h.d * h.d;
            double x = (h.a * h.c + h.b * h.d) / cc;
            if (!std::isfinite(x))
                throw NumericInstability("sl2 reduction hit a non-finite entry", t);
            if (std::abs(x) > 0.5) {
                double n = std::round(x);
                h.a -= n * h.c;
                h.b -= n * h.d;
                continue;
            }
            if (h.a * h.a + h.b * h.b < cc) {
                h = {-h.c, -h.d, h.a, h.b};
                continue;
            }
            break;
        }
        if (h.c < 0.0 || (h.c == 0.0 && h.d < 0.0))
            h = {-h.a, -h.b, -h.c, -h.d};
        return h;
    }

    Sl2Point point(double tau)
    {
        double s = spec.speed * tau;
        M h;
        if (spec.kind == Sl2FlowSpec::Kind::horocycle) {
            h = reduce({h0.a, h0.b - h0.a * s, h0.c, h0.d - h0.c * s}, tau);
        } else {
            double delta = s - cur_tau;
            double n = std::ceil(std::abs(delta));
            if (n > 0.0) {
                double step = delta / n;
                double e = std::exp(step), ei = std::exp(-step);
                for (double k = 0; k < n; k += 1.0)
                    cur = reduce({cur.a * ei, cur.b * e, cur.c * ei, cur.d * e}, tau);
            }
            cur_tau = s;
            h = cur;
        }
        return sl2::from_h(sl2::Mat{h.a, h.b, h.c, h.d});
    }
};

struct FactorEval {
    const Factor* factor;
    std::optional<SpectralEval> spectral;
    std::optional<Sl2Eval> sl2;
    const PhasePoint* x;
    std::vector<double> tau;

    FactorEval(const Factor& f, const PhasePoint& xp) : factor(&f), x(&xp), tau(f.time.comps.size())
    {
        if (f.flow->params() != f.time.comps.size())
            throw ContractViolation("factor time map arity differs from the flow");
        if (!contains(*f.flow, xp))
            throw ContractViolation("point is not in the phase space of the flow");
        if (f.flow->is<KroneckerSpec>() || f.flow->is<ProductFlowSpec>())
            spectral = SpectralEval::make(*f.flow, *f.obs, xp);
        if (auto s = std::get_if<Sl2FlowSpec>(&f.flow->v))
            sl2.emplace(*s, xp.as<Sl2Point>());
    }

    bool sequential() const { return sl2 && sl2->spec.kind == Sl2FlowSpec::Kind::geodesic; }

    cplx operator()(double t)
    {
        factor->time.eval(t, tau);
        if (spectral)
            return (*spectral)(tau);
        if (sl2)
            return (*factor->obs)(sl2->point(tau[0]));
        return (*factor->obs)(evolve(*factor->flow, *x, tau));
    }
};

struct Evaluators {
    std::vector<FactorEval> f;

    Evaluators(const std::vector<Factor>& factors, const PhasePoint& x)
    {
        for (const auto& fa : factors)
            f.emplace_back(fa, x);
    }

    bool sequential() const
    {
        return std::any_of(f.begin(), f.end(), [](const FactorEval& e) { return e.sequential(); });
    }

    cplx operator()(double t)
    {
        cplx v = 1.0;
        for (auto& e : f) {
            v *= e(t);
            if (v == cplx(0.0))
                return v;
        }
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw EvaluationError("non-finite integrand value", t);
        return v;
    }
};

// Partition of [0, end] into panels whose phase advance stays below
// phase_step; boundaries depend only on the left end and the next
// breakpoint, so any chunk can be regenerated independently.
struct PanelRule {
    const std::vector<Factor>* factors;
    std::vector<std::vector<double>> rates;  // [factor][param]
    double step;
    double phase_step;
    double gamma_min = 1.0;

    PanelRule(const std::vector<Factor>& fs, const QuadratureConfig& q)
        : factors(&fs), step(q.step), phase_step(q.phase_step)
    {
        for (const auto& f : fs) {
            std::size_t D = f.flow->params();
            std::vector<double> r(D);
            for (std::size_t p = 0; p < D; ++p) {
                std::vector<double> dir(D, 0.0);
                dir[p] = 1.0;
                r[p] = rate_bound(*f.obs, *f.flow, dir);
            }
            rates.push_back(std::move(r));
            gamma_min = std::min(gamma_min, f.time.gamma);
        }
    }

    bool substituted_start() const { return gamma_min < 1.0; }

    // bound on the integrand's angular rate over [a, b], a > 0 if gamma < 1
    double envelope(double a, double b) const
    {
        double w = 0.0;
        for (std::size_t i = 0; i < factors->size(); ++i) {
            const TimeMap& tm = (*factors)[i].time;
            for (std::size_t p = 0; p < rates[i].size(); ++p)
                if (rates[i][p] != 0.0)
                    w += rates[i][p] * tm.derivative_bound(p, a, b);
        }
        return w;
    }

    // bound on the total phase magnitude at time b, for round-off estimates
    double phase_magnitude(double b) const
    {
        double w = 0.0;
        for (std::size_t i = 0; i < factors->size(); ++i)
            for (std::size_t p = 0; p < rates[i].size(); ++p)
                if (rates[i][p] != 0.0)
                    w += rates[i][p] * (*factors)[i].time.magnitude_bound(p, b);
        return w;
    }

    double next(double a, double limit) const
    {
        if (a == 0.0 && substituted_start())
            return std::min(step, limit);
        double h = step;
        double w = envelope(a, a + h);
        if (!std::isfinite(w))
            throw ConfigError("quadrature: unbounded integrand rate");
        if (w * h > phase_step)
            h = phase_step / w;
        double b = a + h;
        if (b <= a)
            throw ConfigError("quadrature: panel width underflow");
        return std::min(b, limit);
    }
};

struct PanelResult {
    cplx integral;
    double err;
};

template <typename F>
PanelResult integrate_panel(F& f, const PanelRule& rule, QuadratureConfig::Rule kind, double a, double b, double sup)
{
    double h = b - a;
    if (a == 0.0 && rule.substituted_start()) {
        // t = u^{1/g}: the integrand becomes smooth at the origin
        double g = rule.gamma_min;
        double U = std::pow(b, g);
        double phase = rule.phase_magnitude(b);
        int n = std::max(8, static_cast<int>(std::ceil(phase / rule.phase_step)));
        auto integrand = [&](double u) {
            if (u <= 0.0)
                return cplx(0.0);
            return f(std::pow(u, 1.0 / g)) * ((1.0 / g) * std::pow(u, 1.0 / g - 1.0));
        };
        cplx v = detail::composite_gl4(integrand, 0.0, U, n);
        return {v, sup * h * 1e-6};
    }
    double w = rule.envelope(a, b) * h;
    if (kind == QuadratureConfig::Rule::midpoint) {
        return {f(0.5 * (a + b)) * h, sup * h * (w * w / 24.0)};
    }
    double mid = 0.5 * (a + b), half = 0.5 * h;
    cplx v = 0.0;
    for (int q = 0; q < 4; ++q)
        v += detail::gl4_weights[q] * f(mid + half * detail::gl4_nodes[q]);
    double w2 = w * w, w4 = w2 * w2;
    return {v * half, sup * h * gl4_error_constant * w4 * w4};
}

struct Integration {
    std::vector<cplx> cumulative;  // integral over [0, breakpoint_i]
    std::vector<double> err;
};

inline constexpr std::size_t chunk_panels = 2048;

// integrals of the factor product over [0, B_i] for increasing breakpoints B
inline Integration integrate(const std::vector<Factor>& factors, const PhasePoint& x,
                             const std::vector<double>& breakpoints, const QuadratureConfig& q, double sup)
{
    PanelRule rule(factors, q);
    struct Chunk {
        double a, b;
        std::ptrdiff_t closes = -1;  // breakpoint index ending at b
    };
    std::vector<Chunk> chunks;
    double a = 0.0;
    for (std::size_t i = 0; i < breakpoints.size(); ++i) {
        double B = breakpoints[i];
        if (!(B > a))
            throw ConfigError("quadrature: breakpoints must increase from 0");
        double start = a;
        std::size_t n = 0;
        while (a < B) {
            a = rule.next(a, B);
            if (++n == chunk_panels && a < B) {
                chunks.push_back({start, a, -1});
                start = a;
                n = 0;
            }
        }
        chunks.push_back({start, B, static_cast<std::ptrdiff_t>(i)});
    }

    std::vector<PanelResult> sums(chunks.size());
    auto run_chunk = [&](Evaluators& ev, std::size_t c) {
        detail::Compensated<cplx> acc;
        double err = 0.0;
        double lo = chunks[c].a, hi = chunks[c].b;
        double pa = lo;
        while (pa < hi) {
            double pb = rule.next(pa, hi);
            PanelResult r = integrate_panel(ev, rule, q.rule, pa, pb, sup);
            acc.add(r.integral);
            err += r.err;
            pa = pb;
        }
        err += sup * (hi - lo) * 16.0 * eps * (1.0 + rule.phase_magnitude(hi));
        sums[c] = {acc.value(), err};
    };

    Evaluators probe(factors, x);
    if (probe.sequential() || q.threads <= 1) {
        for (std::size_t c = 0; c < chunks.size(); ++c)
            run_chunk(probe, c);
    } else {
        detail::parallel_for(chunks.size(), q.threads, [&](std::size_t c) {
            Evaluators ev(factors, x);
            run_chunk(ev, c);
        });
    }

    Integration out;
    detail::Compensated<cplx> total;
    double err = 0.0;
    for (std::size_t c = 0; c < chunks.size(); ++c) {
        total.add(sums[c].integral);
        err += sums[c].err;
        if (chunks[c].closes >= 0) {
            out.cumulative.push_back(total.value());
            out.err.push_back(err);
        }
    }
    return out;
}

}  // namespace avg_detail

inline AverageCurve box_curve(const AveragePlan& plan, const PhasePoint& x, const QuadratureConfig& quad);

// (1/M) int_0^M of the plan's integrand for every horizon M of the grid;
// ThmC plans use the box grid instead.
inline AverageCurve continuous_average(const AveragePlan& plan, const PhasePoint& x, const QuadratureConfig& quad)
{
    plan.validate();
    quad.validate();
    if (plan.form == Form::ThmC)
        return box_curve(plan, x, quad);
    if (quad.horizons.empty())
        throw ConfigError("quadrature: empty horizon grid");
    auto factors = lower(plan);
    auto I = avg_detail::integrate(factors, x, quad.horizons, quad, plan.sup_product());
    AverageCurve curve;
    curve.quad = quad;
    curve.x = x;
    for (std::size_t i = 0; i < quad.horizons.size(); ++i) {
        double M = quad.horizons[i];
        curve.points.push_back({{M}, I.cumulative[i] / M, I.err[i] / M});
    }
    return curve;
}

// E_{n < N} (1/delta) int_0^delta F(n delta + t) dt, the same integral
// re-bracketed into blocks of length delta
inline cplx block_average(const AveragePlan& plan, const PhasePoint& x, double delta, std::int64_t N,
                          const QuadratureConfig& quad = {})
{
    plan.validate();
    if (!(delta > 0.0) || N < 1)
        throw ConfigError("block_average: need delta > 0 and N >= 1");
    if (plan.form == Form::ThmC)
        throw ContractViolation("block_average: ThmC plans are box averages");
    auto factors = lower(plan);
    std::vector<double> bp;
    bp.reserve(static_cast<std::size_t>(N));
    for (std::int64_t n = 1; n <= N; ++n)
        bp.push_back(static_cast<double>(n) * delta);
    QuadratureConfig q = quad;
    q.step = std::min(q.step, delta);
    auto I = avg_detail::integrate(factors, x, bp, q, plan.sup_product());
    // mean of the per-block averages, each block summed separately
    detail::Compensated<cplx> acc;
    cplx prev = 0.0;
    for (std::size_t n = 0; n < I.cumulative.size(); ++n) {
        acc.add((I.cumulative[n] - prev) / delta);
        prev = I.cumulative[n];
    }
    return acc.value() / static_cast<double>(N);
}

// average of F(t) = obs(flow^t x) and of F(t^delta_exp) over the grid
inline std::pair<AverageCurve, AverageCurve> power_substitute_check(const FlowSpec& flow, const Observable& obs,
                                                                    double delta_exp, const PhasePoint& x,
                                                                    const QuadratureConfig& quad)
{
    if (!(delta_exp > 0.0))
        throw ConfigError("power_substitute_check: exponent must be positive");
    AveragePlan plan;
    plan.form = Form::Single;
    plan.flows = {flow};
    plan.observables = {obs};
    plan.Q = Polynomial{0.0, 1.0};
    plan.beta = 1.0;
    auto first = continuous_average(plan, x, quad);
    plan.beta = delta_exp;
    auto second = continuous_average(plan, x, quad);
    return {std::move(first), std::move(second)};
}

// ---------------------------------------------------------------------------
// box averages

namespace avg_detail {

struct AxisNodes {
    std::vector<double> t;
    std::vector<double> w;
    double max_wh = 0.0;  // largest rate * width over panels
};

// GL4 nodes on [0, M] with widths bounded by `step` and phase_step / rate(a, b)
template <typename Rate>
AxisNodes axis_nodes(double M, double step, double phase_step, QuadratureConfig::Rule kind, Rate&& rate)
{
    AxisNodes n;
    double a = 0.0;
    while (a < M) {
        double h = step;
        double r = rate(a, a + h);
        if (r * h > phase_step)
            h = phase_step / r;
        double b = std::min(a + h, M);
        n.max_wh = std::max(n.max_wh, rate(a, b) * (b - a));
        if (kind == QuadratureConfig::Rule::midpoint) {
            n.t.push_back(0.5 * (a + b));
            n.w.push_back(b - a);
        } else {
            double mid = 0.5 * (a + b), half = 0.5 * (b - a);
            for (int q = 0; q < 4; ++q) {
                n.t.push_back(mid + half * detail::gl4_nodes[q]);
                n.w.push_back(half * detail::gl4_weights[q]);
            }
        }
        a = b;
    }
    return n;
}

}  // namespace avg_detail

// (1/(M_1...M_k)) int over prod [0, M_j] of f(T^{|t|} x) g(S^{|t|^2 + c P(t)} x)
// with |t| = t_1 + ... + t_k on the positive box
inline cplx box_average(const AveragePlan& plan, const PhasePoint& x, const std::vector<double>& M,
                        const QuadratureConfig& quad, double* err_out = nullptr)
{
    if (plan.form != Form::ThmC)
        throw ContractViolation("box_average needs a ThmC plan");
    plan.validate();
    std::size_t k = plan.P.l.size();
    if (M.size() != k)
        throw ConfigError("box_average: box dimension differs from the linear form");
    for (double m : M)
        if (!(m > 0.0) || quad.step > m / 10.0)
            throw ConfigError("box_average: fewer than 10 panels per box side");

    const FlowSpec& T = plan.flows[0];
    const FlowSpec& S = plan.flows[1];
    const Observable& f = plan.observables[0];
    const Observable& g = plan.observables[1];
    double sup = plan.sup_product();

    if (k == 1) {
        AveragePlan one;
        one.form = Form::ThmA;
        one.flows = {T, S};
        one.observables = {f, Observable::constant(1.0), g};
        one.Q = Polynomial{0.0, plan.c_box * static_cast<double>(plan.P.l[0]), 1.0};
        auto factors = lower(one);
        factors.erase(factors.begin() + 1);
        QuadratureConfig q = quad;
        auto I = avg_detail::integrate(factors, x, {M[0]}, q, sup);
        if (err_out)
            *err_out = I.err[0] / M[0];
        return I.cumulative[0] / M[0];
    }

    double one = 1.0;
    double rf = rate_bound(f, T, std::span<const double>(&one, 1));
    double rg = rate_bound(g, S, std::span<const double>(&one, 1));
    double total = 0.0;
    for (double m : M)
        total += m;

    std::vector<avg_detail::AxisNodes> axes;
    for (std::size_t j = 0; j < k; ++j) {
        double others = total - M[j];
        double cl = std::abs(plan.c_box * static_cast<double>(plan.P.l[j]));
        axes.push_back(avg_detail::axis_nodes(M[j], quad.step, quad.phase_step, quad.rule, [&](double, double b) {
            return rf + rg * (2.0 * (b + others) + cl);
        }));
    }

    // evaluators keep pointers to these
    const Factor ff{&T, &f, TimeMap{1.0, {Polynomial{0.0, 1.0}}}};
    const Factor fg{&S, &g, TimeMap{1.0, {Polynomial{0.0, 1.0}}}};
    avg_detail::FactorEval probe_f(ff, x);
    avg_detail::FactorEval probe_g(fg, x);
    if (probe_f.sequential() || probe_g.sequential())
        throw Unsupported("box_average: geodesic factors are not supported in box averages");

    // parallel over the first axis; each row summed in fixed order
    const auto& ax0 = axes[0];
    std::vector<cplx> rows(ax0.t.size());
    auto row = [&](std::size_t i0) {
        avg_detail::FactorEval ef(ff, x);
        avg_detail::FactorEval eg(fg, x);
        detail::Compensated<cplx> acc;
        double t0 = ax0.t[i0];
        auto point = [&](double s_abs, double lin, double w) {
            cplx vf = ef(s_abs);
            if (vf == cplx(0.0))
                return;
            cplx vg = eg(s_abs * s_abs + plan.c_box * lin);
            cplx v = vf * vg;
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw EvaluationError("non-finite integrand value", s_abs);
            acc.add(w * v);
        };
        double l0 = static_cast<double>(plan.P.l[0]) * t0;
        if (k == 2) {
            double l1 = static_cast<double>(plan.P.l[1]);
            for (std::size_t i1 = 0; i1 < axes[1].t.size(); ++i1) {
                double t1 = axes[1].t[i1];
                point(t0 + t1, l0 + l1 * t1, axes[1].w[i1]);
            }
        } else {
            double l1 = static_cast<double>(plan.P.l[1]), l2 = static_cast<double>(plan.P.l[2]);
            for (std::size_t i1 = 0; i1 < axes[1].t.size(); ++i1)
                for (std::size_t i2 = 0; i2 < axes[2].t.size(); ++i2) {
                    double t1 = axes[1].t[i1], t2 = axes[2].t[i2];
                    point(t0 + t1 + t2, l0 + l1 * t1 + l2 * t2, axes[1].w[i1] * axes[2].w[i2]);
                }
        }
        rows[i0] = ax0.w[i0] * acc.value();
    };
    detail::parallel_for(rows.size(), quad.threads, row);
    cplx I = detail::pairwise_sum(std::span<const cplx>(rows));

    double vol = 1.0;
    for (double m : M)
        vol *= m;
    if (err_out) {
        double e = 0.0;
        for (const auto& ax : axes) {
            double w2 = ax.max_wh * ax.max_wh, w4 = w2 * w2;
            e += quad.rule == QuadratureConfig::Rule::midpoint ? w2 / 24.0 : avg_detail::gl4_error_constant * w4 * w4;
        }
        double phase = (rf + rg) * (total * total + std::abs(plan.c_box) * total * 8.0);
        *err_out = sup * (e + 16.0 * avg_detail::eps * (1.0 + phase));
    }
    return I / vol;
}

inline AverageCurve box_curve(const AveragePlan& plan, const PhasePoint& x, const QuadratureConfig& quad)
{
    if (quad.boxes.empty())
        throw ConfigError("quadrature: ThmC plans need a box grid");
    AverageCurve curve;
    curve.quad = quad;
    curve.x = x;
    for (const auto& box : quad.boxes) {
        double err = 0.0;
        cplx v = box_average(plan, x, box, quad, &err);
        curve.points.push_back({box, v, err});
    }
    return curve;
}

}  // namespace ergoflow
