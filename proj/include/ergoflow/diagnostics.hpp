#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "averaging.hpp"
#include "detail/parallel.hpp"
#include "discrete.hpp"
#include "error.hpp"
#include "plan.hpp"
#include "spectral.hpp"

namespace ergoflow {

struct Ingredient {
    std::string name;
    cplx value;
    double err = 0.0;
    std::string method;  // symbolic, exact-integral, orbit-mean, birkhoff, time-average
    bool converged = true;
};

struct PredictedLimit {
    cplx value;
    std::string formula;
    std::vector<Ingredient> ingredients;
    bool flagged = false;  // some ingredient did not meet its convergence criterion
    double err = 0.0;
};

struct EstimatorConfig {
    std::int64_t birkhoff_N = 100000;
    double r = 100.0;
    QuadratureConfig quad;
};

enum class Verdict { converged_to_prediction, converged_elsewhere, unconverged };

inline const char* verdict_name(Verdict v)
{
    switch (v) {
    case Verdict::converged_to_prediction: return "converged-to-prediction";
    case Verdict::converged_elsewhere: return "converged-elsewhere";
    case Verdict::unconverged: return "unconverged";
    }
    return "?";
}

namespace diag_detail {

// observable depending only on the base state of a suspension point
inline bool fiber_free(const Observable& o)
{
    using K = Observable::Kind;
    switch (o.kind()) {
    case K::constant:
    case K::base_function:
    case K::torus_character:
        return true;
    case K::product:
    case K::sum:
    case K::real_part:
        return std::all_of(o.children().begin(), o.children().end(), fiber_free);
    default:
        return false;
    }
}

// states reachable from id under the maps and their inverses, ascending
inline std::vector<std::int64_t> joint_orbit(const std::vector<const DiscreteSystem*>& maps, std::int64_t id)
{
    std::set<std::int64_t> seen{id};
    std::vector<std::int64_t> stack{id};
    while (!stack.empty()) {
        std::int64_t s = stack.back();
        stack.pop_back();
        for (const auto* m : maps)
            for (std::int64_t e : {std::int64_t{1}, std::int64_t{-1}}) {
                std::int64_t t = m->power(DiscretePoint{s, {}}, e).id;
                if (seen.insert(t).second)
                    stack.push_back(t);
            }
    }
    return {seen.begin(), seen.end()};
}

inline std::optional<Ingredient> suspension_mean(const Observable& f, const FlowSpec& flow, const PhasePoint& x,
                                                 const EstimatorConfig& cfg)
{
    std::vector<const DiscreteSystem*> maps;
    if (auto s = std::get_if<SuspensionSpec>(&flow.v))
        maps.push_back(&s->base);
    else if (auto m = std::get_if<MultiSuspensionSpec>(&flow.v))
        for (const auto& b : m->base_maps)
            maps.push_back(&b);
    else
        return std::nullopt;
    if (!fiber_free(f) || !x.is<SuspensionPoint>())
        return std::nullopt;
    const DiscretePoint& base = x.as<SuspensionPoint>().base;
    bool finite = std::all_of(maps.begin(), maps.end(), [](const DiscreteSystem* m) { return m->is_finite(); });
    if (finite) {
        auto orb = joint_orbit(maps, base.id);
        detail::Compensated<cplx> acc;
        for (std::int64_t id : orb)
            acc.add(f(PhasePoint(DiscretePoint{id, {}})));
        return Ingredient{"", acc.value() / static_cast<double>(orb.size()), 0.0, "orbit-mean", true};
    }
    if (maps.size() != 1)
        return std::nullopt;
    auto est = conditional_expectation(*maps[0], f, base, cfg.birkhoff_N, cfg.r);
    return Ingredient{"", est.value, est.err, "birkhoff", est.converged};
}

// time average along a one-parameter flow at the largest horizon; the
// error is the spread over the last two horizons
inline Ingredient time_average(const Observable& f, const FlowSpec& flow, const PhasePoint& x,
                               const EstimatorConfig& cfg)
{
    if (flow.params() != 1)
        throw Unsupported("no estimator for conditional expectations of multi-parameter flows of this kind");
    AveragePlan p;
    p.form = Form::Single;
    p.flows = {flow};
    p.observables = {f};
    auto curve = continuous_average(p, x, cfg.quad);
    const auto& pts = curve.points;
    double spread = pts.size() > 1 ? std::abs(pts.back().value - pts[pts.size() - 2].value) : pts.back().err;
    spread = std::max(spread, pts.back().err);
    return {"", pts.back().value, spread, "time-average", spread < 1.0 / cfg.r};
}

}  // namespace diag_detail

// E(f | I(flow))(x): exact expansions first, then Haar integrals of SL2
// observables (those flows are ergodic), then orbit means on suspensions,
// then a time average.
inline Ingredient conditional_expectation_of(const Observable& f, const FlowSpec& flow, const PhasePoint& x,
                                             const EstimatorConfig& cfg, std::string name = "E(f|I)")
{
    Ingredient out;
    if (auto v = symbolic_conditional_expectation(f, flow, x)) {
        out = {"", *v, 0.0, "symbolic", true};
    } else if (flow.is<Sl2FlowSpec>() && f.exact_integral()) {
        out = {"", *f.exact_integral(), 0.0, "exact-integral", true};
    } else if (auto s = diag_detail::suspension_mean(f, flow, x, cfg)) {
        out = *s;
    } else {
        out = diag_detail::time_average(f, flow, x, cfg);
    }
    out.name = std::move(name);
    return out;
}

// lim (1/M) int f1(T^t x) f2(T^{at} x) dt
inline Ingredient double_average(const FlowSpec& T, const Observable& f1, const Observable& f2, Rational a,
                                 const PhasePoint& x, const EstimatorConfig& cfg)
{
    auto t1 = f1.expand(), t2 = f2.expand();
    if (t1 && t2) {
        std::vector<LinearFactor> fs{{&T, *t1, {Rational(1)}}, {&T, *t2, {a}}};
        if (auto v = symbolic_linear_average(fs, x))
            return {"lim f1(T^t)f2(T^at)", *v, 0.0, "symbolic", true};
    }
    AveragePlan p;
    p.form = Form::ThmA;
    p.flows = {T, T};
    p.observables = {f1, f2, Observable::constant(1.0)};
    p.a = a;
    p.Q = Polynomial{0.0, 1.0};
    auto curve = continuous_average(p, x, cfg.quad);
    const auto& pts = curve.points;
    double spread = pts.size() > 1 ? std::abs(pts.back().value - pts[pts.size() - 2].value) : 0.0;
    spread = std::max(spread, pts.back().err);
    return {"lim f1(T^t)f2(T^at)", pts.back().value, spread, "time-average", spread < 1.0 / cfg.r};
}

namespace diag_detail {

inline PredictedLimit assemble(std::string formula, std::vector<Ingredient> ings, cplx value)
{
    PredictedLimit p;
    p.formula = std::move(formula);
    p.value = value;
    // first-order propagation of ingredient errors through the product
    double err = 0.0;
    for (std::size_t i = 0; i < ings.size(); ++i) {
        double others = 1.0;
        for (std::size_t j = 0; j < ings.size(); ++j)
            if (j != i)
                others *= std::abs(ings[j].value) + ings[j].err;
        err += ings[i].err * others;
        p.flagged = p.flagged || !ings[i].converged;
    }
    p.err = err;
    p.ingredients = std::move(ings);
    return p;
}

inline PredictedLimit product_of(std::string formula, std::vector<Ingredient> ings)
{
    cplx v = 1.0;
    for (const auto& i : ings)
        v *= i.value;
    return assemble(std::move(formula), std::move(ings), v);
}

}  // namespace diag_detail

inline PredictedLimit predict_limit(const AveragePlan& plan, const PhasePoint& x, const EstimatorConfig& cfg = {})
{
    plan.validate();
    const auto& F = plan.flows;
    const auto& O = plan.observables;
    switch (plan.form) {
    case Form::ThmA:
    case Form::ThmB:
        return diag_detail::product_of("ThmB-product", {conditional_expectation_of(O[2], F[1], x, cfg, "E(g|I(S))"),
                                                        double_average(F[0], O[0], O[1], plan.a, x, cfg)});
    case Form::ThmC:
        return diag_detail::product_of("ThmC-product", {conditional_expectation_of(O[0], F[0], x, cfg, "E(f|I(T))"),
                                                        conditional_expectation_of(O[1], F[1], x, cfg, "E(g|I(S))")});
    case Form::ThmD1: {
        std::size_t d = F.size() - 1;
        std::vector<Ingredient> ings{conditional_expectation_of(O[d], F[d], x, cfg, "E(g|I(S))")};
        for (std::size_t j = 0; j < d; ++j)
            ings.push_back(conditional_expectation_of(O[j], F[j], x, cfg, "E(f_" + std::to_string(j + 1) + "|I(T_" +
                                                                               std::to_string(j + 1) + "))"));
        return diag_detail::product_of("ThmD1-product", std::move(ings));
    }
    case Form::ThmD2: {
        // lim (1/M) int f(S^{c t e2} x) E(g | I(S^{t e1}))(S^{t e2} x) dt, decided termwise
        auto tf = O[0].expand(), tg = O[1].expand();
        if (tf && tg) {
            auto ginv = invariant_terms(*tg, F[0], {{Rational(1), Rational(0)}});
            if (ginv) {
                std::vector<LinearFactor> fs{{&F[0], *tf, {Rational(0), plan.c}},
                                             {&F[0], *ginv, {Rational(0), Rational(1)}}};
                if (auto v = symbolic_linear_average(fs, x))
                    return diag_detail::assemble("ThmD2-integral", {{"lim f(S^cte2)E(g|I(S^te1))(S^te2)", *v, 0.0,
                                                                     "symbolic", true}},
                                                 *v);
            }
        }
        throw Unsupported("ThmD2 prediction needs observables with exact spectral expansions");
    }
    case Form::Corollary: {
        std::vector<Ingredient> ings;
        for (std::size_t j = 0; j < O.size(); ++j) {
            auto v = O[j].exact_integral();
            if (!v)
                throw Unsupported("Corollary prediction needs observables with known Haar integrals");
            ings.push_back({j == 0 ? "int g" : "int f_" + std::to_string(j), *v, 0.0, "exact-integral", true});
        }
        return diag_detail::product_of("Corollary-product-of-integrals", std::move(ings));
    }
    case Form::Single:
        if (plan.Q.degree() < 1)
            throw Unsupported("Single plans with constant Q have no limit formula");
        return diag_detail::product_of("Single-conditional-expectation",
                                       {conditional_expectation_of(O[0], F[0], x, cfg, "E(f|I(T))")});
    }
    throw Unsupported("no limit formula for this plan form");
}

// scale of a curve point: M, or the smallest side of a box
inline double curve_scale(const CurvePoint& p) { return *std::min_element(p.M.begin(), p.M.end()); }

// (K, sup over curve points with scale >= K of |A(M1) - A(M2)|)
inline std::vector<std::pair<double, double>> oscillation_profile(const AverageCurve& curve,
                                                                   const std::vector<double>& K_grid)
{
    std::vector<std::pair<double, double>> out;
    const auto& pts = curve.points;
    for (double K : K_grid) {
        double osc = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (curve_scale(pts[i]) < K)
                continue;
            for (std::size_t j = 0; j < i; ++j)
                if (curve_scale(pts[j]) >= K)
                    osc = std::max(osc, std::abs(pts[i].value - pts[j].value));
        }
        out.emplace_back(K, osc);
    }
    return out;
}

struct ConvergenceReport {
    AverageCurve curve;
    std::vector<std::pair<double, double>> oscillation;
    PredictedLimit predicted;
    double residual = 0.0;
    double tolerance = 0.0;
    double final_oscillation = 0.0;
    Verdict verdict = Verdict::unconverged;
    std::vector<std::string> notes;
};

// max(5e-3, 10 / M_max) times the product of the sup norms
inline double residual_tolerance(const AveragePlan& plan, const AverageCurve& curve)
{
    double Mmax = 0.0;
    for (const auto& p : curve.points)
        Mmax = std::max(Mmax, curve_scale(p));
    return std::max(5e-3, 10.0 / Mmax) * plan.sup_product();
}

// Converged when the curve moves by at most the tolerance between the last
// two grid points, then compared against the prediction.
inline ConvergenceReport diagnose(const AveragePlan& plan, AverageCurve curve, PredictedLimit predicted)
{
    if (curve.points.empty())
        throw ConfigError("diagnose: empty curve");
    ConvergenceReport r;
    std::vector<double> K;
    for (const auto& p : curve.points)
        K.push_back(curve_scale(p));
    std::sort(K.begin(), K.end());
    K.erase(std::unique(K.begin(), K.end()), K.end());
    r.oscillation = oscillation_profile(curve, K);
    r.final_oscillation = K.size() > 1 ? r.oscillation[K.size() - 2].second : 0.0;
    r.tolerance = residual_tolerance(plan, curve);
    r.residual = std::abs(curve.points.back().value - predicted.value);
    if (r.final_oscillation > r.tolerance)
        r.verdict = Verdict::unconverged;
    else if (r.residual <= r.tolerance)
        r.verdict = Verdict::converged_to_prediction;
    else
        r.verdict = Verdict::converged_elsewhere;
    if (predicted.flagged)
        r.notes.push_back("prediction has an unconverged ingredient");
    for (auto& n : plan.outside_hypotheses())
        r.notes.push_back("outside theorem hypotheses: " + n);
    r.notes.push_back("tolerances are empirical settings; no convergence rate is asserted");
    r.curve = std::move(curve);
    r.predicted = std::move(predicted);
    return r;
}

inline ConvergenceReport diagnose(const AveragePlan& plan, const PhasePoint& x, const QuadratureConfig& quad,
                                  const EstimatorConfig& est = {})
{
    auto curve = continuous_average(plan, x, quad);
    auto pred = predict_limit(plan, x, est);
    return diagnose(plan, std::move(curve), std::move(pred));
}

struct MaximalStatistic {
    double ratio = 0.0;
    double sup_norm_l2 = 0.0;  // || max_h |A_h f| ||_2 on the sample
    double f_norm_l2 = 0.0;
    std::size_t n = 0;
};

// ratio of empirical L2 norms: max over horizons of |averages(x)| against f(x)
inline MaximalStatistic maximal_ensemble_norm(const std::function<std::vector<cplx>(const PhasePoint&)>& averages,
                                              const Observable& f, const std::vector<PhasePoint>& sample,
                                              unsigned threads = 1)
{
    if (sample.empty())
        throw ConfigError("maximal_ensemble_norm: empty sample");
    std::vector<double> sup2(sample.size()), f2(sample.size());
    detail::parallel_for(sample.size(), threads, [&](std::size_t i) {
        double m = 0.0;
        for (const cplx& v : averages(sample[i]))
            m = std::max(m, std::abs(v));
        sup2[i] = m * m;
        f2[i] = std::norm(f(sample[i]));
    });
    double num = std::sqrt(detail::pairwise_sum(std::span<const double>(sup2)) / static_cast<double>(sample.size()));
    double den = std::sqrt(detail::pairwise_sum(std::span<const double>(f2)) / static_cast<double>(sample.size()));
    if (!(den > 0.0))
        throw DomainError("maximal_ensemble_norm: f has zero empirical L2 norm");
    return {num / den, num, den, sample.size()};
}

// running floor-polynomial averages, one value per N in [1, N_max]
inline std::vector<cplx> polynomial_average_prefixes(const DiscreteSystem& sys, const Observable& f,
                                                     const DiscretePoint& x, const Polynomial& P, std::int64_t N_max)
{
    if (N_max < 1)
        throw ConfigError("N_max must be at least 1");
    std::vector<cplx> out;
    out.reserve(static_cast<std::size_t>(N_max));
    detail::Compensated<cplx> acc;
    for (std::int64_t n = 0; n < N_max; ++n) {
        acc.add(f(PhasePoint(sys.power(x, floor_poly_orbit(P, n)))));
        out.push_back(acc.value() / static_cast<double>(n + 1));
    }
    return out;
}

}  // namespace ergoflow
