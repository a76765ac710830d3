#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "error.hpp"
#include "flows.hpp"
#include "observable.hpp"
#include "poly.hpp"

namespace ergoflow {

enum class Form { ThmA, ThmB, ThmC, ThmD1, ThmD2, Corollary, Single };

inline const char* form_name(Form f)
{
    switch (f) {
    case Form::ThmA: return "ThmA";
    case Form::ThmB: return "ThmB";
    case Form::ThmC: return "ThmC";
    case Form::ThmD1: return "ThmD1";
    case Form::ThmD2: return "ThmD2";
    case Form::Corollary: return "Corollary";
    case Form::Single: return "Single";
    }
    return "?";
}

inline Form parse_form(const std::string& s)
{
    for (Form f : {Form::ThmA, Form::ThmB, Form::ThmC, Form::ThmD1, Form::ThmD2, Form::Corollary, Form::Single})
        if (s == form_name(f))
            return f;
    throw ConfigError("unknown plan form \"" + s + "\"");
}

// Layout per form (flows / observables):
//   ThmA, ThmB  {T, S} / {f1, f2, g}:  f1(T^{t^alpha}) f2(T^{a t^alpha}) g(S^{Q(t^beta)})
//   ThmC        {T, S} / {f, g}:       box average of f(T^{|t|}) g(S^{|t|^2 + c P(t)})
//   ThmD1       {T_1..T_d, S} / {f_1..f_d, g}: prod f_j(T_j^{t^alpha_j}) g(S^{(Q(t^beta), t^beta)})
//   ThmD2       {S} / {f, g}:          f(S^{(0, c t^beta)}) g(S^{(Q(t^beta), t^beta)})
//   Corollary   {geodesic, horocycle} / {g, f_1..f_d}: g(a(Q(t))) prod f_j(u(c_j t))
//   Single      {T} / {f}:             f(T^{Q(t^beta)})
struct AveragePlan {
    Form form = Form::Single;
    std::vector<FlowSpec> flows;
    std::vector<Observable> observables;
    Polynomial Q{0.0, 1.0};
    Rational a{1};
    double alpha = 1.0;
    double beta = 1.0;
    std::vector<double> alphas;
    Rational c{1};
    double c_box = 0.0;
    LinearForm P;
    std::vector<Rational> cj;

    // product of the observables' sup-norm bounds
    double sup_product() const
    {
        double s = 1.0;
        for (const auto& o : observables)
            s *= o.sup_norm();
        return s;
    }

    void validate() const
    {
        auto need = [&](std::size_t nf, std::size_t no) {
            if (flows.size() != nf || observables.size() != no)
                throw ConfigError(std::string(form_name(form)) + " needs " + std::to_string(nf) + " flows and " +
                                  std::to_string(no) + " observables");
        };
        auto one_param = [&](std::size_t i) {
            if (flows[i].params() != 1)
                throw ConfigError(std::string(form_name(form)) + ": flow " + std::to_string(i) +
                                  " must be a one-parameter flow");
        };
        auto positive = [&](double e, const char* what) {
            if (!(e > 0.0) || !std::isfinite(e))
                throw ConfigError(std::string(form_name(form)) + ": " + what + " must be positive");
        };
        switch (form) {
        case Form::ThmA:
        case Form::ThmB:
            need(2, 3);
            one_param(0);
            one_param(1);
            positive(alpha, "alpha");
            positive(beta, "beta");
            break;
        case Form::ThmC:
            need(2, 2);
            one_param(0);
            one_param(1);
            if (P.l.empty())
                throw ConfigError("ThmC: the linear form needs at least one variable");
            if (P.l.size() > 3)
                throw UnsupportedScale("ThmC box averages are limited to k <= 3, got k=" + std::to_string(P.l.size()));
            if (!std::isfinite(c_box))
                throw ConfigError("ThmC: c must be finite");
            break;
        case Form::ThmD1:
            if (flows.size() < 2 || observables.size() != flows.size() || alphas.size() != flows.size() - 1)
                throw ConfigError("ThmD1 needs d+1 flows, d+1 observables and d exponents");
            for (std::size_t j = 0; j + 1 < flows.size(); ++j) {
                one_param(j);
                positive(alphas[j], "alpha_j");
            }
            if (flows.back().params() != 2)
                throw ConfigError("ThmD1: the last flow must be a two-parameter flow");
            positive(beta, "beta");
            break;
        case Form::ThmD2:
            need(1, 2);
            if (flows[0].params() != 2)
                throw ConfigError("ThmD2: the flow must be a two-parameter flow");
            positive(beta, "beta");
            break;
        case Form::Corollary:
            if (flows.size() != 2 || observables.size() != cj.size() + 1 || cj.empty())
                throw ConfigError("Corollary needs {geodesic, horocycle} flows, g plus one f_j per c_j");
            if (!flows[0].is<Sl2FlowSpec>() || flows[0].as<Sl2FlowSpec>().kind != Sl2FlowSpec::Kind::geodesic ||
                !flows[1].is<Sl2FlowSpec>() || flows[1].as<Sl2FlowSpec>().kind != Sl2FlowSpec::Kind::horocycle)
                throw ConfigError("Corollary: flows must be a geodesic flow then a horocycle flow");
            break;
        case Form::Single:
            need(1, 1);
            one_param(0);
            positive(beta, "beta");
            break;
        }
    }

    // conditions of the limit theorems that this plan does not meet; the
    // average is still computed
    std::vector<std::string> outside_hypotheses() const
    {
        std::vector<std::string> notes;
        bool uses_Q = form != Form::ThmC && form != Form::Single;
        if (uses_Q && Q.degree() < 2)
            notes.push_back("deg Q < 2");
        if (form == Form::ThmB && alpha > beta)
            notes.push_back("alpha > beta");
        if (form == Form::ThmD1) {
            for (std::size_t j = 0; j < alphas.size(); ++j)
                if ((j > 0 && !(alphas[j - 1] < alphas[j])) || !(alphas[j] < beta))
                    notes.push_back("exponents not strictly increasing below beta");
        }
        if (form == Form::Corollary) {
            for (std::size_t i = 0; i < cj.size(); ++i) {
                if (cj[i].p == 0)
                    notes.push_back("c_j = 0");
                for (std::size_t j = 0; j < i; ++j)
                    if (cj[i] == cj[j])
                        notes.push_back("c_j not distinct");
            }
        }
        return notes;
    }
};

// time of factor i: parameter p receives comps[p](t^gamma)
struct TimeMap {
    double gamma = 1.0;
    std::vector<Polynomial> comps;

    double inner(double t) const { return gamma == 1.0 ? t : std::pow(t, gamma); }

    void eval(double t, std::span<double> out) const
    {
        double s = inner(t);
        for (std::size_t p = 0; p < comps.size(); ++p)
            out[p] = comps[p](s);
    }

    // bound on |d/dt comps[p](t^gamma)| over [lo, hi], lo > 0 when gamma < 1
    double derivative_bound(std::size_t p, double lo, double hi) const
    {
        const auto& c = comps[p].coeffs();
        if (gamma == 1.0) {
            double r = std::max(std::abs(lo), std::abs(hi));
            double v = 0.0;
            for (std::size_t j = c.size(); j-- > 1;)
                v = v * r + static_cast<double>(j) * std::abs(c[j]);
            return v;
        }
        double s_hi = std::pow(hi, gamma);
        double dq = 0.0;
        for (std::size_t j = c.size(); j-- > 1;)
            dq = dq * s_hi + static_cast<double>(j) * std::abs(c[j]);
        double inner_rate = gamma >= 1.0 ? gamma * std::pow(hi, gamma - 1.0) : gamma * std::pow(lo, gamma - 1.0);
        return dq * inner_rate;
    }

    // bound on |comps[p](t^gamma)| over [0, hi]
    double magnitude_bound(std::size_t p, double hi) const
    {
        double s = std::pow(hi, gamma);
        double v = 0.0;
        const auto& c = comps[p].coeffs();
        for (std::size_t j = c.size(); j-- > 0;)
            v = v * s + std::abs(c[j]);
        return v;
    }
};

struct Factor {
    const FlowSpec* flow;
    const Observable* obs;
    TimeMap time;
};

// one-dimensional integrand as a product of factors; ThmC is not lowered
inline std::vector<Factor> lower(const AveragePlan& plan)
{
    Polynomial id{0.0, 1.0};
    std::vector<Factor> out;
    auto add = [&](std::size_t f, std::size_t o, double gamma, std::vector<Polynomial> comps) {
        out.push_back(Factor{&plan.flows[f], &plan.observables[o], TimeMap{gamma, std::move(comps)}});
    };
    switch (plan.form) {
    case Form::ThmA:
        add(0, 0, 1.0, {id});
        add(0, 1, 1.0, {id * plan.a.value()});
        add(1, 2, 1.0, {plan.Q});
        break;
    case Form::ThmB:
        add(0, 0, plan.alpha, {id});
        add(0, 1, plan.alpha, {id * plan.a.value()});
        add(1, 2, plan.beta, {plan.Q});
        break;
    case Form::ThmD1: {
        std::size_t d = plan.flows.size() - 1;
        for (std::size_t j = 0; j < d; ++j)
            add(j, j, plan.alphas[j], {id});
        add(d, d, plan.beta, {plan.Q, id});
        break;
    }
    case Form::ThmD2:
        add(0, 0, plan.beta, {Polynomial{}, id * plan.c.value()});
        add(0, 1, plan.beta, {plan.Q, id});
        break;
    case Form::Corollary:
        for (std::size_t j = 0; j < plan.cj.size(); ++j)
            add(1, j + 1, 1.0, {id * plan.cj[j].value()});
        add(0, 0, 1.0, {plan.Q});
        break;
    case Form::Single:
        add(0, 0, plan.beta, {plan.Q});
        break;
    case Form::ThmC:
        throw ContractViolation("ThmC plans are box averages; use box_average");
    }
    return out;
}

struct QuadratureConfig {
    enum class Rule { midpoint, gauss4 };
    Rule rule = Rule::gauss4;
    // maximal panel width
    double step = 0.05;
    // maximal phase advance, in radians, across one panel
    double phase_step = 0.2;
    std::vector<double> horizons{1e2, std::pow(10.0, 2.5), 1e3, std::pow(10.0, 3.5), 1e4};
    std::vector<std::vector<double>> boxes;
    unsigned threads = 1;

    void validate() const
    {
        if (!(step > 0.0) || !std::isfinite(step))
            throw ConfigError("quadrature: step must be positive");
        if (!(phase_step > 0.0) || !std::isfinite(phase_step))
            throw ConfigError("quadrature: phase_step must be positive");
        for (std::size_t i = 0; i < horizons.size(); ++i) {
            if (!(horizons[i] > 0.0) || !std::isfinite(horizons[i]))
                throw ConfigError("quadrature: horizons must be positive");
            if (i > 0 && !(horizons[i] > horizons[i - 1]))
                throw ConfigError("quadrature: horizons must increase");
        }
        if (!horizons.empty() && step > horizons.front() / 10.0)
            throw ConfigError("quadrature: fewer than 10 panels per horizon (step > min horizon / 10)");
        for (const auto& box : boxes)
            for (double m : box)
                if (!(m > 0.0) || step > m / 10.0)
                    throw ConfigError("quadrature: fewer than 10 panels per box side");
    }
};

}  // namespace ergoflow
