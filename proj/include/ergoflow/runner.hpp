#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "detail/parallel.hpp"
#include "detail/rng.hpp"
#include "diagnostics.hpp"
#include "discrete.hpp"
#include "error.hpp"
#include "sampler.hpp"
#include "serialization.hpp"

namespace ergoflow {

inline constexpr const char* code_version = "ergoflow 0.1.0";

enum ExitCode : int { exit_ok = 0, exit_plan_error = 2, exit_config_error = 3 };

struct PointSource {
    std::vector<PhasePoint> explicit_points;
    std::optional<std::string> sampler_flow;  // name in the flow table
    std::size_t count = 0;
    MeasureSampler::Scheme scheme = MeasureSampler::Scheme::automatic;
};

struct ExperimentConfig {
    std::string name;
    std::string description;
    std::uint64_t seed = 0;
    std::map<std::string, FlowSpec> flows;
    std::map<std::string, Observable> observables;
    std::vector<PlanSpec> plans;
    QuadratureConfig quadrature;
    EstimatorConfig estimator;
    PointSource points;
    std::optional<json> oracle;
    std::string output_dir;

    AveragePlan build(const PlanSpec& ps) const
    {
        AveragePlan p;
        p.form = ps.form;
        for (const auto& f : ps.flows) {
            auto it = flows.find(f);
            if (it == flows.end())
                throw ConfigError("plan " + ps.name + ": unknown flow \"" + f + "\"");
            p.flows.push_back(it->second);
        }
        for (const auto& o : ps.observables) {
            auto it = observables.find(o);
            if (it == observables.end())
                throw ConfigError("plan " + ps.name + ": unknown observable \"" + o + "\"");
            p.observables.push_back(it->second);
        }
        apply_plan_params(p, ps.params, "plans." + ps.name + ".params");
        p.validate();
        return p;
    }

    std::vector<PhasePoint> resolve_points(std::uint64_t effective_seed) const
    {
        if (!points.sampler_flow)
            return points.explicit_points;
        MeasureSampler s{flows.at(*points.sampler_flow), effective_seed, points.scheme};
        return sample_invariant(s, points.count);
    }
};

namespace runner_detail {

inline const char* scheme_name(MeasureSampler::Scheme s)
{
    switch (s) {
    case MeasureSampler::Scheme::automatic: return "automatic";
    case MeasureSampler::Scheme::uniform_box: return "uniform_box";
    case MeasureSampler::Scheme::haar_rejection: return "haar_rejection";
    }
    return "?";
}

inline std::string fmt17(double v)
{
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw ConfigError("cannot read config " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// write to a sibling temporary, then rename over the target
inline void write_atomic(const std::filesystem::path& p, const std::string& content)
{
    auto tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write " + tmp.string());
        out << content;
        if (!out.flush())
            throw Error("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, p);
}

inline std::optional<std::uint64_t> seed_override()
{
    const char* s = std::getenv("ERGOFLOW_SEED");
    if (!s || !*s)
        return std::nullopt;
    std::uint64_t v = 0;
    auto r = std::from_chars(s, s + std::strlen(s), v);
    if (r.ec != std::errc() || *r.ptr != '\0')
        throw ConfigError("ERGOFLOW_SEED must be a non-negative integer");
    return v;
}

}  // namespace runner_detail

// ---------------------------------------------------------------------------
// config parsing; every key is checked before anything runs

inline void validate_oracle(const json& o);

inline ExperimentConfig parse_config(const json& j)
{
    using namespace json_detail;
    keys(j, "config", {"name", "plans"},
         {"description", "seed", "flows", "observables", "quadrature", "estimator", "points", "oracle", "output"});
    ExperimentConfig c;
    c.name = str(j["name"], "name");
    if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos)
        fail("name", "must be a non-empty file-name-safe string");
    if (j.contains("description"))
        c.description = str(j["description"], "description");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned())
            fail("seed", "expected a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("flows")) {
        if (!j["flows"].is_object())
            fail("flows", "expected an object");
        for (const auto& [k, v] : j["flows"].items())
            c.flows.emplace(k, flow_from(v, "flows." + k));
    }
    if (j.contains("observables")) {
        if (!j["observables"].is_object())
            fail("observables", "expected an object");
        for (const auto& [k, v] : j["observables"].items())
            c.observables.emplace(k, observable_from(v, "observables." + k));
    }
    c.quadrature = j.contains("quadrature") ? quadrature_from(j["quadrature"], "quadrature") : QuadratureConfig{};
    c.estimator = j.contains("estimator") ? estimator_from(j["estimator"], "estimator", c.quadrature)
                                          : EstimatorConfig{100000, 100.0, c.quadrature};
    c.plans = list(j["plans"], "plans", [](const json& p, const std::string& w) {
        keys(p, w, {"name", "form", "flows", "observables"}, {"params"});
        PlanSpec s;
        s.name = str(p["name"], w + ".name");
        if (s.name.empty() || s.name.find_first_of("/\\") != std::string::npos)
            fail(w + ".name", "must be a non-empty file-name-safe string");
        s.form = parse_form(str(p["form"], w + ".form"));
        s.flows = list(p["flows"], w + ".flows", str);
        s.observables = list(p["observables"], w + ".observables", str);
        if (p.contains("params"))
            s.params = p["params"];
        return s;
    });
    std::set<std::string> names;
    for (const auto& p : c.plans)
        if (!names.insert(p.name).second)
            fail("plans", "duplicate plan name \"" + p.name + "\"");
    if (j.contains("points")) {
        const json& pts = j["points"];
        keys(pts, "points", {}, {"explicit", "sampler"});
        if (pts.contains("explicit") == pts.contains("sampler"))
            fail("points", "exactly one of explicit, sampler");
        if (pts.contains("explicit")) {
            c.points.explicit_points = list(pts["explicit"], "points.explicit", point_from);
        } else {
            const json& s = pts["sampler"];
            keys(s, "points.sampler", {"flow", "count"}, {"scheme"});
            c.points.sampler_flow = str(s["flow"], "points.sampler.flow");
            if (!c.flows.count(*c.points.sampler_flow))
                fail("points.sampler.flow", "unknown flow \"" + *c.points.sampler_flow + "\"");
            auto n = integer(s["count"], "points.sampler.count");
            if (n < 1)
                fail("points.sampler.count", "must be positive");
            c.points.count = static_cast<std::size_t>(n);
            if (s.contains("scheme")) {
                std::string sc = str(s["scheme"], "points.sampler.scheme");
                if (sc == "automatic")
                    c.points.scheme = MeasureSampler::Scheme::automatic;
                else if (sc == "uniform_box")
                    c.points.scheme = MeasureSampler::Scheme::uniform_box;
                else if (sc == "haar_rejection")
                    c.points.scheme = MeasureSampler::Scheme::haar_rejection;
                else
                    fail("points.sampler.scheme", "unknown scheme \"" + sc + "\"");
            }
        }
    }
    if (j.contains("oracle")) {
        validate_oracle(j["oracle"]);
        c.oracle = j["oracle"];
    }
    if (j.contains("output")) {
        keys(j["output"], "output", {}, {"dir"});
        if (j["output"].contains("dir"))
            c.output_dir = str(j["output"]["dir"], "output.dir");
    }
    // plans are built once here so shape errors surface before any work
    for (const auto& p : c.plans)
        c.build(p);
    if (!c.plans.empty() && c.points.explicit_points.empty() && !c.points.sampler_flow)
        fail("points", "plans need points");
    return c;
}

inline json to_json(const ExperimentConfig& c)
{
    json j;
    j["name"] = c.name;
    if (!c.description.empty())
        j["description"] = c.description;
    j["seed"] = c.seed;
    json flows = json::object(), obs = json::object();
    for (const auto& [k, v] : c.flows)
        flows[k] = to_json(v);
    for (const auto& [k, v] : c.observables)
        obs[k] = to_json(v);
    j["flows"] = flows;
    j["observables"] = obs;
    json plans = json::array();
    for (const auto& p : c.plans) {
        AveragePlan built = c.build(p);
        plans.push_back({{"name", p.name},
                         {"form", form_name(p.form)},
                         {"flows", p.flows},
                         {"observables", p.observables},
                         {"params", plan_params_json(built)}});
    }
    j["plans"] = plans;
    j["quadrature"] = to_json(c.quadrature);
    j["estimator"] = to_json(c.estimator);
    if (c.points.sampler_flow) {
        j["points"] = {{"sampler",
                        {{"flow", *c.points.sampler_flow},
                         {"count", c.points.count},
                         {"scheme", runner_detail::scheme_name(c.points.scheme)}}}};
    } else {
        json pts = json::array();
        for (const auto& p : c.points.explicit_points)
            pts.push_back(to_json(p));
        j["points"] = {{"explicit", pts}};
    }
    if (c.oracle)
        j["oracle"] = *c.oracle;
    if (!c.output_dir.empty())
        j["output"] = {{"dir", c.output_dir}};
    return j;
}

inline ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::string text = runner_detail::read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------------------
// run

struct RunOptions {
    unsigned threads = 1;
    std::string out_dir;  // overrides the config's output.dir
};

struct PlanOutcome {
    std::string plan;
    std::vector<ConvergenceReport> reports;
    std::string error;
};

inline std::string curve_csv(const std::string& config_hash, const PlanOutcome& o)
{
    using runner_detail::fmt17;
    std::ostringstream s;
    s << "# manifest=manifest.json config_hash=" << config_hash << "\n";
    std::size_t k = o.reports.empty() || o.reports[0].curve.points.empty() ? 1 : o.reports[0].curve.points[0].M.size();
    s << "point";
    for (std::size_t i = 0; i < k; ++i)
        s << (k == 1 ? ",M" : ",M" + std::to_string(i + 1));
    s << ",re,im,err_estimate\n";
    for (std::size_t p = 0; p < o.reports.size(); ++p)
        for (const auto& pt : o.reports[p].curve.points) {
            s << p;
            for (double m : pt.M)
                s << "," << fmt17(m);
            s << "," << fmt17(pt.value.real()) << "," << fmt17(pt.value.imag()) << "," << fmt17(pt.err) << "\n";
        }
    return s.str();
}

inline int run(const std::filesystem::path& config_path, const RunOptions& opts, std::ostream& log = std::cout,
               std::ostream& err = std::cerr)
{
    using clock = std::chrono::steady_clock;
    auto seconds = [](clock::time_point a, clock::time_point b) { return std::chrono::duration<double>(b - a).count(); };
    auto t0 = clock::now();
    ExperimentConfig cfg;
    std::uint64_t seed = 0;
    bool overridden = false;
    std::vector<PhasePoint> points;
    std::string config_hash;
    try {
        cfg = load_config(config_path);
        auto ov = runner_detail::seed_override();
        overridden = ov.has_value();
        seed = ov.value_or(cfg.seed);
        points = cfg.resolve_points(seed);
        config_hash = hex64(fnv1a(canonical_dump(to_json(cfg))));
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_config_error;
    }
    auto t_parse = clock::now();

    std::vector<PlanOutcome> outcomes(cfg.plans.size());
    detail::parallel_for(cfg.plans.size(), std::max(1u, opts.threads), [&](std::size_t i) {
        PlanOutcome& o = outcomes[i];
        o.plan = cfg.plans[i].name;
        try {
            AveragePlan plan = cfg.build(cfg.plans[i]);
            std::uint64_t h = plan_hash(plan);
            for (const auto& x : points) {
                auto curve = continuous_average(plan, x, cfg.quadrature);
                curve.plan_hash = h;
                auto pred = predict_limit(plan, x, cfg.estimator);
                o.reports.push_back(diagnose(plan, std::move(curve), std::move(pred)));
            }
        } catch (const std::exception& e) {
            o.reports.clear();
            o.error = e.what();
        }
    });
    auto t_compute = clock::now();

    std::filesystem::path out = !opts.out_dir.empty() ? std::filesystem::path(opts.out_dir)
                                : !cfg.output_dir.empty() ? std::filesystem::path(cfg.output_dir)
                                                          : std::filesystem::path("out") / cfg.name;
    int status = exit_ok;
    json flags = json::array(), files = json::array();
    try {
        std::filesystem::create_directories(out);
        std::ostringstream summary;
        summary << "# manifest=manifest.json config_hash=" << config_hash << "\n";
        summary << "plan,point,form,verdict,residual,tolerance,final_oscillation,predicted_re,predicted_im,final_re,"
                   "final_im,flagged,error\n";
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            const auto& o = outcomes[i];
            const char* form = form_name(cfg.plans[i].form);
            if (!o.error.empty()) {
                status = exit_plan_error;
                err << "plan " << o.plan << " failed: " << o.error << "\n";
                flags.push_back("plan " + o.plan + " failed: " + o.error);
                std::string msg = o.error;
                for (char& ch : msg)
                    if (ch == ',' || ch == '\n')
                        ch = ';';
                summary << o.plan << ",,," << "error" << ",,,,,,,,," << msg << "\n";
                continue;
            }
            json report = {{"manifest", "manifest.json"},
                           {"config_hash", config_hash},
                           {"plan", o.plan},
                           {"definition", plan_json(cfg.build(cfg.plans[i]))},
                           {"points", json::array()}};
            for (std::size_t p = 0; p < o.reports.size(); ++p) {
                const auto& r = o.reports[p];
                report["points"].push_back(to_json(r));
                if (r.predicted.flagged)
                    flags.push_back(o.plan + "/" + std::to_string(p) + ": unconverged ingredient");
                using runner_detail::fmt17;
                const auto& last = r.curve.points.back().value;
                summary << o.plan << "," << p << "," << form << "," << verdict_name(r.verdict) << ","
                        << fmt17(r.residual) << "," << fmt17(r.tolerance) << "," << fmt17(r.final_oscillation) << ","
                        << fmt17(r.predicted.value.real()) << "," << fmt17(r.predicted.value.imag()) << ","
                        << fmt17(last.real()) << "," << fmt17(last.imag()) << "," << (r.predicted.flagged ? 1 : 0)
                        << ",\n";
            }
            runner_detail::write_atomic(out / (o.plan + ".csv"), curve_csv(config_hash, o));
            runner_detail::write_atomic(out / (o.plan + ".json"), canonical_dump(report));
            files.push_back(o.plan + ".csv");
            files.push_back(o.plan + ".json");
        }
        runner_detail::write_atomic(out / "summary.csv", summary.str());
        files.push_back("summary.csv");

        json notes = json::array();
        bool sl2 = false;
        for (const auto& [k, f] : cfg.flows)
            sl2 = sl2 || f.is<Sl2FlowSpec>();
        if (sl2 && cfg.points.sampler_flow)
            notes.push_back("SL2 Haar samples are truncated at y <= " + runner_detail::fmt17(sl2::y_max) +
                            "; omitted cusp mass " + runner_detail::fmt17(sl2::cusp_truncated_mass));
        auto t_write = clock::now();
        json manifest = {{"config", config_path.string()},
                         {"config_hash", config_hash},
                         {"code_version", code_version},
                         {"seeds", {{"config", cfg.seed}, {"effective", seed}, {"env_override", overridden}}},
                         {"wall_time_s",
                          {{"parse", seconds(t0, t_parse)},
                           {"compute", seconds(t_parse, t_compute)},
                           {"write", seconds(t_compute, t_write)}}},
                         {"threads", opts.threads},
                         {"truncation_bias_notes", notes},
                         {"flags", flags},
                         {"files", files},
                         {"exit_status", status}};
        runner_detail::write_atomic(out / "manifest.json", canonical_dump(manifest));
    } catch (const std::exception& e) {
        err << "error: writing outputs: " << e.what() << "\n";
        return exit_plan_error;
    }
    log << "wrote " << out.string() << " (" << cfg.plans.size() << " plans, " << points.size() << " points)\n";
    return status;
}

// ---------------------------------------------------------------------------
// oracle comparison

inline void validate_oracle(const json& o)
{
    using namespace json_detail;
    if (!o.is_object() || !o.contains("kind"))
        fail("oracle", "needs a kind");
    std::string kind = str(o["kind"], "oracle.kind");
    if (kind == "decomposition")
        keys(o, "oracle", {"kind", "tolerance"}, {"cases", "max_degree"});
    else if (kind == "suspension_transfer")
        keys(o, "oracle", {"kind", "tolerance", "base_maps", "polys", "table", "x", "z", "N"});
    else if (kind == "floor_enumeration")
        keys(o, "oracle", {"kind", "tolerance", "system", "poly", "table", "x", "N"});
    else if (kind == "character_limit")
        keys(o, "oracle", {"kind", "tolerance"});
    else
        return;  // unregistered kinds are reported by oracle_compare
    num(o["tolerance"], "oracle.tolerance");
}

struct OracleDelta {
    std::string label;
    double delta;
};

namespace runner_detail {

inline std::vector<OracleDelta> decomposition_oracle(const json& o, std::uint64_t seed)
{
    using namespace json_detail;
    std::int64_t cases = o.contains("cases") ? integer(o["cases"], "oracle.cases") : 1000;
    std::int64_t maxdeg = o.contains("max_degree") ? integer(o["max_degree"], "oracle.max_degree") : 5;
    if (cases < 1 || maxdeg < 2)
        fail("oracle", "cases >= 1 and max_degree >= 2");
    detail::CounterRng rng{seed};
    double worst = 0.0;
    for (std::int64_t i = 0; i < cases; ++i) {
        auto u = [&](std::uint64_t lane) { return rng.uniform(static_cast<std::uint64_t>(i), lane); };
        int deg = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(maxdeg - 1), static_cast<std::uint64_t>(i), 0));
        std::vector<double> c(static_cast<std::size_t>(deg) + 1, 0.0);
        for (int j = 1; j <= deg; ++j)
            c[static_cast<std::size_t>(j)] = 2.0 * u(static_cast<std::uint64_t>(j)) - 1.0;
        if (c.back() == 0.0)
            c.back() = 1.0;
        Polynomial Q(c);
        double delta = 0.01 + 2.0 * u(20);
        double n = std::floor(100.0 * u(21));
        double t = delta * u(22);
        auto dec = shift_scale_decompose(Q, delta);
        double lhs = Q(n * delta + t);
        // scale: the same sum with absolute coefficients
        double scale = 0.0;
        for (int j = 1; j <= deg; ++j)
            scale += std::abs(c[static_cast<std::size_t>(j)]) * std::pow(n * delta + t, j);
        worst = std::max(worst, std::abs(lhs - dec.rhs(Q, n, t)) / std::max(scale, 1e-300));
    }
    return {{"max relative residual over " + std::to_string(cases) + " cases", worst}};
}

inline std::vector<OracleDelta> transfer_oracle(const json& o, std::uint64_t seed)
{
    using namespace json_detail;
    MultiSuspensionSpec spec{list(o["base_maps"], "oracle.base_maps", discrete_from)};
    try {
        spec.validate();
    } catch (const DomainError& e) {
        fail("oracle.base_maps", e.what());
    }
    auto polys = list(o["polys"], "oracle.polys", polynomial_from);
    auto f = Observable::base_function(list(o["table"], "oracle.table", cplx_from));
    DiscretePoint x{integer(o["x"], "oracle.x"), {}};
    auto z = nums(o["z"], "oracle.z");
    auto N = integer(o["N"], "oracle.N");
    auto r = suspension_transfer_check(spec, f, polys, x, z, N, seed);
    return {{"suspension side minus partitioned side (N=" + std::to_string(N) + ", redraws=" +
                 std::to_string(r.redraws) + ")",
             r.residual}};
}

// T^{floor P(n)} x by repeated single steps, independent of cycle tables
inline std::vector<OracleDelta> enumeration_oracle(const json& o)
{
    using namespace json_detail;
    DiscreteSystem sys = discrete_from(o["system"], "oracle.system");
    if (!sys.is_finite())
        fail("oracle.system", "floor_enumeration needs a finite system");
    Polynomial P = polynomial_from(o["poly"], "oracle.poly");
    auto f = Observable::base_function(list(o["table"], "oracle.table", cplx_from));
    DiscretePoint x{integer(o["x"], "oracle.x"), {}};
    auto N = integer(o["N"], "oracle.N");
    cplx fast = polynomial_average(sys, f, x, P, N);
    std::int64_t period = 1;
    for (const auto& c : sys.components())
        period = std::lcm(period, std::get<PermutationMap>(c).size());
    detail::Compensated<cplx> acc;
    for (std::int64_t n = 0; n < N; ++n) {
        std::int64_t e = static_cast<std::int64_t>(std::floor(P.eval_dd(detail::DD(static_cast<double>(n))).hi));
        std::int64_t steps = ((e % period) + period) % period;
        DiscretePoint y = x;
        for (std::int64_t s = 0; s < steps; ++s)
            y = sys(y);
        acc.add(f(PhasePoint(y)));
    }
    cplx brute = acc.value() / static_cast<double>(N);
    return {{"polynomial_average minus stepwise enumeration", std::abs(fast - brute)}};
}

inline std::vector<OracleDelta> character_oracle(const ExperimentConfig& cfg, std::uint64_t seed)
{
    std::vector<OracleDelta> out;
    auto points = cfg.resolve_points(seed);
    for (const auto& ps : cfg.plans) {
        AveragePlan plan = cfg.build(ps);
        for (std::size_t i = 0; i < points.size(); ++i) {
            auto pred = predict_limit(plan, points[i], cfg.estimator);
            for (const auto& ing : pred.ingredients)
                if (ing.method != "symbolic")
                    throw Unsupported("plan " + ps.name + " has no symbolic character limit");
            auto curve = continuous_average(plan, points[i], cfg.quadrature);
            out.push_back({ps.name + "/" + std::to_string(i), std::abs(curve.points.back().value - pred.value)});
        }
    }
    return out;
}

}  // namespace runner_detail

inline int oracle_compare(const std::filesystem::path& config_path, std::ostream& log = std::cout,
                          std::ostream& err = std::cerr)
{
    ExperimentConfig cfg;
    std::uint64_t seed = 0;
    try {
        cfg = load_config(config_path);
        seed = runner_detail::seed_override().value_or(cfg.seed);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_config_error;
    }
    if (!cfg.oracle) {
        err << "error: config registers no oracle\n";
        return exit_config_error;
    }
    const json& o = *cfg.oracle;
    std::string kind = o["kind"].get<std::string>();
    std::vector<OracleDelta> deltas;
    double tol = 0.0;
    try {
        if (kind != "decomposition" && kind != "suspension_transfer" && kind != "floor_enumeration" &&
            kind != "character_limit")
            throw Unsupported("no oracle registered for kind \"" + kind + "\"");
        tol = o["tolerance"].get<double>();
        if (kind == "decomposition")
            deltas = runner_detail::decomposition_oracle(o, seed);
        else if (kind == "suspension_transfer")
            deltas = runner_detail::transfer_oracle(o, seed);
        else if (kind == "floor_enumeration")
            deltas = runner_detail::enumeration_oracle(o);
        else
            deltas = runner_detail::character_oracle(cfg, seed);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const Unsupported& e) {
        err << "error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::exception& e) {
        err << "error: oracle evaluation failed: " << e.what() << "\n";
        return exit_plan_error;
    }
    double worst = 0.0;
    for (const auto& d : deltas) {
        log << kind << ": " << d.label << ": delta=" << format_double(d.delta) << "\n";
        worst = std::max(worst, d.delta);
    }
    bool ok = worst <= tol;
    log << kind << ": max delta " << format_double(worst) << (ok ? " <= " : " > ") << "tolerance "
        << format_double(tol) << "\n";
    return ok ? exit_ok : exit_plan_error;
}

// configs in dir as (name, description), sorted by file name
inline std::vector<std::pair<std::string, std::string>> list_fixtures(const std::filesystem::path& dir)
{
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".json")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& f : files) {
        std::string desc;
        try {
            json j = json::parse(runner_detail::read_file(f));
            if (j.contains("description") && j["description"].is_string())
                desc = j["description"].get<std::string>();
        } catch (const std::exception&) {
            desc = "(unreadable)";
        }
        out.emplace_back(f.stem().string(), desc);
    }
    return out;
}

}  // namespace ergoflow
