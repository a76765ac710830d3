#pragma once

#include <cstdint>
#include <vector>

#include "detail/rng.hpp"
#include "error.hpp"
#include "flows.hpp"
#include "phase_point.hpp"

namespace ergoflow {

// Draws from the invariant measure of a flow: Lebesgue on tori and fibers,
// uniform on finite base states, Haar on SL2(R)/SL2(Z) truncated at
// sl2::y_max. Point i depends only on (seed, i).
struct MeasureSampler {
    enum class Scheme { automatic, uniform_box, haar_rejection };

    FlowSpec flow;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::automatic;

    PhasePoint point(std::uint64_t i) const { return draw(flow, detail::CounterRng{seed}, i); }

private:
    PhasePoint draw(const FlowSpec& f, detail::CounterRng rng, std::uint64_t i) const
    {
        auto box_allowed = [&] {
            if (scheme == Scheme::haar_rejection)
                throw ConfigError("sampler: haar_rejection applies only to SL2 flows");
        };
        if (auto k = std::get_if<KroneckerSpec>(&f.v)) {
            box_allowed();
            TorusPoint p;
            for (std::size_t c = 0; c < k->dim; ++c)
                p.coords.push_back(rng.uniform(i, c));
            return p;
        }
        auto suspension = [&](const DiscreteSystem& base, std::size_t d) {
            box_allowed();
            SuspensionPoint p;
            p.base.id = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(base.num_states()), i, 0));
            for (std::size_t c = 0; c < base.angle_dim(); ++c)
                p.base.angles.push_back(rng.uniform(i, 1 + c));
            for (std::size_t c = 0; c < d; ++c)
                p.fiber.push_back(rng.uniform(i, 1 + base.angle_dim() + c));
            return PhasePoint(p);
        };
        if (auto s = std::get_if<SuspensionSpec>(&f.v))
            return suspension(s->base, 1);
        if (auto m = std::get_if<MultiSuspensionSpec>(&f.v))
            return suspension(m->base_maps.front(), m->base_maps.size());
        if (f.is<Sl2FlowSpec>()) {
            if (scheme == Scheme::uniform_box)
                throw ConfigError("sampler: uniform_box does not apply to SL2 flows");
            return sl2::haar_point(rng, i);
        }
        if (scheme != Scheme::automatic)
            throw ConfigError("sampler: product flows only support the automatic scheme");
        const auto& prod = std::get<ProductFlowSpec>(f.v);
        ProductPoint p;
        for (std::size_t c = 0; c < prod.components.size(); ++c)
            p.parts.push_back(draw(prod.components[c], detail::CounterRng{detail::mix64(rng.seed + 1 + c)}, i));
        return p;
    }
};

inline std::vector<PhasePoint> sample_invariant(const MeasureSampler& sampler, std::size_t n)
{
    if (n < 1)
        throw InputError("sample_invariant: n must be at least 1");
    std::vector<PhasePoint> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(sampler.point(i));
    return out;
}

// uniform draws from the invariant measure of a discrete system
inline std::vector<DiscretePoint> sample_discrete(const DiscreteSystem& sys, std::uint64_t seed, std::size_t n)
{
    detail::CounterRng rng{seed};
    std::vector<DiscretePoint> out;
    for (std::size_t i = 0; i < n; ++i) {
        DiscretePoint p;
        p.id = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(sys.num_states()), i, 0));
        for (std::size_t c = 0; c < sys.angle_dim(); ++c)
            p.angles.push_back(rng.uniform(i, 1 + c));
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace ergoflow
