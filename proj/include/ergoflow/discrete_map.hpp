#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "detail/dd.hpp"
#include "error.hpp"
#include "phase_point.hpp"

namespace ergoflow {

// Bijection of {0, ..., n-1}. Cycles are precomputed so T^k is O(1).
class PermutationMap {
public:
    PermutationMap() = default;

    explicit PermutationMap(std::vector<std::int64_t> table) : table_(std::move(table))
    {
        std::int64_t n = size();
        if (n == 0)
            throw InputError("permutation: empty table");
        std::vector<char> seen(table_.size(), 0);
        for (std::int64_t v : table_) {
            if (v < 0 || v >= n || seen[static_cast<std::size_t>(v)])
                throw InputError("permutation: table is not a bijection");
            seen[static_cast<std::size_t>(v)] = 1;
        }
        cycle_of_.assign(table_.size(), -1);
        pos_.assign(table_.size(), 0);
        for (std::int64_t s = 0; s < n; ++s) {
            if (cycle_of_[static_cast<std::size_t>(s)] >= 0)
                continue;
            std::vector<std::int64_t> cyc;
            std::int64_t x = s;
            do {
                cycle_of_[static_cast<std::size_t>(x)] = static_cast<std::int64_t>(cycles_.size());
                pos_[static_cast<std::size_t>(x)] = static_cast<std::int64_t>(cyc.size());
                cyc.push_back(x);
                x = table_[static_cast<std::size_t>(x)];
            } while (x != s);
            cycles_.push_back(std::move(cyc));
        }
    }

    // i -> i + shift mod n
    static PermutationMap cyclic(std::int64_t n, std::int64_t shift = 1)
    {
        std::vector<std::int64_t> t(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i)
            t[static_cast<std::size_t>(i)] = ((i + shift) % n + n) % n;
        return PermutationMap(std::move(t));
    }

    std::int64_t size() const { return static_cast<std::int64_t>(table_.size()); }
    const std::vector<std::int64_t>& table() const { return table_; }
    std::int64_t operator()(std::int64_t x) const { return table_[static_cast<std::size_t>(x)]; }

    std::int64_t power(std::int64_t x, std::int64_t k) const
    {
        const auto& cyc = cycles_[static_cast<std::size_t>(cycle_of_[static_cast<std::size_t>(x)])];
        std::int64_t len = static_cast<std::int64_t>(cyc.size());
        std::int64_t p = (pos_[static_cast<std::size_t>(x)] + k % len + len) % len;
        return cyc[static_cast<std::size_t>(p)];
    }

    const std::vector<std::vector<std::int64_t>>& cycles() const { return cycles_; }
    std::int64_t cycle_of(std::int64_t x) const { return cycle_of_[static_cast<std::size_t>(x)]; }

private:
    std::vector<std::int64_t> table_;
    std::vector<std::int64_t> cycle_of_;
    std::vector<std::int64_t> pos_;
    std::vector<std::vector<std::int64_t>> cycles_;
};

// x -> x + rho on T^m
struct RotationMap {
    std::vector<double> rho;
};

// n * rho + x mod 1 without losing the low bits of n * rho
inline double advance_angle(double x, double rho, double n)
{
    detail::DD p = detail::two_prod(n, rho);
    double f = p.hi - std::floor(p.hi);
    return wrap01(wrap01(f + p.lo) + x);
}

// Product of finite permutations and torus rotations acting independently.
// Finite coordinates are packed into DiscretePoint::id, first component
// least significant; rotation coordinates are concatenated into angles.
class DiscreteSystem {
public:
    using Component = std::variant<PermutationMap, RotationMap>;

    DiscreteSystem() = default;
    explicit DiscreteSystem(std::vector<Component> comps) : comps_(std::move(comps))
    {
        if (comps_.empty())
            throw InputError("discrete system: no components");
        std::int64_t stride = 1;
        std::size_t offset = 0;
        for (const auto& c : comps_) {
            strides_.push_back(stride);
            offsets_.push_back(offset);
            if (auto p = std::get_if<PermutationMap>(&c)) {
                if (stride > (std::int64_t{1} << 40) / p->size())
                    throw InputError("discrete system: state space too large");
                stride *= p->size();
            } else {
                offset += std::get<RotationMap>(c).rho.size();
            }
        }
        states_ = stride;
        angle_dim_ = offset;
    }
    DiscreteSystem(PermutationMap p) : DiscreteSystem(std::vector<Component>{std::move(p)}) {}
    DiscreteSystem(RotationMap r) : DiscreteSystem(std::vector<Component>{std::move(r)}) {}

    const std::vector<Component>& components() const { return comps_; }
    std::int64_t num_states() const { return states_; }
    std::size_t angle_dim() const { return angle_dim_; }
    bool is_finite() const { return angle_dim_ == 0; }

    bool contains(const DiscretePoint& x) const
    {
        if (x.id < 0 || x.id >= states_ || x.angles.size() != angle_dim_)
            return false;
        for (double a : x.angles)
            if (!(a >= 0.0 && a < 1.0))
                return false;
        return true;
    }

    // T^n x
    DiscretePoint power(const DiscretePoint& x, std::int64_t n) const
    {
        DiscretePoint y;
        y.angles.resize(angle_dim_);
        for (std::size_t k = 0; k < comps_.size(); ++k) {
            if (auto p = std::get_if<PermutationMap>(&comps_[k])) {
                std::int64_t digit = (x.id / strides_[k]) % p->size();
                y.id += p->power(digit, n) * strides_[k];
            } else {
                const auto& rho = std::get<RotationMap>(comps_[k]).rho;
                for (std::size_t j = 0; j < rho.size(); ++j)
                    y.angles[offsets_[k] + j] =
                        advance_angle(x.angles[offsets_[k] + j], rho[j], static_cast<double>(n));
            }
        }
        return y;
    }

    DiscretePoint operator()(const DiscretePoint& x) const { return power(x, 1); }

    // id of the T-orbit containing the finite part of x; only for finite systems
    std::vector<std::int64_t> orbit(std::int64_t id) const
    {
        std::vector<std::int64_t> out{id};
        DiscretePoint p{id, {}};
        for (;;) {
            p = power(p, 1);
            if (p.id == id)
                return out;
            out.push_back(p.id);
        }
    }

private:
    std::vector<Component> comps_;
    std::vector<std::int64_t> strides_;
    std::vector<std::size_t> offsets_;
    std::int64_t states_ = 1;
    std::size_t angle_dim_ = 0;
};

// Exhaustive check on the finite part; rotation parts always commute.
inline bool commute(const DiscreteSystem& A, const DiscreteSystem& B)
{
    if (A.num_states() != B.num_states() || A.angle_dim() != B.angle_dim())
        return false;
    std::vector<double> zeros(A.angle_dim(), 0.0);
    for (std::int64_t s = 0; s < A.num_states(); ++s) {
        DiscretePoint x{s, zeros};
        if (A(B(x)).id != B(A(x)).id)
            return false;
    }
    return true;
}

}  // namespace ergoflow
