#pragma once

#include <cmath>
#include <cstdint>
#include <variant>
#include <vector>

#include "detail/dd.hpp"

namespace ergoflow {

using detail::DD;

// Point of a torus T^n; every coordinate lies in [0, 1).
struct TorusPoint {
    std::vector<double> coords;
    bool operator==(const TorusPoint&) const = default;
};

// State of a discrete system: finite components are packed into `id`
// (mixed radix), rotation components contribute `angles` in [0, 1).
struct DiscretePoint {
    std::int64_t id = 0;
    std::vector<double> angles;
    bool operator==(const DiscretePoint&) const = default;
};

// Point (base, z) of the unit-roof suspension over a discrete system,
// z in [0, 1)^d for a d-fold suspension.
struct SuspensionPoint {
    DiscretePoint base;
    std::vector<double> fiber;
    bool operator==(const SuspensionPoint&) const = default;
};

// Coset g SL2(Z). The stored g is the canonical representative: with
// h = g^{-1}, h.i lies in the closed standard fundamental domain
// (|Re| <= 1/2, |z| >= 1) and h has c > 0, or c == 0 and d > 0.
struct Sl2Point {
    DD a{1.0}, b{0.0}, c{0.0}, d{1.0};

    double det() const { return static_cast<double>(a * d - b * c); }
    bool operator==(const Sl2Point& o) const
    {
        return a == o.a && b == o.b && c == o.c && d == o.d;
    }
};

struct PhasePoint;

struct ProductPoint {
    std::vector<PhasePoint> parts;
    bool operator==(const ProductPoint&) const;
};

struct PhasePoint {
    std::variant<TorusPoint, DiscretePoint, SuspensionPoint, Sl2Point, ProductPoint> v;

    PhasePoint() = default;
    PhasePoint(TorusPoint p) : v(std::move(p)) {}
    PhasePoint(DiscretePoint p) : v(std::move(p)) {}
    PhasePoint(SuspensionPoint p) : v(std::move(p)) {}
    PhasePoint(Sl2Point p) : v(std::move(p)) {}
    PhasePoint(ProductPoint p) : v(std::move(p)) {}

    template <typename T> bool is() const { return std::holds_alternative<T>(v); }
    template <typename T> const T& as() const { return std::get<T>(v); }
    template <typename T> T& as() { return std::get<T>(v); }

    bool operator==(const PhasePoint&) const = default;
};

inline bool ProductPoint::operator==(const ProductPoint& o) const { return parts == o.parts; }

// x mod 1 in [0, 1); guards the x = -tiny case where x - floor(x) rounds to 1
inline double wrap01(double x)
{
    double f = x - std::floor(x);
    return f >= 1.0 ? 0.0 : f;
}

inline double wrap_distance(double a, double b)
{
    double d = std::abs(a - b);
    d -= std::floor(d);
    return std::min(d, 1.0 - d);
}

inline double torus_distance(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i)
        m = std::max(m, wrap_distance(a[i], b[i]));
    return m;
}

}  // namespace ergoflow
