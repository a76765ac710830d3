#pragma once

// Double-double arithmetic: a value is hi + lo with |lo| <= ulp(hi)/2.
// Requires round-to-nearest IEEE doubles and no FMA contraction of the
// error-free transforms (the build passes -ffp-contract=off).

#include <cmath>
#include <limits>

namespace ergoflow::detail {

struct DD {
    double hi = 0.0;
    double lo = 0.0;

    constexpr DD() = default;
    constexpr DD(double h) : hi(h), lo(0.0) {}
    constexpr DD(double h, double l) : hi(h), lo(l) {}

    explicit operator double() const { return hi + lo; }
};

inline DD two_sum(double a, double b)
{
    double s = a + b;
    double bb = s - a;
    double e = (a - (s - bb)) + (b - bb);
    return {s, e};
}

inline DD quick_two_sum(double a, double b)
{
    double s = a + b;
    return {s, b - (s - a)};
}

// Veltkamp split: a = hi + lo with hi holding the top 26 bits
inline void split(double a, double& hi, double& lo)
{
    constexpr double splitter = 134217729.0;  // 2^27 + 1
    double t = splitter * a;
    hi = t - (t - a);
    lo = a - hi;
}

// exact product; Dekker's algorithm unless hardware fma is available
inline DD two_prod(double a, double b)
{
    double p = a * b;
#ifdef __FMA__
    return {p, std::fma(a, b, -p)};
#else
    double ah, al, bh, bl;
    split(a, ah, al);
    split(b, bh, bl);
    return {p, ((ah * bh - p) + ah * bl + al * bh) + al * bl};
#endif
}

inline DD operator+(DD a, DD b)
{
    DD s = two_sum(a.hi, b.hi);
    DD t = two_sum(a.lo, b.lo);
    s.lo += t.hi;
    s = quick_two_sum(s.hi, s.lo);
    s.lo += t.lo;
    return quick_two_sum(s.hi, s.lo);
}

inline DD operator-(DD a) { return {-a.hi, -a.lo}; }
inline DD operator-(DD a, DD b) { return a + (-b); }

inline DD operator*(DD a, DD b)
{
    DD p = two_prod(a.hi, b.hi);
    p.lo += a.hi * b.lo + a.lo * b.hi;
    return quick_two_sum(p.hi, p.lo);
}

inline DD operator/(DD a, DD b)
{
    double q1 = a.hi / b.hi;
    DD r = a - b * DD(q1);
    double q2 = r.hi / b.hi;
    r = r - b * DD(q2);
    double q3 = r.hi / b.hi;
    DD q = quick_two_sum(q1, q2);
    return q + DD(q3);
}

inline DD& operator+=(DD& a, DD b) { return a = a + b; }
inline DD& operator-=(DD& a, DD b) { return a = a - b; }
inline DD& operator*=(DD& a, DD b) { return a = a * b; }

inline bool operator<(DD a, DD b) { return a.hi < b.hi || (a.hi == b.hi && a.lo < b.lo); }
inline bool operator==(DD a, DD b) { return a.hi == b.hi && a.lo == b.lo; }

inline DD abs(DD a) { return a.hi < 0.0 || (a.hi == 0.0 && a.lo < 0.0) ? -a : a; }

inline DD floor(DD a)
{
    double f = std::floor(a.hi);
    if (f != a.hi)
        return {f, 0.0};
    return quick_two_sum(f, std::floor(a.lo));
}

inline DD round(DD a) { return floor(a + DD(0.5)); }

inline DD sqr(DD a) { return a * a; }

inline DD ldexp(DD a, int e) { return {std::ldexp(a.hi, e), std::ldexp(a.lo, e)}; }

inline DD sqrt(DD a)
{
    if (a.hi <= 0.0)
        return {0.0, 0.0};
    double x = 1.0 / std::sqrt(a.hi);
    double ax = a.hi * x;
    // one Newton step on the reciprocal square root
    DD diff = a - two_prod(ax, ax);
    return two_sum(ax, diff.hi * (x * 0.5));
}

// exp with ~1e-30 relative error for moderate arguments
inline DD exp(DD a)
{
    constexpr DD ln2{6.931471805599452862e-01, 2.319046813846299558e-17};
    if (a.hi > 709.0)
        return {std::numeric_limits<double>::infinity(), 0.0};
    if (a.hi < -745.0)
        return {0.0, 0.0};
    double m = std::floor(a.hi / ln2.hi + 0.5);
    DD r = a - ln2 * DD(m);
    r = ldexp(r, -9);

    // Taylor series of exp(r) - 1 for |r| < 7e-4
    DD term = r;
    DD sum = r;
    for (int k = 2; k < 14; ++k) {
        term = term * r / DD(static_cast<double>(k));
        sum += term;
        if (std::abs(term.hi) < 1e-34 * std::abs(sum.hi))
            break;
    }
    // (1+s)^2 - 1 = 2s + s^2 keeps precision for small s
    for (int i = 0; i < 9; ++i)
        sum = ldexp(sum, 1) + sqr(sum);
    sum += DD(1.0);
    return ldexp(sum, static_cast<int>(m));
}

}  // namespace ergoflow::detail
