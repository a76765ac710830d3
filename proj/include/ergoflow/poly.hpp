#pragma once

#include <cctype>
#include <charconv>
#include <initializer_list>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "detail/dd.hpp"
#include "detail/summation.hpp"
#include "error.hpp"

namespace ergoflow {

// Real polynomial, coeffs[j] multiplies t^j; trailing zeros are trimmed so
// the zero polynomial has no coefficients.
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }
    Polynomial(std::initializer_list<double> coeffs) : c_(coeffs) { trim(); }

    static Polynomial monomial(int degree, double coeff = 1.0)
    {
        std::vector<double> c(static_cast<std::size_t>(degree) + 1, 0.0);
        c.back() = coeff;
        return Polynomial(std::move(c));
    }

    // -1 for the zero polynomial
    int degree() const { return static_cast<int>(c_.size()) - 1; }
    bool is_zero() const { return c_.empty(); }
    const std::vector<double>& coeffs() const { return c_; }
    double coeff(int j) const { return j >= 0 && j <= degree() ? c_[static_cast<std::size_t>(j)] : 0.0; }
    double lead() const { return c_.empty() ? 0.0 : c_.back(); }

    double operator()(double t) const
    {
        double v = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it)
            v = v * t + *it;
        return v;
    }

    detail::DD eval_dd(detail::DD t) const
    {
        detail::DD v{0.0};
        for (auto it = c_.rbegin(); it != c_.rend(); ++it)
            v = v * t + detail::DD(*it);
        return v;
    }

    Polynomial derivative() const
    {
        if (c_.size() <= 1)
            return {};
        std::vector<double> d(c_.size() - 1);
        for (std::size_t j = 1; j < c_.size(); ++j)
            d[j - 1] = static_cast<double>(j) * c_[j];
        return Polynomial(std::move(d));
    }

    // max |Q'(t)| over [lo, hi]; bounded by summing |coefficients| termwise
    double derivative_bound(double lo, double hi) const
    {
        double r = std::max(std::abs(lo), std::abs(hi));
        double s = 0.0;
        for (std::size_t j = 1; j < c_.size(); ++j)
            s += static_cast<double>(j) * std::abs(c_[j]) * std::pow(r, static_cast<double>(j - 1));
        return s;
    }

    // Q(a t + b), expanded with compensated summation
    Polynomial compose_linear(double a, double b) const
    {
        if (c_.empty())
            return {};
        std::size_t n = c_.size();
        std::vector<double> out(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            detail::Compensated<double> acc;
            double ai = std::pow(a, static_cast<double>(i));
            for (std::size_t j = i; j < n; ++j)
                acc.add(c_[j] * binomial(j, i) * ai * std::pow(b, static_cast<double>(j - i)));
            out[i] = acc.value();
        }
        return Polynomial(std::move(out));
    }

    Polynomial operator+(const Polynomial& o) const
    {
        std::vector<double> r(std::max(c_.size(), o.c_.size()), 0.0);
        for (std::size_t j = 0; j < r.size(); ++j)
            r[j] = coeff(static_cast<int>(j)) + o.coeff(static_cast<int>(j));
        return Polynomial(std::move(r));
    }

    Polynomial operator-(const Polynomial& o) const { return *this + o * -1.0; }

    Polynomial operator*(double s) const
    {
        std::vector<double> r = c_;
        for (double& x : r)
            x *= s;
        return Polynomial(std::move(r));
    }

    Polynomial operator*(const Polynomial& o) const
    {
        if (is_zero() || o.is_zero())
            return {};
        std::vector<double> r(c_.size() + o.c_.size() - 1, 0.0);
        for (std::size_t i = 0; i < c_.size(); ++i)
            for (std::size_t j = 0; j < o.c_.size(); ++j)
                r[i + j] += c_[i] * o.c_[j];
        return Polynomial(std::move(r));
    }

    bool operator==(const Polynomial&) const = default;

    static double binomial(std::size_t n, std::size_t k)
    {
        double r = 1.0;
        for (std::size_t i = 1; i <= k; ++i)
            r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
        return std::round(r);
    }

private:
    void trim()
    {
        while (!c_.empty() && c_.back() == 0.0)
            c_.pop_back();
    }

    std::vector<double> c_;
};

// Q(n delta + t) = P(n) delta^s + Q(t) + sum_{i=1}^{s-1} P_i(n) delta^{s-i} t^i
struct ShiftScaleDecomposition {
    Polynomial P;
    std::vector<Polynomial> Pi;  // Pi[i-1] is P_i
    double delta = 0.0;
    int s = 0;

    // right-hand side of the identity at (n, t)
    double rhs(const Polynomial& Q, double n, double t) const
    {
        detail::Compensated<double> acc;
        acc.add(P(n) * std::pow(delta, s));
        acc.add(Q(t));
        for (int i = 1; i < s; ++i)
            acc.add(Pi[static_cast<std::size_t>(i - 1)](n) * std::pow(delta, s - i) * std::pow(t, i));
        return acc.value();
    }
};

// Valid for any leading coefficient; lead(P_1) = s * lead(Q).
inline ShiftScaleDecomposition shift_scale_decompose(const Polynomial& Q, double delta)
{
    int s = Q.degree();
    if (s < 2)
        throw DomainError("shift_scale_decompose: degree must be at least 2");
    if (Q.coeff(0) != 0.0)
        throw DomainError("shift_scale_decompose: Q(0) must be 0");
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw DomainError("shift_scale_decompose: delta must be positive");

    ShiftScaleDecomposition out;
    out.delta = delta;
    out.s = s;
    std::vector<double> p(static_cast<std::size_t>(s) + 1, 0.0);
    for (int j = 1; j <= s; ++j)
        p[static_cast<std::size_t>(j)] = Q.coeff(j) * std::pow(delta, j - s);
    out.P = Polynomial(std::move(p));

    for (int i = 1; i < s; ++i) {
        std::vector<double> pi(static_cast<std::size_t>(s - i) + 1, 0.0);
        for (int j = i + 1; j <= s; ++j)
            pi[static_cast<std::size_t>(j - i)] =
                Q.coeff(j) * Polynomial::binomial(static_cast<std::size_t>(j), static_cast<std::size_t>(i)) *
                std::pow(delta, j - s);
        out.Pi.emplace_back(std::move(pi));
    }
    return out;
}

inline constexpr double exact_integer_limit = 9007199254740992.0;  // 2^53

// floor(P(n)). Values within 1e-9 of an integer are re-evaluated in
// double-double before flooring.
inline std::int64_t floor_poly_orbit(const Polynomial& P, std::int64_t n)
{
    double nd = static_cast<double>(n);
    if (std::abs(nd) > exact_integer_limit)
        throw OverflowError("floor_poly_orbit: n outside exact range");
    double v = P(nd);
    if (!std::isfinite(v) || std::abs(v) >= exact_integer_limit)
        throw OverflowError("floor_poly_orbit: |P(n)| exceeds 2^53");
    if (std::abs(v - std::round(v)) <= 1e-9 * std::max(1.0, std::abs(v))) {
        detail::DD f = detail::floor(P.eval_dd(detail::DD(nd)));
        return static_cast<std::int64_t>(f.hi) + static_cast<std::int64_t>(f.lo);
    }
    return static_cast<std::int64_t>(std::floor(v));
}

inline std::string format_double(double x)
{
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

// canonical text: descending powers, "t^3 - 2*t + 0.5"
inline std::string to_string(const Polynomial& Q, char var = 't')
{
    if (Q.is_zero())
        return "0";
    std::string out;
    for (int j = Q.degree(); j >= 0; --j) {
        double c = Q.coeff(j);
        if (c == 0.0)
            continue;
        bool neg = std::signbit(c);
        double m = std::abs(c);
        if (out.empty())
            out += neg ? "-" : "";
        else
            out += neg ? " - " : " + ";
        if (j == 0) {
            out += format_double(m);
            continue;
        }
        if (m != 1.0)
            out += format_double(m) + "*";
        out += var;
        if (j > 1)
            out += "^" + std::to_string(j);
    }
    return out;
}

// Parses sums of terms like "2.5*t^3", "-t", "0.5 t^2", "7"; the variable may
// be any single letter, but only one letter per expression.
inline Polynomial parse_polynomial(std::string_view s)
{
    std::vector<double> c;
    std::size_t i = 0;
    char var = 0;
    auto skip = [&] { while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i; };
    auto fail = [&](const char* why) {
        throw InputError(std::string("polynomial \"") + std::string(s) + "\": " + why);
    };
    auto add = [&](std::size_t deg, double v) {
        if (c.size() <= deg)
            c.resize(deg + 1, 0.0);
        c[deg] += v;
    };

    skip();
    if (i == s.size())
        fail("empty");
    bool first = true;
    while (i < s.size()) {
        double sign = 1.0;
        skip();
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
            sign = s[i] == '-' ? -1.0 : 1.0;
            ++i;
            skip();
        } else if (!first) {
            fail("expected + or -");
        }
        first = false;

        double coef = 1.0;
        bool have_num = false;
        if (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) {
            auto r = std::from_chars(s.data() + i, s.data() + s.size(), coef);
            if (r.ec != std::errc())
                fail("bad number");
            i = static_cast<std::size_t>(r.ptr - s.data());
            have_num = true;
            skip();
            if (i < s.size() && s[i] == '*') {
                ++i;
                skip();
                if (i == s.size() || !std::isalpha(static_cast<unsigned char>(s[i])))
                    fail("expected variable after *");
            }
        }
        std::size_t deg = 0;
        if (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) {
            if (var != 0 && s[i] != var)
                fail("mixed variables");
            var = s[i++];
            deg = 1;
            skip();
            if (i < s.size() && s[i] == '^') {
                ++i;
                skip();
                unsigned long long e = 0;
                auto r = std::from_chars(s.data() + i, s.data() + s.size(), e);
                if (r.ec != std::errc() || e > 64)
                    fail("bad exponent");
                i = static_cast<std::size_t>(r.ptr - s.data());
                deg = static_cast<std::size_t>(e);
            }
        } else if (!have_num) {
            fail("expected term");
        }
        add(deg, sign * coef);
        skip();
    }
    return Polynomial(std::move(c));
}

// Integer linear form sum_j l_j t_j.
struct LinearForm {
    std::vector<std::int64_t> l;

    double operator()(std::span<const double> t) const
    {
        double v = 0.0;
        for (std::size_t j = 0; j < l.size() && j < t.size(); ++j)
            v += static_cast<double>(l[j]) * t[j];
        return v;
    }
    bool operator==(const LinearForm&) const = default;
};

// p/q in lowest terms with q > 0
struct Rational {
    std::int64_t p = 0;
    std::int64_t q = 1;

    Rational() = default;
    Rational(std::int64_t num, std::int64_t den = 1) : p(num), q(den)
    {
        if (q == 0)
            throw DomainError("rational with zero denominator");
        if (q < 0) {
            p = -p;
            q = -q;
        }
        std::int64_t g = std::gcd(p, q);
        if (g > 1) {
            p /= g;
            q /= g;
        }
    }

    double value() const { return static_cast<double>(p) / static_cast<double>(q); }
    bool operator==(const Rational&) const = default;

    friend Rational operator*(Rational x, Rational y)
    {
        std::int64_t g1 = std::gcd(x.p, y.q), g2 = std::gcd(y.p, x.q);
        if (g1 == 0) g1 = 1;
        if (g2 == 0) g2 = 1;
        return Rational(checked_mul(x.p / g1, y.p / g2), checked_mul(x.q / g2, y.q / g1));
    }

    friend Rational operator+(Rational x, Rational y)
    {
        std::int64_t g = std::gcd(x.q, y.q);
        std::int64_t num = checked_add(checked_mul(x.p, y.q / g), checked_mul(y.p, x.q / g));
        return Rational(num, checked_mul(x.q / g, y.q));
    }

    friend Rational operator-(Rational x) { return Rational(-x.p, x.q); }

    static std::int64_t checked_mul(std::int64_t a, std::int64_t b)
    {
        std::int64_t r;
        if (__builtin_mul_overflow(a, b, &r))
            throw OverflowError("rational arithmetic overflow");
        return r;
    }
    static std::int64_t checked_add(std::int64_t a, std::int64_t b)
    {
        std::int64_t r;
        if (__builtin_add_overflow(a, b, &r))
            throw OverflowError("rational arithmetic overflow");
        return r;
    }
};

}  // namespace ergoflow
