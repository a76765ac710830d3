#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <type_traits>

namespace ergoflow::detail {

// Neumaier's variant of Kahan summation; order-dependent but deterministic.
template <typename T>
class Compensated {
public:
    void add(T x)
    {
        if constexpr (std::is_same_v<T, std::complex<double>>) {
            re_.add(x.real());
            im_.add(x.imag());
        } else {
            T t = sum_ + x;
            if (std::abs(sum_) >= std::abs(x))
                c_ += (sum_ - t) + x;
            else
                c_ += (x - t) + sum_;
            sum_ = t;
        }
    }

    T value() const
    {
        if constexpr (std::is_same_v<T, std::complex<double>>)
            return {re_.value(), im_.value()};
        else
            return sum_ + c_;
    }

private:
    T sum_{};
    T c_{};
    // only used for the complex specialisation
    struct Empty {};
    std::conditional_t<std::is_same_v<T, std::complex<double>>, Compensated<double>, Empty> re_{}, im_{};
};

// Pairwise sum over a fixed binary tree of the index range.
template <typename T>
T pairwise_sum(std::span<const T> v)
{
    if (v.size() <= 8) {
        Compensated<T> s;
        for (const T& x : v)
            s.add(x);
        return s.value();
    }
    std::size_t h = v.size() / 2;
    return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

}  // namespace ergoflow::detail
