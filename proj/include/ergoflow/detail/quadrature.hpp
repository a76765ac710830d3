#pragma once

#include <array>

namespace ergoflow::detail {

// 4-point Gauss-Legendre rule on [-1, 1]; exact for degree <= 7
inline constexpr std::array<double, 4> gl4_nodes{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                                 0.8611363115940526};
inline constexpr std::array<double, 4> gl4_weights{0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                                   0.3478548451374538};

// composite rule over [a, b] with n equal panels
template <typename F>
auto composite_gl4(F&& f, double a, double b, int n)
{
    double h = (b - a) / n;
    decltype(f(a)) sum{};
    for (int i = 0; i < n; ++i) {
        double mid = a + (i + 0.5) * h;
        decltype(f(a)) panel{};
        for (int q = 0; q < 4; ++q)
            panel += gl4_weights[q] * f(mid + 0.5 * h * gl4_nodes[q]);
        sum += panel * (0.5 * h);
    }
    return sum;
}

}  // namespace ergoflow::detail
