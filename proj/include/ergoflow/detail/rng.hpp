#pragma once

#include <cstdint>

namespace ergoflow::detail {

inline constexpr std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stateless generator: every draw is a pure function of (seed, index, lane),
// so any partition of the index range over threads yields the same stream.
struct CounterRng {
    std::uint64_t seed;

    constexpr std::uint64_t bits(std::uint64_t index, std::uint64_t lane = 0) const
    {
        return mix64(mix64(seed ^ mix64(lane + 0x632be59bd9b4e019ULL)) + index);
    }

    // uniform on [0, 1) with 53 random bits
    constexpr double uniform(std::uint64_t index, std::uint64_t lane = 0) const
    {
        return static_cast<double>(bits(index, lane) >> 11) * 0x1.0p-53;
    }

    // uniform on {0, ..., n-1}; n > 0
    std::uint64_t below(std::uint64_t n, std::uint64_t index, std::uint64_t lane = 0) const
    {
        unsigned __int128 m = static_cast<unsigned __int128>(bits(index, lane)) * n;
        return static_cast<std::uint64_t>(m >> 64);
    }
};

}  // namespace ergoflow::detail
