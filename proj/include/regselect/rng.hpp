#pragma once

#include <cstdint>
#include <random>

namespace regselect {

using Rng = std::mt19937_64;

/// Roles of independent random streams inside one experiment.
enum class Stream : std::uint64_t {
    Operator = 1,
    Train = 2,
    Test = 3,
    Oracle = 4,
    Pool = 5,
};

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for the stream (trial, tag) under a master seed; streams never depend on trial counts.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial, Stream tag,
                                    std::uint64_t sub = 0)
{
    std::uint64_t h = mix64(master);
    h = mix64(h ^ trial);
    h = mix64(h ^ static_cast<std::uint64_t>(tag));
    return mix64(h ^ sub);
}

inline Rng make_rng(std::uint64_t master, std::uint64_t trial, Stream tag, std::uint64_t sub = 0)
{
    return Rng(derive_seed(master, trial, tag, sub));
}

} // namespace regselect
