#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace qubodos {

// SplitMix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Seed derivation tree: parent -> (label, index) -> child.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view label,
                                    std::uint64_t index = 0)
{
    return splitmix64(splitmix64(parent ^ fnv1a64(label)) + index);
}

using Rng = std::mt19937_64;

// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform_real(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Index in [0, n) by multiply-shift; the bias is below n / 2^64.
inline std::size_t uniform_index(Rng& rng, std::size_t n)
{
    return static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

}  // namespace qubodos
