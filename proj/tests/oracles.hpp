#pragma once

// Reference implementations used only by the tests. None of them call into the
// library code they are checking.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "qubodos/lattice.hpp"
#include "qubodos/qubo.hpp"

namespace oracle {

// Term-by-term energy straight from the coefficient tables.
inline double qubo_energy(const qubodos::QuboModel& model, const qubodos::SpinState& s)
{
    double e = model.offset();
    for (std::size_t i = 0; i < model.num_vars(); ++i) {
        if (s[i]) e += model.linear(i);
    }
    for (const auto& [ij, w] : model.quadratic_terms()) {
        if (s[ij.first] && s[ij.second]) e += w;
    }
    return e;
}

// Half the number of equal-spin neighbour pairs on a periodic L x L grid, from
// row bit masks: XOR with the rotated row marks antiparallel horizontal pairs,
// XOR with the next row marks antiparallel vertical pairs.
inline int ising_npar_bits(std::uint32_t mask, int L)
{
    const std::uint32_t row_mask = (1u << L) - 1u;
    int anti = 0;
    for (int r = 0; r < L; ++r) {
        const std::uint32_t row = (mask >> (r * L)) & row_mask;
        const std::uint32_t rot = ((row >> 1) | (row << (L - 1))) & row_mask;
        const std::uint32_t next = (mask >> (((r + 1) % L) * L)) & row_mask;
        anti += std::popcount(row ^ rot) + std::popcount(row ^ next);
    }
    return (2 * L * L - anti) / 2;
}

inline std::map<int, long long> ising_counts_bits(int L)
{
    std::map<int, long long> out;
    const std::uint32_t n = 1u << (L * L);
    for (std::uint32_t mask = 0; mask < n; ++mask) ++out[ising_npar_bits(mask, L)];
    return out;
}

// Corner turns of a bond set: sites whose two bonds point along different axes.
inline int corner_turns(const std::vector<int>& bonds, const qubodos::CuboidLattice& lat)
{
    std::vector<std::vector<int>> axes(lat.num_sites());
    for (int e : bonds) {
        const auto [a, b] = lat.edges()[e];
        const auto pa = lat.coords(a), pb = lat.coords(b);
        int axis = 0;
        while (pa[axis] == pb[axis]) ++axis;
        axes[a].push_back(axis);
        axes[b].push_back(axis);
    }
    int n = 0;
    for (const auto& ax : axes) {
        if (ax.size() == 2 && ax[0] != ax[1]) ++n;
    }
    return n;
}

// Whether a bond set covers every site with degree two (a union of closed rings
// through all sites). Rings of length two cannot occur on a simple lattice.
inline bool spanning_two_factor(const std::vector<int>& bonds, const qubodos::CuboidLattice& lat)
{
    std::vector<int> deg(lat.num_sites(), 0);
    for (int e : bonds) {
        ++deg[lat.edges()[e][0]];
        ++deg[lat.edges()[e][1]];
    }
    for (int d : deg) {
        if (d != 2) return false;
    }
    return true;
}

// Exhaustive scan over every edge subset; only for lattices with few edges.
inline std::map<int, long long> melt_counts_bruteforce(const qubodos::CuboidLattice& lat)
{
    std::map<int, long long> out;
    const int ne = lat.num_edges();
    const int ns = lat.num_sites();
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << ne); ++mask) {
        if (std::popcount(mask) != ns) continue;
        std::vector<int> bonds;
        for (int e = 0; e < ne; ++e) {
            if (mask >> e & 1) bonds.push_back(e);
        }
        if (spanning_two_factor(bonds, lat)) ++out[corner_turns(bonds, lat)];
    }
    return out;
}

// Linking number from signed crossings of a tilted parallel projection: the sum of
// the signs of crossings where ring a passes over ring b.
inline int linking_by_crossings(const std::vector<qubodos::Point3>& a, const std::vector<qubodos::Point3>& b)
{
    using V = std::array<double, 3>;
    const double t1 = 0.1234567, t2 = 0.0765432;
    auto proj = [&](const qubodos::Point3& p) {
        return V{p[0] + t1 * p[2], p[1] + t2 * p[2], static_cast<double>(p[2]) - t1 * p[0] - t2 * p[1]};
    };
    int sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const V p = proj(a[i]), q = proj(a[(i + 1) % a.size()]);
        for (std::size_t j = 0; j < b.size(); ++j) {
            const V r = proj(b[j]), s = proj(b[(j + 1) % b.size()]);
            const double dx1 = q[0] - p[0], dy1 = q[1] - p[1];
            const double dx2 = s[0] - r[0], dy2 = s[1] - r[1];
            const double den = dx1 * dy2 - dy1 * dx2;
            if (std::abs(den) < 1e-12) continue;
            const double u = ((r[0] - p[0]) * dy2 - (r[1] - p[1]) * dx2) / den;
            const double v = ((r[0] - p[0]) * dy1 - (r[1] - p[1]) * dx1) / den;
            if (u <= 0.0 || u >= 1.0 || v <= 0.0 || v >= 1.0) continue;
            const double ha = p[2] + u * (q[2] - p[2]);
            const double hb = r[2] + v * (s[2] - r[2]);
            if (ha <= hb) continue;
            sum += den > 0 ? 1 : -1;
        }
    }
    return sum;
}

// Random squared-linear form over n variables with small integer coefficients.
inline qubodos::LinearForm random_form(std::mt19937_64& rng, int n)
{
    std::uniform_int_distribution<int> coeff(-4, 4);
    qubodos::LinearForm f;
    for (int i = 0; i < n; ++i) {
        const int c = coeff(rng);
        if (c != 0) f.add(static_cast<std::size_t>(i), c);
    }
    f.constant = coeff(rng) * 2;
    return f;
}

inline qubodos::SpinState state_from_mask(std::uint64_t mask, std::size_t n)
{
    qubodos::SpinState s(n);
    for (std::size_t i = 0; i < n; ++i) s.set(i, mask >> i & 1);
    return s;
}

}  // namespace oracle
