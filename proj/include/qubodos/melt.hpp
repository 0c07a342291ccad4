#pragma once

#include <array>
#include <optional>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include "qubodos/ising.hpp"
#include "qubodos/lattice.hpp"
#include "qubodos/qubo.hpp"

namespace qubodos {

// Restrains the corner-turn count n_c to [n_bar, n_bar + 2^m - 1].
struct CurvatureInterval {
    int n_bar = 0;
    int m = 0;

    int lower() const { return n_bar; }
    int upper() const { return n_bar + (1 << m) - 1; }
    bool contains(int n_c) const { return n_c >= lower() && n_c <= upper(); }
};

struct MeltCoefficients {
    double bonds = 1.0;        // A_b: bond count equals the site count
    double branching = 1.0;    // A_c: no two corners share a centre
    double consistency = 1.0;  // A_bc: corner variables track bond pairs
};

// Bond variables (one per edge), corner variables (one per perpendicular
// triplet), then the slack bits.
struct MeltLayout {
    int num_edges = 0;
    int num_corners = 0;
    int m = 0;

    std::size_t bond(int e) const { return static_cast<std::size_t>(e); }
    std::size_t corner(int c) const { return static_cast<std::size_t>(num_edges + c); }
    std::size_t slack(int k) const { return static_cast<std::size_t>(num_edges + num_corners + k); }
    std::size_t num_vars() const { return slack(m); }
    std::vector<std::size_t> slack_vars() const;
};

struct MeltModel {
    QuboModel model;
    MeltLayout layout;
    CurvatureInterval interval;
};

MeltModel build_melt(const CuboidLattice& lattice, const MeltCoefficients& coeffs, const CurvatureInterval& interval,
                     double A = 1.0);

// Closed rings covering every site; each ring is a cyclic site sequence
// starting at its smallest site and continuing towards the smaller neighbour.
struct RingConfiguration {
    std::array<int, 3> dims{0, 0, 0};
    std::vector<std::vector<int>> rings;
    int n_c = 0;

    int n_rings() const { return static_cast<int>(rings.size()); }
};

// Decomposes a bond set (edge indices) of a 2-regular spanning subgraph into rings.
RingConfiguration rings_from_bonds(const std::vector<int>& bonds, const CuboidLattice& lattice);
int geometric_corner_count(const std::vector<std::vector<int>>& rings, const CuboidLattice& lattice);

RingConfiguration decode_melt(const SpinState& state, const MeltLayout& layout, const CuboidLattice& lattice);

Validation validate_melt_ground_state(const SpinState& state, const QuboModel& model, const MeltLayout& layout,
                                      const CuboidLattice& lattice, const CurvatureInterval& interval);

// A space-filling bond set built from 2x2 and 3x2 rectangles stacked along an even
// dimension, with n_c = 4 per ring; nullopt when every dimension is odd or a side is 1.
std::optional<std::vector<int>> slab_configuration(const CuboidLattice& lattice);

// Zero-energy completion of a space-filling bond set: corner variables and slack bits.
SpinState complete_melt_state(const std::vector<int>& bonds, const MeltLayout& layout, const CuboidLattice& lattice,
                              const CurvatureInterval& interval);

// Header "rings <Lx> <Ly> <Lz> <n_c> <n_rings>", then one comma-separated ring per line.
void write_rings(std::ostream& out, const RingConfiguration& config);
RingConfiguration read_rings(std::istream& in);

void write_melt_layout(std::ostream& out, const CuboidLattice& lattice, const MeltLayout& layout,
                       const CurvatureInterval& interval);

}  // namespace qubodos
