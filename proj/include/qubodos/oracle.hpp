#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "qubodos/histogram.hpp"
#include "qubodos/lattice.hpp"
#include "qubodos/melt.hpp"
#include "qubodos/reconstruct.hpp"

namespace qubodos {

struct ExactDos {
    std::map<int, long long> counts;

    long long total() const;
    DensityOfStates normalized() const;
};

// Every spin configuration of the periodic L x L lattice, indexed by its bit mask
// (site s is bit s), with its parallel-pair count.
struct IsingStates {
    int L = 0;
    std::vector<int> n_par;  // indexed by mask
    ExactDos dos;
};

IsingStates enumerate_ising(int L);
std::vector<int> ising_spins(std::uint32_t mask, int L);

// Space-filling ring configurations of a cuboid, sorted by canonical form
// (the bond bitstring over edge indices).
struct MeltStates {
    std::array<int, 3> dims{0, 0, 0};
    std::vector<std::vector<int>> bond_sets;  // edge indices per state
    std::vector<RingConfiguration> configs;
    ExactDos dos;
};

MeltStates enumerate_melt(const CuboidLattice& lattice, int workers = 1);
std::vector<char> canonical_form(const std::vector<int>& bonds, int num_edges);

struct BinQuartiles {
    double q1 = 0.0, q2 = 0.0, q3 = 0.0;
    double whisker_lo = 0.0, whisker_hi = 0.0;
    std::vector<double> samples;  // sorted
};

struct ReferenceDistribution {
    std::map<int, BinQuartiles> bins;
};

// Quartiles by linear interpolation between order statistics; whiskers at the
// furthest samples within 1.5 IQR of the box.
BinQuartiles summarize(std::vector<double> samples);

// R reconstructions from d bins drawn per interval in proportion to the exact multiplicities.
ReferenceDistribution reference_reconstructions(const ExactDos& exact, const std::vector<IntervalBounds>& intervals,
                                                int depth, int draws, std::uint64_t seed,
                                                const SolverParams& params = {}, int workers = 1);

// Histograms holding exactly N_j W(E) / Z_j at every bin of each interval.
HistogramSet exact_histograms(const ExactDos& exact, const std::vector<IntervalBounds>& intervals, double total);

}  // namespace qubodos
