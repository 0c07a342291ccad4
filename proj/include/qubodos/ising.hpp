#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "qubodos/qubo.hpp"

namespace qubodos {

// Restrains the parallel-pair count n_par (= half the number of parallel
// neighbouring spin pairs) to [n_bar, n_bar + 2^m - 1].
struct ParallelInterval {
    int n_bar = 0;
    int m = 0;

    int lower() const { return n_bar; }
    int upper() const { return n_bar + (1 << m) - 1; }
    bool contains(int n_par) const { return n_par >= lower() && n_par <= upper(); }
};

// Variable layout of the periodic L x L Ising encoding: site spins, one
// parity and one ancilla variable per lattice edge, then the slack bits.
struct IsingLayout {
    int L = 0;
    int m = 0;
    // Row-major sites; for each site the right edge then the down edge.
    std::vector<std::pair<int, int>> edges;

    int num_sites() const { return L * L; }
    int num_edges() const { return static_cast<int>(edges.size()); }
    std::size_t sigma(int site) const { return static_cast<std::size_t>(site); }
    std::size_t eta(int edge) const { return static_cast<std::size_t>(num_sites() + edge); }
    std::size_t theta(int edge) const { return static_cast<std::size_t>(num_sites() + num_edges() + edge); }
    std::size_t slack(int k) const { return static_cast<std::size_t>(num_sites() + 2 * num_edges() + k); }
    std::size_t num_vars() const { return slack(m); }
    std::vector<std::size_t> slack_vars() const;
};

IsingLayout make_ising_layout(int L, int m);

struct IsingModel {
    QuboModel model;
    IsingLayout layout;
    ParallelInterval interval;
};

// H = sum_<ij> V_ij + A * (sum eta - 2 n_bar - 2 sum_k 2^k s_k)^2
IsingModel build_ising(int L, const ParallelInterval& interval, double A = 1.0);

// Per-edge XNOR gadget; zero exactly when eta = XNOR(si, sj) and theta takes its minimizing value.
double ising_edge_energy(int si, int sj, int eta, int theta);

struct IsingDecoded {
    std::vector<int> spins;  // row-major 0/1
    int n_par = 0;
};

IsingDecoded decode_ising(const SpinState& state, const IsingLayout& layout);

// Parallel-pair count computed straight from a spin grid.
int count_parallel(const std::vector<int>& spins, int L);

struct Validation {
    bool ok = false;
    std::string reason;
    int bin = 0;
};

Validation validate_ground_state(const SpinState& state, const QuboModel& model, const IsingLayout& layout,
                                 const ParallelInterval& interval);

// Builds the zero-energy completion (eta, theta, slack) of a spin grid; requires n_par in the interval.
SpinState complete_ising_state(const std::vector<int>& spins, const IsingLayout& layout,
                               const ParallelInterval& interval);

void write_ising_layout(std::ostream& out, const IsingLayout& layout, const ParallelInterval& interval);

}  // namespace qubodos
