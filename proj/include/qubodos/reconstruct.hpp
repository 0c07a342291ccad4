#pragma once

#include <vector>

#include "qubodos/archive.hpp"
#include "qubodos/histogram.hpp"

namespace qubodos {

struct SolverParams {
    double mix = 0.1;          // alpha, shared by the W relaxation and the damped Z update
    int n_cycles = 100;
    double epsilon = 1e-15;
    long long n_iter = 50000;
    int stagnation_window = 25;  // stop an inner loop after this many iterations without a new best delta
    int max_halvings = 30;

    void validate() const;
};

struct SolverDiagnostics {
    int cycles = 0;
    long long iterations = 0;
    double delta = 0.0;
    double residual = 0.0;
    bool converged = false;
    bool clamped = false;  // some W >= Z_j had to be clamped
    int halvings = 0;
    double final_mix = 0.0;
    // Groups of observed bins tied together by shared histograms; W ratios
    // between different groups are not determined by the data.
    std::vector<std::vector<int>> components;
};

// Simplified equations (W << Z): W(E) = sum_j n_j(E)/g_j / sum_j N_j/(Z_j g_j),
// solved by Newton's method on the equivalent convex problem in log Z_j, then
// relaxed with the fixed-point iteration.
DensityOfStates reconstruct_approx(const HistogramSet& set, const SolverParams& params = {},
                                   SolverDiagnostics* diag = nullptr);

// Full self-consistent equations with nested relaxation and a damped Z array.
DensityOfStates reconstruct_full(const HistogramSet& set, const DensityOfStates& init,
                                 const SolverParams& params = {}, SolverDiagnostics* diag = nullptr);

// Approximate solve followed by full refinement.
DensityOfStates reconstruct(const HistogramSet& set, const SolverParams& params = {},
                            SolverDiagnostics* diag = nullptr);

// max over observed bins of |rhs(E) / W(E) - 1| with Z computed from W.
double fixed_point_residual(const HistogramSet& set, const DensityOfStates& w);

std::vector<std::vector<int>> observed_components(const HistogramSet& set);

// Splits each interval's records into s equal consecutive blocks.
std::vector<HistogramSet> block_histograms(const SampleArchive& archive, const std::vector<IntervalBounds>& intervals,
                                           int blocks);

struct BlockResult {
    DensityOfStates mean;  // per-bin mean of the block W values, with sem = std / sqrt(s - 1)
    std::vector<DensityOfStates> blocks;
    std::vector<SolverDiagnostics> diagnostics;
};

BlockResult block_reconstruct(const std::vector<HistogramSet>& blocks, const SolverParams& params = {},
                              int workers = 1);
BlockResult block_reconstruct(const SampleArchive& archive, const std::vector<IntervalBounds>& intervals, int blocks,
                              const SolverParams& params = {}, int workers = 1);

// Mean and sem = std / sqrt(s - 1) across already-reconstructed W sets.
DensityOfStates block_mean(const std::vector<DensityOfStates>& blocks);

}  // namespace qubodos
