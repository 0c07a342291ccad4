#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "qubodos/archive.hpp"

namespace qubodos {

// Bin range [lo, hi] sampled by one interval.
struct IntervalBounds {
    int id = 0;
    int lo = 0;
    int hi = 0;

    bool contains(int bin) const { return bin >= lo && bin <= hi; }
};

// Counts are real so that exact expected histograms (N_j W / Z_j) can be fed to the solver.
struct IntervalHistogram {
    int interval_id = 0;
    int bin_min = 0;
    int bin_max = 0;
    std::map<int, double> counts;
    double total = 0.0;
    double g = 1.0;  // statistical inefficiency 1 + 2 tau

    bool contains(int bin) const { return bin >= bin_min && bin <= bin_max; }
    double count(int bin) const;
    void add(int bin, double weight = 1.0);
    void validate() const;
};

struct HistogramSet {
    std::vector<IntervalHistogram> histograms;

    int bin_min() const;
    int bin_max() const;
    void validate() const;
};

// Bins inside the global range that no interval covers.
std::vector<int> coverage_gaps(const HistogramSet& set);

// Normalized (or not) density of states in log domain; bins without an entry have W = 0.
struct DensityOfStates {
    std::map<int, double> log_w;
    bool normalized = false;
    std::map<int, double> sem;  // standard error of W (linear scale), when available

    double w(int bin) const;
    double log_total() const;
    void normalize();
};

DensityOfStates dos_from_counts(const std::map<int, double>& counts);

// One histogram per interval from the archive records tagged with that interval.
HistogramSet histograms_from_archive(const SampleArchive& archive, const std::vector<IntervalBounds>& intervals,
                                     const std::vector<double>& g = {});

// "<interval_id> <bin_min> <bin_max> <g>" header, then "bin count" lines; histograms separated by blank lines.
void write_histograms(std::ostream& out, const HistogramSet& set);
HistogramSet read_histograms(std::istream& in);

// Tab-separated "bin log10_W W sem" rows; the optional exact counts add a fifth column.
void write_dos(std::ostream& out, const DensityOfStates& dos, const std::map<int, long long>* exact_counts = nullptr);
DensityOfStates read_dos(std::istream& in);

std::string format_sig17(double value);

}  // namespace qubodos
