#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <vector>

#include "qubodos/archive.hpp"
#include "qubodos/histogram.hpp"

namespace qubodos {

// Physical energy of a bin: E = e0 + step * bin. For melts the default (0, 1)
// makes beta the reduced stiffness beta * kappa_b.
struct EnergyScale {
    double e0 = 0.0;
    double step = 1.0;

    double energy(int bin) const { return e0 + step * bin; }
};

struct BinAverage {
    double mean = 0.0;
    long long count = 0;
};

struct ConditionalAverage {
    std::map<int, BinAverage> values;

    double mean(int bin) const;
};

using Observable = std::function<double(const SampleRecord&)>;

// Pools every record with a given bin, whatever interval it came from.
ConditionalAverage conditional_average(const std::vector<const SampleArchive*>& archives, const Observable& observable);
ConditionalAverage conditional_average(const SampleArchive& archive, const Observable& observable);

// sum_E <O>_E W(E) exp(-beta E) / sum_E W(E) exp(-beta E), summed in log domain.
double canonical_expectation(const DensityOfStates& w, const ConditionalAverage& cond, double beta,
                             const EnergyScale& scale = {});

struct CurvePoint {
    double beta = 0.0;
    double mean = 0.0;
    double sem = 0.0;
};

struct CanonicalCurve {
    std::vector<CurvePoint> points;
};

std::vector<double> beta_grid(double lo, double hi, double step);

// With two or more block reconstructions the mean and SEM are taken across the
// per-block curves; otherwise the curve of w is returned with zero SEM.
CanonicalCurve curve(const DensityOfStates& w, const ConditionalAverage& cond, const std::vector<double>& betas,
                     const std::vector<DensityOfStates>& blocks = {}, const EnergyScale& scale = {});

// Tab-separated "beta_kappa mean sem" rows.
void write_curve(std::ostream& out, const CanonicalCurve& c);

}  // namespace qubodos
