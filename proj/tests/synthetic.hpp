#pragma once

#include <map>
#include <random>
#include <vector>

#include "qubodos/histogram.hpp"

namespace synthetic {

// Unit-stride intervals of width 2^m whose union is exactly [lo, hi].
inline std::vector<qubodos::IntervalBounds> unit_intervals(int lo, int hi, int m)
{
    std::vector<qubodos::IntervalBounds> out;
    const int w = 1 << m;
    for (int s = lo; s + w - 1 <= hi; ++s) {
        out.push_back({static_cast<int>(out.size()), s, s + w - 1});
    }
    return out;
}

// depth draws per interval, each bin picked with probability proportional to its weight.
inline qubodos::HistogramSet multinomial(const std::map<int, double>& weight,
                                         const std::vector<qubodos::IntervalBounds>& intervals, int depth,
                                         std::mt19937_64& rng)
{
    qubodos::HistogramSet set;
    for (const auto& iv : intervals) {
        std::vector<int> bins;
        std::vector<double> w;
        for (int b = iv.lo; b <= iv.hi; ++b) {
            auto it = weight.find(b);
            bins.push_back(b);
            w.push_back(it == weight.end() ? 0.0 : it->second);
        }
        std::discrete_distribution<int> pick(w.begin(), w.end());
        qubodos::IntervalHistogram h;
        h.interval_id = iv.id;
        h.bin_min = iv.lo;
        h.bin_max = iv.hi;
        for (int k = 0; k < depth; ++k) h.add(bins[pick(rng)]);
        set.histograms.push_back(std::move(h));
    }
    return set;
}

inline std::map<int, double> as_weights(const std::map<int, long long>& counts)
{
    std::map<int, double> out;
    for (const auto& [b, c] : counts) out[b] = static_cast<double>(c);
    return out;
}

// Two histograms sharing only their edge bin: W inside each follows its own counts
// and the shared bin fixes the ratio between them. Returned unnormalized, first bin 1.
inline std::vector<double> edge_chain(const std::vector<double>& left, const std::vector<double>& right)
{
    std::vector<double> w;
    for (double c : left) w.push_back(c / left.front());
    const double scale = w.back() / right.front();
    for (std::size_t k = 1; k < right.size(); ++k) w.push_back(right[k] * scale);
    return w;
}

}  // namespace synthetic
