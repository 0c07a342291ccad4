#include "qubodos/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "qubodos/errors.hpp"
#include "qubodos/logsum.hpp"
#include "qubodos/qubo.hpp"

namespace qubodos {

double IntervalHistogram::count(int bin) const
{
    auto it = counts.find(bin);
    return it == counts.end() ? 0.0 : it->second;
}

void IntervalHistogram::add(int bin, double weight)
{
    if (!contains(bin)) {
        throw InvalidArgument("bin " + std::to_string(bin) + " outside interval " + std::to_string(interval_id));
    }
    counts[bin] += weight;
    total += weight;
}

void IntervalHistogram::validate() const
{
    if (bin_min > bin_max) {
        throw InvalidArgument("histogram " + std::to_string(interval_id) + " has an empty bin range");
    }
    if (!(g >= 1.0)) {
        throw InvalidArgument("histogram " + std::to_string(interval_id) + " has g < 1");
    }
    std::vector<double> values;
    for (const auto& [bin, c] : counts) {
        if (!contains(bin)) {
            throw InvalidArgument("histogram " + std::to_string(interval_id) + " has counts outside its range");
        }
        if (!(c >= 0.0) || !std::isfinite(c)) {
            throw InvalidArgument("histogram " + std::to_string(interval_id) + " has a negative count");
        }
        values.push_back(c);
    }
    const double sum = sorted_sum(values);
    if (std::abs(sum - total) > 1e-9 * std::max(1.0, total)) {
        throw InvalidArgument("histogram " + std::to_string(interval_id) + " total does not match its counts");
    }
}

int HistogramSet::bin_min() const
{
    if (histograms.empty()) throw ReconstructionError("empty histogram set");
    int lo = histograms.front().bin_min;
    for (const auto& h : histograms) lo = std::min(lo, h.bin_min);
    return lo;
}

int HistogramSet::bin_max() const
{
    if (histograms.empty()) throw ReconstructionError("empty histogram set");
    int hi = histograms.front().bin_max;
    for (const auto& h : histograms) hi = std::max(hi, h.bin_max);
    return hi;
}

void HistogramSet::validate() const
{
    if (histograms.empty()) {
        throw ReconstructionError("empty histogram set");
    }
    for (const auto& h : histograms) {
        h.validate();
    }
}

std::vector<int> coverage_gaps(const HistogramSet& set)
{
    std::vector<int> gaps;
    for (int bin = set.bin_min(); bin <= set.bin_max(); ++bin) {
        bool covered = std::any_of(set.histograms.begin(), set.histograms.end(),
                                   [bin](const IntervalHistogram& h) { return h.contains(bin); });
        if (!covered) gaps.push_back(bin);
    }
    return gaps;
}

double DensityOfStates::w(int bin) const
{
    auto it = log_w.find(bin);
    return it == log_w.end() ? 0.0 : std::exp(it->second);
}

double DensityOfStates::log_total() const
{
    std::vector<double> terms;
    for (const auto& [bin, lw] : log_w) terms.push_back(lw);
    return log_sum_exp(std::move(terms));
}

void DensityOfStates::normalize()
{
    if (log_w.empty()) {
        throw ReconstructionError("cannot normalize an empty density of states");
    }
    const double lz = log_total();
    for (auto& [bin, lw] : log_w) lw -= lz;
    const double scale = std::exp(-lz);
    for (auto& [bin, s] : sem) s *= scale;
    normalized = true;
}

DensityOfStates dos_from_counts(const std::map<int, double>& counts)
{
    DensityOfStates dos;
    for (const auto& [bin, c] : counts) {
        if (c > 0.0) dos.log_w[bin] = std::log(c);
    }
    dos.normalize();
    return dos;
}

HistogramSet histograms_from_archive(const SampleArchive& archive, const std::vector<IntervalBounds>& intervals,
                                     const std::vector<double>& g)
{
    HistogramSet set;
    std::map<int, std::size_t> slot;
    for (std::size_t k = 0; k < intervals.size(); ++k) {
        IntervalHistogram h;
        h.interval_id = intervals[k].id;
        h.bin_min = intervals[k].lo;
        h.bin_max = intervals[k].hi;
        h.g = k < g.size() ? g[k] : 1.0;
        slot[h.interval_id] = k;
        set.histograms.push_back(std::move(h));
    }
    for (const auto& r : archive.records) {
        auto it = slot.find(r.interval_id);
        if (it == slot.end()) {
            throw FormatError("archive record for unknown interval " + std::to_string(r.interval_id));
        }
        set.histograms[it->second].add(r.bin);
    }
    return set;
}

std::string format_sig17(double value)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void write_histograms(std::ostream& out, const HistogramSet& set)
{
    bool first = true;
    for (const auto& h : set.histograms) {
        if (!first) out << '\n';
        first = false;
        out << h.interval_id << ' ' << h.bin_min << ' ' << h.bin_max << ' ' << format_real(h.g) << '\n';
        for (const auto& [bin, c] : h.counts) {
            out << bin << ' ' << format_real(c) << '\n';
        }
    }
}

HistogramSet read_histograms(std::istream& in)
{
    HistogramSet set;
    std::string line;
    bool expect_header = true;
    while (std::getline(in, line)) {
        if (line.empty()) {
            expect_header = true;
            continue;
        }
        if (line[0] == '#') continue;
        std::istringstream fields(line);
        if (expect_header) {
            IntervalHistogram h;
            if (!(fields >> h.interval_id >> h.bin_min >> h.bin_max >> h.g)) {
                throw FormatError("bad histogram header: " + line);
            }
            set.histograms.push_back(std::move(h));
            expect_header = false;
            continue;
        }
        int bin = 0;
        double c = 0.0;
        if (!(fields >> bin >> c)) {
            throw FormatError("bad histogram line: " + line);
        }
        set.histograms.back().add(bin, c);
    }
    return set;
}

void write_dos(std::ostream& out, const DensityOfStates& dos, const std::map<int, long long>* exact_counts)
{
    out << "# bin\tlog10_W\tW\tsem";
    if (exact_counts) out << "\tcount";
    out << '\n';
    std::map<int, int> bins;
    for (const auto& [bin, lw] : dos.log_w) bins[bin] = 1;
    if (exact_counts) {
        for (const auto& [bin, c] : *exact_counts) bins[bin] = 1;
    }
    for (const auto& [bin, unused] : bins) {
        auto it = dos.log_w.find(bin);
        const double lw = it == dos.log_w.end() ? kNegInf : it->second;
        auto s = dos.sem.find(bin);
        out << bin << '\t' << (std::isfinite(lw) ? format_sig17(lw / std::log(10.0)) : "-inf") << '\t'
            << format_sig17(std::exp(lw)) << '\t' << format_sig17(s == dos.sem.end() ? 0.0 : s->second);
        if (exact_counts) {
            auto c = exact_counts->find(bin);
            out << '\t' << (c == exact_counts->end() ? 0 : c->second);
        }
        out << '\n';
    }
}

DensityOfStates read_dos(std::istream& in)
{
    DensityOfStates dos;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        int bin = 0;
        std::string log10w;
        double w = 0.0, sem = 0.0;
        if (!(fields >> bin >> log10w >> w >> sem)) {
            throw FormatError("bad density-of-states line: " + line);
        }
        if (log10w != "-inf") {
            dos.log_w[bin] = std::stod(log10w) * std::log(10.0);
            if (sem != 0.0) dos.sem[bin] = sem;
        }
    }
    const double lz = dos.log_w.empty() ? 0.0 : dos.log_total();
    dos.normalized = std::abs(lz) < 1e-12;
    return dos;
}

}  // namespace qubodos
