#include "qubodos/reweight.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "qubodos/errors.hpp"
#include "qubodos/logsum.hpp"

namespace qubodos {

double ConditionalAverage::mean(int bin) const
{
    auto it = values.find(bin);
    if (it == values.end()) {
        throw InvalidArgument("no conditional average at bin " + std::to_string(bin));
    }
    return it->second.mean;
}

ConditionalAverage conditional_average(const std::vector<const SampleArchive*>& archives, const Observable& observable)
{
    std::map<int, std::vector<double>> samples;
    for (const auto* archive : archives) {
        for (const auto& r : archive->records) samples[r.bin].push_back(observable(r));
    }
    ConditionalAverage cond;
    for (auto& [bin, v] : samples) {
        const auto n = static_cast<long long>(v.size());
        cond.values[bin] = {sorted_sum(std::move(v)) / static_cast<double>(n), n};
    }
    return cond;
}

ConditionalAverage conditional_average(const SampleArchive& archive, const Observable& observable)
{
    return conditional_average(std::vector<const SampleArchive*>{&archive}, observable);
}

double canonical_expectation(const DensityOfStates& w, const ConditionalAverage& cond, double beta,
                             const EnergyScale& scale)
{
    if (!std::isfinite(beta)) throw InvalidArgument("beta must be finite");
    if (w.log_w.empty()) throw InvalidArgument("empty density of states");
    std::string missing;
    std::vector<double> log_terms;
    std::vector<double> values;
    for (const auto& [bin, lw] : w.log_w) {
        if (lw == kNegInf) continue;
        if (!std::isfinite(lw)) throw InvalidArgument("non-finite W at bin " + std::to_string(bin));
        auto it = cond.values.find(bin);
        if (it == cond.values.end() || it->second.count <= 0) {
            missing += (missing.empty() ? "" : ",") + std::to_string(bin);
            continue;
        }
        if (!std::isfinite(it->second.mean)) {
            throw InvalidArgument("non-finite observable average at bin " + std::to_string(bin));
        }
        log_terms.push_back(lw - beta * scale.energy(bin));
        values.push_back(it->second.mean);
    }
    if (!missing.empty()) {
        throw InvalidArgument("conditional averages missing at bins " + missing);
    }
    const double lz = log_sum_exp(log_terms);
    std::vector<double> weighted;
    for (std::size_t k = 0; k < values.size(); ++k) {
        weighted.push_back(values[k] * std::exp(log_terms[k] - lz));
    }
    return sorted_sum(std::move(weighted));
}

std::vector<double> beta_grid(double lo, double hi, double step)
{
    if (!(step > 0.0) || !(hi >= lo)) throw InvalidArgument("beta grid needs lo <= hi and step > 0");
    std::vector<double> out;
    const auto n = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
    for (long long k = 0; k <= n; ++k) out.push_back(lo + step * static_cast<double>(k));
    return out;
}

CanonicalCurve curve(const DensityOfStates& w, const ConditionalAverage& cond, const std::vector<double>& betas,
                     const std::vector<DensityOfStates>& blocks, const EnergyScale& scale)
{
    for (std::size_t k = 1; k < betas.size(); ++k) {
        if (!(betas[k] > betas[k - 1])) throw InvalidArgument("beta grid must be strictly increasing");
    }
    CanonicalCurve c;
    for (double beta : betas) {
        CurvePoint p{beta, 0.0, 0.0};
        if (blocks.size() >= 2) {
            std::vector<double> v;
            for (const auto& b : blocks) v.push_back(canonical_expectation(b, cond, beta, scale));
            const double s = static_cast<double>(v.size());
            p.mean = sorted_sum(v) / s;
            std::vector<double> sq;
            for (double x : v) sq.push_back((x - p.mean) * (x - p.mean));
            p.sem = std::sqrt(sorted_sum(sq) / s) / std::sqrt(s - 1.0);
        } else {
            p.mean = canonical_expectation(w, cond, beta, scale);
        }
        c.points.push_back(p);
    }
    return c;
}

void write_curve(std::ostream& out, const CanonicalCurve& c)
{
    out << "# beta_kappa\tmean\tsem\n";
    for (const auto& p : c.points) {
        out << format_sig17(p.beta) << '\t' << format_sig17(p.mean) << '\t' << format_sig17(p.sem) << '\n';
    }
}

}  // namespace qubodos
