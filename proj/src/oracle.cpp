#include "qubodos/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <random>
#include <thread>

#include "qubodos/errors.hpp"
#include "qubodos/ising.hpp"
#include "qubodos/rng.hpp"

namespace qubodos {

long long ExactDos::total() const
{
    long long sum = 0;
    for (const auto& [bin, c] : counts) sum += c;
    return sum;
}

DensityOfStates ExactDos::normalized() const
{
    std::map<int, double> real;
    for (const auto& [bin, c] : counts) real[bin] = static_cast<double>(c);
    return dos_from_counts(real);
}

std::vector<int> ising_spins(std::uint32_t mask, int L)
{
    std::vector<int> spins(static_cast<std::size_t>(L * L));
    for (int s = 0; s < L * L; ++s) spins[s] = (mask >> s) & 1u;
    return spins;
}

IsingStates enumerate_ising(int L)
{
    if (L < 2 || L % 2 != 0) throw InvalidArgument("Ising enumeration needs an even L >= 2");
    if (L > 4) throw InvalidArgument("Ising enumeration is limited to L <= 4");
    IsingStates out;
    out.L = L;
    const std::uint32_t states = 1u << (L * L);
    out.n_par.resize(states);
    for (std::uint32_t mask = 0; mask < states; ++mask) {
        const int n = count_parallel(ising_spins(mask, L), L);
        out.n_par[mask] = n;
        ++out.dos.counts[n];
    }
    return out;
}

std::vector<char> canonical_form(const std::vector<int>& bonds, int num_edges)
{
    std::vector<char> bits(static_cast<std::size_t>(num_edges), 0);
    for (int e : bonds) bits.at(static_cast<std::size_t>(e)) = 1;
    return bits;
}

namespace {

// Depth-first search over edge inclusion with degree-2 pruning.
class CoverSearch {
public:
    explicit CoverSearch(const CuboidLattice& lattice) : lat_(lattice)
    {
        const int n = lattice.num_sites();
        undecided_.assign(n, 0);
        for (const auto& e : lattice.edges()) {
            ++undecided_[e[0]];
            ++undecided_[e[1]];
        }
        degree_.assign(n, 0);
    }

    // Applies a decision; returns false when some site can no longer reach degree 2.
    bool push(int e, bool take)
    {
        const auto& ed = lat_.edges()[e];
        --undecided_[ed[0]];
        --undecided_[ed[1]];
        if (take) {
            ++degree_[ed[0]];
            ++degree_[ed[1]];
            chosen_.push_back(e);
        }
        for (int s : {ed[0], ed[1]}) {
            if (degree_[s] > 2 || degree_[s] + undecided_[s] < 2) return false;
        }
        return true;
    }

    void pop(int e, bool take)
    {
        const auto& ed = lat_.edges()[e];
        ++undecided_[ed[0]];
        ++undecided_[ed[1]];
        if (take) {
            --degree_[ed[0]];
            --degree_[ed[1]];
            chosen_.pop_back();
        }
    }

    void run(int e, std::vector<std::vector<int>>& out)
    {
        if (e == lat_.num_edges()) {
            out.push_back(chosen_);
            return;
        }
        for (bool take : {false, true}) {
            if (push(e, take)) run(e + 1, out);
            pop(e, take);
        }
    }

    // Enumerates feasible decision prefixes of the first k edges.
    void prefixes(int e, int k, std::vector<bool>& cur, std::vector<std::vector<bool>>& out)
    {
        if (e == k) {
            out.push_back(cur);
            return;
        }
        for (bool take : {false, true}) {
            cur.push_back(take);
            if (push(e, take)) prefixes(e + 1, k, cur, out);
            pop(e, take);
            cur.pop_back();
        }
    }

    bool apply(const std::vector<bool>& prefix)
    {
        for (std::size_t e = 0; e < prefix.size(); ++e) {
            if (!push(static_cast<int>(e), prefix[e])) return false;
        }
        return true;
    }

private:
    const CuboidLattice& lat_;
    std::vector<int> undecided_;
    std::vector<int> degree_;
    std::vector<int> chosen_;
};

}  // namespace

MeltStates enumerate_melt(const CuboidLattice& lattice, int workers)
{
    if (lattice.num_sites() > 18) {
        throw InvalidArgument("melt enumeration is limited to 18 sites");
    }
    const int k = std::min(8, lattice.num_edges());
    std::vector<std::vector<bool>> prefixes;
    {
        CoverSearch search(lattice);
        std::vector<bool> cur;
        search.prefixes(0, k, cur, prefixes);
    }
    std::vector<std::vector<std::vector<int>>> found(prefixes.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_lock;
    auto work = [&] {
        try {
            for (std::size_t p = next++; p < prefixes.size(); p = next++) {
                CoverSearch search(lattice);
                if (search.apply(prefixes[p])) search.run(k, found[p]);
            }
        } catch (...) {
            std::lock_guard<std::mutex> guard(error_lock);
            error = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < std::max(1, workers); ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);

    std::vector<std::pair<std::vector<char>, std::vector<int>>> all;
    for (auto& part : found) {
        for (auto& bonds : part) {
            auto key = canonical_form(bonds, lattice.num_edges());
            all.emplace_back(std::move(key), std::move(bonds));
        }
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());

    MeltStates out;
    out.dims = lattice.dims();
    for (auto& [key, bonds] : all) {
        RingConfiguration config = rings_from_bonds(bonds, lattice);
        ++out.dos.counts[config.n_c];
        out.configs.push_back(std::move(config));
        out.bond_sets.push_back(std::move(bonds));
    }
    return out;
}

BinQuartiles summarize(std::vector<double> samples)
{
    if (samples.empty()) throw InvalidArgument("cannot summarize an empty sample");
    std::sort(samples.begin(), samples.end());
    auto quantile = [&](double q) {
        const double h = (static_cast<double>(samples.size()) - 1.0) * q;
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, samples.size() - 1);
        return samples[lo] + (h - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
    };
    BinQuartiles b;
    b.q1 = quantile(0.25);
    b.q2 = quantile(0.5);
    b.q3 = quantile(0.75);
    const double iqr = b.q3 - b.q1;
    b.whisker_lo = b.q1;
    b.whisker_hi = b.q3;
    for (double x : samples) {
        if (x >= b.q1 - 1.5 * iqr) b.whisker_lo = std::min(b.whisker_lo, x);
        if (x <= b.q3 + 1.5 * iqr) b.whisker_hi = std::max(b.whisker_hi, x);
    }
    b.samples = std::move(samples);
    return b;
}

ReferenceDistribution reference_reconstructions(const ExactDos& exact, const std::vector<IntervalBounds>& intervals,
                                                int depth, int draws, std::uint64_t seed,
                                                const SolverParams& params, int workers)
{
    if (depth < 1 || draws < 1) throw InvalidArgument("depth and draw count must be positive");
    struct Sampler {
        std::vector<int> bins;
        std::vector<double> weights;
    };
    std::vector<Sampler> samplers;
    for (const auto& iv : intervals) {
        Sampler s;
        for (const auto& [bin, c] : exact.counts) {
            if (iv.contains(bin) && c > 0) {
                s.bins.push_back(bin);
                s.weights.push_back(static_cast<double>(c));
            }
        }
        if (s.bins.empty()) throw ReconstructionError("interval " + std::to_string(iv.id) + " holds no states");
        samplers.push_back(std::move(s));
    }
    std::vector<std::map<int, double>> results(static_cast<std::size_t>(draws));
    std::vector<std::exception_ptr> errors(results.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t r = next++; r < results.size(); r = next++) {
            try {
                Rng rng(derive_seed(seed, "reference", r));
                HistogramSet set;
                for (std::size_t k = 0; k < intervals.size(); ++k) {
                    IntervalHistogram h;
                    h.interval_id = intervals[k].id;
                    h.bin_min = intervals[k].lo;
                    h.bin_max = intervals[k].hi;
                    std::discrete_distribution<std::size_t> pick(samplers[k].weights.begin(),
                                                                  samplers[k].weights.end());
                    for (int d = 0; d < depth; ++d) h.add(samplers[k].bins[pick(rng)]);
                    set.histograms.push_back(std::move(h));
                }
                const auto w = reconstruct(set, params);
                for (const auto& [bin, c] : exact.counts) results[r][bin] = w.w(bin);
            } catch (...) {
                errors[r] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < std::max(1, workers); ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    ReferenceDistribution ref;
    for (const auto& [bin, c] : exact.counts) {
        std::vector<double> v;
        for (const auto& res : results) v.push_back(res.at(bin));
        ref.bins[bin] = summarize(std::move(v));
    }
    return ref;
}

HistogramSet exact_histograms(const ExactDos& exact, const std::vector<IntervalBounds>& intervals, double total)
{
    HistogramSet set;
    for (const auto& iv : intervals) {
        IntervalHistogram h;
        h.interval_id = iv.id;
        h.bin_min = iv.lo;
        h.bin_max = iv.hi;
        long long z = 0;
        for (const auto& [bin, c] : exact.counts) {
            if (iv.contains(bin)) z += c;
        }
        if (z == 0) throw ReconstructionError("interval " + std::to_string(iv.id) + " holds no states");
        for (const auto& [bin, c] : exact.counts) {
            if (iv.contains(bin) && c > 0) {
                h.counts[bin] = total * static_cast<double>(c) / static_cast<double>(z);
            }
        }
        h.total = total;
        set.histograms.push_back(std::move(h));
    }
    return set;
}

}  // namespace qubodos
