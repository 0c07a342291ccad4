#include "qubodos/reconstruct.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <thread>

#include "qubodos/errors.hpp"
#include "qubodos/logsum.hpp"

namespace qubodos {

void SolverParams::validate() const
{
    if (!(mix > 0.0 && mix < 1.0)) throw InvalidArgument("mix must lie in (0, 1)");
    if (n_cycles < 1 || n_iter < 1) throw InvalidArgument("n_cycles and n_iter must be positive");
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
    if (stagnation_window < 1) throw InvalidArgument("stagnation window must be positive");
}

namespace {

constexpr double kMaxRatio = 1.0 - 1e-15;

struct Member {
    std::size_t hist;
    double log_n;  // -inf when the histogram saw nothing at this bin
};

// Observed bins and, per bin, the histograms whose interval contains it.
struct Problem {
    std::vector<int> bins;
    std::vector<std::vector<Member>> members;
    std::vector<std::vector<std::size_t>> hist_bins;  // per histogram, indices into bins
    std::vector<double> log_N;
    std::vector<double> log_g;
};

Problem make_problem(const HistogramSet& set)
{
    set.validate();
    const auto gaps = coverage_gaps(set);
    if (!gaps.empty()) {
        std::string list;
        for (int b : gaps) list += (list.empty() ? "" : ",") + std::to_string(b);
        throw ReconstructionError("coverage gap at bins " + list);
    }
    Problem p;
    std::map<int, int> observed;
    for (const auto& h : set.histograms) {
        for (const auto& [bin, c] : h.counts) {
            if (c > 0.0) observed[bin] = 1;
        }
    }
    if (observed.empty()) {
        throw ReconstructionError("no bin was observed in any histogram");
    }
    std::map<int, std::size_t> index;
    for (const auto& [bin, unused] : observed) {
        index[bin] = p.bins.size();
        p.bins.push_back(bin);
    }
    p.members.resize(p.bins.size());
    for (const auto& h : set.histograms) {
        if (!(h.total > 0.0)) continue;  // an empty histogram carries no information
        const std::size_t j = p.log_N.size();
        p.log_N.push_back(std::log(h.total));
        p.log_g.push_back(std::log(h.g));
        p.hist_bins.emplace_back();
        for (auto it = index.lower_bound(h.bin_min); it != index.end() && it->first <= h.bin_max; ++it) {
            const double c = h.count(it->first);
            p.members[it->second].push_back({j, c > 0.0 ? std::log(c) : kNegInf});
            p.hist_bins[j].push_back(it->second);
        }
    }
    return p;
}

class Solver {
public:
    explicit Solver(const Problem& p) : p_(p), num_(), den_() {}

    std::vector<double> log_z(const std::vector<double>& log_w)
    {
        std::vector<double> out(p_.hist_bins.size());
        for (std::size_t j = 0; j < out.size(); ++j) {
            scratch_.clear();
            for (auto b : p_.hist_bins[j]) scratch_.push_back(log_w[b]);
            out[j] = log_sum_exp_sorted(scratch_);
        }
        return out;
    }

    // Right-hand side of the self-consistent equations for one bin, in log domain.
    double target(std::size_t b, const std::vector<double>& log_w, const std::vector<double>& log_z,
                  const std::vector<double>& log_z_damp, bool full)
    {
        num_.clear();
        den_.clear();
        for (const auto& m : p_.members[b]) {
            double lr = 0.0;
            if (full) {
                double ratio = std::exp(log_w[b] - log_z[m.hist]);
                if (ratio > kMaxRatio) {
                    ratio = kMaxRatio;
                    clamped = true;
                }
                lr = std::log1p(-ratio);
            }
            if (m.log_n != kNegInf) num_.push_back(m.log_n - p_.log_g[m.hist] - lr);
            den_.push_back(p_.log_N[m.hist] - log_z_damp[m.hist] - p_.log_g[m.hist] - lr);
        }
        return log_sum_exp_sorted(num_) - log_sum_exp_sorted(den_);
    }

    // One relaxation step followed by normalization; returns delta.
    double step(std::vector<double>& log_w, const std::vector<double>& log_z, const std::vector<double>& log_z_damp,
                bool full, double alpha)
    {
        const double la = std::log(alpha);
        const double lb = std::log1p(-alpha);
        next_.resize(log_w.size());
        for (std::size_t b = 0; b < log_w.size(); ++b) {
            next_[b] = log_add_exp(la + target(b, log_w, log_z, log_z_damp, full), lb + log_w[b]);
        }
        const double lz = log_sum_exp(next_);
        changes_.clear();
        for (std::size_t b = 0; b < log_w.size(); ++b) {
            next_[b] -= lz;
            changes_.push_back(std::abs(std::expm1(next_[b] - log_w[b])));
        }
        log_w.swap(next_);
        return sorted_sum(changes_);
    }

    bool clamped = false;

private:
    const Problem& p_;
    std::vector<double> num_, den_, scratch_, next_, changes_;
};

void damp(std::vector<double>& log_z_damp, const std::vector<double>& log_z, double alpha)
{
    const double la = std::log(alpha);
    const double lb = std::log1p(-alpha);
    for (std::size_t j = 0; j < log_z.size(); ++j) {
        log_z_damp[j] = log_add_exp(la + log_z[j], lb + log_z_damp[j]);
    }
}

// Solves the simplified equations directly. With c_j = N_j / g_j, m(E) = sum_j n_j(E) / g_j
// and D(E) = sum_j c_j exp(-f_j), they are the stationary point of the convex function
//   F(f) = sum_E m(E) log D(E) + sum_j c_j f_j,
// whose minimizer gives f_j = log Z_j and W(E) = m(E) / D(E). Damped Newton on F; the
// Hessian is singular along constant shifts of f within a component, so a small ridge
// is added.
std::vector<double> newton_profile(const Problem& p, int max_steps = 500)
{
    const std::size_t nb = p.bins.size();
    const std::size_t nj = p.log_N.size();
    std::vector<double> log_m(nb), log_c(nj);
    std::vector<double> buf;
    for (std::size_t b = 0; b < nb; ++b) {
        buf.clear();
        for (const auto& m : p.members[b]) {
            if (m.log_n != kNegInf) buf.push_back(m.log_n - p.log_g[m.hist]);
        }
        log_m[b] = log_sum_exp(buf);
    }
    for (std::size_t j = 0; j < nj; ++j) log_c[j] = p.log_N[j] - p.log_g[j];

    std::vector<double> log_d(nb);
    auto evaluate = [&](const Eigen::VectorXd& f) {
        double value = 0.0;
        for (std::size_t b = 0; b < nb; ++b) {
            buf.clear();
            for (const auto& m : p.members[b]) buf.push_back(log_c[m.hist] - f[static_cast<Eigen::Index>(m.hist)]);
            log_d[b] = log_sum_exp(buf);
            value += std::exp(log_m[b]) * log_d[b];
        }
        for (std::size_t j = 0; j < nj; ++j) value += std::exp(log_c[j]) * f[static_cast<Eigen::Index>(j)];
        return value;
    };

    const auto n = static_cast<Eigen::Index>(nj);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd grad(n);
    Eigen::MatrixXd hess(n, n);
    double value = evaluate(f);
    for (int step = 0; step < max_steps; ++step) {
        grad.setZero();
        hess.setZero();
        double scale = 0.0;
        for (std::size_t j = 0; j < nj; ++j) {
            grad[static_cast<Eigen::Index>(j)] = std::exp(log_c[j]);
            scale = std::max(scale, std::exp(log_c[j]));
        }
        std::vector<std::pair<Eigen::Index, double>> share;
        for (std::size_t b = 0; b < nb; ++b) {
            const double mb = std::exp(log_m[b]);
            share.clear();
            for (const auto& m : p.members[b]) {
                const auto j = static_cast<Eigen::Index>(m.hist);
                share.emplace_back(j, std::exp(log_c[m.hist] - f[j] - log_d[b]));
            }
            for (const auto& [j, pj] : share) {
                grad[j] -= mb * pj;
                hess(j, j) += mb * pj;
                for (const auto& [k, pk] : share) hess(j, k) -= mb * pj * pk;
            }
        }
        if (grad.cwiseAbs().maxCoeff() <= 1e-14 * scale) break;
        hess.diagonal().array() += 1e-12 * std::max(1.0, hess.diagonal().maxCoeff());
        const Eigen::VectorXd dir = -hess.ldlt().solve(grad);
        const double slope = grad.dot(dir);
        if (!(slope < 0.0)) break;
        double t = 1.0;
        double trial_value = value;
        Eigen::VectorXd trial = f;
        // Close to the minimum the decrease drops below the rounding of F; take the full step.
        const bool tiny = -slope <= 1e-10 * std::abs(value);
        for (; t > 1e-12; t *= 0.5) {
            trial = f + t * dir;
            trial_value = evaluate(trial);
            if (tiny || trial_value <= value + 1e-4 * t * slope) break;
        }
        if (t <= 1e-12) {
            evaluate(f);  // restore log_d for the current point
            break;
        }
        f = trial;
        value = trial_value;
    }
    std::vector<double> log_w(nb);
    for (std::size_t b = 0; b < nb; ++b) log_w[b] = log_m[b] - log_d[b];
    const double lz = log_sum_exp(log_w);
    for (auto& v : log_w) v -= lz;
    return log_w;
}

DensityOfStates to_dos(const Problem& p, const std::vector<double>& log_w)
{
    DensityOfStates dos;
    for (std::size_t b = 0; b < p.bins.size(); ++b) dos.log_w[p.bins[b]] = log_w[b];
    dos.normalize();
    return dos;
}

double residual_of(const Problem& p, const std::vector<double>& log_w)
{
    Solver solver(p);
    const auto lz = solver.log_z(log_w);
    double worst = 0.0;
    for (std::size_t b = 0; b < log_w.size(); ++b) {
        worst = std::max(worst, std::abs(std::expm1(solver.target(b, log_w, lz, lz, true) - log_w[b])));
    }
    return worst;
}

std::vector<std::vector<int>> components_of(const Problem& p)
{
    std::vector<std::size_t> parent(p.bins.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<std::size_t> first(p.log_N.size(), std::numeric_limits<std::size_t>::max());
    for (std::size_t b = 0; b < p.bins.size(); ++b) {
        for (const auto& m : p.members[b]) {
            if (m.log_n == kNegInf) continue;
            if (first[m.hist] == std::numeric_limits<std::size_t>::max()) {
                first[m.hist] = b;
            } else {
                parent[find(b)] = find(first[m.hist]);
            }
        }
    }
    std::map<std::size_t, std::vector<int>> groups;
    for (std::size_t b = 0; b < p.bins.size(); ++b) groups[find(b)].push_back(p.bins[b]);
    std::vector<std::vector<int>> out;
    for (auto& [root, bins] : groups) out.push_back(std::move(bins));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

DensityOfStates reconstruct_approx(const HistogramSet& set, const SolverParams& params, SolverDiagnostics* diag)
{
    params.validate();
    const Problem p = make_problem(set);
    Solver solver(p);
    const std::vector<double> start = newton_profile(p);
    std::vector<double> log_w = start;
    auto log_z = solver.log_z(log_w);
    auto log_z_damp = log_z;

    SolverDiagnostics d;
    double alpha = params.mix;
    double best = std::numeric_limits<double>::infinity();
    double delta = best;
    int since_best = 0;
    for (long long it = 0; it < params.n_iter; ++it) {
        delta = solver.step(log_w, log_z, log_z_damp, false, alpha);
        log_z = solver.log_z(log_w);
        damp(log_z_damp, log_z, alpha);
        ++d.iterations;
        if (delta > 10.0 * best && delta > 1e-10 && d.halvings < params.max_halvings) {
            alpha *= 0.5;
            ++d.halvings;
            log_w = start;
            log_z = solver.log_z(log_w);
            log_z_damp = log_z;
            best = std::numeric_limits<double>::infinity();
            since_best = 0;
            continue;
        }
        if (delta < params.epsilon) break;
        if (delta < best) {
            best = delta;
            since_best = 0;
        } else if (++since_best >= params.stagnation_window) {
            break;
        }
    }
    d.cycles = 1;
    d.delta = delta;
    d.final_mix = alpha;
    d.converged = std::min(best, delta) <= std::max(params.epsilon, 1e-12);
    d.components = components_of(p);
    d.residual = residual_of(p, log_w);
    if (diag) *diag = std::move(d);
    return to_dos(p, log_w);
}

DensityOfStates reconstruct_full(const HistogramSet& set, const DensityOfStates& init, const SolverParams& params,
                                 SolverDiagnostics* diag)
{
    params.validate();
    const Problem p = make_problem(set);
    Solver solver(p);
    std::vector<double> log_w(p.bins.size());
    for (std::size_t b = 0; b < p.bins.size(); ++b) {
        auto it = init.log_w.find(p.bins[b]);
        if (it == init.log_w.end() || !std::isfinite(it->second)) {
            throw InvalidArgument("initial W is zero at observed bin " + std::to_string(p.bins[b]));
        }
        log_w[b] = it->second;
    }
    const double lz0 = log_sum_exp(log_w);
    for (auto& v : log_w) v -= lz0;

    auto log_z = solver.log_z(log_w);
    auto log_z_damp = log_z;
    SolverDiagnostics d;
    double alpha = params.mix;
    double delta = 0.0;
    double last_best = std::numeric_limits<double>::infinity();
    for (int cycle = 0; cycle < params.n_cycles; ++cycle) {
        const auto saved_w = log_w;
        const auto saved_damp = log_z_damp;
        double best = std::numeric_limits<double>::infinity();
        int since_best = 0;
        long long c = 0;
        while (true) {
            delta = solver.step(log_w, log_z, log_z_damp, true, alpha);
            log_z = solver.log_z(log_w);
            ++c;
            ++d.iterations;
            if (delta > 10.0 * best && delta > 1e-10 && d.halvings < params.max_halvings) {
                alpha *= 0.5;
                ++d.halvings;
                log_w = saved_w;
                log_z_damp = saved_damp;
                log_z = solver.log_z(log_w);
                best = std::numeric_limits<double>::infinity();
                since_best = 0;
                c = 0;
                continue;
            }
            if (delta < best) {
                best = delta;
                since_best = 0;
            } else {
                ++since_best;
            }
            if (delta < params.epsilon || c >= params.n_iter || since_best >= params.stagnation_window) break;
        }
        damp(log_z_damp, log_z, alpha);
        d.cycles = cycle + 1;
        last_best = best;
        // Nothing left to relax: W is stationary and the damped Z has caught up.
        double lag = 0.0;
        for (std::size_t j = 0; j < log_z.size(); ++j) lag = std::max(lag, std::abs(log_z[j] - log_z_damp[j]));
        if (c == 1 && best <= std::max(params.epsilon, 1e-14) && lag < 1e-15) break;
    }
    d.delta = delta;
    d.final_mix = alpha;
    d.clamped = solver.clamped;
    d.converged = last_best <= std::max(params.epsilon, 1e-12);
    d.components = components_of(p);
    d.residual = residual_of(p, log_w);
    if (diag) *diag = std::move(d);
    return to_dos(p, log_w);
}

DensityOfStates reconstruct(const HistogramSet& set, const SolverParams& params, SolverDiagnostics* diag)
{
    const auto init = reconstruct_approx(set, params);
    return reconstruct_full(set, init, params, diag);
}

double fixed_point_residual(const HistogramSet& set, const DensityOfStates& w)
{
    const Problem p = make_problem(set);
    std::vector<double> log_w(p.bins.size());
    for (std::size_t b = 0; b < p.bins.size(); ++b) {
        auto it = w.log_w.find(p.bins[b]);
        if (it == w.log_w.end()) return std::numeric_limits<double>::infinity();
        log_w[b] = it->second;
    }
    return residual_of(p, log_w);
}

std::vector<std::vector<int>> observed_components(const HistogramSet& set)
{
    return components_of(make_problem(set));
}

std::vector<HistogramSet> block_histograms(const SampleArchive& archive, const std::vector<IntervalBounds>& intervals,
                                           int blocks)
{
    if (blocks < 2) throw InvalidArgument("block analysis needs at least 2 blocks");
    std::map<int, std::vector<const SampleRecord*>> by_interval;
    for (const auto& r : archive.records) by_interval[r.interval_id].push_back(&r);
    std::vector<HistogramSet> out(static_cast<std::size_t>(blocks));
    for (const auto& iv : intervals) {
        const auto& recs = by_interval[iv.id];
        if (recs.size() % static_cast<std::size_t>(blocks) != 0) {
            throw InvalidArgument("interval " + std::to_string(iv.id) + " has " + std::to_string(recs.size()) +
                                  " records, not divisible into " + std::to_string(blocks) + " blocks");
        }
        const std::size_t per = recs.size() / static_cast<std::size_t>(blocks);
        for (int b = 0; b < blocks; ++b) {
            IntervalHistogram h;
            h.interval_id = iv.id;
            h.bin_min = iv.lo;
            h.bin_max = iv.hi;
            for (std::size_t k = b * per; k < (b + 1) * per; ++k) h.add(recs[k]->bin);
            out[static_cast<std::size_t>(b)].histograms.push_back(std::move(h));
        }
    }
    return out;
}

DensityOfStates block_mean(const std::vector<DensityOfStates>& blocks)
{
    if (blocks.size() < 2) throw InvalidArgument("block analysis needs at least 2 blocks");
    std::map<int, std::vector<double>> values;
    for (const auto& d : blocks) {
        for (const auto& [bin, lw] : d.log_w) values[bin];
    }
    const double s = static_cast<double>(blocks.size());
    DensityOfStates mean;
    for (auto& [bin, v] : values) {
        for (const auto& d : blocks) v.push_back(d.w(bin));
        const double m = sorted_sum(v) / s;
        std::vector<double> sq;
        for (double x : v) sq.push_back((x - m) * (x - m));
        const double sd = std::sqrt(sorted_sum(sq) / s);
        if (m > 0.0) mean.log_w[bin] = std::log(m);
        mean.sem[bin] = sd / std::sqrt(s - 1.0);
    }
    mean.normalized = std::abs(mean.log_total()) < 1e-12;
    return mean;
}

BlockResult block_reconstruct(const std::vector<HistogramSet>& blocks, const SolverParams& params, int workers)
{
    if (blocks.size() < 2) throw InvalidArgument("block analysis needs at least 2 blocks");
    BlockResult result;
    result.blocks.resize(blocks.size());
    result.diagnostics.resize(blocks.size());
    std::vector<std::exception_ptr> errors(blocks.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < blocks.size(); k = next++) {
            try {
                result.blocks[k] = reconstruct(blocks[k], params, &result.diagnostics[k]);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const int n = std::clamp(workers, 1, static_cast<int>(blocks.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    result.mean = block_mean(result.blocks);
    return result;
}

BlockResult block_reconstruct(const SampleArchive& archive, const std::vector<IntervalBounds>& intervals, int blocks,
                              const SolverParams& params, int workers)
{
    return block_reconstruct(block_histograms(archive, intervals, blocks), params, workers);
}

}  // namespace qubodos
