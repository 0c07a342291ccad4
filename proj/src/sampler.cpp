#include "qubodos/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "qubodos/errors.hpp"

namespace qubodos {

void TemperatureLadder::validate() const
{
    if (temps.size() < 2) {
        throw InvalidArgument("temperature ladder needs at least two replicas");
    }
    for (std::size_t k = 0; k < temps.size(); ++k) {
        if (!(temps[k] > 0.0) || !std::isfinite(temps[k])) {
            throw InvalidArgument("temperatures must be positive and finite");
        }
        if (k > 0 && !(temps[k] < temps[k - 1])) {
            throw InvalidArgument("temperature ladder must be strictly decreasing");
        }
    }
}

TemperatureLadder geometric_ladder(double t_max, double t_min, std::size_t n)
{
    if (n < 2 || !(t_max > t_min) || !(t_min > 0.0)) {
        throw InvalidArgument("geometric ladder needs n >= 2 and t_max > t_min > 0");
    }
    TemperatureLadder ladder;
    const double ratio = std::log(t_min / t_max) / static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k) {
        ladder.temps.push_back(t_max * std::exp(ratio * static_cast<double>(k)));
    }
    ladder.temps.back() = t_min;
    return ladder;
}

EnergyScales measure_energy_scales(const QuboModel& model, std::uint64_t seed, int samples)
{
    if (model.num_vars() == 0) {
        throw CalibrationError("cannot calibrate an empty model");
    }
    if (model.is_zero()) {
        throw CalibrationError("degenerate model: all coefficients are zero");
    }
    Rng rng(derive_seed(seed, "energy-scales"));
    std::bernoulli_distribution coin(0.5);
    std::uniform_int_distribution<std::size_t> pick(0, model.num_vars() - 1);
    double sum = 0.0, sum_sq = 0.0, flip_sq = 0.0;
    SpinState state(model.num_vars());
    for (int s = 0; s < samples; ++s) {
        for (std::size_t i = 0; i < state.size(); ++i) {
            state.set(i, coin(rng));
        }
        const double e = model.evaluate(state);
        sum += e;
        sum_sq += e * e;
        const double d = model.delta_flip(state, pick(rng));
        flip_sq += d * d;
    }
    EnergyScales scales;
    const double mean = sum / samples;
    scales.rms_energy = std::sqrt(std::max(0.0, sum_sq / samples - mean * mean));
    scales.rms_flip = std::sqrt(flip_sq / samples);
    if (!(scales.rms_flip > 0.0)) {
        throw CalibrationError("degenerate model: single flips never change the energy");
    }
    if (!(scales.rms_energy > 0.0)) {
        scales.rms_energy = scales.rms_flip;
    }
    return scales;
}

std::size_t initial_replica_count(std::size_t num_vars)
{
    const auto n = static_cast<std::size_t>(std::ceil(2.0 * std::sqrt(static_cast<double>(num_vars)) - 1e-9));
    return std::max<std::size_t>(2, n);
}

double histogram_overlap(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.empty() || b.empty()) {
        return 0.0;
    }
    const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
    const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
    const double lo = std::min(*amin, *bmin);
    const double hi = std::max(*amax, *bmax);
    if (hi - lo < 1e-12) {
        return 1.0;
    }
    bool integral = true;
    for (const auto* v : {&a, &b}) {
        for (double e : *v) {
            integral = integral && std::abs(e - std::round(e)) < 1e-9;
        }
    }
    std::size_t nbins = 32;
    double width = (hi - lo) / static_cast<double>(nbins);
    double origin = lo;
    if (integral && hi - lo <= 64.0) {
        nbins = static_cast<std::size_t>(std::llround(hi - lo)) + 1;
        width = 1.0;
        origin = lo - 0.5;
    }
    auto fill = [&](const std::vector<double>& v) {
        std::vector<double> h(nbins, 0.0);
        for (double e : v) {
            auto k = static_cast<std::size_t>(std::floor((e - origin) / width));
            h[std::min(k, nbins - 1)] += 1.0 / static_cast<double>(v.size());
        }
        return h;
    };
    const auto ha = fill(a);
    const auto hb = fill(b);
    double cross = 0.0;
    for (std::size_t k = 0; k < nbins; ++k) {
        cross = std::max(cross, std::min(ha[k], hb[k]));
    }
    const double peak = std::min(*std::max_element(ha.begin(), ha.end()), *std::max_element(hb.begin(), hb.end()));
    return cross / peak;
}

double exchange_acceptance(double beta_i, double beta_j, double energy_i, double energy_j)
{
    const double x = (beta_i - beta_j) * (energy_i - energy_j);
    return x >= 0.0 ? 1.0 : std::exp(x);
}

LadderCalibration calibrate_ladder(const QuboModel& model, const std::vector<std::size_t>& slack_vars,
                                   std::uint64_t seed, const CalibrationParams& params)
{
    LadderCalibration out;
    out.scales = measure_energy_scales(model, seed, params.random_samples);
    const double t_max = params.tmax_factor * out.scales.rms_energy;
    const double t_min = params.tmin_factor * out.scales.rms_flip;
    if (!(t_max > t_min)) {
        throw CalibrationError("temperature bounds collapsed");
    }
    out.ladder = geometric_ladder(t_max, t_min, initial_replica_count(model.num_vars()));

    for (int round = 0; round < params.max_rounds; ++round) {
        out.rounds = round + 1;
        SamplerConfig pilot;
        pilot.total_sweeps = params.pilot_sweeps;
        pilot.seed = derive_seed(seed, "ladder-pilot", static_cast<std::uint64_t>(round));
        pilot.slack_vars = slack_vars;
        pilot.stride = params.pilot_sweeps + 1;  // no harvesting
        RunStats stats;
        run_sampler(model, pilot, out.ladder, nullptr, &stats, true);

        // Drop interior replicas whose neighbours already overlap strongly on their own,
        // then bisect the pairs that overlap too little.
        const auto& trace = stats.energy_trace;
        std::vector<std::size_t> kept{0};
        for (std::size_t k = 1; k + 1 < out.ladder.size(); ++k) {
            if (histogram_overlap(trace[kept.back()], trace[k + 1]) < params.prune_overlap) {
                kept.push_back(k);
            }
        }
        kept.push_back(out.ladder.size() - 1);

        out.overlaps.clear();
        std::vector<double> temps;
        bool refined = kept.size() < out.ladder.size();
        for (std::size_t k = 0; k < kept.size(); ++k) {
            temps.push_back(out.ladder.temps[kept[k]]);
            if (k + 1 == kept.size()) break;
            const double ov = histogram_overlap(trace[kept[k]], trace[kept[k + 1]]);
            out.overlaps.push_back(ov);
            if (ov < params.overlap_target) {
                temps.push_back(std::sqrt(out.ladder.temps[kept[k]] * out.ladder.temps[kept[k + 1]]));
                refined = true;
            }
        }
        if (temps.size() > params.max_replicas) {
            break;
        }
        out.ladder.temps = std::move(temps);
        if (!refined) {
            out.overlap_ok = true;
            break;
        }
    }
    if (!out.overlap_ok) {
        out.overlaps.clear();
    }
    return out;
}

void SamplerConfig::validate(std::size_t num_vars) const
{
    if (sweeps_per_exchange < 1 || stride < 1 || total_sweeps < 0 || depth < 0) {
        throw InvalidArgument("sampler counts must be positive");
    }
    if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
        throw InvalidArgument("burn-in fraction must lie in [0, 1)");
    }
    for (auto s : slack_vars) {
        if (s >= num_vars) {
            throw InvalidArgument("slack variable index out of range");
        }
    }
}

ParallelTempering::ParallelTempering(const QuboModel& model, TemperatureLadder ladder,
                                     std::vector<std::size_t> slack_vars, std::uint64_t seed,
                                     const SpinState* initial)
    : model_(&model), ladder_(std::move(ladder)), is_slack_(model.num_vars(), 0)
{
    ladder_.validate();
    if (model.num_vars() == 0) {
        throw InvalidArgument("cannot sample an empty model");
    }
    if (initial && initial->size() != model.num_vars()) {
        throw DimensionError("initial state does not match the model");
    }
    for (auto s : slack_vars) {
        if (s >= model.num_vars()) {
            throw InvalidArgument("slack variable index out of range");
        }
        is_slack_[s] = 1;
    }
    for (std::size_t i = 0; i < model.num_vars(); ++i) {
        (is_slack_[i] ? slack_ : regular_).push_back(i);
    }
    const std::size_t n = ladder_.size();
    exchange_stream_.seed(derive_seed(seed, "exchange"));
    exchange_tries_.assign(n, 0);
    exchange_accepts_.assign(n, 0);
    last_regular_.assign(n, 0);
    for (std::size_t r = 0; r < n; ++r) {
        streams_.emplace_back(derive_seed(seed, "replica", r));
        SpinState s(model.num_vars());
        std::bernoulli_distribution coin(0.5);
        for (std::size_t i = 0; i < s.size(); ++i) {
            s.set(i, coin(streams_[r]));
        }
        if (initial) {
            s = *initial;
        }
        energies_.push_back(model.evaluate(s));
        states_.push_back(std::move(s));
    }
    fields_.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        refresh_fields(r);
    }
}

void ParallelTempering::refresh_fields(std::size_t r)
{
    const std::size_t n = model_->num_vars();
    auto& field = fields_[r];
    field.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        field[i] = model_->linear(i);
        for (const auto& c : model_->neighbors(i)) {
            if (states_[r][c.other]) field[i] += c.weight;
        }
    }
}

std::size_t ParallelTempering::pick_variable(std::size_t r)
{
    auto& rng = streams_[r];
    const std::vector<std::size_t>* pool = &regular_;
    if (regular_.empty()) {
        pool = &slack_;
    } else if (!slack_.empty() && last_regular_[r]) {
        pool = &slack_;
    }
    last_regular_[r] = pool == &regular_ ? 1 : 0;
    return (*pool)[uniform_index(rng, pool->size())];
}

void ParallelTempering::sweep()
{
    const std::size_t n = model_->num_vars();
    for (std::size_t r = 0; r < states_.size(); ++r) {
        const double beta = 1.0 / ladder_.temps[r];
        auto& state = states_[r];
        auto& field = fields_[r];
        for (std::size_t step = 0; step < n; ++step) {
            const std::size_t i = pick_variable(r);
            const double delta = state[i] ? -field[i] : field[i];
            const double cost = beta * delta;
            if (cost <= 0.0 || (cost < 745.0 && uniform_real(streams_[r]) < std::exp(-cost))) {
                state.flip(i);
                energies_[r] += delta;
                const double sign = state[i] ? 1.0 : -1.0;
                for (const auto& c : model_->neighbors(i)) {
                    field[c.other] += sign * c.weight;
                }
            }
        }
    }
}

void ParallelTempering::exchange()
{
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (std::size_t parity = 0; parity < 2; ++parity) {
        for (std::size_t k = parity; k + 1 < states_.size(); k += 2) {
            const double a = exchange_acceptance(1.0 / ladder_.temps[k], 1.0 / ladder_.temps[k + 1], energies_[k],
                                                 energies_[k + 1]);
            ++exchange_tries_[k];
            if (a >= 1.0 || uniform(exchange_stream_) < a) {
                ++exchange_accepts_[k];
                std::swap(states_[k], states_[k + 1]);
                std::swap(energies_[k], energies_[k + 1]);
                std::swap(fields_[k], fields_[k + 1]);
            }
        }
    }
}

void ParallelTempering::resync()
{
    for (std::size_t r = 0; r < states_.size(); ++r) {
        const double full = model_->evaluate(states_[r]);
        max_drift_ = std::max(max_drift_, std::abs(full - energies_[r]));
        energies_[r] = full;
        refresh_fields(r);
    }
}

std::vector<double> ParallelTempering::exchange_rates() const
{
    std::vector<double> out;
    for (std::size_t k = 0; k + 1 < states_.size(); ++k) {
        out.push_back(exchange_tries_[k] ? static_cast<double>(exchange_accepts_[k]) / exchange_tries_[k] : 0.0);
    }
    return out;
}

SampleArchive run_sampler(const QuboModel& model, const SamplerConfig& config, const TemperatureLadder& ladder,
                          const HarvestValidator& validator, RunStats* stats, bool trace_energies)
{
    config.validate(model.num_vars());
    ParallelTempering pt(model, ladder, config.slack_vars, config.seed,
                         config.initial_state ? &*config.initial_state : nullptr);
    SampleArchive archive;
    archive.model_hash = model_hash(model);
    archive.num_vars = model.num_vars();

    RunStats local;
    if (trace_energies) {
        local.energy_trace.resize(pt.num_replicas());
    }
    const auto burn_in = static_cast<long long>(std::llround(config.burn_in_fraction * config.total_sweeps));
    for (long long s = 1; s <= config.total_sweeps; ++s) {
        pt.sweep();
        local.sweeps = s;
        if (s % config.sweeps_per_exchange == 0) {
            pt.exchange();
        }
        if (config.resync_interval > 0 && s % config.resync_interval == 0) {
            pt.resync();
        }
        if (s <= burn_in) {
            continue;
        }
        if (trace_energies) {
            for (std::size_t r = 0; r < pt.num_replicas(); ++r) {
                local.energy_trace[r].push_back(pt.energy(r));
            }
        }
        if (!validator || (s - burn_in) % config.stride != 0) {
            continue;
        }
        ++local.harvest_attempts;
        std::optional<int> bin;
        if (std::abs(pt.coldest_energy() - config.ground_energy) <= 1e-9) {
            bin = validator(pt.coldest());
        }
        if (!bin) {
            ++local.rejected;
            continue;
        }
        archive.append(SampleRecord{config.interval_id, *bin, pt.coldest(), s, config.seed});
        if (config.depth > 0 && static_cast<long long>(archive.size()) >= config.depth) {
            break;
        }
    }
    pt.resync();
    local.max_drift = pt.max_drift();
    local.exchange_rate = pt.exchange_rates();
    if (stats) {
        *stats = std::move(local);
    }
    return archive;
}

double estimate_autocorrelation(const std::vector<SpinState>& trajectory)
{
    const std::size_t steps = trajectory.size();
    if (steps < 100) {
        throw InvalidArgument("autocorrelation needs at least 100 states, got " + std::to_string(steps));
    }
    const std::size_t n = trajectory.front().size();
    std::vector<double> mean(n, 0.0);
    for (const auto& s : trajectory) {
        if (s.size() != n) {
            throw DimensionError("trajectory states differ in size");
        }
        for (std::size_t i = 0; i < n; ++i) {
            mean[i] += 2.0 * s[i] - 1.0;
        }
    }
    for (auto& m : mean) {
        m /= static_cast<double>(steps);
    }
    double c0 = 0.0;
    for (const auto& state : trajectory) {
        for (std::size_t i = 0; i < n; ++i) {
            const double y = 2.0 * state[i] - 1.0 - mean[i];
            c0 += y * y;
        }
    }
    c0 /= static_cast<double>(steps);
    if (c0 <= 1e-300) {
        return 0.0;  // frozen trajectory
    }
    // Batch means: with batches of b states, b * Var(batch mean) / Var = 1 + 2 tau
    // once b is long compared with tau. The overlap of batch means sums over variables.
    const auto b = static_cast<std::size_t>(std::sqrt(static_cast<double>(steps)));
    const std::size_t batches = steps / b;
    double spread = 0.0;
    std::vector<double> batch(n);
    for (std::size_t k = 0; k < batches; ++k) {
        std::fill(batch.begin(), batch.end(), 0.0);
        for (std::size_t t = k * b; t < (k + 1) * b; ++t) {
            for (std::size_t i = 0; i < n; ++i) {
                batch[i] += 2.0 * trajectory[t][i] - 1.0;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double d = batch[i] / static_cast<double>(b) - mean[i];
            spread += d * d;
        }
    }
    spread /= static_cast<double>(batches);
    const double tau = 0.5 * (static_cast<double>(b) * spread / c0 - 1.0);
    return std::max(tau, 0.0);
}

}  // namespace qubodos
