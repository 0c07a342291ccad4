#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "qubodos/archive.hpp"
#include "qubodos/qubo.hpp"
#include "qubodos/rng.hpp"

namespace qubodos {

// Reduced temperatures k_B T, strictly decreasing; the last replica is the coldest.
struct TemperatureLadder {
    std::vector<double> temps;

    std::size_t size() const { return temps.size(); }
    double t_max() const { return temps.front(); }
    double t_min() const { return temps.back(); }
    void validate() const;
};

// Geometric ladder of n temperatures between t_max and t_min.
TemperatureLadder geometric_ladder(double t_max, double t_min, std::size_t n);

struct CalibrationParams {
    double tmax_factor = 316.22776601683796;  // 10^2.5 times the random-state RMS energy
    double tmin_factor = 1e-3;                // times the RMS single-flip change
    int random_samples = 2000;
    int max_rounds = 10;
    long long pilot_sweeps = 2000;
    double overlap_target = 0.5;
    double prune_overlap = 0.9;  // remove a replica when its two neighbours overlap at least this much
    std::size_t max_replicas = 160;
};

struct EnergyScales {
    double rms_energy = 0.0;  // std of H over uniform random states
    double rms_flip = 0.0;    // RMS of single-flip energy changes over random states
};

EnergyScales measure_energy_scales(const QuboModel& model, std::uint64_t seed, int samples);

// ceil(2 sqrt(n)), at least 2.
std::size_t initial_replica_count(std::size_t num_vars);

// Height of the intersection of two normalized histograms relative to the
// lower of their two peaks (1 = identical peaks, 0 = disjoint supports).
double histogram_overlap(const std::vector<double>& energies_a, const std::vector<double>& energies_b);

struct LadderCalibration {
    TemperatureLadder ladder;
    EnergyScales scales;
    int rounds = 0;
    bool overlap_ok = false;
    std::vector<double> overlaps;  // adjacent pairs of the final ladder
};

LadderCalibration calibrate_ladder(const QuboModel& model, const std::vector<std::size_t>& slack_vars,
                                   std::uint64_t seed, const CalibrationParams& params = {});

// min(1, exp((beta_i - beta_j) (E_i - E_j)))
double exchange_acceptance(double beta_i, double beta_j, double energy_i, double energy_j);

// Returns the bin of a valid ground state in the sampled interval, nullopt otherwise.
using HarvestValidator = std::function<std::optional<int>(const SpinState&)>;

struct SamplerConfig {
    int interval_id = 0;
    int sweeps_per_exchange = 1;
    long long total_sweeps = 10000;
    double burn_in_fraction = 0.1;
    long long stride = 1;  // sweeps between harvest attempts
    long long depth = 0;   // stop after this many records; 0 = no limit
    std::uint64_t seed = 1;
    std::vector<std::size_t> slack_vars;
    double ground_energy = 0.0;
    long long resync_interval = 1000;
    std::optional<SpinState> initial_state;  // every replica starts here instead of at random

    void validate(std::size_t num_vars) const;
};

struct RunStats {
    long long sweeps = 0;
    long long harvest_attempts = 0;
    long long rejected = 0;  // harvest attempts that found an excited or invalid state
    double max_drift = 0.0;  // largest incremental-vs-full energy mismatch seen at resync
    std::vector<double> exchange_rate;
    std::vector<std::vector<double>> energy_trace;  // per replica, filled when trace_energies is set
};

// Replica-exchange Metropolis over single-bit flips. Within a sweep, flips
// alternate strictly between non-slack and slack variables.
class ParallelTempering {
public:
    ParallelTempering(const QuboModel& model, TemperatureLadder ladder, std::vector<std::size_t> slack_vars,
                      std::uint64_t seed, const SpinState* initial = nullptr);

    void sweep();
    void exchange();
    void resync();

    std::size_t num_replicas() const { return states_.size(); }
    const SpinState& state(std::size_t replica) const { return states_[replica]; }
    double energy(std::size_t replica) const { return energies_[replica]; }
    const SpinState& coldest() const { return states_.back(); }
    double coldest_energy() const { return energies_.back(); }
    double max_drift() const { return max_drift_; }
    std::vector<double> exchange_rates() const;

private:
    std::size_t pick_variable(std::size_t replica);
    void refresh_fields(std::size_t replica);

    const QuboModel* model_;
    TemperatureLadder ladder_;
    std::vector<char> is_slack_;
    std::vector<std::size_t> slack_;
    std::vector<std::size_t> regular_;
    std::vector<SpinState> states_;
    std::vector<double> energies_;
    std::vector<std::vector<double>> fields_;  // energy change of setting each bit, per replica
    std::vector<char> last_regular_;
    std::vector<Rng> streams_;
    Rng exchange_stream_;
    std::vector<long long> exchange_tries_;
    std::vector<long long> exchange_accepts_;
    double max_drift_ = 0.0;
};

SampleArchive run_sampler(const QuboModel& model, const SamplerConfig& config, const TemperatureLadder& ladder,
                          const HarvestValidator& validator, RunStats* stats = nullptr, bool trace_energies = false);

// Integrated autocorrelation time of the mean spin overlap, in units of the
// trajectory spacing, from batch means over sqrt(N)-long batches.
double estimate_autocorrelation(const std::vector<SpinState>& trajectory);

}  // namespace qubodos
