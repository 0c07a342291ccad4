#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qubodos/histogram.hpp"
#include "qubodos/melt.hpp"
#include "qubodos/reconstruct.hpp"
#include "qubodos/sampler.hpp"

namespace qubodos {

enum class SystemKind { ising, melt };

// Interval layout over the order-parameter bins. Explicit starts win; otherwise
// either `count` intervals at `stride`, spread evenly up to `last_end`, or enough
// unit-stride intervals to reach the top of the range (count = 0).
struct PlanSpec {
    int m = 1;
    int start = 0;
    int stride = 1;
    int count = 0;
    std::optional<int> last_end;
    std::vector<int> starts;
    std::optional<int> range_lo;  // bins that must be covered; defaults to the system range
    std::optional<int> range_hi;
};

struct PlanResult {
    std::vector<IntervalBounds> intervals;
    std::vector<std::string> warnings;
};

// Errors when [range_lo, range_hi] is not gaplessly covered. allowed_bins, when given,
// lists bins that can hold states; the plan warns if they split into pieces that no
// interval bridges.
PlanResult plan_intervals(const PlanSpec& spec, int range_lo, int range_hi,
                          const std::vector<int>& allowed_bins = {});

struct SamplingSpec {
    long long depth = 1000;  // records per block per interval
    int blocks = 4;
    long long max_sweeps = 2000000;
    long long stride = 0;  // 0 = choose from a pilot autocorrelation estimate (>= 3 tau)
    long long pilot_records = 10000;
    int sweeps_per_exchange = 1;
    double burn_in_fraction = 0.1;
    bool warm_start = false;  // melt: start replicas from a constructed ring configuration
    CalibrationParams calibration;
};

struct ValidationSpec {
    bool enabled = true;
    int reference_draws = 500;
    long long reference_depth = 0;  // 0 = sampled depth per interval
    int min_in_iqr = 3;
    double max_mean_rel_error = 0.10;
    double min_within_3sem = 0.90;
};

struct RunConfig {
    std::string name = "run";
    SystemKind system = SystemKind::ising;
    int L = 4;
    std::array<int, 3> dims{3, 3, 2};
    double penalty = 1.0;  // A on the slack term
    MeltCoefficients melt;
    PlanSpec plan;
    SamplingSpec sampling;
    SolverParams solver;
    double beta_min = -8.0;
    double beta_max = 8.0;
    double beta_step = 0.5;
    std::vector<std::string> observables;
    std::uint64_t seed = 1;
    std::string output = "out";
    int workers = 1;
    ValidationSpec validation;

    void validate() const;
    // Full range of the order parameter for the configured system.
    std::pair<int, int> system_range() const;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(std::istream& in);
void write_config(std::ostream& out, const RunConfig& config);
// Annotated INI listing every key with its default.
std::string config_reference();

std::string to_string(SystemKind kind);

}  // namespace qubodos
