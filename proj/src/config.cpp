#include "qubodos/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "qubodos/errors.hpp"
#include "qubodos/qubo.hpp"

namespace qubodos {

namespace pt = boost::property_tree;

std::string to_string(SystemKind kind)
{
    return kind == SystemKind::ising ? "ising" : "melt";
}

namespace {

std::vector<int> parse_ints(const std::string& text)
{
    std::vector<int> out;
    std::string cleaned = text;
    std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
    std::istringstream in(cleaned);
    std::string tok;
    while (in >> tok) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw InvalidArgument("expected integers, got '" + text + "'");
        }
    }
    return out;
}

std::vector<std::string> parse_words(const std::string& text)
{
    std::vector<std::string> out;
    std::string cleaned = text;
    std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
    std::istringstream in(cleaned);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

std::string join_ints(const std::vector<int>& v)
{
    std::string out;
    for (int x : v) out += (out.empty() ? "" : " ") + std::to_string(x);
    return out;
}

template <typename T>
T get(const pt::ptree& tree, const char* key, T fallback)
{
    try {
        return tree.get<T>(key, fallback);
    } catch (const pt::ptree_error& e) {
        throw InvalidArgument(std::string("bad value for ") + key + ": " + e.what());
    }
}

std::optional<int> get_optional_int(const pt::ptree& tree, const char* key)
{
    auto v = tree.get_optional<std::string>(key);
    if (!v || v->empty()) return std::nullopt;
    const auto ints = parse_ints(*v);
    if (ints.size() != 1) throw InvalidArgument(std::string("expected one integer for ") + key);
    return ints.front();
}

}  // namespace

PlanResult plan_intervals(const PlanSpec& spec, int range_lo, int range_hi, const std::vector<int>& allowed_bins)
{
    if (spec.m < 0 || spec.m > 20) throw InvalidArgument("slack count m must lie in [0, 20]");
    const int width = 1 << spec.m;
    std::vector<int> starts = spec.starts;
    if (starts.empty()) {
        if (spec.last_end) {
            if (spec.count < 2) throw InvalidArgument("spreading to last_end needs count >= 2");
            const int last_start = *spec.last_end - width + 1;
            if (last_start < spec.start) throw InvalidArgument("last_end leaves no room for the intervals");
            for (int k = 0; k < spec.count; ++k) {
                const double pos = spec.start + k * double(last_start - spec.start) / double(spec.count - 1);
                starts.push_back(static_cast<int>(std::lround(pos)));
            }
        } else {
            if (spec.stride < 1) throw InvalidArgument("interval stride must be positive");
            if (spec.count > 0) {
                for (int k = 0; k < spec.count; ++k) starts.push_back(spec.start + k * spec.stride);
            } else {
                for (int s = spec.start; starts.empty() || starts.back() + width - 1 < range_hi; s += spec.stride) {
                    starts.push_back(s);
                }
            }
        }
    }
    std::sort(starts.begin(), starts.end());
    starts.erase(std::unique(starts.begin(), starts.end()), starts.end());

    PlanResult plan;
    for (std::size_t k = 0; k < starts.size(); ++k) {
        plan.intervals.push_back({static_cast<int>(k), starts[k], starts[k] + width - 1});
    }
    std::vector<int> gaps;
    for (int bin = range_lo; bin <= range_hi; ++bin) {
        const bool covered = std::any_of(plan.intervals.begin(), plan.intervals.end(),
                                         [bin](const IntervalBounds& iv) { return iv.contains(bin); });
        if (!covered) gaps.push_back(bin);
    }
    if (!gaps.empty()) {
        throw DimensionError("interval plan leaves bins uncovered: " + join_ints(gaps));
    }
    for (std::size_t k = 1; k < plan.intervals.size(); ++k) {
        if (plan.intervals[k].lo > plan.intervals[k - 1].hi) {
            plan.warnings.push_back("intervals " + std::to_string(k - 1) + " and " + std::to_string(k) +
                                    " do not overlap; their relative weight is undetermined");
        }
    }
    if (!allowed_bins.empty()) {
        // Bins that can hold states are tied together when some interval contains both.
        std::set<int> allowed(allowed_bins.begin(), allowed_bins.end());
        std::vector<int> bins;
        for (int b : allowed) {
            if (b >= range_lo && b <= range_hi) bins.push_back(b);
        }
        std::vector<int> parent(bins.size());
        std::iota(parent.begin(), parent.end(), 0);
        std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
        for (const auto& iv : plan.intervals) {
            int first = -1;
            for (std::size_t i = 0; i < bins.size(); ++i) {
                if (!iv.contains(bins[i])) continue;
                if (first < 0) {
                    first = static_cast<int>(i);
                } else {
                    parent[find(static_cast<int>(i))] = find(first);
                }
            }
        }
        std::map<int, std::vector<int>> groups;
        for (std::size_t i = 0; i < bins.size(); ++i) groups[find(static_cast<int>(i))].push_back(bins[i]);
        if (groups.size() > 1) {
            std::string isolated;
            for (const auto& [root, members] : groups) {
                if (members.size() == 1) isolated += (isolated.empty() ? "" : ",") + std::to_string(members[0]);
            }
            plan.warnings.push_back("m = " + std::to_string(spec.m) + " is too short to bridge empty bins; " +
                                    std::to_string(groups.size()) + " disconnected groups" +
                                    (isolated.empty() ? "" : " (isolated bins " + isolated + ")"));
        }
    }
    return plan;
}

std::pair<int, int> RunConfig::system_range() const
{
    if (system == SystemKind::ising) return {0, L * L};
    return {0, dims[0] * dims[1] * dims[2]};
}

void RunConfig::validate() const
{
    if (system == SystemKind::ising && (L < 2 || L % 2 != 0)) throw InvalidArgument("Ising L must be even and >= 2");
    if (system == SystemKind::melt && (dims[0] < 1 || dims[1] < 1 || dims[2] < 1)) {
        throw InvalidArgument("melt dimensions must be positive");
    }
    if (!(penalty > 0.0)) throw InvalidArgument("penalty must be positive");
    if (sampling.depth < 1 || sampling.blocks < 1) throw InvalidArgument("depth and blocks must be positive");
    if (sampling.stride < 0) throw InvalidArgument("sampler stride must be >= 0");
    if (workers < 1) throw InvalidArgument("workers must be >= 1");
    solver.validate();
    if (!(beta_step > 0.0) || beta_max < beta_min) throw InvalidArgument("bad beta grid");
    for (const auto& o : observables) {
        static const std::set<std::string> ising_obs{"energy", "abs_magnetization"};
        static const std::set<std::string> melt_obs{"n_rings", "p_link", "p_knot", "n_c"};
        const auto& known = system == SystemKind::ising ? ising_obs : melt_obs;
        if (!known.count(o)) throw InvalidArgument("unknown observable '" + o + "' for " + to_string(system));
    }
}

RunConfig parse_config(std::istream& in)
{
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    static const auto known = [] {
        std::istringstream ref(config_reference());
        pt::ptree t;
        pt::read_ini(ref, t);
        std::set<std::string> keys;
        for (const auto& [section, body] : t) {
            for (const auto& [key, unused] : body) keys.insert(section + "." + key);
        }
        return keys;
    }();
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            throw InvalidArgument("config: key '" + section + "' outside a section");
        }
        for (const auto& [key, unused] : body) {
            if (!known.count(section + "." + key)) throw InvalidArgument("config: unknown key " + section + "." + key);
        }
    }
    RunConfig c;
    c.name = get<std::string>(tree, "run.name", c.name);
    const auto system = get<std::string>(tree, "run.system", "ising");
    if (system == "ising") {
        c.system = SystemKind::ising;
    } else if (system == "melt") {
        c.system = SystemKind::melt;
    } else {
        throw InvalidArgument("run.system must be ising or melt");
    }
    c.seed = get<std::uint64_t>(tree, "run.seed", c.seed);
    c.output = get<std::string>(tree, "run.output", c.output);
    c.workers = get<int>(tree, "run.workers", c.workers);

    c.L = get<int>(tree, "ising.L", c.L);
    if (auto d = tree.get_optional<std::string>("melt.dims")) {
        const auto v = parse_ints(*d);
        if (v.size() != 3) throw InvalidArgument("melt.dims needs three integers");
        c.dims = {v[0], v[1], v[2]};
    }
    c.melt.bonds = get<double>(tree, "melt.bonds", c.melt.bonds);
    c.melt.branching = get<double>(tree, "melt.branching", c.melt.branching);
    c.melt.consistency = get<double>(tree, "melt.consistency", c.melt.consistency);
    c.penalty = get<double>(tree, "model.penalty", c.penalty);

    c.plan.m = get<int>(tree, "plan.m", c.plan.m);
    c.plan.start = get<int>(tree, "plan.start", c.plan.start);
    c.plan.stride = get<int>(tree, "plan.stride", c.plan.stride);
    c.plan.count = get<int>(tree, "plan.count", c.plan.count);
    c.plan.last_end = get_optional_int(tree, "plan.last_end");
    c.plan.starts = parse_ints(get<std::string>(tree, "plan.starts", ""));
    c.plan.range_lo = get_optional_int(tree, "plan.range_lo");
    c.plan.range_hi = get_optional_int(tree, "plan.range_hi");

    auto& s = c.sampling;
    s.depth = get<long long>(tree, "sampler.depth", s.depth);
    s.blocks = get<int>(tree, "sampler.blocks", s.blocks);
    s.max_sweeps = get<long long>(tree, "sampler.max_sweeps", s.max_sweeps);
    s.stride = get<long long>(tree, "sampler.stride", s.stride);
    s.pilot_records = get<long long>(tree, "sampler.pilot_records", s.pilot_records);
    s.sweeps_per_exchange = get<int>(tree, "sampler.sweeps_per_exchange", s.sweeps_per_exchange);
    s.burn_in_fraction = get<double>(tree, "sampler.burn_in", s.burn_in_fraction);
    s.warm_start = get<bool>(tree, "sampler.warm_start", s.warm_start);
    s.calibration.tmax_factor = get<double>(tree, "sampler.tmax_factor", s.calibration.tmax_factor);
    s.calibration.tmin_factor = get<double>(tree, "sampler.tmin_factor", s.calibration.tmin_factor);
    s.calibration.random_samples = get<int>(tree, "sampler.random_samples", s.calibration.random_samples);
    s.calibration.max_rounds = get<int>(tree, "sampler.max_rounds", s.calibration.max_rounds);
    s.calibration.pilot_sweeps = get<long long>(tree, "sampler.pilot_sweeps", s.calibration.pilot_sweeps);
    s.calibration.overlap_target = get<double>(tree, "sampler.overlap_target", s.calibration.overlap_target);
    s.calibration.prune_overlap = get<double>(tree, "sampler.prune_overlap", s.calibration.prune_overlap);
    s.calibration.max_replicas = get<std::size_t>(tree, "sampler.max_replicas", s.calibration.max_replicas);

    c.solver.mix = get<double>(tree, "solver.mix", c.solver.mix);
    c.solver.n_cycles = get<int>(tree, "solver.cycles", c.solver.n_cycles);
    c.solver.epsilon = get<double>(tree, "solver.epsilon", c.solver.epsilon);
    c.solver.n_iter = get<long long>(tree, "solver.iterations", c.solver.n_iter);
    c.solver.stagnation_window = get<int>(tree, "solver.stagnation", c.solver.stagnation_window);

    c.beta_min = get<double>(tree, "reweight.beta_min", c.beta_min);
    c.beta_max = get<double>(tree, "reweight.beta_max", c.beta_max);
    c.beta_step = get<double>(tree, "reweight.beta_step", c.beta_step);
    c.observables = parse_words(get<std::string>(tree, "reweight.observables", ""));
    if (c.observables.empty()) {
        c.observables = c.system == SystemKind::ising ? std::vector<std::string>{"energy"}
                                                      : std::vector<std::string>{"n_rings", "p_link", "p_knot"};
    }

    auto& v = c.validation;
    v.enabled = get<bool>(tree, "validate.enabled", v.enabled);
    v.reference_draws = get<int>(tree, "validate.reference_draws", v.reference_draws);
    v.reference_depth = get<long long>(tree, "validate.reference_depth", v.reference_depth);
    v.min_in_iqr = get<int>(tree, "validate.min_in_iqr", v.min_in_iqr);
    v.max_mean_rel_error = get<double>(tree, "validate.max_mean_rel_error", v.max_mean_rel_error);
    v.min_within_3sem = get<double>(tree, "validate.min_within_3sem", v.min_within_3sem);
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config " + path);
    return parse_config(in);
}

void write_config(std::ostream& out, const RunConfig& c)
{
    auto opt = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
    std::string observables;
    for (const auto& o : c.observables) observables += (observables.empty() ? "" : " ") + o;
    out << "[run]\nname = " << c.name << "\nsystem = " << to_string(c.system) << "\nseed = " << c.seed
        << "\noutput = " << c.output << "\nworkers = " << c.workers << "\n\n";
    out << "[ising]\nL = " << c.L << "\n\n";
    out << "[melt]\ndims = " << c.dims[0] << ' ' << c.dims[1] << ' ' << c.dims[2]
        << "\nbonds = " << format_real(c.melt.bonds) << "\nbranching = " << format_real(c.melt.branching)
        << "\nconsistency = " << format_real(c.melt.consistency) << "\n\n";
    out << "[model]\npenalty = " << format_real(c.penalty) << "\n\n";
    out << "[plan]\nm = " << c.plan.m << "\nstart = " << c.plan.start << "\nstride = " << c.plan.stride
        << "\ncount = " << c.plan.count << "\nlast_end = " << opt(c.plan.last_end)
        << "\nstarts = " << join_ints(c.plan.starts) << "\nrange_lo = " << opt(c.plan.range_lo)
        << "\nrange_hi = " << opt(c.plan.range_hi) << "\n\n";
    const auto& s = c.sampling;
    out << "[sampler]\ndepth = " << s.depth << "\nblocks = " << s.blocks << "\nmax_sweeps = " << s.max_sweeps
        << "\nstride = " << s.stride << "\npilot_records = " << s.pilot_records
        << "\nsweeps_per_exchange = " << s.sweeps_per_exchange << "\nburn_in = " << format_real(s.burn_in_fraction)
        << "\nwarm_start = " << (s.warm_start ? "true" : "false")
        << "\ntmax_factor = " << format_real(s.calibration.tmax_factor)
        << "\ntmin_factor = " << format_real(s.calibration.tmin_factor)
        << "\nrandom_samples = " << s.calibration.random_samples << "\nmax_rounds = " << s.calibration.max_rounds
        << "\npilot_sweeps = " << s.calibration.pilot_sweeps
        << "\noverlap_target = " << format_real(s.calibration.overlap_target)
        << "\nprune_overlap = " << format_real(s.calibration.prune_overlap)
        << "\nmax_replicas = " << s.calibration.max_replicas << "\n\n";
    out << "[solver]\nmix = " << format_real(c.solver.mix) << "\ncycles = " << c.solver.n_cycles
        << "\nepsilon = " << format_real(c.solver.epsilon) << "\niterations = " << c.solver.n_iter
        << "\nstagnation = " << c.solver.stagnation_window << "\n\n";
    out << "[reweight]\nbeta_min = " << format_real(c.beta_min) << "\nbeta_max = " << format_real(c.beta_max)
        << "\nbeta_step = " << format_real(c.beta_step) << "\nobservables = " << observables << "\n\n";
    const auto& v = c.validation;
    out << "[validate]\nenabled = " << (v.enabled ? "true" : "false") << "\nreference_draws = " << v.reference_draws
        << "\nreference_depth = " << v.reference_depth << "\nmin_in_iqr = " << v.min_in_iqr
        << "\nmax_mean_rel_error = " << format_real(v.max_mean_rel_error)
        << "\nmin_within_3sem = " << format_real(v.min_within_3sem) << '\n';
}

std::string config_reference()
{
    return R"(; qubodos run configuration: every key with its default value.

[run]
; label used in reports
name = run
; ising | melt
system = ising
; root of the seed tree (stage -> interval -> replica)
seed = 1
; output directory
output = out
; intervals sampled concurrently
workers = 1

[ising]
; even lattice side, periodic boundaries
L = 4

[melt]
; cuboid sites along x, y, z, open boundaries
dims = 3 3 2
; A_b, bond-count penalty
bonds = 1
; A_c, shared-centre corner penalty
branching = 1
; A_bc, corner/bond consistency penalty
consistency = 1

[model]
; A, weight of the slack restraint
penalty = 1

[plan]
; slack bits; each interval spans 2^m bins
m = 1
; first interval lower bound
start = 0
; shift between consecutive intervals
stride = 1
; number of intervals; 0 = until the range top is covered
count = 0
; with count >= 2: spread the starts evenly so the last interval ends here
last_end =
; explicit interval lower bounds, overriding the above
starts =
; bins that must be covered; default: the system range for auto plans,
; otherwise the union of the planned intervals
range_lo =
range_hi =

[sampler]
; harvested ground states per block and interval
depth = 1000
; blocks for the error analysis
blocks = 4
; sweep budget per interval
max_sweeps = 2000000
; sweeps between harvests; 0 = ceil(3 tau) from a pilot run
stride = 0
; records in the autocorrelation pilot
pilot_records = 10000
sweeps_per_exchange = 1
; discarded fraction of the sweep budget
burn_in = 0.1
; melt only: start every replica from a rectangle tiling (n_c = 4 per ring) when
; its corner count lies in the interval; otherwise from random states
warm_start = false
; T_max over the random-state energy spread
tmax_factor = 316.22776601683796
; T_min over the RMS single-flip change
tmin_factor = 0.001
random_samples = 2000
; ladder refinement rounds
max_rounds = 10
; sweeps per refinement round
pilot_sweeps = 2000
; required histogram intersection relative to peak height
overlap_target = 0.5
; drop a replica when its two neighbours reach this overlap without it
prune_overlap = 0.9
max_replicas = 160

[solver]
; alpha
mix = 0.1
; outer cycles with the damped Z update
cycles = 100
; convergence threshold on the summed relative change
epsilon = 1e-15
; inner iteration cap
iterations = 50000
; stop an inner loop after this many iterations without improvement
stagnation = 25

[reweight]
beta_min = -8
beta_max = 8
beta_step = 0.5
; ising: energy abs_magnetization; melt: n_rings p_link p_knot n_c
; default: energy (ising), n_rings p_link p_knot (melt)
observables =

[validate]
; compare against exhaustive enumeration when the system is small enough
enabled = true
; resampled reconstructions for the melt reference distribution
reference_draws = 500
; states per interval per draw; 0 = sampled depth
reference_depth = 0
; melt: bins required inside the Q1-Q3 band
min_in_iqr = 3
; ising: mean relative error bound
max_mean_rel_error = 0.1
; ising: fraction of bins within 3 SEM of the exact value
min_within_3sem = 0.9
)";
}

}  // namespace qubodos
