#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "qubodos/config.hpp"
#include "qubodos/errors.hpp"
#include "qubodos/pipeline.hpp"

using namespace qubodos;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> workers;
    bool dry_run = false;
};

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("--config", c.config, "run configuration (INI)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "override the configured seed");
    sub->add_option("--out", c.out, "override the output directory");
    sub->add_option("--workers", c.workers, "override the worker budget")->check(CLI::PositiveNumber);
    sub->add_flag("--dry-run", c.dry_run, "print the interval plan and exit");
}

RunConfig resolve(const Common& c)
{
    RunConfig config = load_config(c.config);
    if (c.seed) config.seed = *c.seed;
    if (c.out) config.output = *c.out;
    if (c.workers) config.workers = *c.workers;
    config.validate();
    return config;
}

void print_plan(const PlanResult& plan)
{
    std::cout << "# interval_id\tbin_min\tbin_max\n";
    for (const auto& iv : plan.intervals) std::cout << iv.id << '\t' << iv.lo << '\t' << iv.hi << '\n';
    for (const auto& w : plan.warnings) std::cerr << "warning: " << w << '\n';
}

int run_until(const Common& c, const std::string& stage)
{
    const RunConfig config = resolve(c);
    PipelineOptions options;
    options.until = stage;
    options.dry_run = c.dry_run;
    options.log = &std::cerr;
    const auto report = run_pipeline(config, options);
    if (c.dry_run) {
        print_plan(report.plan);
        std::cout << "stages:";
        for (const auto& s : stage_names()) {
            std::cout << ' ' << s;
            if (s == stage) break;
        }
        std::cout << '\n';
        return 0;
    }
    for (const auto& line : report.summary) std::cout << line << '\n';
    std::cout << "output: " << config.output << '\n';
    return report.validations_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Density of states from interval-restricted QUBO sampling"};
    app.require_subcommand(1);

    Common common;
    struct Stage {
        const char* command;
        const char* until;
        const char* help;
    };
    const Stage stages[] = {
        {"plan", "plan", "lay out intervals and write the per-interval QUBO models"},
        {"sample", "sample", "parallel-tempering sampling of every interval"},
        {"reconstruct", "reconstruct", "histograms and density-of-states reconstruction"},
        {"analyze", "analyze", "per-sample observables and topology"},
        {"reweight", "reweight", "canonical curves over the beta grid"},
        {"pipeline", "validate", "all stages including validation"},
    };
    for (const auto& s : stages) {
        auto* sub = app.add_subcommand(s.command, s.help);
        add_common(sub, common);
        sub->callback([&common, until = std::string(s.until)] { throw CLI::RuntimeError(run_until(common, until)); });
    }

    auto* oracle = app.add_subcommand("oracle", "exhaustive enumeration of the configured system");
    add_common(oracle, common);
    oracle->callback([&common] {
        const RunConfig config = resolve(common);
        if (common.dry_run) {
            std::cout << "enumerate " << to_string(config.system) << " into " << config.output << "/oracle\n";
            return;
        }
        write_oracle(config, &std::cerr);
    });

    auto* reference = app.add_subcommand("config-reference", "print every configuration key with its default");
    reference->callback([] { std::cout << config_reference(); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::RuntimeError& e) {
        return e.get_exit_code();
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
