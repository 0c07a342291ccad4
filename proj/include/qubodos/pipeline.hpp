#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "qubodos/config.hpp"

namespace qubodos {

// Stages in execution order.
const std::vector<std::string>& stage_names();

struct StageRecord {
    std::string name;
    std::uint64_t input_hash = 0;
    std::uint64_t output_hash = 0;
    std::vector<std::string> outputs;  // relative to the run directory
};

// "stage <name> <input hash> <output hash> <file>..." per line.
class Manifest {
public:
    static Manifest load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
    const StageRecord* find(const std::string& name) const;
    void put(StageRecord record);

private:
    std::vector<StageRecord> records_;
};

std::uint64_t hash_files(const std::filesystem::path& root, const std::vector<std::string>& files);

struct PipelineOptions {
    std::string until = "validate";  // last stage to run
    bool dry_run = false;
    std::ostream* log = nullptr;
};

struct PipelineReport {
    PlanResult plan;
    std::vector<std::string> ran;
    std::vector<std::string> skipped;
    bool validated = false;          // the validate stage ran or was reused
    bool validations_passed = true;  // every check in the validation summary passed
    std::vector<std::string> summary;
};

PipelineReport run_pipeline(const RunConfig& config, const PipelineOptions& options = {});

// Plan for a configuration, including coverage warnings.
PlanResult plan_for(const RunConfig& config);

// Exhaustive enumeration for the configured system, written under <output>/oracle.
void write_oracle(const RunConfig& config, std::ostream* log = nullptr);

}  // namespace qubodos
