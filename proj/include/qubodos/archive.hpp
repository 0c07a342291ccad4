#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qubodos/qubo.hpp"

namespace qubodos {

struct SampleRecord {
    int interval_id = 0;
    int bin = 0;
    SpinState state;
    long long sweep = 0;
    std::uint64_t seed = 0;
};

// Append-only list of harvested ground states for one model.
struct SampleArchive {
    std::uint64_t model_hash = 0;
    std::size_t num_vars = 0;
    std::vector<SampleRecord> records;

    void append(SampleRecord record) { records.push_back(std::move(record)); }
    std::size_t size() const { return records.size(); }
};

// Header "# archive model_hash <hex> num_vars <n> records <count>", then
// "<interval_id> <bin_value> <hex bitstring> <sweep> <seed>" per record.
void write_archive(std::ostream& out, const SampleArchive& archive);
SampleArchive read_archive(std::istream& in);

}  // namespace qubodos
