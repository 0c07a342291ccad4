#include "qubodos/archive.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "qubodos/errors.hpp"

namespace qubodos {

void write_archive(std::ostream& out, const SampleArchive& archive)
{
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(archive.model_hash));
    out << "# archive model_hash " << hash << " num_vars " << archive.num_vars << " records "
        << archive.records.size() << '\n';
    for (const auto& r : archive.records) {
        out << r.interval_id << ' ' << r.bin << ' ' << r.state.to_hex() << ' ' << r.sweep << ' ' << r.seed << '\n';
    }
}

SampleArchive read_archive(std::istream& in)
{
    SampleArchive archive;
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("empty archive");
    }
    {
        std::istringstream header(line);
        std::string hash_tag, hash, nv_tag, rec_tag, archive_tag, pound;
        std::size_t count = 0;
        if (!(header >> pound >> archive_tag >> hash_tag >> hash >> nv_tag >> archive.num_vars >> rec_tag >> count) ||
            pound != "#" || archive_tag != "archive") {
            throw FormatError("bad archive header: " + line);
        }
        archive.model_hash = std::stoull(hash, nullptr, 16);
        archive.records.reserve(count);
    }
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        SampleRecord r;
        std::string hex;
        if (!(fields >> r.interval_id >> r.bin >> hex >> r.sweep >> r.seed)) {
            throw FormatError("bad archive record: " + line);
        }
        r.state = SpinState::from_hex(hex, archive.num_vars);
        archive.records.push_back(std::move(r));
    }
    return archive;
}

}  // namespace qubodos
