#include "loadpatch/records.hpp"

#include "loadpatch/errors.hpp"

#include <fstream>

namespace loadpatch {

std::string dump_canonical(const nlohmann::json& value) {
    // nlohmann::json already emits sorted keys and shortest round-trip
    // floats; dump() is the canonical form.
    return value.dump();
}

void write_record_file(const std::filesystem::path& path, const nlohmann::json& header,
                       const std::vector<nlohmann::json>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrKind::io, "cannot open '" + path.string() + "' for writing");
    }
    out << dump_canonical(header) << '\n';
    for (const auto& rec : records) {
        out << dump_canonical(rec) << '\n';
    }
    if (!out) {
        throw Error(ErrKind::io, "write failed for '" + path.string() + "'");
    }
}

RecordFile read_record_file(const std::filesystem::path& path, const std::string& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrKind::storage, "cannot read '" + path.string() + "'");
    }
    RecordFile file;
    std::string line;
    std::size_t line_no = 0;
    bool seen_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrKind::parse, path.string() + ":" + std::to_string(line_no) +
                                            ": invalid record: " + e.what());
        }
        if (!seen_header) {
            if (!parsed.is_object() || !parsed.contains("schema") ||
                parsed["schema"].get<std::string>() != schema) {
                throw Error(ErrKind::validation,
                            path.string() + ": expected schema '" + schema + "'");
            }
            file.header = std::move(parsed);
            seen_header = true;
        } else {
            file.records.push_back(std::move(parsed));
        }
    }
    if (!seen_header) {
        throw Error(ErrKind::validation, path.string() + ": missing schema header line");
    }
    return file;
}

void append_record(const std::filesystem::path& path, const nlohmann::json& header,
                   const nlohmann::json& record) {
    if (!std::filesystem::exists(path)) {
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw Error(ErrKind::io, "cannot create '" + path.string() + "'");
        }
        out << dump_canonical(header) << '\n';
    }
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) {
        throw Error(ErrKind::io, "cannot append to '" + path.string() + "'");
    }
    out << dump_canonical(record) << '\n';
    if (!out) {
        throw Error(ErrKind::io, "append failed for '" + path.string() + "'");
    }
}

} // namespace loadpatch
