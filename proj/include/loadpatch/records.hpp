#pragma once

#include "json.hpp"

#include <filesystem>
#include <string>
#include <vector>

// Line-delimited record files: first line is a header object carrying the
// schema name ({"schema":"loadpatch.<kind>.v1", ...}), every following line
// is one record. Serialization is canonical (sorted keys, compact, shortest
// float form), so two writes of the same records are byte-identical.

namespace loadpatch {

struct RecordFile {
    nlohmann::json header;
    std::vector<nlohmann::json> records;
};

std::string dump_canonical(const nlohmann::json& value);

void write_record_file(const std::filesystem::path& path, const nlohmann::json& header,
                       const std::vector<nlohmann::json>& records);

// Throws Error{storage} when unreadable, Error{validation} when the header
// schema does not match, Error{parse} naming the line for malformed rows.
RecordFile read_record_file(const std::filesystem::path& path, const std::string& schema);

// Creates the file with the given header when absent, then appends one row.
void append_record(const std::filesystem::path& path, const nlohmann::json& header,
                   const nlohmann::json& record);

} // namespace loadpatch
