#pragma once

#include "loadpatch/civil_time.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace loadpatch {

inline constexpr int kPointsPerDay = 96;
inline constexpr int kGridMinutes = 15;

enum class SeriesKind { load, temperature };

struct RawPoint {
    MinuteStamp stamp;
    double value = 0.0;
};

// Strictly time-ordered series straight off a meter or weather file.
struct RawSeries {
    std::vector<RawPoint> points;
    SeriesKind kind = SeriesKind::load;
    std::string source_id;
};

// One user-day: 96 load points aligned with 96 temperature points.
struct DailyProfile {
    std::string user_id;
    Date date;
    std::vector<double> load;        // kW
    std::vector<double> temperature; // degrees
};

struct DatasetStats {
    double load_min = 0.0;
    double load_max = 0.0;
    double temp_min = 0.0;
    double temp_max = 0.0;
    std::size_t n_days = 0;
    std::size_t n_users = 0;
    std::vector<double> daily_peaks; // kW, one per day, input order
};

// Two-column CSV `timestamp,value`; header row auto-detected. Malformed rows
// raise Error{parse} with the line number, duplicated or backwards
// timestamps raise Error{ordering}, an empty file raises
// Error{empty_dataset}. Load values must be finite and >= 0.
RawSeries ingest_load_csv(const std::filesystem::path& path, const std::string& user_id);
RawSeries ingest_temperature_csv(const std::filesystem::path& path);

// Resamples temperature onto the 15-minute grid by linear interpolation
// (exact at knots, held flat beyond the first/last reading), keeps only days
// with all 96 load readings present.
std::vector<DailyProfile> align_and_segment(const RawSeries& load, const RawSeries& temperature);

DatasetStats summarize(const std::vector<DailyProfile>& days);

// Dataset persistence: line-delimited records under schema
// loadpatch.dataset.v1. The timezone label is header metadata only.
inline constexpr const char* kDatasetSchema = "loadpatch.dataset.v1";

void write_dataset_file(const std::filesystem::path& path, const std::vector<DailyProfile>& days,
                        const std::string& timezone);

struct DatasetFile {
    std::vector<DailyProfile> days;
    std::string timezone;
};

DatasetFile read_dataset_file(const std::filesystem::path& path);

} // namespace loadpatch
