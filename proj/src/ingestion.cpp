#include "loadpatch/ingestion.hpp"

#include "loadpatch/errors.hpp"
#include "loadpatch/records.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace loadpatch {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

double parse_value(const std::string& cell, const std::filesystem::path& path,
                   std::size_t line_no) {
    if (cell.empty()) {
        throw Error(ErrKind::parse,
                    path.string() + ":" + std::to_string(line_no) + ": missing value cell");
    }
    std::size_t consumed = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &consumed);
    } catch (const std::exception&) {
        throw Error(ErrKind::parse, path.string() + ":" + std::to_string(line_no) +
                                        ": cannot parse value '" + cell + "'");
    }
    if (consumed != cell.size() || !std::isfinite(v)) {
        throw Error(ErrKind::parse, path.string() + ":" + std::to_string(line_no) +
                                        ": cannot parse value '" + cell + "'");
    }
    return v;
}

RawSeries ingest_csv(const std::filesystem::path& path, SeriesKind kind,
                     const std::string& source_id) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrKind::io, "cannot open '" + path.string() + "'");
    }
    RawSeries series;
    series.kind = kind;
    series.source_id = source_id;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty()) {
            continue;
        }
        const auto comma = stripped.find(',');
        if (comma == std::string::npos) {
            throw Error(ErrKind::parse, path.string() + ":" + std::to_string(line_no) +
                                            ": expected 'timestamp,value'");
        }
        const std::string stamp_text = trim(stripped.substr(0, comma));
        const std::string value_text = trim(stripped.substr(comma + 1));

        MinuteStamp stamp;
        try {
            stamp = parse_timestamp(stamp_text);
        } catch (const Error&) {
            if (line_no == 1) {
                continue; // header row
            }
            throw Error(ErrKind::parse, path.string() + ":" + std::to_string(line_no) +
                                            ": bad timestamp '" + stamp_text + "'");
        }
        const double value = parse_value(value_text, path, line_no);
        if (kind == SeriesKind::load && value < 0.0) {
            throw Error(ErrKind::parse, path.string() + ":" + std::to_string(line_no) +
                                            ": negative load value");
        }
        if (!series.points.empty()) {
            if (stamp == series.points.back().stamp) {
                throw Error(ErrKind::ordering, path.string() + ":" + std::to_string(line_no) +
                                                   ": duplicate timestamp " + stamp.to_string());
            }
            if (stamp < series.points.back().stamp) {
                throw Error(ErrKind::ordering, path.string() + ":" + std::to_string(line_no) +
                                                   ": timestamps not increasing at " +
                                                   stamp.to_string());
            }
        }
        series.points.push_back(RawPoint{stamp, value});
    }
    if (series.points.empty()) {
        throw Error(ErrKind::empty_dataset, path.string() + ": no data rows");
    }
    return series;
}

// Piecewise-linear evaluation; flat beyond the first/last knot.
double interpolate_at(const std::vector<RawPoint>& points, MinuteStamp at) {
    if (at <= points.front().stamp) {
        return points.front().value;
    }
    if (at >= points.back().stamp) {
        return points.back().value;
    }
    const RawPoint probe{at, 0.0};
    auto upper = std::upper_bound(points.begin(), points.end(), probe,
                                  [](const RawPoint& a, const RawPoint& b) {
                                      return a.stamp < b.stamp;
                                  });
    const RawPoint& hi = *upper;
    const RawPoint& lo = *(upper - 1);
    if (at == lo.stamp) {
        return lo.value;
    }
    const double span = static_cast<double>(hi.stamp.minutes - lo.stamp.minutes);
    const double frac = static_cast<double>(at.minutes - lo.stamp.minutes) / span;
    return lo.value + frac * (hi.value - lo.value);
}

} // namespace

RawSeries ingest_load_csv(const std::filesystem::path& path, const std::string& user_id) {
    return ingest_csv(path, SeriesKind::load, user_id);
}

RawSeries ingest_temperature_csv(const std::filesystem::path& path) {
    return ingest_csv(path, SeriesKind::temperature, path.stem().string());
}

std::vector<DailyProfile> align_and_segment(const RawSeries& load, const RawSeries& temperature) {
    if (load.kind != SeriesKind::load || temperature.kind != SeriesKind::temperature) {
        throw Error(ErrKind::validation, "align_and_segment needs a load and a temperature series");
    }
    // Group load readings by civil date; slot index = minute-of-day / 15.
    std::map<Date, std::vector<const RawPoint*>> by_day;
    for (const RawPoint& p : load.points) {
        if (p.stamp.minute_of_day() % kGridMinutes != 0) {
            throw Error(ErrKind::ordering, "load reading at " + p.stamp.to_string() +
                                               " is off the 15-minute grid");
        }
        auto& slots = by_day[p.stamp.date()];
        if (slots.empty()) {
            slots.assign(kPointsPerDay, nullptr);
        }
        slots[static_cast<std::size_t>(p.stamp.minute_of_day() / kGridMinutes)] = &p;
    }

    std::vector<DailyProfile> days;
    for (const auto& [date, slots] : by_day) {
        const bool complete =
            std::all_of(slots.begin(), slots.end(), [](const RawPoint* p) { return p != nullptr; });
        if (!complete) {
            continue;
        }
        DailyProfile day;
        day.user_id = load.source_id;
        day.date = date;
        day.load.reserve(kPointsPerDay);
        day.temperature.reserve(kPointsPerDay);
        for (int slot = 0; slot < kPointsPerDay; ++slot) {
            day.load.push_back(slots[static_cast<std::size_t>(slot)]->value);
            day.temperature.push_back(
                interpolate_at(temperature.points, make_stamp(date, slot * kGridMinutes)));
        }
        days.push_back(std::move(day));
    }
    if (days.empty()) {
        throw Error(ErrKind::empty_dataset,
                    "no complete 96-point days in series '" + load.source_id + "'");
    }
    return days;
}

DatasetStats summarize(const std::vector<DailyProfile>& days) {
    if (days.empty()) {
        throw Error(ErrKind::empty_dataset, "summarize called on an empty day list");
    }
    DatasetStats stats;
    stats.load_min = days.front().load.front();
    stats.load_max = stats.load_min;
    stats.temp_min = days.front().temperature.front();
    stats.temp_max = stats.temp_min;
    std::set<std::string> users;
    for (const DailyProfile& day : days) {
        double peak = day.load.front();
        for (double v : day.load) {
            stats.load_min = std::min(stats.load_min, v);
            stats.load_max = std::max(stats.load_max, v);
            peak = std::max(peak, v);
        }
        for (double t : day.temperature) {
            stats.temp_min = std::min(stats.temp_min, t);
            stats.temp_max = std::max(stats.temp_max, t);
        }
        stats.daily_peaks.push_back(peak);
        users.insert(day.user_id);
    }
    stats.n_days = days.size();
    stats.n_users = users.size();
    return stats;
}

void write_dataset_file(const std::filesystem::path& path, const std::vector<DailyProfile>& days,
                        const std::string& timezone) {
    nlohmann::json header{{"schema", kDatasetSchema}, {"tz", timezone}};
    std::vector<nlohmann::json> records;
    records.reserve(days.size());
    for (const DailyProfile& day : days) {
        records.push_back(nlohmann::json{{"user_id", day.user_id},
                                         {"date", day.date.to_string()},
                                         {"load", day.load},
                                         {"temperature", day.temperature}});
    }
    write_record_file(path, header, records);
}

DatasetFile read_dataset_file(const std::filesystem::path& path) {
    const RecordFile file = read_record_file(path, kDatasetSchema);
    DatasetFile out;
    out.timezone = file.header.value("tz", "");
    out.days.reserve(file.records.size());
    for (std::size_t i = 0; i < file.records.size(); ++i) {
        const nlohmann::json& rec = file.records[i];
        try {
            DailyProfile day;
            day.user_id = rec.at("user_id").get<std::string>();
            day.date = parse_date(rec.at("date").get<std::string>());
            day.load = rec.at("load").get<std::vector<double>>();
            day.temperature = rec.at("temperature").get<std::vector<double>>();
            if (day.load.size() != kPointsPerDay || day.temperature.size() != kPointsPerDay) {
                throw Error(ErrKind::validation, "day does not have 96 points");
            }
            out.days.push_back(std::move(day));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrKind::parse, path.string() + ": record " + std::to_string(i + 2) +
                                            ": " + e.what());
        }
    }
    return out;
}

} // namespace loadpatch
