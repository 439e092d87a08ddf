#include "loadpatch/preprocess.hpp"

#include "loadpatch/errors.hpp"
#include "loadpatch/records.hpp"
#include "loadpatch/rng.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>

namespace loadpatch {

NormalizationParams fit_normalization(const DatasetStats& stats) {
    if (!(stats.load_max > stats.load_min)) {
        throw Error(ErrKind::degenerate_range, "load range is degenerate");
    }
    if (!(stats.temp_max > stats.temp_min)) {
        throw Error(ErrKind::degenerate_range, "temperature range is degenerate");
    }
    return NormalizationParams{stats.load_min, stats.load_max, stats.temp_min, stats.temp_max};
}

int quantize_value(double x, double min, double max) {
    const double clamped = std::clamp(x, min, max);
    const double scaled = 200.0 * (clamped - min) / (max - min);
    // llround is round-half-away-from-zero, the documented rounding mode.
    return static_cast<int>(std::llround(scaled));
}

QuantizedDay quantize(const DailyProfile& day, const NormalizationParams& params) {
    QuantizedDay out;
    out.user_id = day.user_id;
    out.date = day.date;
    out.load_q.reserve(day.load.size());
    out.temp_q.reserve(day.temperature.size());
    std::size_t clamped = 0;
    for (double v : day.load) {
        clamped += (v < params.load_min || v > params.load_max) ? 1 : 0;
        out.load_q.push_back(quantize_value(v, params.load_min, params.load_max));
    }
    for (double t : day.temperature) {
        clamped += (t < params.temp_min || t > params.temp_max) ? 1 : 0;
        out.temp_q.push_back(quantize_value(t, params.temp_min, params.temp_max));
    }
    if (clamped > 0) {
        // Bounds come from training-period extremes; later data can exceed them.
        std::cerr << "warning: " << clamped << " value(s) clamped to the normalization range on "
                  << day.user_id << " " << day.date.to_string() << "\n";
    }
    return out;
}

double dequantize_load(int q, const NormalizationParams& params) {
    if (q < 0 || q > codec::kQuantMax) {
        throw Error(ErrKind::range, "quantized value " + std::to_string(q) + " outside [0, 200]");
    }
    return params.load_min + (static_cast<double>(q) / 200.0) * params.load_range();
}

MaskedDay apply_mask(const QuantizedDay& day, const MaskSpec& mask,
                     const NormalizationParams& params) {
    if (mask.length != kMaskLen || mask.start_index < 0 || mask.start_index > kMaxMaskStart) {
        throw Error(ErrKind::range, "mask [" + std::to_string(mask.start_index) + ", len " +
                                        std::to_string(mask.length) + ") outside a 96-point day");
    }
    if (day.load_q.size() != kPointsPerDay || day.temp_q.size() != kPointsPerDay) {
        throw Error(ErrKind::shape, "quantized day does not have 96 points");
    }
    MaskedDay out;
    out.base = day;
    out.mask = mask;
    out.truth_q.reserve(kMaskLen);
    out.truth_kw.reserve(kMaskLen);
    for (int i = mask.start_index; i < mask.start_index + mask.length; ++i) {
        const int q = day.load_q[static_cast<std::size_t>(i)];
        out.truth_q.push_back(q);
        out.truth_kw.push_back(dequantize_load(q, params));
        out.base.load_q[static_cast<std::size_t>(i)] = 0;
    }
    return out;
}

std::vector<MaskSpec> sample_masks(std::size_t n_days, std::uint64_t seed) {
    SeededRng rng(derive_seed(seed, "mask"));
    std::vector<MaskSpec> masks;
    masks.reserve(n_days);
    for (std::size_t i = 0; i < n_days; ++i) {
        masks.push_back(
            MaskSpec{static_cast<int>(rng.next_below(kMaxMaskStart + 1)), kMaskLen});
    }
    return masks;
}

std::pair<std::vector<DailyProfile>, std::vector<DailyProfile>>
filter_abnormal_days(const std::vector<DailyProfile>& days, double threshold_frac) {
    if (!(threshold_frac > 0.0) || threshold_frac > 1.0) {
        throw Error(ErrKind::range, "abnormal threshold must be in (0, 1]");
    }
    if (days.empty()) {
        return {};
    }
    double temp_min = days.front().temperature.front();
    double temp_max = temp_min;
    for (const DailyProfile& day : days) {
        for (double t : day.temperature) {
            temp_min = std::min(temp_min, t);
            temp_max = std::max(temp_max, t);
        }
    }
    const double drop_limit = threshold_frac * (temp_max - temp_min);

    auto peak_temp = [](const DailyProfile& day) {
        return *std::max_element(day.temperature.begin(), day.temperature.end());
    };

    // Per-user previous-calendar-day comparison; gaps reset the reference.
    std::map<std::string, std::map<std::int64_t, const DailyProfile*>> by_user;
    for (const DailyProfile& day : days) {
        by_user[day.user_id][days_from_civil(day.date)] = &day;
    }
    std::map<const DailyProfile*, bool> abnormal;
    for (const auto& [user, calendar] : by_user) {
        for (const auto& [day_number, day] : calendar) {
            const auto prev = calendar.find(day_number - 1);
            if (prev == calendar.end()) {
                abnormal[day] = false;
                continue;
            }
            abnormal[day] = peak_temp(*day) < peak_temp(*prev->second) - drop_limit;
        }
    }

    std::pair<std::vector<DailyProfile>, std::vector<DailyProfile>> result;
    for (const DailyProfile& day : days) {
        if (abnormal[&day]) {
            result.second.push_back(day);
        } else {
            result.first.push_back(day);
        }
    }
    return result;
}

PreparedDataset prepare_dataset(const std::vector<DailyProfile>& days, std::uint64_t seed,
                                double abnormal_threshold, const std::string& timezone) {
    const DatasetStats stats = summarize(days);
    PreparedDataset prepared;
    prepared.params = fit_normalization(stats);
    prepared.seed = seed;
    prepared.abnormal_threshold = abnormal_threshold;
    prepared.timezone = timezone;

    const auto [kept, removed] = filter_abnormal_days(days, abnormal_threshold);
    std::map<std::pair<std::string, std::int64_t>, bool> abnormal_flags;
    for (const DailyProfile& day : removed) {
        abnormal_flags[{day.user_id, days_from_civil(day.date)}] = true;
    }

    const std::vector<MaskSpec> masks = sample_masks(days.size(), seed);
    prepared.days.reserve(days.size());
    for (std::size_t i = 0; i < days.size(); ++i) {
        MaskedDay masked = apply_mask(quantize(days[i], prepared.params), masks[i],
                                      prepared.params);
        masked.abnormal =
            abnormal_flags.count({days[i].user_id, days_from_civil(days[i].date)}) > 0;
        prepared.days.push_back(std::move(masked));
    }
    return prepared;
}

void write_prepared_file(const std::filesystem::path& path, const PreparedDataset& prepared) {
    nlohmann::json header{
        {"schema", kPreparedSchema},
        {"seed", prepared.seed},
        {"mask_len", kMaskLen},
        {"abnormal_threshold", prepared.abnormal_threshold},
        {"tz", prepared.timezone},
        {"params",
         {{"load_min", prepared.params.load_min},
          {"load_max", prepared.params.load_max},
          {"temp_min", prepared.params.temp_min},
          {"temp_max", prepared.params.temp_max}}},
    };
    std::vector<nlohmann::json> records;
    records.reserve(prepared.days.size());
    for (const MaskedDay& day : prepared.days) {
        records.push_back(nlohmann::json{{"user_id", day.base.user_id},
                                         {"date", day.base.date.to_string()},
                                         {"load_q", day.base.load_q},
                                         {"temp_q", day.base.temp_q},
                                         {"mask_start", day.mask.start_index},
                                         {"truth_q", day.truth_q},
                                         {"truth_kw", day.truth_kw},
                                         {"abnormal", day.abnormal}});
    }
    write_record_file(path, header, records);
}

PreparedDataset read_prepared_file(const std::filesystem::path& path) {
    const RecordFile file = read_record_file(path, kPreparedSchema);
    PreparedDataset prepared;
    try {
        prepared.seed = file.header.at("seed").get<std::uint64_t>();
        prepared.abnormal_threshold = file.header.at("abnormal_threshold").get<double>();
        prepared.timezone = file.header.value("tz", "");
        const nlohmann::json& p = file.header.at("params");
        prepared.params = NormalizationParams{
            p.at("load_min").get<double>(), p.at("load_max").get<double>(),
            p.at("temp_min").get<double>(), p.at("temp_max").get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrKind::validation, path.string() + ": bad prepared header: " + e.what());
    }
    prepared.days.reserve(file.records.size());
    for (std::size_t i = 0; i < file.records.size(); ++i) {
        const nlohmann::json& rec = file.records[i];
        try {
            MaskedDay day;
            day.base.user_id = rec.at("user_id").get<std::string>();
            day.base.date = parse_date(rec.at("date").get<std::string>());
            day.base.load_q = rec.at("load_q").get<std::vector<int>>();
            day.base.temp_q = rec.at("temp_q").get<std::vector<int>>();
            day.mask = MaskSpec{rec.at("mask_start").get<int>(), kMaskLen};
            day.truth_q = rec.at("truth_q").get<std::vector<int>>();
            day.truth_kw = rec.at("truth_kw").get<std::vector<double>>();
            day.abnormal = rec.at("abnormal").get<bool>();
            if (day.base.load_q.size() != kPointsPerDay ||
                day.base.temp_q.size() != kPointsPerDay ||
                day.truth_q.size() != kMaskLen || day.truth_kw.size() != kMaskLen) {
                throw Error(ErrKind::validation, "prepared record has wrong vector sizes");
            }
            prepared.days.push_back(std::move(day));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrKind::parse, path.string() + ": record " + std::to_string(i + 2) +
                                            ": " + e.what());
        }
    }
    return prepared;
}

} // namespace loadpatch
