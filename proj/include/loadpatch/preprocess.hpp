#pragma once

#include "loadpatch/codec.hpp"
#include "loadpatch/ingestion.hpp"

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

namespace loadpatch {

inline constexpr int kMaskLen = 16;
inline constexpr int kMaxMaskStart = kPointsPerDay - kMaskLen; // 80

struct NormalizationParams {
    double load_min = 0.0;
    double load_max = 0.0;
    double temp_min = 0.0;
    double temp_max = 0.0;

    double load_range() const { return load_max - load_min; }
    double temp_range() const { return temp_max - temp_min; }
};

struct QuantizedDay {
    std::string user_id;
    Date date;
    std::vector<int> load_q; // in [0, 200]
    std::vector<int> temp_q; // in [0, 200]
};

struct MaskSpec {
    int start_index = 0;   // in [0, 80]
    int length = kMaskLen; // fixed at 16
};

// A quantized day with one contiguous missing window. Masked positions in
// base.load_q hold 0 (the discard-encoding sentinel); the mask itself is the
// missing-ness flag, realized as "OOOOO" by the codec path.
struct MaskedDay {
    QuantizedDay base;
    MaskSpec mask;
    std::vector<int> truth_q;     // 16 held-out quantized values
    std::vector<double> truth_kw; // the same window denormalized to kW
    bool abnormal = false;        // sudden-temperature-drop flag, set at prepare time

    bool is_masked(int index) const {
        return index >= mask.start_index && index < mask.start_index + mask.length;
    }
    codec::QuantValue load_at(int index) const {
        if (is_masked(index)) {
            return std::nullopt;
        }
        return base.load_q[static_cast<std::size_t>(index)];
    }
};

// Copies the dataset extremes; throws Error{degenerate_range} when a span
// collapses to a point.
NormalizationParams fit_normalization(const DatasetStats& stats);

// q = round(200 * (x - min) / (max - min)), half away from zero; inputs
// outside [min, max] are clamped first.
int quantize_value(double x, double min, double max);
QuantizedDay quantize(const DailyProfile& day, const NormalizationParams& params);

// x = min + (q / 200) * (max - min); q outside [0, 200] raises Error{range}.
double dequantize_load(int q, const NormalizationParams& params);

MaskedDay apply_mask(const QuantizedDay& day, const MaskSpec& mask,
                     const NormalizationParams& params);

// One mask per day, start uniform over [0, 80] from the given seed.
std::vector<MaskSpec> sample_masks(std::size_t n_days, std::uint64_t seed);

// A day is abnormal iff its peak temperature sits more than
// threshold_frac * (dataset temp range) below the previous calendar day's
// peak for the same user. First days (and days after a gap) never are.
std::pair<std::vector<DailyProfile>, std::vector<DailyProfile>>
filter_abnormal_days(const std::vector<DailyProfile>& days, double threshold_frac);

// Prepared-file persistence (schema loadpatch.prepared.v1).
inline constexpr const char* kPreparedSchema = "loadpatch.prepared.v1";

struct PreparedDataset {
    NormalizationParams params;
    std::uint64_t seed = 0;
    double abnormal_threshold = 0.25;
    std::string timezone;
    std::vector<MaskedDay> days;
};

PreparedDataset prepare_dataset(const std::vector<DailyProfile>& days, std::uint64_t seed,
                                double abnormal_threshold, const std::string& timezone);

void write_prepared_file(const std::filesystem::path& path, const PreparedDataset& prepared);
PreparedDataset read_prepared_file(const std::filesystem::path& path);

} // namespace loadpatch
