#pragma once

#include <span>
#include <string>
#include <vector>

namespace loadpatch {

// Per-sample error metrics over the 16-point restored window. All three are
// fractions (0.0222 prints as "2.221"); rmse_kw keeps kW units.
struct SampleMetrics {
    double mpe = 0.0;
    double rmse_kw = 0.0;
    double rmse_norm = 0.0; // rmse as a fraction of the normalization range
    double egye = 0.0;
    std::size_t k = 0;
};

struct MetricsReport {
    std::string label;
    std::vector<SampleMetrics> samples;
    double mean_mpe = 0.0;
    double mean_rmse_kw = 0.0;
    double mean_rmse_norm = 0.0;
    double mean_egye = 0.0;
    std::size_t failed = 0;
};

// Mean of |restored - truth| / truth; Error{undefined_metric} when any truth
// point is not positive.
double mpe(std::span<const double> truth, std::span<const double> restored);

// sqrt(mean squared pointwise error), in the units of its inputs.
double rmse(std::span<const double> truth, std::span<const double> restored);

// |sum(restored) - sum(truth)| / sum(truth); Error{undefined_metric} when
// the truth total is not positive.
double egye(std::span<const double> truth, std::span<const double> restored);

SampleMetrics sample_metrics(std::span<const double> truth_kw,
                             std::span<const double> restored_kw, double load_range);

// Per-sample arithmetic means over the successful set; Error{empty_dataset}
// when no samples succeeded.
MetricsReport aggregate(std::span<const SampleMetrics> samples, const std::string& label,
                        std::size_t failed);

// Fraction -> percent with three decimals: 0.02221 -> "2.221".
std::string format_percent(double fraction);

} // namespace loadpatch
