#include "loadpatch/metrics.hpp"

#include "loadpatch/errors.hpp"

#include <cmath>
#include <cstdio>

namespace loadpatch {

namespace {

void check_shapes(std::span<const double> truth, std::span<const double> restored) {
    if (truth.size() != restored.size() || truth.empty()) {
        throw Error(ErrKind::shape, "metric inputs must be equal-length and non-empty");
    }
}

} // namespace

double mpe(std::span<const double> truth, std::span<const double> restored) {
    check_shapes(truth, restored);
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!(truth[i] > 0.0)) {
            throw Error(ErrKind::undefined_metric,
                        "MPE undefined: truth point " + std::to_string(i) + " is not positive");
        }
        sum += std::abs(restored[i] - truth[i]) / truth[i];
    }
    return sum / static_cast<double>(truth.size());
}

double rmse(std::span<const double> truth, std::span<const double> restored) {
    check_shapes(truth, restored);
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double e = restored[i] - truth[i];
        sum_sq += e * e;
    }
    return std::sqrt(sum_sq / static_cast<double>(truth.size()));
}

double egye(std::span<const double> truth, std::span<const double> restored) {
    check_shapes(truth, restored);
    double sum_truth = 0.0;
    double sum_restored = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        sum_truth += truth[i];
        sum_restored += restored[i];
    }
    if (!(sum_truth > 0.0)) {
        throw Error(ErrKind::undefined_metric, "EGYE undefined: truth energy is not positive");
    }
    return std::abs(sum_restored - sum_truth) / sum_truth;
}

SampleMetrics sample_metrics(std::span<const double> truth_kw,
                             std::span<const double> restored_kw, double load_range) {
    if (!(load_range > 0.0)) {
        throw Error(ErrKind::degenerate_range, "load range must be positive");
    }
    SampleMetrics m;
    m.mpe = mpe(truth_kw, restored_kw);
    m.rmse_kw = rmse(truth_kw, restored_kw);
    m.rmse_norm = m.rmse_kw / load_range;
    m.egye = egye(truth_kw, restored_kw);
    m.k = truth_kw.size();
    return m;
}

MetricsReport aggregate(std::span<const SampleMetrics> samples, const std::string& label,
                        std::size_t failed) {
    if (samples.empty()) {
        throw Error(ErrKind::empty_dataset, "no successful samples to aggregate for '" + label + "'");
    }
    MetricsReport report;
    report.label = label;
    report.failed = failed;
    report.samples.assign(samples.begin(), samples.end());
    for (const SampleMetrics& m : samples) {
        report.mean_mpe += m.mpe;
        report.mean_rmse_kw += m.rmse_kw;
        report.mean_rmse_norm += m.rmse_norm;
        report.mean_egye += m.egye;
    }
    const double n = static_cast<double>(samples.size());
    report.mean_mpe /= n;
    report.mean_rmse_kw /= n;
    report.mean_rmse_norm /= n;
    report.mean_egye /= n;
    return report;
}

std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", fraction * 100.0);
    return buf;
}

} // namespace loadpatch
