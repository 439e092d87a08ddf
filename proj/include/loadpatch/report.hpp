#pragma once

#include <filesystem>
#include <string>

namespace loadpatch {

// Formatted tables over a manifest: one table per experiment kind with
// columns (label, samples, flags, MPE%, RMSE%, EGYE%, failures, cost).
// An empty manifest renders a "no experiments" notice.
std::string render_manifest_report(const std::filesystem::path& manifest_path);

// Aggregate a per-sample results file into a plain-text report; also writes
// a machine-readable record file when report_out is non-empty.
std::string render_results_report(const std::filesystem::path& results_path,
                                  const std::filesystem::path& report_out);

} // namespace loadpatch
