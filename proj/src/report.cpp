#include "loadpatch/report.hpp"

#include "loadpatch/errors.hpp"
#include "loadpatch/metrics.hpp"
#include "loadpatch/orchestrator.hpp"
#include "loadpatch/records.hpp"

#include <cstdio>
#include <map>
#include <sstream>
#include <vector>

namespace loadpatch {

namespace {

std::string flags_of(const nlohmann::json& row) {
    if (!row.contains("config")) {
        return "-";
    }
    const nlohmann::json& c = row["config"];
    std::string flags;
    flags += c.value("advanced_prompt", false) ? 'Y' : 'N';
    flags += c.value("separate_load_temp", false) ? 'Y' : 'N';
    flags += c.value("discard_encoding", false) ? 'Y' : 'N';
    flags += c.value("remove_abnormal_days", false) ? 'Y' : 'N';
    return flags;
}

std::string samples_of(const nlohmann::json& row) {
    if (row.contains("config")) {
        return std::to_string(row["config"].value("n_samples", 0));
    }
    if (row.contains("n_train")) {
        return std::to_string(row["n_train"].get<int>());
    }
    return "-";
}

std::string money(const nlohmann::json& row) {
    if (!row.contains("cost_usd")) {
        return "-";
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "$%.2f", row["cost_usd"].get<double>());
    return buf;
}

std::string pct(const nlohmann::json& row, const char* field) {
    if (!row.contains(field)) {
        return "-";
    }
    return format_percent(row[field].get<double>());
}

void render_table(std::ostringstream& out, const std::string& kind,
                  const std::vector<nlohmann::json>& rows) {
    out << "== " << kind << " ==\n";
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"label", "samples", "flags", "MPE", "RMSE", "EGYE", "failures", "cost"});
    for (const nlohmann::json& row : rows) {
        if (row.value("status", "") != "ok") {
            cells.push_back({row.value("label", "?"), samples_of(row), flags_of(row), "-", "-",
                             "-", "-", "error: " + row.value("error", "unknown")});
            continue;
        }
        cells.push_back({row.value("label", "?"), samples_of(row), flags_of(row),
                         pct(row, "mpe"), pct(row, "rmse_norm"), pct(row, "egye"),
                         std::to_string(row.value("failed", 0)), money(row)});
    }
    std::vector<std::size_t> widths(cells.front().size(), 0);
    for (const auto& line : cells) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            widths[i] = std::max(widths[i], line[i].size());
        }
    }
    for (const auto& line : cells) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            out << line[i];
            if (i + 1 < line.size()) {
                out << std::string(widths[i] - line[i].size() + 2, ' ');
            }
        }
        out << '\n';
    }
    out << '\n';
}

} // namespace

std::string render_manifest_report(const std::filesystem::path& manifest_path) {
    const RecordFile file = read_record_file(manifest_path, kManifestSchema);
    if (file.records.empty()) {
        return "no experiments in " + manifest_path.string() + "\n";
    }
    // Keep first-seen kind order so scenario tables come before sweeps.
    std::vector<std::string> kind_order;
    std::map<std::string, std::vector<nlohmann::json>> by_kind;
    for (const nlohmann::json& row : file.records) {
        const std::string kind = row.value("kind", "scenario");
        if (!by_kind.count(kind)) {
            kind_order.push_back(kind);
        }
        by_kind[kind].push_back(row);
    }
    std::ostringstream out;
    for (const std::string& kind : kind_order) {
        render_table(out, kind, by_kind[kind]);
    }
    return out.str();
}

std::string render_results_report(const std::filesystem::path& results_path,
                                  const std::filesystem::path& report_out) {
    const RecordFile file = read_record_file(results_path, kResultsSchema);
    const std::string label = file.header.value("label", results_path.stem().string());

    std::vector<SampleMetrics> succeeded;
    std::size_t failed = 0;
    for (const nlohmann::json& row : file.records) {
        if (row.value("status", "") != "ok") {
            ++failed;
            continue;
        }
        SampleMetrics m;
        m.mpe = row.at("mpe").get<double>();
        m.rmse_kw = row.at("rmse_kw").get<double>();
        m.rmse_norm = row.at("rmse_norm").get<double>();
        m.egye = row.at("egye").get<double>();
        m.k = kMaskLen;
        succeeded.push_back(m);
    }
    const MetricsReport report = aggregate(succeeded, label, failed);

    std::ostringstream out;
    out << "label: " << report.label << '\n';
    out << "samples: " << report.samples.size() << " ok, " << report.failed << " failed\n";
    out << "MPE:  " << format_percent(report.mean_mpe) << " %\n";
    out << "RMSE: " << format_percent(report.mean_rmse_norm) << " % ("
        << report.mean_rmse_kw << " kW)\n";
    out << "EGYE: " << format_percent(report.mean_egye) << " %\n";

    if (!report_out.empty()) {
        const nlohmann::json record{
            {"label", report.label},          {"n_ok", report.samples.size()},
            {"failed", report.failed},        {"mpe", report.mean_mpe},
            {"rmse_kw", report.mean_rmse_kw}, {"rmse_norm", report.mean_rmse_norm},
            {"egye", report.mean_egye},
        };
        write_record_file(report_out, nlohmann::json{{"schema", "loadpatch.report.v1"}},
                          {record});
    }
    return out.str();
}

} // namespace loadpatch
