#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "guitod/harness.hpp"

namespace guitod {

enum class ReportFormat { json, text };

/// Throws ValidationError for anything but "json" and "text".
ReportFormat report_format_from_string(std::string_view s);

nlohmann::json metrics_to_json(const MetricValues& v);
MetricValues metrics_from_json(const nlohmann::json& j);

nlohmann::json run_to_json(const EvalRun& run);
EvalRun run_from_json(const nlohmann::json& j);

/// {"runs": [...]}
nlohmann::json runs_to_json(const std::vector<EvalRun>& runs);
std::vector<EvalRun> runs_from_json(const nlohmann::json& j);

/// One row per run with the standard metric columns plus BLEU; absent values
/// print as "-".
std::string format_table(const std::vector<EvalRun>& runs);
/// Per-domain rows of a single run.
std::string format_domain_table(const EvalRun& run);

/// Throws std::runtime_error when the file cannot be written.
void emit_report(const std::vector<EvalRun>& runs, const std::filesystem::path& path, ReportFormat format);
/// Reads a JSON report written by emit_report.
std::vector<EvalRun> read_report(const std::filesystem::path& path);

}  // namespace guitod
