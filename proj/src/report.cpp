#include "guitod/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "guitod/error.hpp"

namespace guitod {

namespace fs = std::filesystem;

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

std::string cell(const std::optional<double>& v, int precision) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", precision, *v);
  return buf;
}

struct Column {
  std::string header;
  std::vector<std::string> cells;
  bool left = false;
};

std::string render(const std::vector<Column>& cols) {
  std::vector<std::size_t> width;
  for (const auto& c : cols) {
    std::size_t w = c.header.size();
    for (const auto& s : c.cells) w = std::max(w, s.size());
    width.push_back(w);
  }
  auto pad = [](const std::string& s, std::size_t w, bool left) {
    std::string fill(w - s.size(), ' ');
    return left ? s + fill : fill + s;
  };
  std::ostringstream out;
  const std::size_t rows = cols.empty() ? 0 : cols.front().cells.size();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out << (i ? "  " : "") << pad(cols[i].header, width[i], cols[i].left);
  }
  out << '\n';
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "  " : "") << std::string(width[i], '-');
  out << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      out << (i ? "  " : "") << pad(cols[i].cells[r], width[i], cols[i].left);
    }
    out << '\n';
  }
  return out.str();
}

std::vector<Column> metric_columns() {
  return {{"Action Type Acc.", {}}, {"Input EM", {}}, {"Input F1", {}}, {"Item Acc.", {}},
          {"Direction Acc.", {}},  {"CR", {}},       {"Turn CR", {}},  {"BLEU", {}}};
}

void add_metric_row(std::vector<Column>& cols, std::size_t first, const MetricValues& v) {
  cols[first + 0].cells.push_back(cell(v.action_type_acc, 2));
  cols[first + 1].cells.push_back(cell(v.input_em, 2));
  cols[first + 2].cells.push_back(cell(v.input_f1, 2));
  cols[first + 3].cells.push_back(cell(v.item_acc, 2));
  cols[first + 4].cells.push_back(cell(v.direction_acc, 2));
  cols[first + 5].cells.push_back(cell(v.action_cr, 2));
  cols[first + 6].cells.push_back(cell(v.turn_cr, 2));
  cols[first + 7].cells.push_back(cell(v.response_bleu, 4));
}

}  // namespace

ReportFormat report_format_from_string(std::string_view s) {
  if (s == "json") return ReportFormat::json;
  if (s == "text") return ReportFormat::text;
  throw ValidationError("unknown report format '" + std::string(s) + "' (expected json or text)");
}

nlohmann::json metrics_to_json(const MetricValues& v) {
  return {{"action_type_acc", v.action_type_acc},
          {"input_em", opt(v.input_em)},
          {"input_f1", opt(v.input_f1)},
          {"item_acc", opt(v.item_acc)},
          {"direction_acc", opt(v.direction_acc)},
          {"action_cr", v.action_cr},
          {"turn_cr", v.turn_cr},
          {"response_bleu", opt(v.response_bleu)},
          {"counts",
           {{"points", v.n_points},
            {"turns", v.n_turns},
            {"click", v.n_click},
            {"swipe", v.n_swipe},
            {"input", v.n_input},
            {"completed_actions", v.n_completed_actions},
            {"completed_turns", v.n_completed_turns},
            {"actions_in_completed_turns", v.n_actions_in_completed_turns},
            {"failed_predictions", v.n_failed_predictions}}}};
}

MetricValues metrics_from_json(const nlohmann::json& j) {
  MetricValues v;
  v.action_type_acc = j.at("action_type_acc").get<double>();
  v.input_em = opt_from(j, "input_em");
  v.input_f1 = opt_from(j, "input_f1");
  v.item_acc = opt_from(j, "item_acc");
  v.direction_acc = opt_from(j, "direction_acc");
  v.action_cr = j.at("action_cr").get<double>();
  v.turn_cr = j.at("turn_cr").get<double>();
  v.response_bleu = opt_from(j, "response_bleu");
  const auto& c = j.at("counts");
  v.n_points = c.at("points").get<std::size_t>();
  v.n_turns = c.at("turns").get<std::size_t>();
  v.n_click = c.at("click").get<std::size_t>();
  v.n_swipe = c.at("swipe").get<std::size_t>();
  v.n_input = c.at("input").get<std::size_t>();
  v.n_completed_actions = c.at("completed_actions").get<std::size_t>();
  v.n_completed_turns = c.at("completed_turns").get<std::size_t>();
  v.n_actions_in_completed_turns = c.at("actions_in_completed_turns").get<std::size_t>();
  v.n_failed_predictions = c.at("failed_predictions").get<std::size_t>();
  return v;
}

nlohmann::json run_to_json(const EvalRun& run) {
  nlohmann::json domains = nlohmann::json::object();
  for (const auto& [name, v] : run.report.per_domain) domains[name] = metrics_to_json(v);
  nlohmann::json j = {{"run_id", run.run_id},
                      {"policy", run.policy},
                      {"split", run.split},
                      {"config", run.config},
                      {"overall", metrics_to_json(run.report.overall)},
                      {"per_domain", std::move(domains)}};
  if (run.duration_seconds) j["duration_seconds"] = *run.duration_seconds;
  return j;
}

EvalRun run_from_json(const nlohmann::json& j) {
  try {
    EvalRun run;
    run.run_id = j.at("run_id").get<std::string>();
    run.policy = j.at("policy").get<std::string>();
    run.split = j.at("split").get<std::string>();
    run.config = j.at("config");
    run.report.overall = metrics_from_json(j.at("overall"));
    for (const auto& [name, v] : j.at("per_domain").items()) run.report.per_domain.emplace(name, metrics_from_json(v));
    if (j.contains("duration_seconds")) run.duration_seconds = j["duration_seconds"].get<double>();
    return run;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed run record: ") + e.what());
  }
}

nlohmann::json runs_to_json(const std::vector<EvalRun>& runs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : runs) arr.push_back(run_to_json(r));
  return {{"format", "gui-tod-report"}, {"version", 1}, {"runs", std::move(arr)}};
}

std::vector<EvalRun> runs_from_json(const nlohmann::json& j) {
  std::vector<EvalRun> runs;
  try {
    for (const auto& r : j.at("runs")) runs.push_back(run_from_json(r));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
  return runs;
}

std::string format_table(const std::vector<EvalRun>& runs) {
  std::vector<Column> cols{{"Run", {}, true}};
  for (auto& c : metric_columns()) cols.push_back(std::move(c));
  for (const auto& r : runs) {
    cols[0].cells.push_back(r.run_id);
    add_metric_row(cols, 1, r.report.overall);
  }
  return render(cols);
}

std::string format_domain_table(const EvalRun& run) {
  std::vector<Column> cols{{"Domain", {}, true}};
  for (auto& c : metric_columns()) cols.push_back(std::move(c));
  for (const auto& [name, v] : run.report.per_domain) {
    cols[0].cells.push_back(name);
    add_metric_row(cols, 1, v);
  }
  cols[0].cells.push_back("overall");
  add_metric_row(cols, 1, run.report.overall);
  return render(cols);
}

void emit_report(const std::vector<EvalRun>& runs, const fs::path& path, ReportFormat format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report " + path.string());
  if (format == ReportFormat::json) {
    out << runs_to_json(runs).dump(2) << '\n';
  } else {
    out << format_table(runs);
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<EvalRun> read_report(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return runs_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), e.byte);
  }
}

}  // namespace guitod
