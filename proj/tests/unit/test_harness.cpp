#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "guitod/baselines.hpp"
#include "guitod/error.hpp"
#include "guitod/harness.hpp"
#include "guitod/report.hpp"
#include "synthetic.hpp"

using namespace guitod;
namespace gt = guitod::testing;
namespace fs = std::filesystem;

namespace {

const fs::path kCorpus = fs::path(GUITOD_FIXTURE_DIR) / "corpus" / "episodes.jsonl";

class GoldEcho : public Policy {
 public:
  std::string name() const override { return "gold"; }
  Action predict_action(const DataPoint& dp) const override { return dp.gold; }
  std::optional<std::string> respond(const DataPoint& dp) const override { return dp.gold_response; }
};

class Flaky : public Policy {
 public:
  std::string name() const override { return "flaky"; }
  Action predict_action(const DataPoint& dp) const override {
    if (dp.key.action == 1) throw std::runtime_error("boom at " + to_string(dp.key));
    return dp.gold;
  }
};

PolicyConfig quick_config() {
  PolicyConfig c;
  c.d = 16;
  c.hash_dim = 32;
  c.history = 2;
  c.epochs = 60;
  return c;
}

fs::path scratch() {
  fs::path dir = fs::temp_directory_path() / ("guitod_harness_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Evaluate, GoldEchoIsPerfect) {
  auto pts = expand_data_points(load_corpus(kCorpus));
  auto run = evaluate(GoldEcho(), pts, "fixture");
  EXPECT_EQ(run.run_id, "gold@fixture");
  EXPECT_EQ(run.report.overall.action_cr, 100.0);
  EXPECT_EQ(run.report.overall.turn_cr, 100.0);
  EXPECT_EQ(run.report.overall.action_type_acc, 100.0);
  EXPECT_DOUBLE_EQ(*run.report.overall.response_bleu, 1.0);
  EXPECT_FALSE(run.duration_seconds.has_value());
  EXPECT_EQ(run.report.per_domain.size(), 3u);
}

TEST(Evaluate, PolicyFailuresBecomeDiagnostics) {
  auto pts = expand_data_points(load_corpus(kCorpus));
  std::vector<Prediction> preds;
  auto run = evaluate(Flaky(), pts, "fixture", {}, preds);
  ASSERT_EQ(preds.size(), pts.size());
  std::size_t failed = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(preds[i].key, pts[i].key);
    if (pts[i].key.action == 1) {
      ++failed;
      EXPECT_FALSE(preds[i].predicted.has_value());
      EXPECT_NE(preds[i].diagnostic.find("boom"), std::string::npos);
    }
    if (!pts[i].turn_final) {
      EXPECT_FALSE(preds[i].response.has_value());
    }
  }
  EXPECT_EQ(run.report.overall.n_failed_predictions, failed);
  EXPECT_LT(run.report.overall.action_cr, 100.0);
}

TEST(Evaluate, ThreadCountDoesNotMatter) {
  auto pts = expand_data_points(gt::templated_corpus(150, 4));
  RandomBaseline r(3);
  EXPECT_EQ(predict_all(r, pts, 1).size(), pts.size());
  EvalOptions one, four;
  four.threads = 4;
  EXPECT_EQ(evaluate(r, pts, "s", one), evaluate(r, pts, "s", four));
  four.record_duration = true;
  auto timed = evaluate(r, pts, "s", four);
  ASSERT_TRUE(timed.duration_seconds.has_value());
  EXPECT_GE(*timed.duration_seconds, 0.0);
}

TEST(Evaluate, RolloutModeIsRejected) {
  auto pts = expand_data_points(load_corpus(kCorpus));
  EvalOptions opts;
  opts.mode = eval_mode_from_string("rollout");
  EXPECT_THROW(evaluate(GoldEcho(), pts, "fixture", opts), ValidationError);
  EXPECT_EQ(eval_mode_from_string("teacher-forcing"), EvalMode::teacher_forcing);
  EXPECT_THROW(eval_mode_from_string("free"), ValidationError);
}

TEST(Evaluate, MostFrequentNeverCompletesATurn) {
  for (std::uint64_t seed : {1, 2, 3}) {
    auto pts = expand_data_points(gt::templated_corpus(120, seed));
    MostFrequentBaseline mfm(fit_counts(pts));
    ASSERT_NE(mfm.action().type(), ActionType::End);
    auto run = evaluate(mfm, pts, "train");
    EXPECT_EQ(run.report.overall.turn_cr, 0.0);
  }
}

TEST(Evaluate, DomainBreakdownIsWeightedConsistent) {
  auto pts = expand_data_points(load_corpus(kCorpus));
  auto run = evaluate(RandomBaseline(5), pts, "fixture");
  double weighted = 0, turn_weighted = 0;
  std::size_t n = 0, turns = 0;
  for (const auto& [d, v] : run.report.per_domain) {
    weighted += v.action_cr * static_cast<double>(v.n_points);
    turn_weighted += v.turn_cr * static_cast<double>(v.n_turns);
    n += v.n_points;
    turns += v.n_turns;
  }
  EXPECT_EQ(n, 65u);
  EXPECT_EQ(turns, 21u);
  EXPECT_NEAR(weighted / static_cast<double>(n), run.report.overall.action_cr, 1e-9);
  EXPECT_NEAR(turn_weighted / static_cast<double>(turns), run.report.overall.turn_cr, 1e-9);
}

TEST(Generality, FixtureDomainsArePureDeterministicAndHarder) {
  auto eps = load_corpus(kCorpus);
  PolicyConfig cfg = quick_config();
  auto a = run_generality_suite(eps, HoldoutKey::domain, cfg);
  ASSERT_EQ(a.runs.size(), 3u);
  EXPECT_TRUE(a.warnings.empty());
  for (const auto& run : a.runs) {
    std::string held = run.split.substr(std::string("holdout-domain:").size());
    EXPECT_EQ(run.split, "holdout-domain:" + held);
    // Every point is from an episode touching the held domain.
    auto split = split_holdout(eps, HoldoutKey::domain, held);
    EXPECT_EQ(run.report.overall.n_points, expand_data_points(split.test).size());
    EXPECT_TRUE(run.report.per_domain.count(held));
  }
  auto b = run_generality_suite(eps, HoldoutKey::domain, cfg);
  EXPECT_EQ(runs_to_json(a.runs).dump(), runs_to_json(b.runs).dump());

  // The same architecture trained on everything does at least as well on
  // each held-out test set.
  auto full = train_reference_policy(expand_data_points(eps), cfg);
  for (const auto& run : a.runs) {
    std::string held = run.split.substr(std::string("holdout-domain:").size());
    auto test = expand_data_points(split_holdout(eps, HoldoutKey::domain, held).test);
    auto in_dist = evaluate(full, test, "in-distribution");
    EXPECT_LE(run.report.overall.action_cr, in_dist.report.overall.action_cr) << held;
  }
}

TEST(Generality, DegenerateInputs) {
  auto eps = load_corpus(kCorpus);
  std::vector<Episode> weather_only = {eps[0]};
  EXPECT_THROW(run_generality_suite(weather_only, HoldoutKey::domain, quick_config()), ValidationError);
  // fx-mixed-1 touches both weather and calendar; holding out either leaves
  // an empty training side.
  std::vector<Episode> mixed = {eps[5]};
  auto r = run_generality_suite(mixed, HoldoutKey::domain, quick_config());
  EXPECT_TRUE(r.runs.empty());
  EXPECT_EQ(r.warnings.size(), 2u);
}

TEST(Predictions, JsonlRoundTrip) {
  auto pts = expand_data_points(load_corpus(kCorpus));
  auto preds = predict_all(Flaky(), pts);
  preds[0].response = "line one\nline \"two\"";
  fs::path p = scratch() / "preds.jsonl";
  write_predictions(preds, p);
  auto back = read_predictions(p);
  ASSERT_EQ(back.size(), preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    EXPECT_EQ(back[i].key, preds[i].key);
    EXPECT_EQ(back[i].predicted, preds[i].predicted);
    EXPECT_EQ(back[i].response, preds[i].response);
    EXPECT_EQ(back[i].diagnostic, preds[i].diagnostic);
  }
  std::ofstream(scratch() / "bad.jsonl") << "{\"episode_id\": \"x\"}\n";
  EXPECT_ANY_THROW(read_predictions(scratch() / "bad.jsonl"));
}

TEST(Report, JsonRoundTripIsExact) {
  auto pts = expand_data_points(load_corpus(kCorpus));
  EvalOptions opts;
  opts.config = {{"seed", 5}, {"kind", "random"}};
  opts.record_duration = true;
  std::vector<EvalRun> runs = {evaluate(RandomBaseline(5), pts, "fixture", opts), evaluate(GoldEcho(), pts, "fixture")};
  fs::path p = scratch() / "report.json";
  emit_report(runs, p, ReportFormat::json);
  EXPECT_EQ(read_report(p), runs);

  auto j = nlohmann::json::parse(std::ifstream(p));
  EXPECT_EQ(j["format"], "gui-tod-report");
  const auto& m = j["runs"][0]["overall"];
  for (const char* key : {"action_type_acc", "input_em", "input_f1", "item_acc", "direction_acc", "action_cr",
                          "turn_cr"}) {
    EXPECT_TRUE(m.contains(key)) << key;
  }
  EXPECT_THROW(emit_report(runs, "/proc/forbidden/report.json", ReportFormat::json), std::runtime_error);
}

TEST(Report, TableHasColumnsAndOneRowPerRun) {
  auto pts = expand_data_points(load_corpus(kCorpus));
  std::vector<EvalRun> runs = {evaluate(RandomBaseline(5), pts, "fixture"), evaluate(GoldEcho(), pts, "fixture")};
  std::string table = format_table(runs);
  for (const char* col : {"Action Type Acc.", "Input EM", "Input F1", "Item Acc.", "Direction Acc.", "CR",
                          "Turn CR", "BLEU"}) {
    EXPECT_NE(table.find(col), std::string::npos) << col;
  }
  std::istringstream in(table);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) rows += line.find("@fixture") != std::string::npos ? 1 : 0;
  EXPECT_EQ(rows, 2u);
  EXPECT_NE(table.find("100.00"), std::string::npos);

  std::string dom = format_domain_table(runs[1]);
  for (const char* d : {"weather", "calendar", "hotel", "overall"}) EXPECT_NE(dom.find(d), std::string::npos) << d;

  MetricsReport empty;
  EvalRun bare{"x@y", nlohmann::json::object(), "x", "y", empty, std::nullopt};
  EXPECT_NE(format_table({bare}).find(" - "), std::string::npos);
  EXPECT_EQ(report_format_from_string("text"), ReportFormat::text);
  EXPECT_THROW(report_format_from_string("csv"), ValidationError);
}
