#include "guitod/harness.hpp"

#include <chrono>
#include <fstream>
#include <thread>

#include "guitod/error.hpp"
#include "guitod/retrieval.hpp"
#include "guitod/training.hpp"

namespace guitod {

namespace fs = std::filesystem;

namespace {

Prediction predict_one(const Policy& policy, const DataPoint& dp) {
  Prediction p;
  p.key = dp.key;
  try {
    p.predicted = policy.predict_action(dp);
  } catch (const std::exception& e) {
    p.diagnostic = std::string("predict: ") + e.what();
  }
  if (dp.turn_final) {
    try {
      p.response = policy.respond(dp);
    } catch (const std::exception& e) {
      if (!p.diagnostic.empty()) p.diagnostic += "; ";
      p.diagnostic += std::string("respond: ") + e.what();
    }
  }
  return p;
}

}  // namespace

std::vector<Prediction> predict_all(const Policy& policy, const std::vector<DataPoint>& points,
                                    std::size_t threads) {
  std::vector<Prediction> out(points.size());
  threads = std::max<std::size_t>(1, std::min(threads, points.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = predict_one(policy, points[i]);
    return out;
  }
  // Strided partition; each slot is written by exactly one worker.
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&, w] {
      for (std::size_t i = w; i < points.size(); i += threads) out[i] = predict_one(policy, points[i]);
    });
  }
  for (auto& t : workers) t.join();
  return out;
}

EvalMode eval_mode_from_string(std::string_view s) {
  if (s == "teacher-forcing") return EvalMode::teacher_forcing;
  if (s == "rollout") return EvalMode::rollout;
  throw ValidationError("unknown evaluation mode '" + std::string(s) + "' (known: teacher-forcing, rollout)");
}

EvalRun evaluate(const Policy& policy, const std::vector<DataPoint>& points, const std::string& split,
                 const EvalOptions& options, std::vector<Prediction>& predictions) {
  if (options.mode == EvalMode::rollout) throw ValidationError("rollout evaluation is not supported yet");
  auto start = std::chrono::steady_clock::now();
  predictions = predict_all(policy, points, options.threads);
  EvalRun run;
  run.policy = policy.name();
  run.split = split;
  run.run_id = run.policy + "@" + split;
  run.config = options.config;
  run.report = score_predictions(predictions, points);
  if (options.record_duration) {
    run.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return run;
}

EvalRun evaluate(const Policy& policy, const std::vector<DataPoint>& points, const std::string& split,
                 const EvalOptions& options) {
  std::vector<Prediction> preds;
  return evaluate(policy, points, split, options, preds);
}

ReferencePolicy train_reference_policy(const std::vector<DataPoint>& train_points, const PolicyConfig& config) {
  TrainResult result = train(train_points, config);
  auto responder = std::make_shared<RetrievalResponder>(RetrievalResponder::fit(train_points, config));
  return ReferencePolicy(config, std::move(result.params), std::move(responder));
}

GeneralityResult run_generality_suite(const std::vector<Episode>& corpus, HoldoutKey by, const PolicyConfig& config) {
  const char* what = by == HoldoutKey::app ? "app" : "domain";
  auto names = holdout_names(corpus, by);
  if (names.size() < 2) {
    throw ValidationError(std::string("generality suite needs at least two distinct ") + what + "s, found " +
                          std::to_string(names.size()));
  }
  GeneralityResult out;
  for (const auto& held : names) {
    HoldoutSplit split = split_holdout(corpus, by, held);
    if (split.train.empty()) {
      out.warnings.push_back(std::string("skipped ") + what + " '" + held + "': every episode touches it");
      continue;
    }
    auto train_points = expand_data_points(split.train);
    auto test_points = expand_data_points(split.test);
    ReferencePolicy policy = train_reference_policy(train_points, config);
    EvalOptions opts;
    opts.config = {{"policy", config_to_json(config)}, {"holdout", {{"by", what}, {"held", held}}}};
    out.runs.push_back(evaluate(policy, test_points, std::string("holdout-") + what + ":" + held, opts));
  }
  return out;
}

void write_predictions(const std::vector<Prediction>& preds, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& p : preds) {
    nlohmann::json j = {{"episode_id", p.key.episode_id},
                        {"turn", p.key.turn},
                        {"action", p.key.action},
                        {"predicted", p.predicted ? nlohmann::json(serialize_action(*p.predicted)) : nlohmann::json()},
                        {"response", p.response ? nlohmann::json(*p.response) : nlohmann::json()}};
    if (!p.diagnostic.empty()) j["diagnostic"] = p.diagnostic;
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<Prediction> read_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::vector<Prediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no, e.byte);
    }
    try {
      Prediction p;
      p.key.episode_id = j.at("episode_id").get<std::string>();
      p.key.turn = j.at("turn").get<std::size_t>();
      p.key.action = j.at("action").get<std::size_t>();
      const auto& pred = j.at("predicted");
      if (!pred.is_null()) p.predicted = deserialize_action(pred.get<std::string>());
      if (j.contains("response") && !j["response"].is_null()) p.response = j["response"].get<std::string>();
      if (j.contains("diagnostic")) p.diagnostic = j["diagnostic"].get<std::string>();
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace guitod
