#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "guitod/config.hpp"
#include "guitod/corpus.hpp"
#include "guitod/metrics.hpp"
#include "guitod/policy.hpp"

namespace guitod {

struct EvalRun {
  std::string run_id;
  /// Everything needed to reproduce the run: policy config, seeds, split.
  nlohmann::json config;
  std::string policy;
  std::string split;
  MetricsReport report;
  /// Only recorded on request; leaving it out keeps reports byte-identical
  /// across reruns.
  std::optional<double> duration_seconds;

  bool operator==(const EvalRun&) const = default;
};

enum class EvalMode {
  /// Every point is predicted from its gold history.
  teacher_forcing,
  /// Advance along the recorded trace only while predictions match exactly.
  /// TODO(rollout): not implemented; evaluate() rejects it.
  rollout,
};

EvalMode eval_mode_from_string(std::string_view s);

struct EvalOptions {
  EvalMode mode = EvalMode::teacher_forcing;
  /// Worker threads for prediction; results do not depend on the count.
  std::size_t threads = 1;
  bool record_duration = false;
  nlohmann::json config = nlohmann::json::object();
};

/// Teacher-forced predictions for every point, in input order. A policy
/// exception becomes a failed prediction with the message as diagnostic.
/// Responses are requested on turn-final points only.
std::vector<Prediction> predict_all(const Policy& policy, const std::vector<DataPoint>& points,
                                    std::size_t threads = 1);

EvalRun evaluate(const Policy& policy, const std::vector<DataPoint>& points, const std::string& split,
                 const EvalOptions& options = {});

/// Same, also returning the predictions.
EvalRun evaluate(const Policy& policy, const std::vector<DataPoint>& points, const std::string& split,
                 const EvalOptions& options, std::vector<Prediction>& predictions);

/// Trains a reference policy with a retrieval responder on `train`.
ReferencePolicy train_reference_policy(const std::vector<DataPoint>& train, const PolicyConfig& config);

struct GeneralityResult {
  std::vector<EvalRun> runs;
  /// Holdouts that were skipped, with the reason.
  std::vector<std::string> warnings;
};

/// For every app or domain in the corpus: hold it out, train a fresh policy on
/// the rest and evaluate on the held episodes. Holdouts that leave the
/// training side empty are skipped with a warning. Throws ValidationError if
/// the corpus has fewer than two apps or domains.
GeneralityResult run_generality_suite(const std::vector<Episode>& corpus, HoldoutKey by,
                                      const PolicyConfig& config);

void write_predictions(const std::vector<Prediction>& preds, const std::filesystem::path& path);
/// Throws ParseError / ValidationError.
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

}  // namespace guitod
