#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "guitod/actions.hpp"
#include "guitod/corpus.hpp"

namespace guitod {

struct Prediction {
  DataPointKey key;
  /// Absent when the policy failed on this point; scored as incorrect.
  std::optional<Action> predicted;
  /// Generated system response, meaningful on turn-final points.
  std::optional<std::string> response;
  std::string diagnostic;
};

struct EmF1 {
  double em = 0.0;
  double f1 = 0.0;
};

/// Token-level exact match and multiset-overlap F1. Both empty counts as a
/// perfect match; exactly one empty gives F1 = 0.
EmF1 input_em_f1(std::string_view pred_text, std::string_view gold_text);

struct CompletionRates {
  double action_cr = 0.0;  ///< percent
  double turn_cr = 0.0;    ///< percent
};

/// Teacher-forced completion rates. Throws CoverageError unless every gold
/// point has exactly one prediction and no prediction is unmatched.
CompletionRates completion_rates(const std::vector<Prediction>& preds,
                                 const std::vector<DataPoint>& gold);

struct HeadAccuracies {
  double action_type_acc = 0.0;
  /// Over gold-Click points; absent when there are none.
  std::optional<double> item_acc;
  /// Over gold-Swipe points; absent when there are none.
  std::optional<double> direction_acc;
};

HeadAccuracies head_accuracies(const std::vector<Prediction>& preds,
                               const std::vector<DataPoint>& gold);

/// Corpus BLEU-4 with uniform weights, brevity penalty and add-one smoothing
/// of zero-match precisions for n >= 2. Throws std::invalid_argument on a
/// length mismatch.
double corpus_bleu(const std::vector<std::string>& candidates,
                   const std::vector<std::string>& references);

struct MetricValues {
  double action_type_acc = 0.0;
  std::optional<double> item_acc;
  std::optional<double> direction_acc;
  /// Averaged over gold-Input points; a non-Input prediction scores 0/0.
  std::optional<double> input_em;
  std::optional<double> input_f1;
  double action_cr = 0.0;
  double turn_cr = 0.0;
  /// In [0, 1]; absent when no prediction carries a response.
  std::optional<double> response_bleu;

  std::size_t n_points = 0;
  std::size_t n_turns = 0;
  std::size_t n_click = 0;
  std::size_t n_swipe = 0;
  std::size_t n_input = 0;
  std::size_t n_completed_actions = 0;
  std::size_t n_completed_turns = 0;
  /// Sum of lengths of completed turns; never exceeds n_completed_actions.
  std::size_t n_actions_in_completed_turns = 0;
  std::size_t n_failed_predictions = 0;

  bool operator==(const MetricValues&) const = default;
};

struct MetricsReport {
  MetricValues overall;
  /// Keyed by domain name.
  std::map<std::string, MetricValues> per_domain;

  bool operator==(const MetricsReport&) const = default;
};

/// Every metric, overall and per domain. Throws CoverageError.
MetricsReport score_predictions(const std::vector<Prediction>& preds,
                                const std::vector<DataPoint>& gold);

/// Inequalities every report satisfies; returns the violated ones.
std::vector<std::string> check_report_invariants(const MetricValues& values);

}  // namespace guitod
