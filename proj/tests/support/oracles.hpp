#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "guitod/corpus.hpp"
#include "guitod/features.hpp"
#include "guitod/metrics.hpp"
#include "guitod/model.hpp"

namespace guitod::testing {

// Straight-line reimplementations used to cross-check the library. They share
// no code with it beyond the data types.

std::vector<std::string> oracle_tokenize(const std::string& s);

struct OracleMetrics {
  double action_type_acc = 0.0;
  double action_cr = 0.0;
  double turn_cr = 0.0;
  std::optional<double> item_acc;
  std::optional<double> direction_acc;
  std::optional<double> input_em;
  std::optional<double> input_f1;
};

/// Matches predictions to gold by linear key search.
OracleMetrics oracle_metrics(const std::vector<Prediction>& preds, const std::vector<DataPoint>& gold);

/// Corpus BLEU-4 by explicit n-gram enumeration.
double oracle_bleu(const std::vector<std::string>& candidates, const std::vector<std::string>& references);

struct BlockError {
  std::string block;
  double rel_error = 0.0;
  double analytic_norm = 0.0;
};

struct LabeledBundle {
  FeatureBundle features;
  Targets targets;
};

/// Random bundle for a model of the given shape: 1..H screens of 0..max_items
/// items, 0..max_tokens dialogue tokens, random one-hot action history and a
/// random target the bundle can supervise.
LabeledBundle random_labeled_bundle(std::mt19937_64& rng, const ModelShape& shape, std::size_t max_items = 5,
                                    std::size_t max_tokens = 8);

/// Per-block relative error ||g_analytic - g_fd|| / max(||g_analytic||, ||g_fd||, 1e-7)
/// of the summed loss over `batch`, with central differences of step h.
std::vector<BlockError> gradient_check(const PolicyParams& params, const std::vector<LabeledBundle>& batch,
                                       double h = 1e-5);

}  // namespace guitod::testing
