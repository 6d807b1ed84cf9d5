#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "guitod/config.hpp"
#include "guitod/corpus.hpp"
#include "guitod/features.hpp"
#include "guitod/model.hpp"
#include "guitod/retrieval.hpp"

namespace guitod {

/// Anything that maps a data point to an action. Implementations are
/// immutable once built, so one instance may serve many threads.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string name() const = 0;
  virtual Action predict_action(const DataPoint& dp) const = 0;
  /// System response for a turn-final point, if the policy produces one.
  virtual std::optional<std::string> respond(const DataPoint&) const { return std::nullopt; }
};

/// Decoded action from head outputs. Action types are tried in order of
/// probability (ties to the lower enum index), skipping Click with no items
/// and Input with no dialogue tokens. Throws TrainingError if nothing is
/// feasible.
Action decode(const HeadOutputs& heads, const FeatureBundle& features, std::size_t max_span);

/// Best (s, e) with s <= e <= s + max_span maximizing start[s] * end[e]; ties
/// to the smallest (s, e). Empty distributions give nullopt.
std::optional<std::pair<std::size_t, std::size_t>> best_span(const Eigen::VectorXd& start,
                                                             const Eigen::VectorXd& end,
                                                             std::size_t max_span);

/// The trained multi-head policy, optionally paired with a retrieval responder.
class ReferencePolicy : public Policy {
 public:
  ReferencePolicy(PolicyConfig config, PolicyParams params,
                  std::shared_ptr<const RetrievalResponder> responder = nullptr);

  std::string name() const override { return "reference"; }
  Action predict_action(const DataPoint& dp) const override;
  std::optional<std::string> respond(const DataPoint& dp) const override;

  std::pair<Action, HeadOutputs> predict(const DataPoint& dp) const;

  const PolicyConfig& config() const { return config_; }
  const PolicyParams& params() const { return params_; }
  const RetrievalResponder* responder() const { return responder_.get(); }

  /// Writes params.json, config.json and, when present, responder.json.
  void save(const std::filesystem::path& dir) const;
  static ReferencePolicy load(const std::filesystem::path& dir);

 private:
  PolicyConfig config_;
  PolicyParams params_;
  std::shared_ptr<const RetrievalResponder> responder_;
};

}  // namespace guitod
